#include "eaagent/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace eaagent {

namespace {

double entropy_of(const ValueDistribution& dist) {
    std::size_t total = 0;
    for (const auto& [value, count] : dist) total += count;
    if (total == 0) return 0.0;

    double h = 0.0;
    for (const auto& [value, count] : dist) {
        double p = static_cast<double>(count) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    // A single-valued attribute yields -0.0; normalize so callers see exactly 0.
    return h == 0.0 ? 0.0 : h;
}

}  // namespace

EntropyScope EntropyScope::whole_graph(const KnowledgeGraph& graph) {
    EntropyScope scope;
    scope.graph_ = &graph;
    return scope;
}

EntropyScope EntropyScope::candidate_set(const KnowledgeGraph& graph,
                                         std::span<const Iri> entities) {
    EntropyScope scope;
    for (const Iri& e : entities) {
        for (std::uint32_t i : graph.attr_indices(e)) {
            const AttributeTriple& t = graph.attribute_triples()[i];
            scope.local_[t.attribute][t.value] += 1;
        }
    }
    return scope;
}

bool EntropyScope::contains(const Iri& attribute) const {
    if (graph_) return graph_->attr_value_dist().count(attribute) > 0;
    return local_.count(attribute) > 0;
}

double EntropyScope::entropy(const Iri& attribute) const {
    if (graph_) {
        auto it = graph_->attr_value_dist().find(attribute);
        if (it == graph_->attr_value_dist().end()) throw UnknownAttributeError(attribute.str());
        return entropy_of(it->second);
    }
    auto it = local_.find(attribute);
    if (it == local_.end()) throw UnknownAttributeError(attribute.str());
    return entropy_of(it->second);
}

double attribute_entropy(const KnowledgeGraph& graph, const Iri& attribute) {
    auto it = graph.attr_value_dist().find(attribute);
    if (it == graph.attr_value_dist().end()) throw UnknownAttributeError(attribute.str());
    return entropy_of(it->second);
}

double attribute_entropy(const EntropyScope& scope, const Iri& attribute) {
    return scope.entropy(attribute);
}

double relation_score(const KnowledgeGraph& graph, const Iri& relation) {
    std::size_t n = graph.total_relation_triples();
    if (n == 0) throw EmptyGraphError();
    std::size_t freq = graph.relation_freq(relation);
    return std::log(static_cast<double>(n) / static_cast<double>(freq + 1));
}

std::vector<AttributeTriple> select_attribute_triples(const KnowledgeGraph& graph,
                                                      const Iri& entity,
                                                      std::span<const Iri> candidates,
                                                      const SelectionConfig& config) {
    if (!graph.contains(entity)) throw UnknownEntityError(entity.str());

    EntropyScope scope = (config.entropy_scope == EntropyScopeKind::candidate_set)
                             ? EntropyScope::candidate_set(graph, candidates)
                             : EntropyScope::whole_graph(graph);

    std::vector<const AttributeTriple*> preserved;
    std::vector<std::pair<double, const AttributeTriple*>> scored;
    for (std::uint32_t i : graph.attr_indices(entity)) {
        const AttributeTriple& t = graph.attribute_triples()[i];
        if (config.important_attributes.contains(t.attribute))
            preserved.push_back(&t);
        else
            scored.emplace_back(scope.entropy(t.attribute), &t);
    }

    std::sort(preserved.begin(), preserved.end(), [](const auto* a, const auto* b) {
        return std::tie(a->attribute, a->value) < std::tie(b->attribute, b->value);
    });

    const bool high_first = config.prefer_high_entropy;
    std::sort(scored.begin(), scored.end(), [high_first](const auto& a, const auto& b) {
        if (a.first != b.first) return high_first ? a.first > b.first : a.first < b.first;
        return std::tie(a.second->attribute, a.second->value) <
               std::tie(b.second->attribute, b.second->value);
    });

    // Whitelisted triples never compete for slots and may exceed the cap.
    std::size_t slots =
        config.max_triples > preserved.size() ? config.max_triples - preserved.size() : 0;

    std::vector<AttributeTriple> out;
    out.reserve(preserved.size() + std::min(slots, scored.size()));
    for (const auto* t : preserved) out.push_back(*t);
    for (std::size_t i = 0; i < scored.size() && i < slots; ++i) out.push_back(*scored[i].second);
    return out;
}

std::vector<RelationTriple> select_relation_triples(const KnowledgeGraph& graph,
                                                    const Iri& entity,
                                                    const SelectionConfig& config) {
    if (!graph.contains(entity)) throw UnknownEntityError(entity.str());

    // Union of both directions; a self-loop appears in both index lists under
    // the same triple position, so dedup by position.
    std::vector<std::uint32_t> indices;
    indices.insert(indices.end(), graph.rel_out_indices(entity).begin(),
                   graph.rel_out_indices(entity).end());
    indices.insert(indices.end(), graph.rel_in_indices(entity).begin(),
                   graph.rel_in_indices(entity).end());
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());

    struct Ranked {
        double score;
        const RelationTriple* triple;
        const Iri* other;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(indices.size());
    for (std::uint32_t i : indices) {
        const RelationTriple& t = graph.relation_triples()[i];
        const Iri& other = (t.head == entity) ? t.tail : t.head;
        ranked.push_back({relation_score(graph, t.relation), &t, &other});
    }

    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.triple->relation, *a.other, a.triple->head, a.triple->tail) <
               std::tie(b.triple->relation, *b.other, b.triple->head, b.triple->tail);
    });

    std::vector<RelationTriple> out;
    out.reserve(std::min(config.max_triples, ranked.size()));
    for (std::size_t i = 0; i < ranked.size() && i < config.max_triples; ++i)
        out.push_back(*ranked[i].triple);
    return out;
}

}  // namespace eaagent
