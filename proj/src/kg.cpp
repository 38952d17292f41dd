#include "eaagent/kg.hpp"

#include <utility>

#include "eaagent/text.hpp"

namespace eaagent {

Iri::Iri(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw DataError("empty IRI");
    if (value_.find('\t') != std::string::npos || value_.find('\n') != std::string::npos)
        throw DataError("IRI contains tab or newline: " + value_);
}

std::string local_name(const Iri& iri) {
    const std::string& s = iri.str();
    std::size_t pos = s.find_last_of("/#");
    std::string_view tail = (pos == std::string::npos) ? std::string_view(s)
                                                       : std::string_view(s).substr(pos + 1);
    return percent_decode(tail);
}

AttributeWhitelist AttributeWhitelist::default_names() {
    AttributeWhitelist wl;
    wl.add_local_name("name");
    wl.add_local_name("label");
    wl.add_local_name("prefLabel");
    return wl;
}

AttributeWhitelist AttributeWhitelist::none() { return AttributeWhitelist{}; }

void AttributeWhitelist::add_local_name(std::string name) {
    local_names_.insert(std::move(name));
}

void AttributeWhitelist::add_iri(Iri iri) { iris_.insert(std::move(iri)); }

bool AttributeWhitelist::contains(const Iri& attribute) const {
    if (iris_.count(attribute)) return true;
    if (local_names_.empty()) return false;
    return local_names_.count(local_name(attribute)) > 0;
}

namespace {

// Fields are IRIs (tab-free), so the joined form is unambiguous even though
// attribute values may themselves contain tabs.
std::string dedup_key(const AttributeTriple& t) {
    std::string k;
    k.reserve(t.entity.str().size() + t.attribute.str().size() + t.value.size() + 2);
    k += t.entity.str();
    k += '\t';
    k += t.attribute.str();
    k += '\t';
    k += t.value;
    return k;
}

std::string dedup_key(const RelationTriple& t) {
    std::string k;
    k.reserve(t.head.str().size() + t.relation.str().size() + t.tail.str().size() + 2);
    k += t.head.str();
    k += '\t';
    k += t.relation.str();
    k += '\t';
    k += t.tail.str();
    return k;
}

}  // namespace

KnowledgeGraph build_graph(std::vector<AttributeTriple> attrs, std::vector<RelationTriple> rels) {
    KnowledgeGraph g;

    std::unordered_set<std::string> seen;
    seen.reserve(attrs.size());
    g.attrs_.reserve(attrs.size());
    for (auto& t : attrs) {
        if (!seen.insert(dedup_key(t)).second) continue;
        g.attrs_.push_back(std::move(t));
    }

    seen.clear();
    seen.reserve(rels.size());
    g.rels_.reserve(rels.size());
    for (auto& t : rels) {
        if (!seen.insert(dedup_key(t)).second) continue;
        g.rels_.push_back(std::move(t));
    }

    for (std::uint32_t i = 0; i < g.attrs_.size(); ++i) {
        const AttributeTriple& t = g.attrs_[i];
        g.entities_.insert(t.entity);
        g.attr_index_[t.entity].push_back(i);
        g.value_dist_[t.attribute][t.value] += 1;
    }
    for (std::uint32_t i = 0; i < g.rels_.size(); ++i) {
        const RelationTriple& t = g.rels_[i];
        g.entities_.insert(t.head);
        g.entities_.insert(t.tail);
        g.rel_out_index_[t.head].push_back(i);
        g.rel_in_index_[t.tail].push_back(i);
        g.relation_freq_[t.relation] += 1;
    }
    return g;
}

namespace {

std::span<const std::uint32_t> lookup(
    const std::unordered_map<Iri, std::vector<std::uint32_t>>& index, const Iri& entity) {
    auto it = index.find(entity);
    if (it == index.end()) return {};
    return it->second;
}

}  // namespace

std::span<const std::uint32_t> KnowledgeGraph::attr_indices(const Iri& entity) const {
    return lookup(attr_index_, entity);
}

std::span<const std::uint32_t> KnowledgeGraph::rel_out_indices(const Iri& entity) const {
    return lookup(rel_out_index_, entity);
}

std::span<const std::uint32_t> KnowledgeGraph::rel_in_indices(const Iri& entity) const {
    return lookup(rel_in_index_, entity);
}

std::size_t KnowledgeGraph::relation_freq(const Iri& relation) const {
    auto it = relation_freq_.find(relation);
    return it == relation_freq_.end() ? 0 : it->second;
}

EntityStatistics entity_statistics(const KnowledgeGraph& graph, const Iri& entity,
                                   const AttributeWhitelist& whitelist) {
    if (!graph.contains(entity)) throw UnknownEntityError(entity.str());

    EntityStatistics s;
    std::set<Iri> distinct_attrs;
    for (std::uint32_t i : graph.attr_indices(entity)) {
        const AttributeTriple& t = graph.attribute_triples()[i];
        ++s.attr_cnt_all;
        distinct_attrs.insert(t.attribute);
        if (!s.signal_attr && whitelist.contains(t.attribute)) s.signal_attr = true;
    }
    s.attr_cnt = distinct_attrs.size();

    std::set<Iri> distinct_rels;
    for (std::uint32_t i : graph.rel_out_indices(entity)) {
        ++s.rel_cnt_all;
        distinct_rels.insert(graph.relation_triples()[i].relation);
    }
    for (std::uint32_t i : graph.rel_in_indices(entity)) {
        ++s.rel_cnt_all;
        distinct_rels.insert(graph.relation_triples()[i].relation);
    }
    s.rel_cnt = distinct_rels.size();
    return s;
}

}  // namespace eaagent
