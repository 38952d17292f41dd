#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "eaagent/kg.hpp"

namespace eaagent {

enum class EntropyScopeKind {
    whole_graph,    // value distributions over every triple in the graph
    candidate_set,  // distributions over the triples of a given entity set
};

struct SelectionConfig {
    std::size_t max_triples = 5;
    AttributeWhitelist important_attributes = AttributeWhitelist::default_names();
    EntropyScopeKind entropy_scope = EntropyScopeKind::whole_graph;
    // Ablation switch. Default keeps the low-entropy-first order; setting this
    // inverts the entropy key while leaving the lexicographic tie-breaks alone.
    bool prefer_high_entropy = false;
};

// Source of per-attribute value distributions for entropy. Whole-graph scopes
// borrow the graph's prebuilt table; candidate scopes own a local one.
class EntropyScope {
public:
    static EntropyScope whole_graph(const KnowledgeGraph& graph);
    static EntropyScope candidate_set(const KnowledgeGraph& graph, std::span<const Iri> entities);

    // Shannon entropy over the attribute's value distribution, natural log.
    // UnknownAttributeError if the attribute never occurs in this scope.
    double entropy(const Iri& attribute) const;
    bool contains(const Iri& attribute) const;

private:
    const KnowledgeGraph* graph_ = nullptr;
    std::map<Iri, ValueDistribution> local_;
};

double attribute_entropy(const KnowledgeGraph& graph, const Iri& attribute);
double attribute_entropy(const EntropyScope& scope, const Iri& attribute);

// ln(N / (freq + 1)) with N = total relation triples. EmptyGraphError if N = 0.
double relation_score(const KnowledgeGraph& graph, const Iri& relation);

// Keeps whitelisted triples unconditionally (sorted by attribute then value),
// then fills up to max_triples with the lowest-entropy rest, ties broken by
// attribute then value. The whitelist may push the result past max_triples.
// `candidates` feeds the distribution when the scope is candidate_set.
std::vector<AttributeTriple> select_attribute_triples(const KnowledgeGraph& graph,
                                                      const Iri& entity,
                                                      std::span<const Iri> candidates,
                                                      const SelectionConfig& config);

// Ranks the entity's outgoing and incoming triples by descending relation
// score; ties break on relation, then other endpoint, then head, then tail.
std::vector<RelationTriple> select_relation_triples(const KnowledgeGraph& graph,
                                                    const Iri& entity,
                                                    const SelectionConfig& config);

}  // namespace eaagent
