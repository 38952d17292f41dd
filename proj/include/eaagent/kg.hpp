#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eaagent/errors.hpp"

namespace eaagent {

// Identifier of an entity, relation, or attribute.
// Invariant: non-empty and TSV-safe (no tab or newline bytes).
class Iri {
public:
    Iri() = default;
    explicit Iri(std::string value);

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend auto operator<=>(const Iri&, const Iri&) = default;

private:
    std::string value_;
};

}  // namespace eaagent

template <>
struct std::hash<eaagent::Iri> {
    std::size_t operator()(const eaagent::Iri& iri) const noexcept {
        return std::hash<std::string>{}(iri.str());
    }
};

namespace eaagent {

struct AttributeTriple {
    Iri entity;
    Iri attribute;
    std::string value;  // may contain tabs; never newlines

    friend auto operator<=>(const AttributeTriple&, const AttributeTriple&) = default;
};

struct RelationTriple {
    Iri head;
    Iri relation;
    Iri tail;

    friend auto operator<=>(const RelationTriple&, const RelationTriple&) = default;
};

// Substring after the last '/' or '#', percent-decoded. Whole IRI if neither occurs.
std::string local_name(const Iri& iri);

// Matches an attribute either by exact IRI or by its local name.
// Default covers the usual label properties (rdfs:label, skos:prefLabel, foaf:name, ...).
class AttributeWhitelist {
public:
    static AttributeWhitelist default_names();
    static AttributeWhitelist none();

    void add_local_name(std::string name);
    void add_iri(Iri iri);
    bool contains(const Iri& attribute) const;
    bool empty() const noexcept { return local_names_.empty() && iris_.empty(); }

    const std::set<std::string>& local_names() const noexcept { return local_names_; }

private:
    std::set<std::string> local_names_;
    std::set<Iri> iris_;
};

using ValueDistribution = std::unordered_map<std::string, std::size_t>;

// One side of an alignment task. Immutable once built; all derived tables are
// constructed exactly once in build_graph.
class KnowledgeGraph {
public:
    const std::vector<AttributeTriple>& attribute_triples() const noexcept { return attrs_; }
    const std::vector<RelationTriple>& relation_triples() const noexcept { return rels_; }
    const std::unordered_set<Iri>& entities() const noexcept { return entities_; }

    bool contains(const Iri& entity) const { return entities_.count(entity) > 0; }

    // Triple positions for an entity, in first-seen input order. Empty span if none.
    std::span<const std::uint32_t> attr_indices(const Iri& entity) const;
    std::span<const std::uint32_t> rel_out_indices(const Iri& entity) const;
    std::span<const std::uint32_t> rel_in_indices(const Iri& entity) const;

    // 0 for relations that never occur.
    std::size_t relation_freq(const Iri& relation) const;

    const std::unordered_map<Iri, ValueDistribution>& attr_value_dist() const noexcept {
        return value_dist_;
    }

    // N in the relation inverse-frequency formula: total relation triples after dedup.
    std::size_t total_relation_triples() const noexcept { return rels_.size(); }

private:
    friend KnowledgeGraph build_graph(std::vector<AttributeTriple>, std::vector<RelationTriple>);

    std::vector<AttributeTriple> attrs_;
    std::vector<RelationTriple> rels_;
    std::unordered_set<Iri> entities_;
    std::unordered_map<Iri, std::vector<std::uint32_t>> attr_index_;
    std::unordered_map<Iri, std::vector<std::uint32_t>> rel_out_index_;
    std::unordered_map<Iri, std::vector<std::uint32_t>> rel_in_index_;
    std::unordered_map<Iri, std::size_t> relation_freq_;
    std::unordered_map<Iri, ValueDistribution> value_dist_;
};

// Deduplicates exact repeats (keeping first occurrence) and derives all index
// and frequency tables. The entity set is heads ∪ tails ∪ attribute subjects.
KnowledgeGraph build_graph(std::vector<AttributeTriple> attrs, std::vector<RelationTriple> rels);

struct EntityStatistics {
    std::size_t attr_cnt_all = 0;  // attribute triples
    std::size_t attr_cnt = 0;      // distinct attributes
    std::size_t rel_cnt_all = 0;   // relation triples, outgoing + incoming
    std::size_t rel_cnt = 0;       // distinct relations over both directions
    bool signal_attr = false;      // entity carries a whitelisted attribute

    friend bool operator==(const EntityStatistics&, const EntityStatistics&) = default;
};

EntityStatistics entity_statistics(const KnowledgeGraph& graph, const Iri& entity,
                                   const AttributeWhitelist& whitelist);

// Gold link between the two graphs.
struct AlignmentPair {
    Iri source;
    Iri target;

    friend auto operator<=>(const AlignmentPair&, const AlignmentPair&) = default;
};

}  // namespace eaagent
