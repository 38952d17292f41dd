#pragma once

#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "eaagent/ingest.hpp"
#include "eaagent/kg.hpp"
#include "eaagent/retrieval.hpp"

namespace eatest {

using namespace eaagent;

struct AttrSpec {
    const char* entity;
    const char* attribute;
    const char* value;
};

struct RelSpec {
    const char* head;
    const char* relation;
    const char* tail;
};

inline KnowledgeGraph make_graph(std::initializer_list<AttrSpec> attrs,
                                 std::initializer_list<RelSpec> rels = {}) {
    std::vector<AttributeTriple> a;
    for (const auto& s : attrs) a.push_back({Iri(s.entity), Iri(s.attribute), s.value});
    std::vector<RelationTriple> r;
    for (const auto& s : rels) r.push_back({Iri(s.head), Iri(s.relation), Iri(s.tail)});
    return build_graph(std::move(a), std::move(r));
}

inline CandidateSet make_candidates(const char* source,
                                    std::initializer_list<std::pair<const char*, double>> scored,
                                    std::size_t k = 10) {
    std::vector<ScoredCandidate> cands;
    for (const auto& [iri, score] : scored) cands.push_back({Iri(iri), score});
    return CandidateSet::validated(Iri(source), std::move(cands), k);
}

// Five-city bilingual fixture shared by the executor/optimizer/pipeline tests.
// Local names differ by small edits so name similarity ranks gold first.
struct CityFixture {
    DatasetBundle bundle;
    CandidateMap candidates;
    GoldMap gold;

    CityFixture() {
        bundle.source_graph = make_graph(
            {
                {"http://src/Paris", "http://src/prop/name", "Paris"},
                {"http://src/Paris", "http://src/prop/population", "2148000"},
                {"http://src/Berlin", "http://src/prop/name", "Berlin"},
                {"http://src/Berlin", "http://src/prop/population", "3769000"},
                {"http://src/Rome", "http://src/prop/name", "Rome"},
                {"http://src/Madrid", "http://src/prop/name", "Madrid"},
                {"http://src/Lisbon", "http://src/prop/name", "Lisbon"},
                {"http://src/Lisbon", "http://src/prop/founded", "1147"},
            },
            {
                {"http://src/Paris", "http://src/rel/capitalOf", "http://src/France"},
                {"http://src/Berlin", "http://src/rel/capitalOf", "http://src/Germany"},
                {"http://src/Rome", "http://src/rel/capitalOf", "http://src/Italy"},
                {"http://src/Madrid", "http://src/rel/capitalOf", "http://src/Spain"},
                {"http://src/Lisbon", "http://src/rel/capitalOf", "http://src/Portugal"},
            });
        bundle.target_graph = make_graph(
            {
                {"http://tgt/Pariss", "http://tgt/prop/label", "Pariss"},
                {"http://tgt/Berlin_", "http://tgt/prop/label", "Berlin_"},
                {"http://tgt/Roma", "http://tgt/prop/label", "Roma"},
                {"http://tgt/Madrid2", "http://tgt/prop/label", "Madrid2"},
                {"http://tgt/Lisboa", "http://tgt/prop/label", "Lisboa"},
            },
            {
                {"http://tgt/Pariss", "http://tgt/rel/city", "http://tgt/FR"},
                {"http://tgt/Berlin_", "http://tgt/rel/city", "http://tgt/DE"},
                {"http://tgt/Roma", "http://tgt/rel/city", "http://tgt/IT"},
                {"http://tgt/Madrid2", "http://tgt/rel/city", "http://tgt/ES"},
                {"http://tgt/Lisboa", "http://tgt/rel/city", "http://tgt/PT"},
            });
        const std::pair<const char*, const char*> links[] = {
            {"http://src/Paris", "http://tgt/Pariss"},
            {"http://src/Berlin", "http://tgt/Berlin_"},
            {"http://src/Rome", "http://tgt/Roma"},
            {"http://src/Madrid", "http://tgt/Madrid2"},
            {"http://src/Lisbon", "http://tgt/Lisboa"},
        };
        for (const auto& [s, t] : links) {
            bundle.gold_links.push_back({Iri(s), Iri(t)});
            gold.emplace(Iri(s), Iri(t));
            candidates.emplace(
                Iri(s), name_similarity_candidates(bundle.source_graph, bundle.target_graph,
                                                   Iri(s), 5));
        }
        bundle.train_links = {bundle.gold_links[0], bundle.gold_links[1]};
        bundle.test_links = {bundle.gold_links[2], bundle.gold_links[3], bundle.gold_links[4]};
    }
};

inline std::istringstream in_stream(const std::string& s) { return std::istringstream(s); }

}  // namespace eatest
