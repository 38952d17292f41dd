#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "eaagent/kg.hpp"

namespace eaagent {

struct ScoredCandidate {
    Iri target;
    double score = 0.0;  // in [0, 1]
};

// Candidate list for one source entity: scores non-increasing, targets
// distinct, at most k entries. Construction goes through validated(), which
// re-sorts and dedups (first hit wins) rather than rejecting, reporting what
// it had to fix through the warnings sink.
class CandidateSet {
public:
    CandidateSet() = default;

    static CandidateSet validated(Iri source, std::vector<ScoredCandidate> candidates,
                                  std::size_t k, std::vector<std::string>* warnings = nullptr);

    const Iri& source() const noexcept { return source_; }
    const std::vector<ScoredCandidate>& candidates() const noexcept { return candidates_; }
    std::size_t k() const noexcept { return k_; }
    bool contains(const Iri& target) const;
    std::vector<Iri> targets() const;

private:
    Iri source_;
    std::vector<ScoredCandidate> candidates_;
    std::size_t k_ = 0;
};

using CandidateMap = std::map<Iri, CandidateSet>;
using GoldMap = std::map<Iri, Iri>;

// JSONL, one record per source:
//   {"source": "...", "candidates": [{"iri": "...", "score": 0.93}, ...]}
CandidateMap load_precomputed_candidates(std::istream& in, std::size_t k,
                                         std::vector<std::string>* warnings = nullptr);
void write_candidates(std::ostream& out, const CandidateMap& map);

std::size_t edit_distance(std::string_view a, std::string_view b);

// 1 - editdist/max(len); 1.0 when both names are empty.
double name_similarity(std::string_view a, std::string_view b);

// Fallback retriever: ranks every target entity by local-name similarity to
// the source's local name. Ties break on the target IRI so results are stable.
CandidateSet name_similarity_candidates(const KnowledgeGraph& source_graph,
                                        const KnowledgeGraph& target_graph, const Iri& source,
                                        std::size_t k);

struct TopScores {
    double top1 = 0.0;
    double top2 = 0.0;
    double top3 = 0.0;
};

// Missing positions read as 0.0.
TopScores top_scores(const CandidateSet& set);

}  // namespace eaagent
