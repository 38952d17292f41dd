#pragma once

#include <iosfwd>
#include <span>

#include "eaagent/executor.hpp"
#include "eaagent/llm.hpp"

namespace eaagent {

// Metrics read the prediction as a re-ranking of the candidate list: the
// final prediction takes rank 1 and the remaining candidates keep their
// retrieval order behind it. Gold outside the candidate list has no rank.

// Rank of gold in that list, 0 when absent.
std::size_t rank_of_gold(const AlignmentOutcome& outcome, const CandidateSet& candidates,
                         const Iri& gold);

double hits_at_k(std::span<const AlignmentOutcome> outcomes, const CandidateMap& candidates,
                 const GoldMap& gold, std::size_t k);
double mrr(std::span<const AlignmentOutcome> outcomes, const CandidateMap& candidates,
           const GoldMap& gold);

// Fraction of paths containing a Reflector step.
double reflector_rate(std::span<const ToolPath> paths);
double avg_path_length(std::span<const ToolPath> paths);

struct TimingSummary {
    double planning_seconds_total = 0.0;
    double alignment_seconds_total = 0.0;
    std::size_t entities = 0;
};

struct EvalReport {
    std::size_t n_entities = 0;
    double hits_at_1 = 0.0;
    double hits_at_10 = 0.0;
    double mrr = 0.0;
    double reflector_rate = 0.0;
    double avg_path_length = 0.0;
    double avg_tokens_per_entity = 0.0;
    double avg_planning_seconds = 0.0;
    double avg_alignment_seconds = 0.0;
    bool tokens_estimated = false;
};

// Token averages come from the ledger summary when given (covers planning
// calls too), else from the per-outcome counters. Timing averages are zero
// without a timing summary; mock-backed runs never collect wall time.
EvalReport evaluate(std::span<const AlignmentOutcome> outcomes, const CandidateMap& candidates,
                    const GoldMap& gold, const TimingSummary* timing = nullptr,
                    const TokenLedger::Summary* ledger = nullptr);

void write_report(std::ostream& out, const EvalReport& report);
EvalReport load_report(std::istream& in);

}  // namespace eaagent
