#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eaagent/ingest.hpp"
#include "eaagent/reward.hpp"

namespace eaagent {

// One training trajectory: what the planner saw, what ran, how it scored,
// and the improved path distilled from it.
struct PolicyUpdateTriple {
    PlanningObservation observation;
    ToolPath executed_path;
    RewardBreakdown reward;
    ToolPath rewritten_path;
    std::size_t round = 0;
};

// Append-only store of trajectories across rounds. Round numbers must be
// non-decreasing, which keeps the JSONL file ordered by round.
class TrajectoryDataset {
public:
    void append(PolicyUpdateTriple record);

    const std::vector<PolicyUpdateTriple>& records() const noexcept { return records_; }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t size() const noexcept { return records_.size(); }

    void save(std::ostream& out) const;
    void save(std::ostream& out, std::size_t round) const;  // one round only
    static TrajectoryDataset load(std::istream& in);

private:
    std::vector<PolicyUpdateTriple> records_;
};

std::string render_rewrite_prompt(const PlanningObservation& observation,
                                  const ToolPath& old_path, double reward_total);

struct RewriteConfig {
    double temperature = 0.1;
    std::size_t max_tokens = 64;
};

// Asks the backend for an improved path; one retry on a parse failure, then a
// deterministic repair: drop the Reflector when the reflection term was
// negative, otherwise keep the old path (origin=fallback either way).
ToolPath rewrite_path(LlmGateway& gateway, const PlanningObservation& observation,
                      const ToolPath& old_path, const RewardBreakdown& reward,
                      const RewriteConfig& config = {});

struct RoundConfig {
    std::size_t round = 1;
    RewardConfig reward;
    ExecutionConfig execution;
    RewriteConfig rewrite;
    std::size_t concurrency = 1;
};

struct RoundResult {
    std::size_t appended = 0;
    std::vector<std::pair<Iri, std::string>> failures;  // entity, error
};

// One optimization round over the training links, in source-IRI order.
// A failing entity is recorded and skipped; the round carries on.
RoundResult run_training_round(const DatasetBundle& bundle, const CandidateMap& candidates,
                               std::span<const AlignmentPair> train_links,
                               PlannerPolicy& policy, LlmGateway& gateway,
                               const RoundConfig& config, TrajectoryDataset& dataset);

// JSONL {"prompt": planning prompt, "completion": rewritten path}, one line
// per stored trajectory. Returns the record count.
std::size_t export_sft_dataset(const TrajectoryDataset& dataset, std::ostream& out,
                               std::string_view tool_pool = prompts::kToolPool);
std::vector<std::pair<std::string, std::string>> load_sft_pairs(std::istream& in);

// Offline stand-in for the fine-tuned planner: keys trajectories by
// (signal_attr, gap below threshold), replays the highest-reward rewritten
// path for the bucket, and falls back to the rule plan on a miss.
class ReplayPolicy final : public PlannerPolicy {
public:
    ReplayPolicy(const TrajectoryDataset& dataset, double gap_threshold = 0.3);
    ToolPath plan(const PlanningObservation& observation) override;

private:
    struct Entry {
        double reward_total;
        ToolPath path;
    };
    double threshold_;
    std::map<std::pair<bool, bool>, Entry> buckets_;
};

std::unique_ptr<PlannerPolicy> replay_policy(const TrajectoryDataset& dataset,
                                             double gap_threshold = 0.3);

}  // namespace eaagent
