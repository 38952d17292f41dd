#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eaagent/kg.hpp"
#include "eaagent/llm.hpp"
#include "eaagent/prompts.hpp"
#include "eaagent/retrieval.hpp"

namespace eaagent {

enum class ToolId { attribute_selector, relation_selector, alignment, reflector };

std::string_view tool_name(ToolId id);
std::optional<ToolId> tool_from_name(std::string_view name);  // case-insensitive

enum class PathOrigin { llm, rule, rewritten, fallback };
const char* to_string(PathOrigin origin);
std::optional<PathOrigin> path_origin_from_string(std::string_view s);

// Validated tool sequence. The grammar admits exactly eight shapes:
// one or two distinct selectors, then EntityAlignmentTool, then an optional
// trailing Reflector. Construction enforces this; instances are always valid.
class ToolPath {
public:
    ToolPath() = default;

    // Throws InvalidPathError naming the defect.
    static ToolPath from_steps(std::vector<ToolId> steps, PathOrigin origin);

    const std::vector<ToolId>& steps() const noexcept { return steps_; }
    PathOrigin origin() const noexcept { return origin_; }
    std::size_t length() const noexcept { return steps_.size(); }
    bool contains(ToolId id) const;
    bool has_reflector() const { return contains(ToolId::reflector); }

    // "1. AttributeTripleSelector\n2. ..." with no trailing newline.
    std::string render_numbered() const;

    ToolPath without_reflector(PathOrigin new_origin) const;

private:
    std::vector<ToolId> steps_;
    PathOrigin origin_ = PathOrigin::rule;
};

// What the planner sees for one entity: profile statistics plus the head of
// the retrieval score list.
struct PlanningObservation {
    Iri entity;
    EntityStatistics statistics;
    double top1 = 0.0;
    double top2 = 0.0;
    double top3 = 0.0;
};

PlanningObservation make_observation(const KnowledgeGraph& graph, const Iri& entity,
                                     const CandidateSet& candidates,
                                     const AttributeWhitelist& whitelist);

std::string render_planning_prompt(const PlanningObservation& observation,
                                   std::string_view tool_pool = prompts::kToolPool);

// Extracts "N. <ToolName>" lines (bullets stripped, names case-insensitive),
// orders them by N, and validates the result as a ToolPath.
ToolPath parse_plan(std::string_view text, PathOrigin origin = PathOrigin::llm);

// Deterministic default: both selectors then alignment, plus a Reflector
// when the top-1/top-2 gap is strictly below the threshold.
ToolPath rule_based_plan(const PlanningObservation& observation, double threshold = 0.3);

class PlannerPolicy {
public:
    virtual ~PlannerPolicy() = default;
    virtual ToolPath plan(const PlanningObservation& observation) = 0;
};

class RulePolicy final : public PlannerPolicy {
public:
    explicit RulePolicy(double threshold = 0.3) : threshold_(threshold) {}
    ToolPath plan(const PlanningObservation& observation) override {
        return rule_based_plan(observation, threshold_);
    }

private:
    double threshold_;
};

struct LlmPolicyConfig {
    double temperature = 0.1;
    std::size_t max_tokens = 64;
    double rule_threshold = 0.3;  // for the final fallback
    std::string tool_pool = prompts::kToolPool;
};

// Asks the backend for a plan; on a parse failure re-prompts once with the
// defect named, then falls back to the rule plan (origin=fallback).
class LlmPolicy final : public PlannerPolicy {
public:
    explicit LlmPolicy(LlmGateway& gateway, LlmPolicyConfig config = {});
    ToolPath plan(const PlanningObservation& observation) override;

private:
    LlmGateway& gateway_;
    LlmPolicyConfig config_;
};

// plans JSONL: {"entity": ..., "path": {"steps": [...], "origin": ...}}
struct PlanRecord {
    Iri entity;
    ToolPath path;
};

void write_plans(std::ostream& out, std::span<const PlanRecord> plans);
std::vector<PlanRecord> load_plans(std::istream& in);

}  // namespace eaagent
