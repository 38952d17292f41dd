#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "eaagent/eval.hpp"
#include "eaagent/optimizer.hpp"

namespace eaagent {

struct BackendSettings {
    std::string kind = "http";  // "http" or "mock" (gold-link oracle)
    std::string endpoint;
    std::string model;
    std::string api_key;  // usually left to $EA_AGENT_API_KEY
    std::size_t retries = 3;
    std::size_t token_budget = 0;  // 0 = unlimited
    bool force_greedy = false;
};

struct RunConfig {
    std::filesystem::path bundle_dir;
    std::string candidate_mode = "file";  // "file" or "name-sim"
    std::filesystem::path candidates_file;
    std::size_t candidate_k = 10;
    std::filesystem::path out_dir;

    BackendSettings backend;
    SelectionConfig selection;
    std::size_t raw_cap = 10;
    double temperature = 0.1;
    RewardConfig reward;

    std::string policy = "llm";  // initial policy: "llm" or "rule"
    double rule_threshold = 0.3;
    std::size_t rounds = 3;
    std::size_t concurrency = 1;
    std::uint64_t seed = 42;
    bool keep_transcript = true;
};

// INI-style file: [section] headers, key = value lines, '#' comments.
// Unknown keys are errors so typos fail loudly.
RunConfig load_run_config(const std::filesystem::path& path);

// FNV-1a 64 over the canonical semantic field listing; out_dir is excluded
// since moving output does not change results.
std::string config_hash(const RunConfig& config);

std::unique_ptr<LlmBackend> make_backend(const BackendSettings& settings,
                                         const DatasetBundle* bundle);

// Full cycle: training rounds over the train links, replay-policy refresh
// after each round, inference over the test links with the final policy,
// and evaluation. Writes all artifacts into out_dir. An injected backend
// overrides settings.backend (used by tests).
EvalReport run_pipeline(const RunConfig& config, LlmBackend* backend_override = nullptr);

}  // namespace eaagent
