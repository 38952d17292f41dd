#include "eaagent/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "eaagent/text.hpp"

namespace eaagent {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file: " + path.string());
    return f;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write file: " + path.string());
    return f;
}

std::size_t parse_size(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " needs a non-negative integer, got: " + value);
    }
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " needs a number, got: " + value);
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key " + key + " needs true/false, got: " + value);
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    auto f = open_input(path);
    RunConfig config;

    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#' || body.front() == ';') continue;

        if (body.front() == '[') {
            if (body.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": bad section");
            section = std::string(trim(body.substr(1, body.size() - 2)));
            continue;
        }

        auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = std::string(trim(body.substr(0, eq)));
        std::string value = std::string(trim(body.substr(eq + 1)));
        std::string qualified = section.empty() ? key : section + "." + key;

        if (qualified == "data.bundle") config.bundle_dir = value;
        else if (qualified == "data.candidate_mode") config.candidate_mode = value;
        else if (qualified == "data.candidates") config.candidates_file = value;
        else if (qualified == "data.k") config.candidate_k = parse_size(value, qualified);
        else if (qualified == "data.out") config.out_dir = value;
        else if (qualified == "backend.kind") config.backend.kind = value;
        else if (qualified == "backend.endpoint") config.backend.endpoint = value;
        else if (qualified == "backend.model") config.backend.model = value;
        else if (qualified == "backend.api_key") config.backend.api_key = value;
        else if (qualified == "backend.retries") config.backend.retries = parse_size(value, qualified);
        else if (qualified == "backend.token_budget")
            config.backend.token_budget = parse_size(value, qualified);
        else if (qualified == "backend.force_greedy")
            config.backend.force_greedy = parse_bool(value, qualified);
        else if (qualified == "selector.max_triples")
            config.selection.max_triples = parse_size(value, qualified);
        else if (qualified == "selector.prefer_high_entropy")
            config.selection.prefer_high_entropy = parse_bool(value, qualified);
        else if (qualified == "selector.important_local_names") {
            AttributeWhitelist wl;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
                if (auto t = trim(item); !t.empty()) wl.add_local_name(std::string(t));
            config.selection.important_attributes = std::move(wl);
        } else if (qualified == "selector.raw_cap") config.raw_cap = parse_size(value, qualified);
        else if (qualified == "reward.alpha") config.reward.alpha = parse_double(value, qualified);
        else if (qualified == "reward.beta") config.reward.beta = parse_double(value, qualified);
        else if (qualified == "reward.c") config.reward.c = parse_double(value, qualified);
        else if (qualified == "run.policy") config.policy = value;
        else if (qualified == "run.threshold")
            config.rule_threshold = parse_double(value, qualified);
        else if (qualified == "run.rounds") config.rounds = parse_size(value, qualified);
        else if (qualified == "run.concurrency")
            config.concurrency = parse_size(value, qualified);
        else if (qualified == "run.seed")
            config.seed = static_cast<std::uint64_t>(parse_size(value, qualified));
        else if (qualified == "run.temperature")
            config.temperature = parse_double(value, qualified);
        else if (qualified == "run.keep_transcript")
            config.keep_transcript = parse_bool(value, qualified);
        else
            throw ConfigError("unknown config key: " + qualified);
    }
    return config;
}

namespace {

void validate_run_config(const RunConfig& config) {
    if (config.bundle_dir.empty()) throw ConfigError("config needs data.bundle");
    if (config.out_dir.empty()) throw ConfigError("config needs data.out");
    if (!std::filesystem::exists(config.bundle_dir / "manifest.json"))
        throw ConfigError("bundle directory has no manifest.json: " + config.bundle_dir.string());
    if (config.candidate_mode == "file") {
        if (config.candidates_file.empty())
            throw ConfigError("candidate_mode=file needs data.candidates");
        if (!std::filesystem::exists(config.candidates_file))
            throw ConfigError("candidates file does not exist: " +
                              config.candidates_file.string());
    } else if (config.candidate_mode != "name-sim") {
        throw ConfigError("candidate_mode must be file or name-sim");
    }
    if (config.candidate_k == 0) throw ConfigError("data.k must be positive");
    if (config.policy != "llm" && config.policy != "rule")
        throw ConfigError("run.policy must be llm or rule");
    if (config.rounds == 0) throw ConfigError("run.rounds must be at least 1");
    if (config.backend.kind == "http") {
        if (config.backend.endpoint.empty())
            throw ConfigError("backend.kind=http needs backend.endpoint");
        if (config.backend.model.empty())
            throw ConfigError("backend.kind=http needs backend.model");
    } else if (config.backend.kind != "mock") {
        throw ConfigError("backend.kind must be http or mock");
    }
    config.reward.validate();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::string config_hash(const RunConfig& config) {
    std::string canon;
    auto add = [&](const std::string& key, const std::string& value) {
        canon += key;
        canon += '=';
        canon += value;
        canon += '\n';
    };
    add("data.bundle", config.bundle_dir.string());
    add("data.candidate_mode", config.candidate_mode);
    add("data.candidates", config.candidates_file.string());
    add("data.k", std::to_string(config.candidate_k));
    add("backend.kind", config.backend.kind);
    add("backend.endpoint", config.backend.endpoint);
    add("backend.model", config.backend.model);
    add("backend.retries", std::to_string(config.backend.retries));
    add("backend.token_budget", std::to_string(config.backend.token_budget));
    add("backend.force_greedy", config.backend.force_greedy ? "1" : "0");
    add("selector.max_triples", std::to_string(config.selection.max_triples));
    add("selector.prefer_high_entropy", config.selection.prefer_high_entropy ? "1" : "0");
    {
        std::string names;
        for (const auto& n : config.selection.important_attributes.local_names()) {
            if (!names.empty()) names += ',';
            names += n;
        }
        add("selector.important_local_names", names);
    }
    add("selector.raw_cap", std::to_string(config.raw_cap));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", config.reward.alpha);
    add("reward.alpha", buf);
    std::snprintf(buf, sizeof(buf), "%.17g", config.reward.beta);
    add("reward.beta", buf);
    std::snprintf(buf, sizeof(buf), "%.17g", config.reward.c);
    add("reward.c", buf);
    add("run.policy", config.policy);
    std::snprintf(buf, sizeof(buf), "%.17g", config.rule_threshold);
    add("run.threshold", buf);
    add("run.rounds", std::to_string(config.rounds));
    add("run.concurrency", std::to_string(config.concurrency));
    add("run.seed", std::to_string(config.seed));
    std::snprintf(buf, sizeof(buf), "%.17g", config.temperature);
    add("run.temperature", buf);
    add("run.keep_transcript", config.keep_transcript ? "1" : "0");

    std::uint64_t h = fnv1a64(canon);
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::unique_ptr<LlmBackend> make_backend(const BackendSettings& settings,
                                         const DatasetBundle* bundle) {
    if (settings.kind == "http") {
        HttpBackendConfig config;
        config.endpoint = settings.endpoint;
        config.model = settings.model;
        config.api_key = settings.api_key;
        config.max_attempts = settings.retries;
        config.force_greedy = settings.force_greedy;
        return std::make_unique<HttpBackend>(std::move(config));
    }
    if (settings.kind == "mock") {
        if (!bundle) throw ConfigError("mock backend needs a loaded bundle");
        GoldMap gold;
        for (const auto& p : bundle->gold_links) gold.emplace(p.source, p.target);
        return std::make_unique<OracleMockBackend>(std::move(gold));
    }
    throw ConfigError("unknown backend kind: " + settings.kind);
}

namespace {

// Rethrows the current stage failure with the stage named, preserving the
// error family so exit codes stay right.
[[noreturn]] void tag_stage(const char* stage) {
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("[") + stage + "] " + e.what());
    } catch (const BackendError& e) {
        throw BackendError(std::string("[") + stage + "] " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("[") + stage + "] " + e.what());
    }
}

CandidateMap gather_candidates(const RunConfig& config, const DatasetBundle& bundle,
                               std::vector<std::string>* warnings) {
    if (config.candidate_mode == "file") {
        auto f = open_input(config.candidates_file);
        return load_precomputed_candidates(f, config.candidate_k, warnings);
    }
    CandidateMap map;
    for (const auto& link : bundle.gold_links)
        map.emplace(link.source,
                    name_similarity_candidates(bundle.source_graph, bundle.target_graph,
                                               link.source, config.candidate_k));
    return map;
}

void require_coverage(const CandidateMap& candidates,
                      std::span<const AlignmentPair> links, const char* which) {
    std::size_t missing = 0;
    std::string first;
    for (const auto& link : links) {
        auto it = candidates.find(link.source);
        if (it == candidates.end() || it->second.candidates().empty()) {
            if (missing == 0) first = link.source.str();
            ++missing;
        }
    }
    if (missing > 0)
        throw DataError(std::string(which) + " set has " + std::to_string(missing) +
                        " entities without candidates, first: " + first);
}

}  // namespace

EvalReport run_pipeline(const RunConfig& config, LlmBackend* backend_override) {
    validate_run_config(config);

    DatasetBundle bundle;
    try {
        bundle = load_bundle(config.bundle_dir);
    } catch (...) {
        tag_stage("ingest");
    }

    std::filesystem::create_directories(config.out_dir);

    CandidateMap candidates;
    try {
        std::vector<std::string> warnings;
        candidates = gather_candidates(config, bundle, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        require_coverage(candidates, bundle.train_links, "train");
        require_coverage(candidates, bundle.test_links, "test");
        if (config.candidate_mode == "name-sim") {
            auto f = open_output(config.out_dir / "candidates.jsonl");
            write_candidates(f, candidates);
        }
    } catch (...) {
        tag_stage("retrieve");
    }

    std::unique_ptr<LlmBackend> owned_backend;
    LlmBackend* backend = backend_override;
    if (!backend) {
        owned_backend = make_backend(config.backend, &bundle);
        backend = owned_backend.get();
    }
    const bool timed = config.backend.kind == "http" && !backend_override;

    std::optional<std::size_t> budget;
    if (config.backend.token_budget > 0) budget = config.backend.token_budget;
    LlmGateway training_gateway(*backend, budget);

    RoundConfig round_config;
    round_config.reward = config.reward;
    round_config.execution.selection = config.selection;
    round_config.execution.raw_cap = config.raw_cap;
    round_config.execution.temperature = config.temperature;
    round_config.execution.keep_transcript = config.keep_transcript;
    round_config.rewrite.temperature = config.temperature;
    round_config.concurrency = config.concurrency;

    LlmPolicyConfig llm_policy_config;
    llm_policy_config.temperature = config.temperature;
    llm_policy_config.rule_threshold = config.rule_threshold;

    TrajectoryDataset dataset;
    std::unique_ptr<PlannerPolicy> policy;
    if (config.policy == "rule")
        policy = std::make_unique<RulePolicy>(config.rule_threshold);
    else
        policy = std::make_unique<LlmPolicy>(training_gateway, llm_policy_config);

    std::size_t total_failures = 0;
    try {
        for (std::size_t round = 1; round <= config.rounds; ++round) {
            round_config.round = round;
            RoundResult result = run_training_round(bundle, candidates, bundle.train_links,
                                                    *policy, training_gateway, round_config,
                                                    dataset);
            total_failures += result.failures.size();
            for (const auto& [entity, error] : result.failures)
                std::cerr << "round " << round << ": " << entity.str() << " failed: " << error
                          << '\n';
            {
                auto f = open_output(config.out_dir /
                                     ("trajectories_round_" + std::to_string(round) + ".jsonl"));
                dataset.save(f, round);
            }
            // Policy refresh: every later round plans from the replay buckets.
            policy = replay_policy(dataset, config.rule_threshold);
        }
        {
            auto f = open_output(config.out_dir / "trajectories.jsonl");
            dataset.save(f);
        }
        {
            auto f = open_output(config.out_dir / "sft.jsonl");
            export_sft_dataset(dataset, f);
        }
    } catch (...) {
        tag_stage("train");
    }

    // Inference gets a fresh ledger so the report reflects per-entity cost of
    // the tuned policy, not the training spend.
    LlmGateway inference_gateway(*backend, budget);
    std::vector<AlignmentOutcome> outcomes;
    TimingSummary timing;
    try {
        ExecutionConfig exec = round_config.execution;
        std::vector<const AlignmentPair*> order;
        order.reserve(bundle.test_links.size());
        for (const auto& p : bundle.test_links) order.push_back(&p);
        std::sort(order.begin(), order.end(), [](const AlignmentPair* a, const AlignmentPair* b) {
            return a->source < b->source;
        });

        for (const AlignmentPair* link : order) {
            const CandidateSet& cands = candidates.at(link->source);
            PlanningObservation obs =
                make_observation(bundle.source_graph, link->source, cands,
                                 config.selection.important_attributes);

            auto t0 = std::chrono::steady_clock::now();
            ToolPath path = policy->plan(obs);
            auto t1 = std::chrono::steady_clock::now();
            AlignmentOutcome outcome = execute(path, link->source, bundle.source_graph,
                                               bundle.target_graph, cands, inference_gateway,
                                               exec);
            auto t2 = std::chrono::steady_clock::now();
            if (timed) {
                timing.planning_seconds_total +=
                    std::chrono::duration<double>(t1 - t0).count();
                timing.alignment_seconds_total +=
                    std::chrono::duration<double>(t2 - t1).count();
            }
            outcomes.push_back(std::move(outcome));
        }
        timing.entities = outcomes.size();
        auto f = open_output(config.out_dir / "outcomes.jsonl");
        write_outcomes(f, outcomes, config.keep_transcript);
    } catch (...) {
        tag_stage("align");
    }

    EvalReport report;
    try {
        GoldMap gold;
        for (const auto& p : bundle.gold_links) gold.emplace(p.source, p.target);
        auto ledger = inference_gateway.ledger_summary();
        report = evaluate(outcomes, candidates, gold, timed ? &timing : nullptr, &ledger);
        auto f = open_output(config.out_dir / "report.json");
        write_report(f, report);
    } catch (...) {
        tag_stage("eval");
    }

    nlohmann::json manifest{
        {"config_hash", config_hash(config)},
        {"seed", config.seed},
        {"rounds", config.rounds},
        {"backend", config.backend.kind},
        {"policy", config.policy},
        {"counts",
         {{"train_links", bundle.train_links.size()},
          {"test_links", bundle.test_links.size()},
          {"trajectories", dataset.size()},
          {"training_failures", total_failures},
          {"outcomes", outcomes.size()}}},
    };
    {
        auto f = open_output(config.out_dir / "run_manifest.json");
        f << manifest.dump(2) << '\n';
    }
    return report;
}

}  // namespace eaagent
