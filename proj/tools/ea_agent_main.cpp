#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "eaagent/pipeline.hpp"

namespace {

using namespace eaagent;

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

CandidateMap load_candidate_file(const std::filesystem::path& path, std::size_t k) {
    if (!std::filesystem::exists(path))
        throw ConfigError("candidates file does not exist: " + path.string());
    auto f = open_input(path);
    std::vector<std::string> warnings;
    CandidateMap map = load_precomputed_candidates(f, k, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return map;
}

std::unique_ptr<PlannerPolicy> build_policy(const std::string& kind, double threshold,
                                            LlmGateway* gateway,
                                            const std::filesystem::path& trajectories) {
    if (kind == "rule") return std::make_unique<RulePolicy>(threshold);
    if (kind == "llm") {
        if (!gateway) throw ConfigError("llm policy needs a backend");
        LlmPolicyConfig config;
        config.rule_threshold = threshold;
        return std::make_unique<LlmPolicy>(*gateway, config);
    }
    if (kind == "replay") {
        if (trajectories.empty()) throw ConfigError("replay policy needs --trajectories");
        auto f = open_input(trajectories);
        return replay_policy(TrajectoryDataset::load(f), threshold);
    }
    throw ConfigError("unknown policy: " + kind);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"LLM-agent entity alignment over paired knowledge graphs"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse raw TSV triples and split the gold links");
    IngestRequest ingest_request;
    ingest->add_option("--source-attr", ingest_request.source_attr_file, "Source attribute TSV")
        ->required();
    ingest->add_option("--source-rel", ingest_request.source_rel_file, "Source relation TSV")
        ->required();
    ingest->add_option("--target-attr", ingest_request.target_attr_file, "Target attribute TSV")
        ->required();
    ingest->add_option("--target-rel", ingest_request.target_rel_file, "Target relation TSV")
        ->required();
    ingest->add_option("--links", ingest_request.links_file, "Gold link TSV")->required();
    ingest->add_option("--split", ingest_request.train_ratio, "Training fraction of the links");
    ingest->add_option("--seed", ingest_request.seed, "Split shuffle seed");
    ingest->add_option("--out", ingest_request.out_dir, "Bundle output directory")->required();

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "Produce candidate lists for linked entities");
    std::filesystem::path bundle_dir, in_file, out_file, trajectories_file;
    std::string mode = "name-sim";
    std::size_t k = 10;
    retrieve->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    retrieve->add_option("--mode", mode, "name-sim or file");
    retrieve->add_option("--file", in_file, "Precomputed candidate JSONL (mode=file)");
    retrieve->add_option("--k", k, "Candidates per entity");
    retrieve->add_option("--out", out_file, "Output JSONL")->required();

    // stats
    auto* stats = app.add_subcommand("stats", "Print profile, entropies, and relation scores");
    std::string entity_arg;
    stats->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    stats->add_option("--entity", entity_arg, "Entity IRI")->required();

    // plan
    auto* plan = app.add_subcommand("plan", "Plan tool paths for every entity with candidates");
    std::string policy_kind = "rule", backend_kind = "mock", endpoint, model;
    double threshold = 0.3;
    plan->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    plan->add_option("--candidates", in_file, "Candidate JSONL")->required();
    plan->add_option("--policy", policy_kind, "llm, rule, or replay");
    plan->add_option("--trajectories", trajectories_file, "Trajectory JSONL (policy=replay)");
    plan->add_option("--threshold", threshold, "Reflector gap threshold");
    plan->add_option("--backend", backend_kind, "http or mock (policy=llm)");
    plan->add_option("--endpoint", endpoint, "Chat-completions endpoint (backend=http)");
    plan->add_option("--model", model, "Model name (backend=http)");
    plan->add_option("--out", out_file, "Output plans JSONL")->required();

    // align
    auto* align = app.add_subcommand("align", "Execute planned paths and record outcomes");
    std::filesystem::path plans_file;
    bool no_transcript = false;
    align->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    align->add_option("--candidates", in_file, "Candidate JSONL")->required();
    align->add_option("--plans", plans_file, "Plans JSONL")->required();
    align->add_option("--backend", backend_kind, "http or mock");
    align->add_option("--endpoint", endpoint, "Chat-completions endpoint (backend=http)");
    align->add_option("--model", model, "Model name (backend=http)");
    align->add_flag("--no-transcript", no_transcript, "Skip prompt transcripts in the output");
    align->add_option("--out", out_file, "Output outcomes JSONL")->required();

    // train-round
    auto* train = app.add_subcommand("train-round", "Run one optimization round over train links");
    std::size_t round_no = 1;
    std::filesystem::path in_trajectories, out_sft;
    train->add_option("--bundle", bundle_dir, "Bundle directory")->required();
    train->add_option("--candidates", in_file, "Candidate JSONL")->required();
    train->add_option("--round", round_no, "Round number (1-based)");
    train->add_option("--policy", policy_kind, "llm, rule, or replay");
    train->add_option("--trajectories", in_trajectories, "Existing trajectory JSONL to extend");
    train->add_option("--threshold", threshold, "Reflector gap threshold");
    train->add_option("--backend", backend_kind, "http or mock");
    train->add_option("--endpoint", endpoint, "Chat-completions endpoint (backend=http)");
    train->add_option("--model", model, "Model name (backend=http)");
    train->add_option("--out-trajectories", out_file, "Accumulated trajectory JSONL")->required();
    train->add_option("--out-sft", out_sft, "Tuning pair JSONL");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score an outcomes file against gold links");
    std::filesystem::path outcomes_file, links_file, report_file;
    eval_cmd->add_option("--outcomes", outcomes_file, "Outcomes JSONL")->required();
    eval_cmd->add_option("--candidates", in_file, "Candidate JSONL")->required();
    eval_cmd->add_option("--links", links_file, "Gold link TSV")->required();
    eval_cmd->add_option("--k", k, "Candidates per entity");
    eval_cmd->add_option("--report", report_file, "Report JSON output")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "Summarize trajectory files round by round");
    std::vector<std::filesystem::path> trajectory_files;
    report_cmd->add_option("--trajectories", trajectory_files, "Trajectory JSONL files")
        ->required();

    // run
    auto* run = app.add_subcommand("run", "Full pipeline: train rounds, inference, evaluation");
    std::filesystem::path config_file;
    run->add_option("--config", config_file, "Run configuration file")->required();

    CLI11_PARSE(app, argc, argv);

    if (ingest->parsed()) {
        DatasetBundle bundle = run_ingest(ingest_request);
        std::cout << "bundle written to " << ingest_request.out_dir.string() << " ("
                  << bundle.train_links.size() << " train / " << bundle.test_links.size()
                  << " test links)\n";
        return 0;
    }

    if (retrieve->parsed()) {
        DatasetBundle bundle = load_bundle(bundle_dir);
        CandidateMap map;
        if (mode == "file") {
            if (in_file.empty()) throw ConfigError("--mode file needs --file");
            map = load_candidate_file(in_file, k);
        } else if (mode == "name-sim") {
            if (!in_file.empty()) throw ConfigError("--file only applies to --mode file");
            for (const auto& link : bundle.gold_links)
                map.emplace(link.source,
                            name_similarity_candidates(bundle.source_graph, bundle.target_graph,
                                                       link.source, k));
        } else {
            throw ConfigError("unknown retrieve mode: " + mode);
        }
        auto f = open_output(out_file);
        write_candidates(f, map);
        std::cout << map.size() << " candidate sets written to " << out_file.string() << '\n';
        return 0;
    }

    if (stats->parsed()) {
        DatasetBundle bundle = load_bundle(bundle_dir);
        Iri entity(entity_arg);
        const KnowledgeGraph* graph = nullptr;
        const char* side = nullptr;
        if (bundle.source_graph.contains(entity)) {
            graph = &bundle.source_graph;
            side = "source";
        } else if (bundle.target_graph.contains(entity)) {
            graph = &bundle.target_graph;
            side = "target";
        } else {
            throw UnknownEntityError(entity.str());
        }

        EntityStatistics s = entity_statistics(*graph, entity, AttributeWhitelist::default_names());
        std::cout << "entity: " << entity.str() << " (" << side << " graph)\n"
                  << "attribute triples: " << s.attr_cnt_all << '\n'
                  << "attribute types:   " << s.attr_cnt << '\n'
                  << "relation triples:  " << s.rel_cnt_all << '\n'
                  << "relation types:    " << s.rel_cnt << '\n'
                  << "has name attribute: " << (s.signal_attr ? "true" : "false") << '\n';

        std::map<Iri, double> entropies;
        for (std::uint32_t i : graph->attr_indices(entity)) {
            const Iri& attr = graph->attribute_triples()[i].attribute;
            entropies.emplace(attr, attribute_entropy(*graph, attr));
        }
        std::cout << "attribute entropies:\n";
        for (const auto& [attr, h] : entropies)
            std::printf("  %-60s H=%.4f\n", attr.str().c_str(), h);

        std::map<Iri, double> scores;
        for (std::uint32_t i : graph->rel_out_indices(entity)) {
            const Iri& rel = graph->relation_triples()[i].relation;
            scores.emplace(rel, relation_score(*graph, rel));
        }
        for (std::uint32_t i : graph->rel_in_indices(entity)) {
            const Iri& rel = graph->relation_triples()[i].relation;
            scores.emplace(rel, relation_score(*graph, rel));
        }
        std::cout << "relation scores:\n";
        for (const auto& [rel, score] : scores)
            std::printf("  %-60s I=%.4f\n", rel.str().c_str(), score);
        return 0;
    }

    auto backend_settings = [&]() {
        BackendSettings settings;
        settings.kind = backend_kind;
        settings.endpoint = endpoint;
        settings.model = model;
        return settings;
    };

    if (plan->parsed()) {
        DatasetBundle bundle = load_bundle(bundle_dir);
        CandidateMap candidates = load_candidate_file(in_file, k);

        std::unique_ptr<LlmBackend> backend;
        std::unique_ptr<LlmGateway> gateway;
        if (policy_kind == "llm") {
            backend = make_backend(backend_settings(), &bundle);
            gateway = std::make_unique<LlmGateway>(*backend);
        }
        auto policy = build_policy(policy_kind, threshold, gateway.get(), trajectories_file);

        std::vector<PlanRecord> plans;
        for (const auto& [source, set] : candidates) {
            if (!bundle.source_graph.contains(source)) continue;
            PlanningObservation obs = make_observation(bundle.source_graph, source, set,
                                                       AttributeWhitelist::default_names());
            plans.push_back({source, policy->plan(obs)});
        }
        auto f = open_output(out_file);
        write_plans(f, plans);
        std::cout << plans.size() << " plans written to " << out_file.string() << '\n';
        return 0;
    }

    if (align->parsed()) {
        DatasetBundle bundle = load_bundle(bundle_dir);
        CandidateMap candidates = load_candidate_file(in_file, k);
        std::vector<PlanRecord> plans;
        {
            auto f = open_input(plans_file);
            plans = load_plans(f);
        }
        auto backend = make_backend(backend_settings(), &bundle);
        LlmGateway gateway(*backend);

        ExecutionConfig exec;
        exec.keep_transcript = !no_transcript;
        std::vector<AlignmentOutcome> outcomes;
        for (const auto& p : plans) {
            auto it = candidates.find(p.entity);
            if (it == candidates.end()) throw EmptyCandidatesError(p.entity.str());
            outcomes.push_back(execute(p.path, p.entity, bundle.source_graph,
                                       bundle.target_graph, it->second, gateway, exec));
        }
        auto f = open_output(out_file);
        write_outcomes(f, outcomes, !no_transcript);
        std::cout << outcomes.size() << " outcomes written to " << out_file.string() << '\n';
        return 0;
    }

    if (train->parsed()) {
        DatasetBundle bundle = load_bundle(bundle_dir);
        CandidateMap candidates = load_candidate_file(in_file, k);

        TrajectoryDataset dataset;
        if (!in_trajectories.empty()) {
            auto f = open_input(in_trajectories);
            dataset = TrajectoryDataset::load(f);
        }

        auto backend = make_backend(backend_settings(), &bundle);
        LlmGateway gateway(*backend);
        auto policy = build_policy(policy_kind, threshold, &gateway, in_trajectories);

        RoundConfig config;
        config.round = round_no;
        RoundResult result = run_training_round(bundle, candidates, bundle.train_links, *policy,
                                                gateway, config, dataset);
        for (const auto& [entity, error] : result.failures)
            std::cerr << entity.str() << " failed: " << error << '\n';
        {
            auto f = open_output(out_file);
            dataset.save(f);
        }
        if (!out_sft.empty()) {
            auto f = open_output(out_sft);
            export_sft_dataset(dataset, f);
        }
        std::cout << result.appended << " trajectories appended (" << result.failures.size()
                  << " failures), dataset now " << dataset.size() << " records\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        std::vector<AlignmentOutcome> outcomes;
        {
            auto f = open_input(outcomes_file);
            outcomes = load_outcomes(f);
        }
        CandidateMap candidates = load_candidate_file(in_file, k);
        GoldMap gold;
        {
            auto f = open_input(links_file);
            for (const auto& p : parse_entity_links(f)) gold.emplace(p.source, p.target);
        }
        EvalReport report = evaluate(outcomes, candidates, gold);
        {
            auto f = open_output(report_file);
            write_report(f, report);
        }
        std::printf("hits@1 %.4f  hits@10 %.4f  mrr %.4f  reflector %.4f  path length %.2f\n",
                    report.hits_at_1, report.hits_at_10, report.mrr, report.reflector_rate,
                    report.avg_path_length);
        return 0;
    }

    if (report_cmd->parsed()) {
        std::map<std::size_t, std::vector<const PolicyUpdateTriple*>> by_round;
        std::vector<TrajectoryDataset> datasets;
        datasets.reserve(trajectory_files.size());
        for (const auto& path : trajectory_files) {
            auto f = open_input(path);
            datasets.push_back(TrajectoryDataset::load(f));
        }
        for (const auto& dataset : datasets)
            for (const auto& rec : dataset.records()) by_round[rec.round].push_back(&rec);

        std::printf("%-6s %-8s %-14s %-12s %-14s %-12s\n", "round", "records", "reflector",
                    "length", "reflector*", "length*");
        for (const auto& [round, records] : by_round) {
            std::vector<ToolPath> executed, rewritten;
            for (const auto* rec : records) {
                executed.push_back(rec->executed_path);
                rewritten.push_back(rec->rewritten_path);
            }
            std::printf("%-6zu %-8zu %-14.4f %-12.2f %-14.4f %-12.2f\n", round, records.size(),
                        reflector_rate(executed), avg_path_length(executed),
                        reflector_rate(rewritten), avg_path_length(rewritten));
        }
        return 0;
    }

    if (run->parsed()) {
        RunConfig config = load_run_config(config_file);
        EvalReport report = run_pipeline(config);
        std::printf(
            "hits@1 %.4f  hits@10 %.4f  mrr %.4f  reflector %.4f  path length %.2f  "
            "tokens/entity %.1f\n",
            report.hits_at_1, report.hits_at_10, report.mrr, report.reflector_rate,
            report.avg_path_length, report.avg_tokens_per_entity);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
