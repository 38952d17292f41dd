#include "eaagent/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "eaagent/text.hpp"

namespace eaagent {

namespace {

nlohmann::json path_to_json(const ToolPath& path) {
    nlohmann::json steps = nlohmann::json::array();
    for (ToolId id : path.steps()) steps.push_back(std::string(tool_name(id)));
    return {{"steps", std::move(steps)}, {"origin", to_string(path.origin())}};
}

ToolPath path_from_json(const nlohmann::json& j, std::size_t line_no) {
    try {
        std::vector<ToolId> steps;
        for (const auto& s : j.at("steps")) {
            auto tool = tool_from_name(s.get<std::string>());
            if (!tool) throw MalformedRecordError(line_no, "unknown tool " + s.get<std::string>());
            steps.push_back(*tool);
        }
        auto origin = path_origin_from_string(j.at("origin").get<std::string>());
        if (!origin) throw MalformedRecordError(line_no, "unknown path origin");
        return ToolPath::from_steps(std::move(steps), *origin);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecordError(line_no, e.what());
    } catch (const InvalidPathError& e) {
        throw MalformedRecordError(line_no, e.what());
    }
}

nlohmann::json observation_to_json(const PlanningObservation& obs) {
    return {
        {"entity", obs.entity.str()},
        {"statistics",
         {{"attr_cnt_all", obs.statistics.attr_cnt_all},
          {"attr_cnt", obs.statistics.attr_cnt},
          {"rel_cnt_all", obs.statistics.rel_cnt_all},
          {"rel_cnt", obs.statistics.rel_cnt},
          {"signal_attr", obs.statistics.signal_attr}}},
        {"top1", obs.top1},
        {"top2", obs.top2},
        {"top3", obs.top3},
    };
}

PlanningObservation observation_from_json(const nlohmann::json& j, std::size_t line_no) {
    try {
        PlanningObservation obs;
        obs.entity = Iri(j.at("entity").get<std::string>());
        const auto& s = j.at("statistics");
        obs.statistics.attr_cnt_all = s.at("attr_cnt_all").get<std::size_t>();
        obs.statistics.attr_cnt = s.at("attr_cnt").get<std::size_t>();
        obs.statistics.rel_cnt_all = s.at("rel_cnt_all").get<std::size_t>();
        obs.statistics.rel_cnt = s.at("rel_cnt").get<std::size_t>();
        obs.statistics.signal_attr = s.at("signal_attr").get<bool>();
        obs.top1 = j.at("top1").get<double>();
        obs.top2 = j.at("top2").get<double>();
        obs.top3 = j.at("top3").get<double>();
        return obs;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedRecordError(line_no, e.what());
    } catch (const DataError& e) {
        if (dynamic_cast<const MalformedRecordError*>(&e)) throw;
        throw MalformedRecordError(line_no, e.what());
    }
}

nlohmann::json record_to_json(const PolicyUpdateTriple& rec) {
    return {
        {"entity", rec.observation.entity.str()},
        {"round", rec.round},
        {"observation", observation_to_json(rec.observation)},
        {"path", path_to_json(rec.executed_path)},
        {"reward",
         {{"mu", rec.reward.mu},
          {"ref", rec.reward.ref ? nlohmann::json(*rec.reward.ref) : nlohmann::json(nullptr)},
          {"e", rec.reward.e},
          {"total", rec.reward.total}}},
        {"rewritten_path", path_to_json(rec.rewritten_path)},
    };
}

}  // namespace

void TrajectoryDataset::append(PolicyUpdateTriple record) {
    if (!records_.empty() && record.round < records_.back().round)
        throw DataError("trajectory rounds must be non-decreasing");
    records_.push_back(std::move(record));
}

void TrajectoryDataset::save(std::ostream& out) const {
    for (const auto& rec : records_) out << record_to_json(rec).dump() << '\n';
}

void TrajectoryDataset::save(std::ostream& out, std::size_t round) const {
    for (const auto& rec : records_)
        if (rec.round == round) out << record_to_json(rec).dump() << '\n';
}

TrajectoryDataset TrajectoryDataset::load(std::istream& in) {
    TrajectoryDataset dataset;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(line_no, e.what());
        }
        try {
            PolicyUpdateTriple rec;
            rec.round = j.at("round").get<std::size_t>();
            rec.observation = observation_from_json(j.at("observation"), line_no);
            rec.executed_path = path_from_json(j.at("path"), line_no);
            const auto& r = j.at("reward");
            rec.reward.mu = r.at("mu").get<double>();
            if (!r.at("ref").is_null()) rec.reward.ref = r.at("ref").get<double>();
            rec.reward.e = r.at("e").get<double>();
            rec.reward.total = r.at("total").get<double>();
            rec.rewritten_path = path_from_json(j.at("rewritten_path"), line_no);
            dataset.append(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(line_no, e.what());
        } catch (const DataError& e) {
            if (dynamic_cast<const MalformedRecordError*>(&e)) throw;
            throw MalformedRecordError(line_no, e.what());
        }
    }
    return dataset;
}

std::string render_rewrite_prompt(const PlanningObservation& observation,
                                  const ToolPath& old_path, double reward_total) {
    return render_template(prompts::kRewriteTemplate,
                           {
                               {"entity", observation.entity.str()},
                               {"top1_score", format_fixed2(observation.top1)},
                               {"top2_score", format_fixed2(observation.top2)},
                               {"top3_score", format_fixed2(observation.top3)},
                               {"old_tools", old_path.render_numbered()},
                               {"reward", format_fixed2(reward_total)},
                           });
}

ToolPath rewrite_path(LlmGateway& gateway, const PlanningObservation& observation,
                      const ToolPath& old_path, const RewardBreakdown& reward,
                      const RewriteConfig& config) {
    ChatRequest request;
    request.entity = observation.entity;
    request.tag = PromptTag::rewrite;
    request.user_text = render_rewrite_prompt(observation, old_path, reward.total);
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;

    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatResponse response = gateway.complete(request);
        try {
            return parse_plan(response.text, PathOrigin::rewritten);
        } catch (const PlanParseError&) {
        }
    }
    if (reward.ref && *reward.ref < 0.0 && old_path.has_reflector())
        return old_path.without_reflector(PathOrigin::fallback);
    return ToolPath::from_steps(old_path.steps(), PathOrigin::fallback);
}

namespace {

// Static sharding is enough here: per-item cost is uniform (one or two LLM
// round trips), and results land in preallocated slots.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t concurrency, Fn&& fn) {
    if (n == 0) return;
    if (concurrency <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::size_t workers = std::min(concurrency, n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace

RoundResult run_training_round(const DatasetBundle& bundle, const CandidateMap& candidates,
                               std::span<const AlignmentPair> train_links,
                               PlannerPolicy& policy, LlmGateway& gateway,
                               const RoundConfig& config, TrajectoryDataset& dataset) {
    std::vector<const AlignmentPair*> order;
    order.reserve(train_links.size());
    for (const auto& p : train_links) order.push_back(&p);
    std::sort(order.begin(), order.end(),
              [](const AlignmentPair* a, const AlignmentPair* b) { return a->source < b->source; });

    struct Slot {
        std::optional<PolicyUpdateTriple> record;
        std::string error;
    };
    std::vector<Slot> slots(order.size());

    parallel_for(order.size(), config.concurrency, [&](std::size_t i) {
        const AlignmentPair& pair = *order[i];
        try {
            auto it = candidates.find(pair.source);
            if (it == candidates.end() || it->second.candidates().empty())
                throw EmptyCandidatesError(pair.source.str());

            PlanningObservation obs =
                make_observation(bundle.source_graph, pair.source, it->second,
                                 config.execution.selection.important_attributes);
            ToolPath path = policy.plan(obs);
            AlignmentOutcome outcome =
                execute(path, pair.source, bundle.source_graph, bundle.target_graph, it->second,
                        gateway, config.execution);
            RewardBreakdown reward = compute_reward(outcome, pair.target, config.reward);
            ToolPath rewritten = rewrite_path(gateway, obs, path, reward, config.rewrite);
            slots[i].record =
                PolicyUpdateTriple{std::move(obs), std::move(path), reward, std::move(rewritten),
                                   config.round};
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    });

    RoundResult result;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].record) {
            dataset.append(std::move(*slots[i].record));
            ++result.appended;
        } else {
            result.failures.emplace_back(order[i]->source, std::move(slots[i].error));
        }
    }
    return result;
}

std::size_t export_sft_dataset(const TrajectoryDataset& dataset, std::ostream& out,
                               std::string_view tool_pool) {
    if (dataset.empty()) throw EmptyDatasetError();
    for (const auto& rec : dataset.records()) {
        nlohmann::json j{
            {"prompt", render_planning_prompt(rec.observation, tool_pool)},
            {"completion", rec.rewritten_path.render_numbered()},
        };
        out << j.dump() << '\n';
    }
    return dataset.size();
}

std::vector<std::pair<std::string, std::string>> load_sft_pairs(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            out.emplace_back(j.at("prompt").get<std::string>(),
                             j.at("completion").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(line_no, e.what());
        }
    }
    return out;
}

ReplayPolicy::ReplayPolicy(const TrajectoryDataset& dataset, double gap_threshold)
    : threshold_(gap_threshold) {
    for (const auto& rec : dataset.records()) {
        std::pair<bool, bool> key{rec.observation.statistics.signal_attr,
                                  (rec.observation.top1 - rec.observation.top2) < threshold_};
        auto it = buckets_.find(key);
        // Strict comparison keeps the earliest record on reward ties.
        if (it == buckets_.end() || rec.reward.total > it->second.reward_total)
            buckets_.insert_or_assign(key, Entry{rec.reward.total, rec.rewritten_path});
    }
}

ToolPath ReplayPolicy::plan(const PlanningObservation& observation) {
    std::pair<bool, bool> key{observation.statistics.signal_attr,
                              (observation.top1 - observation.top2) < threshold_};
    auto it = buckets_.find(key);
    if (it != buckets_.end()) return it->second.path;
    return rule_based_plan(observation, threshold_);
}

std::unique_ptr<PlannerPolicy> replay_policy(const TrajectoryDataset& dataset,
                                             double gap_threshold) {
    return std::make_unique<ReplayPolicy>(dataset, gap_threshold);
}

}  // namespace eaagent
