#include "eaagent/eval.hpp"

#include <cassert>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace eaagent {

std::size_t rank_of_gold(const AlignmentOutcome& outcome, const CandidateSet& candidates,
                         const Iri& gold) {
    if (gold == outcome.final_prediction) return 1;
    std::size_t rank = 1;
    for (const auto& c : candidates.candidates()) {
        if (c.target == outcome.final_prediction) continue;  // moved to rank 1
        ++rank;
        if (c.target == gold) return rank;
    }
    return 0;
}

namespace {

const CandidateSet& candidates_for(const CandidateMap& map, const Iri& source) {
    auto it = map.find(source);
    if (it == map.end()) throw EmptyCandidatesError(source.str());
    return it->second;
}

const Iri& gold_for(const GoldMap& gold, const Iri& source) {
    auto it = gold.find(source);
    if (it == gold.end()) throw MissingGoldLinkError(source.str());
    return it->second;
}

}  // namespace

double hits_at_k(std::span<const AlignmentOutcome> outcomes, const CandidateMap& candidates,
                 const GoldMap& gold, std::size_t k) {
    if (outcomes.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& o : outcomes) {
        std::size_t rank = rank_of_gold(o, candidates_for(candidates, o.source),
                                        gold_for(gold, o.source));
        if (rank >= 1 && rank <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double mrr(std::span<const AlignmentOutcome> outcomes, const CandidateMap& candidates,
           const GoldMap& gold) {
    if (outcomes.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& o : outcomes) {
        std::size_t rank = rank_of_gold(o, candidates_for(candidates, o.source),
                                        gold_for(gold, o.source));
        if (rank > 0) sum += 1.0 / static_cast<double>(rank);
    }
    return sum / static_cast<double>(outcomes.size());
}

double reflector_rate(std::span<const ToolPath> paths) {
    if (paths.empty()) return 0.0;
    std::size_t with = 0;
    for (const auto& p : paths)
        if (p.has_reflector()) ++with;
    return static_cast<double>(with) / static_cast<double>(paths.size());
}

double avg_path_length(std::span<const ToolPath> paths) {
    if (paths.empty()) return 0.0;
    std::size_t steps = 0;
    for (const auto& p : paths) steps += p.length();
    return static_cast<double>(steps) / static_cast<double>(paths.size());
}

EvalReport evaluate(std::span<const AlignmentOutcome> outcomes, const CandidateMap& candidates,
                    const GoldMap& gold, const TimingSummary* timing,
                    const TokenLedger::Summary* ledger) {
    EvalReport report;
    report.n_entities = outcomes.size();
    report.hits_at_1 = hits_at_k(outcomes, candidates, gold, 1);
    report.hits_at_10 = hits_at_k(outcomes, candidates, gold, 10);
    report.mrr = mrr(outcomes, candidates, gold);
    assert(report.hits_at_1 <= report.hits_at_10);

    std::vector<ToolPath> paths;
    paths.reserve(outcomes.size());
    for (const auto& o : outcomes) paths.push_back(o.path);
    report.reflector_rate = reflector_rate(paths);
    report.avg_path_length = avg_path_length(paths);

    if (ledger) {
        report.avg_tokens_per_entity = ledger->avg_tokens_per_entity;
        report.tokens_estimated = ledger->any_estimated;
    } else if (!outcomes.empty()) {
        std::size_t total = 0;
        for (const auto& o : outcomes) total += o.tokens.total();
        report.avg_tokens_per_entity =
            static_cast<double>(total) / static_cast<double>(outcomes.size());
    }

    if (timing && timing->entities > 0) {
        report.avg_planning_seconds =
            timing->planning_seconds_total / static_cast<double>(timing->entities);
        report.avg_alignment_seconds =
            timing->alignment_seconds_total / static_cast<double>(timing->entities);
    }
    return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
    nlohmann::json j{
        {"n_entities", report.n_entities},
        {"hits_at_1", report.hits_at_1},
        {"hits_at_10", report.hits_at_10},
        {"mrr", report.mrr},
        {"reflector_rate", report.reflector_rate},
        {"avg_path_length", report.avg_path_length},
        {"avg_tokens_per_entity", report.avg_tokens_per_entity},
        {"avg_seconds_per_entity",
         {{"planning", report.avg_planning_seconds}, {"alignment", report.avg_alignment_seconds}}},
        {"tokens_estimated", report.tokens_estimated},
    };
    out << j.dump(2) << '\n';
}

EvalReport load_report(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        EvalReport report;
        report.n_entities = j.at("n_entities").get<std::size_t>();
        report.hits_at_1 = j.at("hits_at_1").get<double>();
        report.hits_at_10 = j.at("hits_at_10").get<double>();
        report.mrr = j.at("mrr").get<double>();
        report.reflector_rate = j.at("reflector_rate").get<double>();
        report.avg_path_length = j.at("avg_path_length").get<double>();
        report.avg_tokens_per_entity = j.at("avg_tokens_per_entity").get<double>();
        report.avg_planning_seconds =
            j.at("avg_seconds_per_entity").at("planning").get<double>();
        report.avg_alignment_seconds =
            j.at("avg_seconds_per_entity").at("alignment").get<double>();
        report.tokens_estimated = j.at("tokens_estimated").get<bool>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad report: " + std::string(e.what()));
    }
}

}  // namespace eaagent
