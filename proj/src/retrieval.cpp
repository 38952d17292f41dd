#include "eaagent/retrieval.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "json.hpp"

namespace eaagent {

CandidateSet CandidateSet::validated(Iri source, std::vector<ScoredCandidate> candidates,
                                     std::size_t k, std::vector<std::string>* warnings) {
    if (k == 0) throw ConfigError("candidate list size k must be positive");

    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(source.str() + ": " + msg);
    };

    bool sorted = std::is_sorted(candidates.begin(), candidates.end(),
                                 [](const auto& a, const auto& b) { return a.score > b.score; });
    if (!sorted) {
        warn("candidates arrived unsorted, re-sorted by score");
        std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.target < b.target;
        });
    }

    std::vector<ScoredCandidate> unique;
    unique.reserve(candidates.size());
    std::unordered_set<Iri> seen;
    for (auto& c : candidates) {
        if (!seen.insert(c.target).second) {
            warn("duplicate candidate dropped: " + c.target.str());
            continue;
        }
        unique.push_back(std::move(c));
    }
    if (unique.size() > k) {
        warn("candidate list truncated to k=" + std::to_string(k));
        unique.resize(k);
    }

    CandidateSet set;
    set.source_ = std::move(source);
    set.candidates_ = std::move(unique);
    set.k_ = k;
    return set;
}

bool CandidateSet::contains(const Iri& target) const {
    for (const auto& c : candidates_)
        if (c.target == target) return true;
    return false;
}

std::vector<Iri> CandidateSet::targets() const {
    std::vector<Iri> out;
    out.reserve(candidates_.size());
    for (const auto& c : candidates_) out.push_back(c.target);
    return out;
}

CandidateMap load_precomputed_candidates(std::istream& in, std::size_t k,
                                         std::vector<std::string>* warnings) {
    CandidateMap map;
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
        if (!j.is_object() || !j.contains("source") || !j.contains("candidates") ||
            !j["source"].is_string() || !j["candidates"].is_array())
            throw MalformedRecordError(line_no, "expected {\"source\", \"candidates\"}");

        Iri source;
        try {
            source = Iri(j["source"].get<std::string>());
        } catch (const DataError& e) {
            throw MalformedRecordError(line_no, e.what());
        }
        if (map.count(source))
            throw MalformedRecordError(line_no, "duplicate source " + source.str());

        std::vector<ScoredCandidate> candidates;
        for (const auto& c : j["candidates"]) {
            if (!c.is_object() || !c.contains("iri") || !c.contains("score") ||
                !c["iri"].is_string() || !c["score"].is_number())
                throw MalformedRecordError(line_no, "candidate needs {\"iri\", \"score\"}");
            double score = c["score"].get<double>();
            if (score < 0.0 || score > 1.0) throw ScoreOutOfRangeError(line_no, score);
            try {
                candidates.push_back({Iri(c["iri"].get<std::string>()), score});
            } catch (const DataError& e) {
                throw MalformedRecordError(line_no, e.what());
            }
        }
        map.emplace(source, CandidateSet::validated(source, std::move(candidates), k, warnings));
    }
    return map;
}

void write_candidates(std::ostream& out, const CandidateMap& map) {
    for (const auto& [source, set] : map) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& c : set.candidates())
            arr.push_back({{"iri", c.target.str()}, {"score", c.score}});
        nlohmann::json j{{"source", source.str()}, {"candidates", std::move(arr)}};
        out << j.dump() << '\n';
    }
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();

    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});

    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({subst, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double name_similarity(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    auto d = static_cast<double>(edit_distance(a, b));
    return 1.0 - d / static_cast<double>(std::max(a.size(), b.size()));
}

CandidateSet name_similarity_candidates(const KnowledgeGraph& source_graph,
                                        const KnowledgeGraph& target_graph, const Iri& source,
                                        std::size_t k) {
    if (!source_graph.contains(source)) throw UnknownEntityError(source.str());

    const std::string source_name = local_name(source);
    std::vector<ScoredCandidate> scored;
    scored.reserve(target_graph.entities().size());
    for (const auto& target : target_graph.entities())
        scored.push_back({target, name_similarity(source_name, local_name(target))});

    auto better = [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.target < b.target;
    };
    std::size_t keep = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), better);
    scored.resize(keep);
    return CandidateSet::validated(source, std::move(scored), k);
}

TopScores top_scores(const CandidateSet& set) {
    TopScores t;
    const auto& c = set.candidates();
    if (c.size() > 0) t.top1 = c[0].score;
    if (c.size() > 1) t.top2 = c[1].score;
    if (c.size() > 2) t.top3 = c[2].score;
    return t;
}

}  // namespace eaagent
