#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "eaagent/optimizer.hpp"
#include "test_support.hpp"

using namespace eaagent;
using eatest::CityFixture;

namespace {

using enum ToolId;

ToolPath path_of(std::vector<ToolId> steps, PathOrigin origin = PathOrigin::rule) {
    return ToolPath::from_steps(std::move(steps), origin);
}

PlanningObservation observation(const char* entity, double top1, double top2,
                                bool signal = true) {
    PlanningObservation obs;
    obs.entity = Iri(entity);
    obs.statistics = {3, 2, 2, 1, signal};
    obs.top1 = top1;
    obs.top2 = top2;
    obs.top3 = 0.05;
    return obs;
}

PolicyUpdateTriple record(const char* entity, bool signal, double gap, double total,
                          std::vector<ToolId> rewritten, std::size_t round = 1) {
    PolicyUpdateTriple rec;
    rec.observation = observation(entity, 0.9, 0.9 - gap, signal);
    rec.executed_path = path_of({attribute_selector, relation_selector, alignment});
    rec.reward.mu = 1.0;
    rec.reward.e = std::exp(-0.6);
    rec.reward.total = total;
    rec.rewritten_path = path_of(std::move(rewritten), PathOrigin::rewritten);
    rec.round = round;
    return rec;
}

}  // namespace

TEST_CASE("dataset append enforces non-decreasing rounds") {
    TrajectoryDataset dataset;
    dataset.append(record("http://s/a", true, 0.5, 1.0, {attribute_selector, alignment}, 1));
    dataset.append(record("http://s/b", true, 0.5, 1.0, {attribute_selector, alignment}, 1));
    dataset.append(record("http://s/c", true, 0.5, 1.0, {attribute_selector, alignment}, 2));
    CHECK(dataset.size() == 3);
    CHECK_THROWS_AS(
        dataset.append(record("http://s/d", true, 0.5, 1.0, {attribute_selector, alignment}, 1)),
        DataError);
}

TEST_CASE("dataset round-trips through jsonl") {
    TrajectoryDataset dataset;
    PolicyUpdateTriple rec =
        record("http://s/a", true, 0.2, 2.44, {relation_selector, alignment}, 1);
    rec.reward.ref = 1.0;
    dataset.append(rec);
    dataset.append(record("http://s/b", false, 0.5, 1.54,
                          {attribute_selector, relation_selector, alignment}, 2));

    std::ostringstream out;
    dataset.save(out);
    std::istringstream in(out.str());
    TrajectoryDataset loaded = TrajectoryDataset::load(in);
    REQUIRE(loaded.size() == 2);

    const auto& a = loaded.records()[0];
    CHECK(a.observation.entity == Iri("http://s/a"));
    CHECK(a.observation.statistics.signal_attr);
    CHECK(a.observation.top2 == doctest::Approx(0.7));
    CHECK(a.executed_path.steps() == rec.executed_path.steps());
    CHECK(a.reward.ref.has_value());
    CHECK(*a.reward.ref == 1.0);
    CHECK(a.reward.total == doctest::Approx(2.44));
    CHECK(a.rewritten_path.steps() ==
          std::vector<ToolId>{relation_selector, alignment});
    CHECK(a.round == 1);

    const auto& b = loaded.records()[1];
    CHECK_FALSE(b.reward.ref.has_value());
    CHECK(b.round == 2);

    // Round-scoped save writes only the matching records.
    std::ostringstream round2;
    dataset.save(round2, 2);
    std::istringstream round2_in(round2.str());
    CHECK(TrajectoryDataset::load(round2_in).size() == 1);

    std::istringstream junk("[1,2]\n");
    CHECK_THROWS_AS(TrajectoryDataset::load(junk), MalformedRecordError);
}

TEST_CASE("rewrite prompt carries the executed path and its reward") {
    std::string prompt = render_rewrite_prompt(
        observation("http://s/a", 0.9, 0.4),
        path_of({attribute_selector, relation_selector, alignment, reflector}), 2.4493);
    CHECK(prompt.find("http://s/a") != std::string::npos);
    CHECK(prompt.find("4. Reflector") != std::string::npos);
    CHECK(prompt.find("Reward: 2.45") != std::string::npos);  // two-decimal rendering
    CHECK(prompt.find("top1=0.90") != std::string::npos);
}

TEST_CASE("rewrite_path uses the parsed answer when it validates") {
    ScriptedMockBackend mock;
    Iri e("http://s/a");
    mock.push(e, PromptTag::rewrite,
              {"1. RelationTripleSelector\n2. EntityAlignmentTool", std::nullopt});
    LlmGateway gateway(mock);

    RewardBreakdown reward;
    reward.total = 1.0;
    ToolPath out = rewrite_path(gateway, observation("http://s/a", 0.9, 0.4),
                                path_of({attribute_selector, alignment}), reward);
    CHECK(out.steps() == std::vector<ToolId>{relation_selector, alignment});
    CHECK(out.origin() == PathOrigin::rewritten);
    CHECK(mock.calls() == 1);
}

TEST_CASE("rewrite_path retries once then repairs deterministically") {
    // Negative reflection: repair drops the Reflector.
    {
        ScriptedMockBackend mock;
        mock.set_default(PromptTag::rewrite, {"no usable plan", std::nullopt});
        LlmGateway gateway(mock);

        RewardBreakdown reward;
        reward.ref = -1.0;
        ToolPath out = rewrite_path(
            gateway, observation("http://s/a", 0.9, 0.4),
            path_of({attribute_selector, relation_selector, alignment, reflector}), reward);
        CHECK(out.steps() ==
              std::vector<ToolId>{attribute_selector, relation_selector, alignment});
        CHECK(out.origin() == PathOrigin::fallback);
        CHECK(mock.calls() == 2);
    }

    // Non-negative reflection: the old path survives unchanged.
    {
        ScriptedMockBackend mock;
        mock.set_default(PromptTag::rewrite, {"still nothing", std::nullopt});
        LlmGateway gateway(mock);

        RewardBreakdown reward;
        reward.ref = 1.0;
        ToolPath old = path_of({attribute_selector, alignment, reflector});
        ToolPath out = rewrite_path(gateway, observation("http://s/a", 0.9, 0.4), old, reward);
        CHECK(out.steps() == old.steps());
        CHECK(out.origin() == PathOrigin::fallback);
    }
}

TEST_CASE("training round executes, scores, rewrites, and appends in iri order") {
    CityFixture fx;
    OracleMockBackend oracle(fx.gold);
    LlmGateway gateway(oracle);
    RulePolicy policy(0.3);

    TrajectoryDataset dataset;
    RoundConfig config;
    config.round = 1;
    RoundResult result = run_training_round(fx.bundle, fx.candidates, fx.bundle.train_links,
                                            policy, gateway, config, dataset);

    CHECK(result.appended == 2);
    CHECK(result.failures.empty());
    REQUIRE(dataset.size() == 2);
    // train_links hold Paris and Berlin; Berlin sorts first.
    CHECK(dataset.records()[0].observation.entity == Iri("http://src/Berlin"));
    CHECK(dataset.records()[1].observation.entity == Iri("http://src/Paris"));
    for (const auto& rec : dataset.records()) {
        CHECK(rec.reward.mu == 1.0);  // oracle always aligns correctly
        CHECK(rec.round == 1);
    }
}

TEST_CASE("training round records failures and carries on") {
    CityFixture fx;
    OracleMockBackend oracle(fx.gold);
    LlmGateway gateway(oracle);
    RulePolicy policy(0.3);

    // Delete Berlin's candidates: that entity must fail, Paris must survive.
    CandidateMap broken = fx.candidates;
    broken.erase(Iri("http://src/Berlin"));

    TrajectoryDataset dataset;
    RoundConfig config;
    RoundResult result = run_training_round(fx.bundle, broken, fx.bundle.train_links, policy,
                                            gateway, config, dataset);
    CHECK(result.appended == 1);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].first == Iri("http://src/Berlin"));
    CHECK(dataset.records()[0].observation.entity == Iri("http://src/Paris"));
}

TEST_CASE("concurrent training round matches the serial result") {
    CityFixture fx;
    OracleMockBackend oracle(fx.gold);

    auto run_with = [&](std::size_t concurrency) {
        LlmGateway gateway(oracle);
        RulePolicy policy(0.3);
        TrajectoryDataset dataset;
        RoundConfig config;
        config.concurrency = concurrency;
        run_training_round(fx.bundle, fx.candidates, fx.bundle.gold_links, policy, gateway,
                           config, dataset);
        std::ostringstream out;
        dataset.save(out);
        return out.str();
    };

    CHECK(run_with(1) == run_with(4));
}

TEST_CASE("sft export pairs the planning prompt with the rewritten path") {
    TrajectoryDataset dataset;
    dataset.append(record("http://s/a", true, 0.2, 2.0, {relation_selector, alignment}));

    std::ostringstream out;
    CHECK(export_sft_dataset(dataset, out) == 1);

    std::istringstream in(out.str());
    auto pairs = load_sft_pairs(in);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first.find("http://s/a") != std::string::npos);
    CHECK(pairs[0].first.find("{tool_pool}") == std::string::npos);  // fully rendered
    CHECK(pairs[0].second == "1. RelationTripleSelector\n2. EntityAlignmentTool");

    TrajectoryDataset empty;
    std::ostringstream sink;
    CHECK_THROWS_AS(export_sft_dataset(empty, sink), EmptyDatasetError);
}

TEST_CASE("replay policy replays the best-reward bucket path") {
    TrajectoryDataset dataset;
    // (signal, narrow-gap) bucket: two records, higher reward wins.
    dataset.append(record("http://s/a", true, 0.1, 1.0, {attribute_selector, alignment}, 1));
    dataset.append(record("http://s/b", true, 0.15, 2.5,
                          {relation_selector, alignment, reflector}, 1));
    // (no-signal, wide-gap) bucket.
    dataset.append(record("http://s/c", false, 0.6, 1.2, {relation_selector, alignment}, 2));

    ReplayPolicy policy(dataset, 0.3);

    // signal + narrow gap: the 2.5-reward path.
    ToolPath a = policy.plan(observation("http://s/q1", 0.9, 0.8, true));
    CHECK(a.steps() == std::vector<ToolId>{relation_selector, alignment, reflector});

    // no-signal + wide gap: the bucket's only path.
    ToolPath c = policy.plan(observation("http://s/q2", 0.9, 0.1, false));
    CHECK(c.steps() == std::vector<ToolId>{relation_selector, alignment});

    // Unseen bucket: rule fallback (wide gap, no reflector).
    ToolPath miss = policy.plan(observation("http://s/q3", 0.9, 0.1, true));
    CHECK(miss.steps() ==
          std::vector<ToolId>{attribute_selector, relation_selector, alignment});
    CHECK(miss.origin() == PathOrigin::rule);
}

TEST_CASE("replay policy keeps the earliest record on reward ties") {
    TrajectoryDataset dataset;
    dataset.append(record("http://s/a", true, 0.1, 2.0, {attribute_selector, alignment}, 1));
    dataset.append(record("http://s/b", true, 0.1, 2.0, {relation_selector, alignment}, 1));

    ReplayPolicy policy(dataset, 0.3);
    ToolPath p = policy.plan(observation("http://s/q", 0.9, 0.85, true));
    CHECK(p.steps() == std::vector<ToolId>{attribute_selector, alignment});
}

TEST_CASE("replay policy classifies the gap with the same strict threshold") {
    TrajectoryDataset dataset;
    // Narrow-gap record (gap 0.1) and wide-gap record (gap 0.5), both signal.
    dataset.append(record("http://s/a", true, 0.1, 1.0, {attribute_selector, alignment}, 1));
    dataset.append(
        record("http://s/b", true, 0.5, 1.0, {relation_selector, alignment}, 1));

    ReplayPolicy policy(dataset, 0.3);
    // Query gap exactly at the threshold counts as wide.
    ToolPath at = policy.plan(observation("http://s/q", 0.8, 0.5, true));
    CHECK(at.steps() == std::vector<ToolId>{relation_selector, alignment});
    // Strictly below: narrow.
    ToolPath below = policy.plan(observation("http://s/q", 0.8, 0.55, true));
    CHECK(below.steps() == std::vector<ToolId>{attribute_selector, alignment});
}
