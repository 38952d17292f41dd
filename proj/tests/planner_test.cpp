#include <sstream>
#include <vector>

#include "doctest.h"

#include "eaagent/planner.hpp"
#include "test_support.hpp"

using namespace eaagent;
using eatest::make_candidates;
using eatest::make_graph;

namespace {

using enum ToolId;

ToolPath path_of(std::vector<ToolId> steps, PathOrigin origin = PathOrigin::rule) {
    return ToolPath::from_steps(std::move(steps), origin);
}

PlanningObservation observation(double top1, double top2, bool signal = true) {
    PlanningObservation obs;
    obs.entity = Iri("http://s/e");
    obs.statistics = {4, 3, 2, 2, signal};
    obs.top1 = top1;
    obs.top2 = top2;
    obs.top3 = 0.1;
    return obs;
}

}  // namespace

TEST_CASE("tool names round-trip, parsing is case-insensitive") {
    for (ToolId id : {attribute_selector, relation_selector, alignment, reflector})
        CHECK(tool_from_name(tool_name(id)) == id);
    CHECK(tool_from_name("entityalignmenttool") == alignment);
    CHECK(tool_from_name("REFLECTOR") == reflector);
    CHECK_FALSE(tool_from_name("Selector").has_value());
    CHECK_FALSE(tool_from_name("").has_value());
}

TEST_CASE("exactly eight step sequences are valid") {
    const std::vector<std::vector<ToolId>> valid = {
        {attribute_selector, alignment},
        {relation_selector, alignment},
        {attribute_selector, relation_selector, alignment},
        {relation_selector, attribute_selector, alignment},
        {attribute_selector, alignment, reflector},
        {relation_selector, alignment, reflector},
        {attribute_selector, relation_selector, alignment, reflector},
        {relation_selector, attribute_selector, alignment, reflector},
    };
    for (const auto& steps : valid) CHECK_NOTHROW(path_of(steps));

    // One representative per defect class.
    CHECK_THROWS_AS(path_of({}), InvalidPathError);
    CHECK_THROWS_AS(path_of({alignment}), InvalidPathError);  // no selector
    CHECK_THROWS_AS(path_of({attribute_selector, relation_selector}), InvalidPathError);
    CHECK_THROWS_AS(path_of({attribute_selector, attribute_selector, alignment}),
                    InvalidPathError);
    CHECK_THROWS_AS(path_of({reflector, attribute_selector, alignment}), InvalidPathError);
    CHECK_THROWS_AS(path_of({attribute_selector, alignment, relation_selector}),
                    InvalidPathError);
    CHECK_THROWS_AS(
        path_of({attribute_selector, relation_selector, alignment, reflector, reflector}),
        InvalidPathError);
}

TEST_CASE("path accessors and reflector removal") {
    ToolPath p = path_of({attribute_selector, relation_selector, alignment, reflector},
                         PathOrigin::llm);
    CHECK(p.length() == 4);
    CHECK(p.has_reflector());
    CHECK(p.contains(attribute_selector));
    CHECK(p.origin() == PathOrigin::llm);
    CHECK(p.render_numbered() ==
          "1. AttributeTripleSelector\n2. RelationTripleSelector\n3. EntityAlignmentTool\n"
          "4. Reflector");

    ToolPath trimmed = p.without_reflector(PathOrigin::fallback);
    CHECK(trimmed.length() == 3);
    CHECK_FALSE(trimmed.has_reflector());
    CHECK(trimmed.origin() == PathOrigin::fallback);

    // Removing from a reflector-free path is a no-op apart from the origin.
    ToolPath same = trimmed.without_reflector(PathOrigin::rule);
    CHECK(same.steps() == trimmed.steps());
}

TEST_CASE("make_observation merges statistics and top scores") {
    KnowledgeGraph g = make_graph(
        {
            {"http://s/e", "http://s/prop/name", "E"},
            {"http://s/e", "http://s/prop/size", "3"},
        },
        {{"http://s/e", "http://s/r", "http://s/f"}});
    CandidateSet cands =
        make_candidates("http://s/e", {{"http://t/a", 0.9}, {"http://t/b", 0.7}});

    PlanningObservation obs =
        make_observation(g, Iri("http://s/e"), cands, AttributeWhitelist::default_names());
    CHECK(obs.entity == Iri("http://s/e"));
    CHECK(obs.statistics.attr_cnt_all == 2);
    CHECK(obs.statistics.signal_attr);
    CHECK(obs.top1 == 0.9);
    CHECK(obs.top2 == 0.7);
    CHECK(obs.top3 == 0.0);
}

TEST_CASE("planning prompt renders scores to two decimals") {
    std::string prompt = render_planning_prompt(observation(0.855, 0.25));
    CHECK(prompt.find("top1=0.85") != std::string::npos);
    CHECK(prompt.find("top2=0.25") != std::string::npos);
    CHECK(prompt.find("Has name attribute: true") != std::string::npos);
    CHECK(prompt.find("AttributeTripleSelector") != std::string::npos);
    // Every placeholder filled (the tool pool keeps its literal braces).
    for (const char* ph : {"{tool_pool}", "{entity_iri}", "{attr_cnt_all}", "{attr_cnt}",
                           "{rel_cnt_all}", "{rel_cnt}", "{signal_attr}", "{top1_score}",
                           "{top2_score}", "{top3_score}"})
        CHECK(prompt.find(ph) == std::string::npos);

    std::string no_signal = render_planning_prompt(observation(0.9, 0.1, false));
    CHECK(no_signal.find("Has name attribute: false") != std::string::npos);
}

TEST_CASE("parse_plan extracts numbered tool lines") {
    ToolPath p = parse_plan(
        "1. AttributeTripleSelector\n"
        "2. RelationTripleSelector\n"
        "3. EntityAlignmentTool\n");
    CHECK(p.steps() == std::vector<ToolId>{attribute_selector, relation_selector, alignment});
    CHECK(p.origin() == PathOrigin::llm);
}

TEST_CASE("parse_plan tolerates chatter, bullets, and decorations") {
    ToolPath p = parse_plan(
        "Sure! Here is my plan:\n"
        "  1) `AttributeTripleSelector`\n"
        "- 2. **RelationTripleSelector**\n"
        "> 3. <EntityAlignmentTool>\n"
        "4. Reflector (optional)\n"
        "Hope this helps!\n");
    CHECK(p.steps() ==
          std::vector<ToolId>{attribute_selector, relation_selector, alignment, reflector});
}

TEST_CASE("parse_plan orders by the stated numbers") {
    ToolPath p = parse_plan(
        "2. EntityAlignmentTool\n"
        "1. RelationTripleSelector\n");
    CHECK(p.steps() == std::vector<ToolId>{relation_selector, alignment});
}

TEST_CASE("parse_plan failure modes") {
    CHECK_THROWS_AS(parse_plan("no tools here at all"), NoToolLinesError);
    CHECK_THROWS_AS(parse_plan(""), NoToolLinesError);
    CHECK_THROWS_AS(parse_plan("1. AttributeTripleSelector\n2. MagicTool\n"), UnknownToolError);
    CHECK_THROWS_AS(parse_plan("1. AttributeTripleSelector\n"), InvalidPathError);
    CHECK_THROWS_AS(
        parse_plan("1. EntityAlignmentTool\n2. AttributeTripleSelector\n"), InvalidPathError);
}

TEST_CASE("rule plan appends the reflector on a strictly narrow gap") {
    ToolPath wide = rule_based_plan(observation(1.0, 0.5), 0.3);
    CHECK(wide.steps() ==
          std::vector<ToolId>{attribute_selector, relation_selector, alignment});
    CHECK(wide.origin() == PathOrigin::rule);

    ToolPath narrow = rule_based_plan(observation(0.6, 0.5), 0.3);
    CHECK(narrow.has_reflector());
    CHECK(narrow.length() == 4);

    // Strict comparison: a gap exactly at the threshold does not reflect.
    ToolPath at = rule_based_plan(observation(0.8, 0.5), 0.3);
    CHECK_FALSE(at.has_reflector());
}

TEST_CASE("rule plan boundary uses the computed double gap") {
    // 1.0 - 0.71 = 0.29000000000000004 < 0.3: reflect.
    CHECK(rule_based_plan(observation(1.0, 0.71), 0.3).has_reflector());
    // 1.0 - 0.70 = 0.30000000000000004 >= 0.3: do not reflect.
    CHECK_FALSE(rule_based_plan(observation(1.0, 0.70), 0.3).has_reflector());
}

TEST_CASE("llm policy parses, re-prompts once, then falls back to the rule") {
    PlanningObservation obs = observation(0.9, 0.2);

    // First answer parses: used directly.
    {
        ScriptedMockBackend mock;
        mock.push(obs.entity, PromptTag::plan,
                  {"1. RelationTripleSelector\n2. EntityAlignmentTool", std::nullopt});
        LlmGateway gateway(mock);
        LlmPolicy policy(gateway);
        ToolPath p = policy.plan(obs);
        CHECK(p.steps() == std::vector<ToolId>{relation_selector, alignment});
        CHECK(p.origin() == PathOrigin::llm);
        CHECK(mock.calls() == 1);
    }

    // First answer garbage, second parses: two calls, result from the retry.
    {
        ScriptedMockBackend mock;
        mock.push(obs.entity, PromptTag::plan, {"I would use some tools.", std::nullopt});
        mock.push(obs.entity, PromptTag::plan,
                  {"1. AttributeTripleSelector\n2. EntityAlignmentTool", std::nullopt});
        LlmGateway gateway(mock);
        LlmPolicy policy(gateway);
        ToolPath p = policy.plan(obs);
        CHECK(p.steps() == std::vector<ToolId>{attribute_selector, alignment});
        CHECK(mock.calls() == 2);
    }

    // Both answers garbage: rule fallback with origin=fallback.
    {
        ScriptedMockBackend mock;
        mock.push(obs.entity, PromptTag::plan, {"nothing usable", std::nullopt});
        mock.push(obs.entity, PromptTag::plan, {"still nothing", std::nullopt});
        LlmGateway gateway(mock);
        LlmPolicy policy(gateway);
        ToolPath p = policy.plan(obs);
        CHECK(p.steps() ==
              std::vector<ToolId>{attribute_selector, relation_selector, alignment});
        CHECK(p.origin() == PathOrigin::fallback);
        CHECK(mock.calls() == 2);
    }
}

TEST_CASE("llm policy names the defect in the re-prompt") {
    PlanningObservation obs = observation(0.9, 0.2);
    ScriptedMockBackend mock;
    mock.push(obs.entity, PromptTag::plan, {"1. MagicTool", std::nullopt});
    mock.push(obs.entity, PromptTag::plan,
              {"1. AttributeTripleSelector\n2. EntityAlignmentTool", std::nullopt});
    LlmGateway gateway(mock);
    LlmPolicy policy(gateway);
    policy.plan(obs);

    // The retry prompt should carry the rejection notice; the ledger proves
    // both calls went to the same entity under the plan tag.
    CHECK(gateway.ledger_summary().calls == 2);
    CHECK(gateway.ledger_summary().per_entity.count(obs.entity) == 1);
}

TEST_CASE("plan records round-trip through jsonl") {
    std::vector<PlanRecord> plans = {
        {Iri("http://s/a"), path_of({attribute_selector, alignment}, PathOrigin::llm)},
        {Iri("http://s/b"),
         path_of({relation_selector, attribute_selector, alignment, reflector},
                 PathOrigin::rule)},
    };
    std::ostringstream out;
    write_plans(out, plans);

    std::istringstream in(out.str());
    auto loaded = load_plans(in);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].entity == plans[0].entity);
    CHECK(loaded[0].path.steps() == plans[0].path.steps());
    CHECK(loaded[0].path.origin() == PathOrigin::llm);
    CHECK(loaded[1].path.steps() == plans[1].path.steps());

    std::istringstream bad("{\"entity\": 3}\n");
    CHECK_THROWS_AS(load_plans(bad), MalformedRecordError);

    std::istringstream bad_path(
        R"({"entity":"http://s/a","path":{"steps":["EntityAlignmentTool"],"origin":"llm"}})"
        "\n");
    CHECK_THROWS_AS(load_plans(bad_path), MalformedRecordError);
}
