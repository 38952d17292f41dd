#include <string>

#include "doctest.h"

#include "eaagent/errors.hpp"
#include "eaagent/prompts.hpp"

using namespace eaagent;

TEST_CASE("render_template substitutes identifier placeholders") {
    std::map<std::string, std::string, std::less<>> values{{"a", "1"}, {"b_2", "two"}};
    CHECK(render_template("x{a}y{b_2}z", values) == "x1ytwoz");
    CHECK(render_template("{a}{a}", values) == "11");
    CHECK(render_template("no placeholders", values) == "no placeholders");
}

TEST_CASE("render_template leaves non-identifier braces alone") {
    std::map<std::string, std::string, std::less<>> values{{"a", "1"}};
    CHECK(render_template("{ a }", values) == "{ a }");       // spaces break the match
    CHECK(render_template("{a", values) == "{a");             // unterminated
    CHECK(render_template("}{", values) == "}{");
    CHECK(render_template("json {{\"k\": 1}}", values) == "json {{\"k\": 1}}");
    CHECK(render_template("{a-b}", values) == "{a-b}");       // '-' is not identifier
}

TEST_CASE("render_template never rescans substituted values") {
    std::map<std::string, std::string, std::less<>> values{{"a", "{b}"}, {"b", "X"}};
    CHECK(render_template("{a}", values) == "{b}");
}

TEST_CASE("render_template reports the missing key") {
    std::map<std::string, std::string, std::less<>> values{{"a", "1"}};
    try {
        render_template("{a} {missing_key}", values);
        FAIL("expected MissingPlaceholderError");
    } catch (const MissingPlaceholderError& e) {
        CHECK(std::string(e.what()).find("missing_key") != std::string::npos);
    }
}

TEST_CASE("builtin templates mention their placeholders and tools") {
    std::string pool(prompts::kToolPool);
    for (const char* tool : {"AttributeTripleSelector", "RelationTripleSelector",
                             "EntityAlignmentTool", "Reflector"})
        CHECK(pool.find(tool) != std::string::npos);

    std::string planning(prompts::kPlanningTemplate);
    for (const char* ph : {"{tool_pool}", "{entity_iri}", "{attr_cnt_all}", "{attr_cnt}",
                           "{rel_cnt_all}", "{rel_cnt}", "{signal_attr}", "{top1_score}",
                           "{top2_score}", "{top3_score}"})
        CHECK(planning.find(ph) != std::string::npos);

    std::string alignment(prompts::kAlignmentTemplate);
    for (const char* ph : {"{source_iri}", "{source_triples}", "{candidate_blocks}"})
        CHECK(alignment.find(ph) != std::string::npos);
    CHECK(alignment.find("[IRI]") != std::string::npos);

    std::string reflection(prompts::kReflectionTemplate);
    CHECK(reflection.find("{initial_choice}") != std::string::npos);

    std::string rewrite(prompts::kRewriteTemplate);
    for (const char* ph : {"{entity}", "{old_tools}", "{reward}"})
        CHECK(rewrite.find(ph) != std::string::npos);
}
