#include "eaagent/planner.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "eaagent/text.hpp"

namespace eaagent {

std::string_view tool_name(ToolId id) {
    switch (id) {
        case ToolId::attribute_selector: return "AttributeTripleSelector";
        case ToolId::relation_selector: return "RelationTripleSelector";
        case ToolId::alignment: return "EntityAlignmentTool";
        case ToolId::reflector: return "Reflector";
    }
    return "?";
}

std::optional<ToolId> tool_from_name(std::string_view name) {
    std::string lowered = to_lower(name);
    if (lowered == "attributetripleselector") return ToolId::attribute_selector;
    if (lowered == "relationtripleselector") return ToolId::relation_selector;
    if (lowered == "entityalignmenttool") return ToolId::alignment;
    if (lowered == "reflector") return ToolId::reflector;
    return std::nullopt;
}

const char* to_string(PathOrigin origin) {
    switch (origin) {
        case PathOrigin::llm: return "llm";
        case PathOrigin::rule: return "rule";
        case PathOrigin::rewritten: return "rewritten";
        case PathOrigin::fallback: return "fallback";
    }
    return "?";
}

std::optional<PathOrigin> path_origin_from_string(std::string_view s) {
    if (s == "llm") return PathOrigin::llm;
    if (s == "rule") return PathOrigin::rule;
    if (s == "rewritten") return PathOrigin::rewritten;
    if (s == "fallback") return PathOrigin::fallback;
    return std::nullopt;
}

const char* to_string(PathDefect defect) {
    switch (defect) {
        case PathDefect::length: return "length must be 2 to 4 steps";
        case PathDefect::duplicate_tool: return "a tool appears twice";
        case PathDefect::missing_alignment_tool: return "EntityAlignmentTool is missing";
        case PathDefect::missing_selector: return "no selector before EntityAlignmentTool";
        case PathDefect::reflector_misplaced: return "Reflector must come last";
        case PathDefect::selector_misplaced: return "selectors must precede EntityAlignmentTool";
    }
    return "?";
}

ToolPath ToolPath::from_steps(std::vector<ToolId> steps, PathOrigin origin) {
    if (steps.size() < 2 || steps.size() > 4) throw InvalidPathError(PathDefect::length);

    for (std::size_t i = 0; i < steps.size(); ++i)
        for (std::size_t j = i + 1; j < steps.size(); ++j)
            if (steps[i] == steps[j]) throw InvalidPathError(PathDefect::duplicate_tool);

    auto align_it = std::find(steps.begin(), steps.end(), ToolId::alignment);
    if (align_it == steps.end()) throw InvalidPathError(PathDefect::missing_alignment_tool);
    auto align_pos = static_cast<std::size_t>(align_it - steps.begin());

    if (align_pos == 0) throw InvalidPathError(PathDefect::missing_selector);
    for (std::size_t i = 0; i < align_pos; ++i) {
        if (steps[i] == ToolId::reflector) throw InvalidPathError(PathDefect::reflector_misplaced);
    }
    // Everything after alignment must be a single trailing Reflector.
    for (std::size_t i = align_pos + 1; i < steps.size(); ++i) {
        if (steps[i] != ToolId::reflector) throw InvalidPathError(PathDefect::selector_misplaced);
    }

    ToolPath path;
    path.steps_ = std::move(steps);
    path.origin_ = origin;
    return path;
}

bool ToolPath::contains(ToolId id) const {
    return std::find(steps_.begin(), steps_.end(), id) != steps_.end();
}

std::string ToolPath::render_numbered() const {
    std::string out;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (i > 0) out += '\n';
        out += std::to_string(i + 1);
        out += ". ";
        out += tool_name(steps_[i]);
    }
    return out;
}

ToolPath ToolPath::without_reflector(PathOrigin new_origin) const {
    std::vector<ToolId> steps;
    for (ToolId id : steps_)
        if (id != ToolId::reflector) steps.push_back(id);
    return from_steps(std::move(steps), new_origin);
}

PlanningObservation make_observation(const KnowledgeGraph& graph, const Iri& entity,
                                     const CandidateSet& candidates,
                                     const AttributeWhitelist& whitelist) {
    PlanningObservation obs;
    obs.entity = entity;
    obs.statistics = entity_statistics(graph, entity, whitelist);
    TopScores tops = top_scores(candidates);
    obs.top1 = tops.top1;
    obs.top2 = tops.top2;
    obs.top3 = tops.top3;
    return obs;
}

std::string render_planning_prompt(const PlanningObservation& observation,
                                   std::string_view tool_pool) {
    return render_template(
        prompts::kPlanningTemplate,
        {
            {"tool_pool", std::string(tool_pool)},
            {"entity_iri", observation.entity.str()},
            {"attr_cnt_all", std::to_string(observation.statistics.attr_cnt_all)},
            {"attr_cnt", std::to_string(observation.statistics.attr_cnt)},
            {"rel_cnt_all", std::to_string(observation.statistics.rel_cnt_all)},
            {"rel_cnt", std::to_string(observation.statistics.rel_cnt)},
            {"signal_attr", observation.statistics.signal_attr ? "true" : "false"},
            {"top1_score", format_fixed2(observation.top1)},
            {"top2_score", format_fixed2(observation.top2)},
            {"top3_score", format_fixed2(observation.top3)},
        });
}

namespace {

// Peels list markers and decoration an LLM may wrap around "N. ToolName".
std::string_view strip_bullets(std::string_view s) {
    s = trim(s);
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '>')) {
        s.remove_prefix(1);
        s = trim(s);
    }
    return s;
}

std::string_view strip_decoration(std::string_view s) {
    s = trim(s);
    auto is_wrap = [](char c) { return c == '`' || c == '*' || c == '<' || c == '>' || c == '"'; };
    while (!s.empty() && is_wrap(s.front())) s.remove_prefix(1);
    while (!s.empty() && (is_wrap(s.back()) || s.back() == '.' || s.back() == ':')) s.remove_suffix(1);
    return trim(s);
}

}  // namespace

ToolPath parse_plan(std::string_view text, PathOrigin origin) {
    std::vector<std::pair<long, ToolId>> numbered;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;

        std::string_view s = strip_bullets(line);
        std::size_t d = 0;
        while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
        if (d == 0 || d >= s.size()) continue;
        if (s[d] != '.' && s[d] != ')') continue;

        long number = 0;
        for (std::size_t i = 0; i < d; ++i) number = number * 10 + (s[i] - '0');

        std::string_view name = trim(s.substr(d + 1));
        // "(optional)" suffixes from echoed format hints
        if (auto paren = name.find('('); paren != std::string_view::npos)
            name = trim(name.substr(0, paren));
        name = strip_decoration(name);
        if (name.empty()) continue;

        auto tool = tool_from_name(name);
        if (!tool) throw UnknownToolError(std::string(name));
        numbered.emplace_back(number, *tool);
    }

    if (numbered.empty()) throw NoToolLinesError();
    std::stable_sort(numbered.begin(), numbered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<ToolId> steps;
    steps.reserve(numbered.size());
    for (const auto& [number, tool] : numbered) steps.push_back(tool);
    return ToolPath::from_steps(std::move(steps), origin);
}

ToolPath rule_based_plan(const PlanningObservation& observation, double threshold) {
    std::vector<ToolId> steps{ToolId::attribute_selector, ToolId::relation_selector,
                              ToolId::alignment};
    if (observation.top1 - observation.top2 < threshold) steps.push_back(ToolId::reflector);
    return ToolPath::from_steps(std::move(steps), PathOrigin::rule);
}

LlmPolicy::LlmPolicy(LlmGateway& gateway, LlmPolicyConfig config)
    : gateway_(gateway), config_(std::move(config)) {}

ToolPath LlmPolicy::plan(const PlanningObservation& observation) {
    ChatRequest request;
    request.entity = observation.entity;
    request.tag = PromptTag::plan;
    request.user_text = render_planning_prompt(observation, config_.tool_pool);
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_tokens;

    ChatResponse response = gateway_.complete(request);
    try {
        return parse_plan(response.text, PathOrigin::llm);
    } catch (const PlanParseError& first) {
        ChatRequest repair = request;
        repair.user_text += "\n\nYour previous answer was rejected (";
        repair.user_text += first.what();
        repair.user_text +=
            "). Answer again with only the numbered tool lines, one per line, in the required "
            "format.";
        ChatResponse second = gateway_.complete(repair);
        try {
            return parse_plan(second.text, PathOrigin::llm);
        } catch (const PlanParseError&) {
            ToolPath rule = rule_based_plan(observation, config_.rule_threshold);
            return ToolPath::from_steps(rule.steps(), PathOrigin::fallback);
        }
    }
}

void write_plans(std::ostream& out, std::span<const PlanRecord> plans) {
    for (const auto& p : plans) {
        nlohmann::json steps = nlohmann::json::array();
        for (ToolId id : p.path.steps()) steps.push_back(std::string(tool_name(id)));
        nlohmann::json j{
            {"entity", p.entity.str()},
            {"path", {{"steps", std::move(steps)}, {"origin", to_string(p.path.origin())}}},
        };
        out << j.dump() << '\n';
    }
}

namespace {

ToolPath path_from_json(const nlohmann::json& j, std::size_t line_no) {
    if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array() ||
        !j.contains("origin") || !j["origin"].is_string())
        throw MalformedRecordError(line_no, "path needs {\"steps\", \"origin\"}");

    auto origin = path_origin_from_string(j["origin"].get<std::string>());
    if (!origin)
        throw MalformedRecordError(line_no, "unknown path origin " + j["origin"].dump());

    std::vector<ToolId> steps;
    for (const auto& s : j["steps"]) {
        if (!s.is_string()) throw MalformedRecordError(line_no, "tool step must be a string");
        auto tool = tool_from_name(s.get<std::string>());
        if (!tool)
            throw MalformedRecordError(line_no, "unknown tool " + s.get<std::string>());
        steps.push_back(*tool);
    }
    try {
        return ToolPath::from_steps(std::move(steps), *origin);
    } catch (const InvalidPathError& e) {
        throw MalformedRecordError(line_no, e.what());
    }
}

}  // namespace

std::vector<PlanRecord> load_plans(std::istream& in) {
    std::vector<PlanRecord> out;
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
        if (!j.is_object() || !j.contains("entity") || !j["entity"].is_string() ||
            !j.contains("path"))
            throw MalformedRecordError(line_no, "expected {\"entity\", \"path\"}");
        PlanRecord rec;
        try {
            rec.entity = Iri(j["entity"].get<std::string>());
        } catch (const DataError& e) {
            throw MalformedRecordError(line_no, e.what());
        }
        rec.path = path_from_json(j["path"], line_no);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace eaagent
