#include "eaagent/executor.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"

#include "eaagent/prompts.hpp"
#include "eaagent/text.hpp"

namespace eaagent {

namespace {

void append_triple_line(std::string& out, const AttributeTriple& t) {
    out += '(';
    out += t.entity.str();
    out += ", ";
    out += t.attribute.str();
    out += ", ";
    out += t.value;
    out += ")\n";
}

void append_triple_line(std::string& out, const RelationTriple& t) {
    out += '(';
    out += t.head.str();
    out += ", ";
    out += t.relation.str();
    out += ", ";
    out += t.tail.str();
    out += ")\n";
}

std::string render_triples(std::span<const AttributeTriple> attrs,
                           std::span<const RelationTriple> rels) {
    std::string out;
    for (const auto& t : attrs) append_triple_line(out, t);
    for (const auto& t : rels) append_triple_line(out, t);
    if (out.empty()) out = "(no triples)\n";
    if (out.back() == '\n') out.pop_back();
    return out;
}

std::string render_blocks(std::span<const CandidateBlock> blocks) {
    std::string out;
    std::size_t n = 1;
    for (const auto& b : blocks) {
        out += std::to_string(n++);
        out += ". ";
        out += b.target.str();
        out += " (score: ";
        out += format_fixed2(b.score);
        out += ")\n";
        out += render_triples(b.attrs, b.rels);
        out += "\n\n";
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace

std::string render_alignment_prompt(const Iri& source,
                                    std::span<const AttributeTriple> source_attrs,
                                    std::span<const RelationTriple> source_rels,
                                    std::span<const CandidateBlock> blocks) {
    if (blocks.empty()) throw EmptyCandidatesError(source.str());
    return render_template(prompts::kAlignmentTemplate,
                           {
                               {"source_iri", source.str()},
                               {"source_triples", render_triples(source_attrs, source_rels)},
                               {"candidate_blocks", render_blocks(blocks)},
                           });
}

std::string render_reflection_prompt(const Iri& source,
                                     std::span<const AttributeTriple> source_attrs,
                                     std::span<const RelationTriple> source_rels,
                                     std::span<const CandidateBlock> blocks,
                                     const Iri& initial_choice) {
    if (blocks.empty()) throw EmptyCandidatesError(source.str());
    return render_template(prompts::kReflectionTemplate,
                           {
                               {"source_iri", source.str()},
                               {"source_triples", render_triples(source_attrs, source_rels)},
                               {"candidate_blocks", render_blocks(blocks)},
                               {"initial_choice", initial_choice.str()},
                           });
}

Iri parse_iri_answer(std::string_view text, const CandidateSet& candidates) {
    auto lb = text.find('[');
    if (lb != std::string_view::npos) {
        auto rb = text.find(']', lb + 1);
        if (rb != std::string_view::npos) {
            std::string token{trim(text.substr(lb + 1, rb - lb - 1))};
            for (const auto& c : candidates.candidates())
                if (c.target.str() == token) return c.target;
            throw NotACandidateError(token);
        }
    }

    const ScoredCandidate* best = nullptr;
    for (const auto& c : candidates.candidates()) {
        if (text.find(c.target.str()) == std::string_view::npos) continue;
        if (!best || c.target.str().size() > best->target.str().size() ||
            (c.target.str().size() == best->target.str().size() && c.target < best->target))
            best = &c;
    }
    if (best) return best->target;
    throw NoAnswerError();
}

namespace {

std::vector<AttributeTriple> raw_attrs(const KnowledgeGraph& graph, const Iri& entity,
                                       std::size_t cap) {
    std::vector<AttributeTriple> out;
    for (std::uint32_t i : graph.attr_indices(entity)) {
        if (out.size() == cap) break;
        out.push_back(graph.attribute_triples()[i]);
    }
    return out;
}

std::vector<RelationTriple> raw_rels(const KnowledgeGraph& graph, const Iri& entity,
                                     std::size_t cap) {
    std::vector<RelationTriple> out;
    for (std::uint32_t i : graph.rel_out_indices(entity)) {
        if (out.size() == cap) break;
        out.push_back(graph.relation_triples()[i]);
    }
    for (std::uint32_t i : graph.rel_in_indices(entity)) {
        if (out.size() == cap) break;
        out.push_back(graph.relation_triples()[i]);
    }
    return out;
}

struct StepAnswer {
    Iri iri;
    std::string response;
    bool degraded = false;
};

// Asks once, retries once on an unparseable answer, then falls back.
StepAnswer ask_for_candidate(LlmGateway& gateway, const ChatRequest& request,
                             const CandidateSet& candidates, const Iri& fallback,
                             TokenUsage& tokens) {
    std::string last_response;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatResponse response = gateway.complete(request);
        tokens += response.usage;
        last_response = response.text;
        try {
            return {parse_iri_answer(response.text, candidates), std::move(response.text), false};
        } catch (const AnswerParseError&) {
        }
    }
    return {fallback, std::move(last_response), true};
}

}  // namespace

AlignmentOutcome execute(const ToolPath& path, const Iri& source,
                         const KnowledgeGraph& source_graph, const KnowledgeGraph& target_graph,
                         const CandidateSet& candidates, LlmGateway& gateway,
                         const ExecutionConfig& config) {
    if (candidates.candidates().empty()) throw EmptyCandidatesError(source.str());
    if (!source_graph.contains(source)) throw UnknownEntityError(source.str());

    AlignmentOutcome outcome;
    outcome.source = source;
    outcome.path = path;

    const bool attr_selected = path.contains(ToolId::attribute_selector);
    const bool rel_selected = path.contains(ToolId::relation_selector);
    const std::vector<Iri> candidate_targets = candidates.targets();
    const Iri& top1 = candidates.candidates().front().target;

    // Built lazily at the alignment step; reflection reuses them so both
    // prompts describe the same evidence.
    std::vector<AttributeTriple> shown_attrs;
    std::vector<RelationTriple> shown_rels;
    std::vector<CandidateBlock> blocks;

    auto build_evidence = [&]() {
        shown_attrs = attr_selected ? outcome.selected_attr
                                    : raw_attrs(source_graph, source, config.raw_cap);
        shown_rels = rel_selected ? outcome.selected_rel
                                  : raw_rels(source_graph, source, config.raw_cap);

        SelectionConfig candidate_cfg = config.selection;
        candidate_cfg.entropy_scope = EntropyScopeKind::candidate_set;
        for (const auto& c : candidates.candidates()) {
            CandidateBlock block;
            block.target = c.target;
            block.score = c.score;
            if (target_graph.contains(c.target)) {
                block.attrs = attr_selected
                                  ? select_attribute_triples(target_graph, c.target,
                                                             candidate_targets, candidate_cfg)
                                  : raw_attrs(target_graph, c.target, config.raw_cap);
                block.rels = rel_selected
                                 ? select_relation_triples(target_graph, c.target, config.selection)
                                 : raw_rels(target_graph, c.target, config.raw_cap);
            }
            blocks.push_back(std::move(block));
        }
    };

    for (ToolId step : path.steps()) {
        switch (step) {
            case ToolId::attribute_selector:
                outcome.selected_attr =
                    select_attribute_triples(source_graph, source, {}, config.selection);
                break;
            case ToolId::relation_selector:
                outcome.selected_rel =
                    select_relation_triples(source_graph, source, config.selection);
                break;
            case ToolId::alignment: {
                build_evidence();
                ChatRequest request;
                request.entity = source;
                request.tag = PromptTag::align;
                request.user_text =
                    render_alignment_prompt(source, shown_attrs, shown_rels, blocks);
                request.temperature = config.temperature;
                request.max_tokens = config.align_max_tokens;

                StepAnswer answer =
                    ask_for_candidate(gateway, request, candidates, top1, outcome.tokens);
                outcome.initial_prediction = answer.iri;
                outcome.degraded = outcome.degraded || answer.degraded;
                if (config.keep_transcript)
                    outcome.transcript.push_back({PromptTag::align, std::move(request.user_text),
                                                  std::move(answer.response)});
                break;
            }
            case ToolId::reflector: {
                ChatRequest request;
                request.entity = source;
                request.tag = PromptTag::reflect;
                request.user_text = render_reflection_prompt(source, shown_attrs, shown_rels,
                                                             blocks, outcome.initial_prediction);
                request.temperature = config.temperature;
                request.max_tokens = config.reflect_max_tokens;

                StepAnswer answer = ask_for_candidate(gateway, request, candidates,
                                                      outcome.initial_prediction, outcome.tokens);
                outcome.refined_prediction = answer.iri;
                outcome.degraded = outcome.degraded || answer.degraded;
                if (config.keep_transcript)
                    outcome.transcript.push_back({PromptTag::reflect, std::move(request.user_text),
                                                  std::move(answer.response)});
                break;
            }
        }
    }

    outcome.final_prediction =
        outcome.refined_prediction ? *outcome.refined_prediction : outcome.initial_prediction;
    return outcome;
}

void write_outcomes(std::ostream& out, std::span<const AlignmentOutcome> outcomes,
                    bool with_transcript) {
    for (const auto& o : outcomes) {
        nlohmann::json steps = nlohmann::json::array();
        for (ToolId id : o.path.steps()) steps.push_back(std::string(tool_name(id)));

        nlohmann::json attrs = nlohmann::json::array();
        for (const auto& t : o.selected_attr)
            attrs.push_back({t.entity.str(), t.attribute.str(), t.value});
        nlohmann::json rels = nlohmann::json::array();
        for (const auto& t : o.selected_rel)
            rels.push_back({t.head.str(), t.relation.str(), t.tail.str()});

        nlohmann::json j{
            {"source", o.source.str()},
            {"path", {{"steps", std::move(steps)}, {"origin", to_string(o.path.origin())}}},
            {"selected_attr", std::move(attrs)},
            {"selected_rel", std::move(rels)},
            {"initial", o.initial_prediction.str()},
            {"refined", o.refined_prediction ? nlohmann::json(o.refined_prediction->str())
                                             : nlohmann::json(nullptr)},
            {"final", o.final_prediction.str()},
            {"degraded", o.degraded},
            {"tokens", {{"prompt", o.tokens.prompt}, {"completion", o.tokens.completion}}},
        };
        if (with_transcript) {
            nlohmann::json transcript = nlohmann::json::array();
            for (const auto& t : o.transcript)
                transcript.push_back({{"tag", to_string(t.tag)},
                                      {"prompt", t.prompt},
                                      {"response", t.response}});
            j["transcript"] = std::move(transcript);
        }
        out << j.dump() << '\n';
    }
}

std::vector<AlignmentOutcome> load_outcomes(std::istream& in) {
    std::vector<AlignmentOutcome> out;
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
            AlignmentOutcome o;
            o.source = Iri(j.at("source").get<std::string>());

            std::vector<ToolId> steps;
            for (const auto& s : j.at("path").at("steps")) {
                auto tool = tool_from_name(s.get<std::string>());
                if (!tool)
                    throw MalformedRecordError(line_no, "unknown tool " + s.get<std::string>());
                steps.push_back(*tool);
            }
            auto origin = path_origin_from_string(j.at("path").at("origin").get<std::string>());
            if (!origin) throw MalformedRecordError(line_no, "unknown path origin");
            o.path = ToolPath::from_steps(std::move(steps), *origin);

            for (const auto& t : j.at("selected_attr"))
                o.selected_attr.push_back({Iri(t.at(0).get<std::string>()),
                                           Iri(t.at(1).get<std::string>()),
                                           t.at(2).get<std::string>()});
            for (const auto& t : j.at("selected_rel"))
                o.selected_rel.push_back({Iri(t.at(0).get<std::string>()),
                                          Iri(t.at(1).get<std::string>()),
                                          Iri(t.at(2).get<std::string>())});

            o.initial_prediction = Iri(j.at("initial").get<std::string>());
            if (!j.at("refined").is_null())
                o.refined_prediction = Iri(j.at("refined").get<std::string>());
            o.final_prediction = Iri(j.at("final").get<std::string>());
            o.degraded = j.at("degraded").get<bool>();
            o.tokens.prompt = j.at("tokens").at("prompt").get<std::size_t>();
            o.tokens.completion = j.at("tokens").at("completion").get<std::size_t>();

            if (j.contains("transcript")) {
                for (const auto& t : j["transcript"]) {
                    TranscriptEntry entry;
                    auto tag = prompt_tag_from_string(t.at("tag").get<std::string>());
                    if (!tag) throw MalformedRecordError(line_no, "unknown transcript tag");
                    entry.tag = *tag;
                    entry.prompt = t.at("prompt").get<std::string>();
                    entry.response = t.at("response").get<std::string>();
                    o.transcript.push_back(std::move(entry));
                }
            }
            out.push_back(std::move(o));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(line_no, e.what());
        } catch (const InvalidPathError& e) {
            throw MalformedRecordError(line_no, e.what());
        } catch (const DataError& e) {
            if (dynamic_cast<const MalformedRecordError*>(&e)) throw;
            throw MalformedRecordError(line_no, e.what());
        }
    }
    return out;
}

}  // namespace eaagent
