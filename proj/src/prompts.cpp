#include "eaagent/prompts.hpp"

#include <cctype>

#include "eaagent/errors.hpp"

namespace eaagent {

namespace {

bool is_identifier_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && is_identifier_char(tmpl[j])) ++j;
            if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
                std::string_view key = tmpl.substr(i + 1, j - i - 1);
                auto it = values.find(key);
                if (it == values.end()) throw MissingPlaceholderError(std::string(key));
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += tmpl[i];
        ++i;
    }
    return out;
}

namespace prompts {

const char* const kToolPool = R"__(Tool_Pool = [
  {
    "name": "AttributeTripleSelector",
    "definition": "Selects important attribute triples of an entity by removing common or uninformative attributes.",
    "usage": "AttributeTripleSelector[entity] -> list of (entity, attribute, value)"
  },
  {
    "name": "RelationTripleSelector",
    "definition": "Selects informative relation triples (outgoing and incoming) based on their distinctiveness.",
    "usage": "RelationTripleSelector[entity] -> list of (subject, relation, object)"
  },
  {
    "name": "EntityAlignmentTool",
    "definition": "Aligns a source entity with the most similar target entity from a candidate list.",
    "usage": "EntityAlignmentTool[source_entity, candidates] -> best target entity"
  },
  {
    "name": "Reflector",
    "definition": "Reevaluates the alignment result and suggests a better match if needed.",
    "usage": "Reflector[source_entity, candidates, initial_alignment] -> confirmed or revised target"
  }
])__";

const char* const kPlanningTemplate =
    R"(You are an expert in Entity Alignment. Plan the tool sequence for aligning one source entity.

Steps:
1. Choose one or two filtering tools: AttributeTripleSelector, RelationTripleSelector.
2. Apply EntityAlignmentTool to align the entity.
3. If the top candidate similarities are close, use Reflector to reassess the result.

Available tools:
{tool_pool}

Entity: {entity_iri}
Statistics:
- Attribute triples: {attr_cnt_all}
- Attribute types: {attr_cnt}
- Relation triples: {rel_cnt_all}
- Relation types: {rel_cnt}
- Has name attribute: {signal_attr}
- Candidate similarities: top1={top1_score}, top2={top2_score}, top3={top3_score}

Output the sequence numbers and tool names only, one per line:
1. <ToolName>
2. <ToolName>
3. <ToolName> (optional)
4. <ToolName> (optional)
)";

const char* const kAlignmentTemplate =
    R"(You are given a source entity and several candidate target entities from another knowledge graph. Each entity is described by triples of the form (subject, predicate, object). Candidates are listed in descending retrieval similarity.

Source entity: {source_iri}
Triples:
{source_triples}

Candidates:
{candidate_blocks}

Please enter the IRI of the candidate that best matches the source entity, using the following format:
[IRI]
)";

const char* const kReflectionTemplate =
    R"(You are performing an entity alignment task. Given the source entity and the candidate target entities below, an initial alignment was already chosen. Reflect on whether that choice was optimal.

Source entity: {source_iri}
Triples:
{source_triples}

Candidates:
{candidate_blocks}

Initial choice: {initial_choice}

If the initial choice is the best match, return it. Otherwise return the better candidate.

Please enter the best matching IRI using the following format:
[IRI]
)";

const char* const kRewriteTemplate =
    R"(You are optimizing the tool sequence used to align one entity. A previous attempt ran the tools below and received the stated reward; higher is better, and shorter sequences earn a small bonus.

Entity: {entity}
Candidate similarities: top1={top1_score}, top2={top2_score}, top3={top3_score}
Previous tools:
{old_tools}
Reward: {reward}

Available tools:
- AttributeTripleSelector
- RelationTripleSelector
- EntityAlignmentTool
- Reflector (use only when the top similarities are close)

Generate an improved tool sequence. Output the sequence numbers and tool names only, one per line:
1. <ToolName>
2. <ToolName>
3. <ToolName> (optional)
4. <ToolName> (optional)
)";

}  // namespace prompts

}  // namespace eaagent
