#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eaagent/llm.hpp"
#include "eaagent/planner.hpp"
#include "eaagent/retrieval.hpp"
#include "eaagent/selectors.hpp"

namespace eaagent {

struct TranscriptEntry {
    PromptTag tag = PromptTag::align;
    std::string prompt;
    std::string response;  // the response the step's result came from
};

struct AlignmentOutcome {
    Iri source;
    ToolPath path;
    std::vector<AttributeTriple> selected_attr;
    std::vector<RelationTriple> selected_rel;
    Iri initial_prediction;
    std::optional<Iri> refined_prediction;  // set iff a Reflector step ran
    Iri final_prediction;                   // refined if present, else initial
    bool degraded = false;                  // a parse fallback was taken
    std::vector<TranscriptEntry> transcript;
    TokenUsage tokens;                      // this entity's align/reflect usage
};

struct ExecutionConfig {
    SelectionConfig selection;
    // Triples shown per type when the matching selector is absent from the
    // path: first raw_cap in input order.
    std::size_t raw_cap = 10;
    double temperature = 0.1;
    std::size_t align_max_tokens = 128;
    std::size_t reflect_max_tokens = 128;
    bool keep_transcript = true;
};

// One candidate as rendered into the alignment and reflection prompts.
struct CandidateBlock {
    Iri target;
    double score = 0.0;
    std::vector<AttributeTriple> attrs;
    std::vector<RelationTriple> rels;
};

std::string render_alignment_prompt(const Iri& source,
                                    std::span<const AttributeTriple> source_attrs,
                                    std::span<const RelationTriple> source_rels,
                                    std::span<const CandidateBlock> blocks);

std::string render_reflection_prompt(const Iri& source,
                                     std::span<const AttributeTriple> source_attrs,
                                     std::span<const RelationTriple> source_rels,
                                     std::span<const CandidateBlock> blocks,
                                     const Iri& initial_choice);

// First "[...]" token must name a candidate exactly; with no brackets, the
// longest candidate IRI appearing verbatim in the text wins.
Iri parse_iri_answer(std::string_view text, const CandidateSet& candidates);

// Runs the path's steps in order against the gateway. Each LLM step retries
// once on an unparseable answer; a second failure degrades deterministically
// (alignment: top-1 candidate, reflection: keep the initial prediction).
AlignmentOutcome execute(const ToolPath& path, const Iri& source,
                         const KnowledgeGraph& source_graph, const KnowledgeGraph& target_graph,
                         const CandidateSet& candidates, LlmGateway& gateway,
                         const ExecutionConfig& config = {});

void write_outcomes(std::ostream& out, std::span<const AlignmentOutcome> outcomes,
                    bool with_transcript = true);
std::vector<AlignmentOutcome> load_outcomes(std::istream& in);

}  // namespace eaagent
