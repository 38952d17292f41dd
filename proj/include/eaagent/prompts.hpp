#pragma once

#include <map>
#include <string>
#include <string_view>

namespace eaagent {

// Replaces {identifier} placeholders from `values`. A referenced key with no
// value raises MissingPlaceholderError; braces that do not wrap a bare
// identifier pass through untouched. Substituted values are never re-scanned.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values);

namespace prompts {

// Tool catalogue as shown to the model inside the planning prompt.
extern const char* const kToolPool;

// Placeholders: {tool_pool} {entity_iri} {attr_cnt_all} {attr_cnt}
// {rel_cnt_all} {rel_cnt} {signal_attr} {top1_score} {top2_score} {top3_score}
extern const char* const kPlanningTemplate;

// Placeholders: {source_iri} {source_triples} {candidate_blocks}
extern const char* const kAlignmentTemplate;

// Placeholders: {source_iri} {source_triples} {candidate_blocks} {initial_choice}
extern const char* const kReflectionTemplate;

// Placeholders: {entity} {top1_score} {top2_score} {top3_score} {old_tools} {reward}
extern const char* const kRewriteTemplate;

}  // namespace prompts

}  // namespace eaagent
