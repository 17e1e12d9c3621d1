#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace rewarddance {

struct ScoreRequest {
    Prompt prompt;
    Candidate candidate_a;
    std::optional<Candidate> candidate_b; // absent for pointwise scoring
    Instruction instruction;

    bool pairwise() const { return candidate_b.has_value(); }
};

// A judging prompt with {prompt}, {image_a}, {image_b} and optionally
// {instruction} placeholders.
struct PromptTemplate {
    std::string template_id;
    std::string body;
    CotOrder cot_order = CotOrder::DecisionFirst;

    bool pairwise() const;
};

// Clauses shared by the shipped templates. The decision clause asks for the
// yes/no token, the reasoning clause for the rationale; their relative order
// is what distinguishes decision-first from reasoning-first formats.
inline constexpr const char* kDecisionClause = "Answer with a single word, \"yes\" or \"no\".";
inline constexpr const char* kReasoningClause = "Explain the reasons for your judgment.";

void validate_template(const PromptTemplate& t);

std::string render_prompt(const PromptTemplate& t, const ScoreRequest& req);

// Shipped defaults: alignment judging (pairwise) and quality judging
// (pointwise), each in decision-first and reasoning-first order.
const std::vector<PromptTemplate>& builtin_templates();
const PromptTemplate& builtin_template(const std::string& template_id);

// Template file: optional leading "# cot_order: <order>" line, then the body.
// The template id is the file stem.
PromptTemplate load_template(const std::filesystem::path& path);
std::string template_file_contents(const PromptTemplate& t);

Instruction default_instruction(bool pairwise);

} // namespace rewarddance
