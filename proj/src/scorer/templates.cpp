#include "templates.hpp"

#include <fstream>
#include <sstream>

namespace rewarddance {

namespace {

const std::string kPrompt = "{prompt}";
const std::string kImageA = "{image_a}";
const std::string kImageB = "{image_b}";
const std::string kInstruction = "{instruction}";

std::string pairwise_body(CotOrder order)
{
    std::string body = "Prompt: {prompt}\n"
                       "Image 1: {image_a}\n"
                       "Image 2: {image_b}\n"
                       "{instruction}\n"
                       "Is Image 1 better than Image 2 with respect to the prompt, "
                       "judging text-image alignment, structure and aesthetics?\n";
    if (order == CotOrder::ReasoningFirst) {
        body += std::string(kReasoningClause) + " Then, on the last line: " + kDecisionClause + "\n";
    } else {
        body += std::string(kDecisionClause) + " After the answer: " + kReasoningClause + "\n";
    }
    return body;
}

std::string pointwise_body(CotOrder order)
{
    std::string body = "Prompt: {prompt}\n"
                       "Image: {image_a}\n"
                       "{instruction}\n"
                       "Does the image meet high-quality standards and match the prompt?\n";
    if (order == CotOrder::ReasoningFirst) {
        body += std::string(kReasoningClause) + " Then, on the last line: " + kDecisionClause + "\n";
    } else {
        body += std::string(kDecisionClause) + " After the answer: " + kReasoningClause + "\n";
    }
    return body;
}

void replace_all(std::string& s, const std::string& from, const std::string& to)
{
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

} // namespace

bool PromptTemplate::pairwise() const
{
    return body.find(kImageB) != std::string::npos;
}

void validate_template(const PromptTemplate& t)
{
    require(!t.template_id.empty(), ErrorCode::InvalidArgument, "template id must not be empty");
    require(t.body.find(kPrompt) != std::string::npos, ErrorCode::InvalidArgument,
        "template '" + t.template_id + "' lacks the {prompt} placeholder");
    require(t.body.find(kImageA) != std::string::npos, ErrorCode::InvalidArgument,
        "template '" + t.template_id + "' lacks the {image_a} placeholder");
}

std::string render_prompt(const PromptTemplate& t, const ScoreRequest& req)
{
    validate_template(t);
    if (t.pairwise() && !req.pairwise()) {
        fail(ErrorCode::InvalidArgument,
            "template '" + t.template_id + "' needs {image_b} but the request is pointwise");
    }
    std::string out = t.body;
    replace_all(out, kInstruction, req.instruction.text);
    replace_all(out, kImageA, req.candidate_a.id);
    if (req.candidate_b) {
        replace_all(out, kImageB, req.candidate_b->id);
    }
    // Last, so that prompt text containing braces is never re-expanded.
    replace_all(out, kPrompt, req.prompt.text);
    return out;
}

const std::vector<PromptTemplate>& builtin_templates()
{
    static const std::vector<PromptTemplate> templates {
        { "alignment_pairwise", pairwise_body(CotOrder::DecisionFirst), CotOrder::DecisionFirst },
        { "alignment_pairwise_reasoning_first", pairwise_body(CotOrder::ReasoningFirst), CotOrder::ReasoningFirst },
        { "quality_pointwise", pointwise_body(CotOrder::DecisionFirst), CotOrder::DecisionFirst },
        { "quality_pointwise_reasoning_first", pointwise_body(CotOrder::ReasoningFirst), CotOrder::ReasoningFirst },
    };
    return templates;
}

const PromptTemplate& builtin_template(const std::string& template_id)
{
    for (const auto& t : builtin_templates()) {
        if (t.template_id == template_id) {
            return t;
        }
    }
    fail(ErrorCode::InvalidArgument, "no built-in template named '" + template_id + "'");
}

std::string template_file_contents(const PromptTemplate& t)
{
    return std::string("# cot_order: ") + to_string(t.cot_order) + "\n" + t.body;
}

PromptTemplate load_template(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();

    PromptTemplate t;
    t.template_id = path.stem().string();
    const std::string header = "# cot_order:";
    if (text.rfind(header, 0) == 0) {
        const auto nl = text.find('\n');
        std::string value = text.substr(header.size(), nl == std::string::npos ? std::string::npos : nl - header.size());
        value.erase(0, value.find_first_not_of(" \t"));
        value.erase(value.find_last_not_of(" \t\r") + 1);
        t.cot_order = cot_order_from_string(value);
        text = nl == std::string::npos ? std::string() : text.substr(nl + 1);
    }
    t.body = std::move(text);
    validate_template(t);
    return t;
}

Instruction default_instruction(bool pairwise)
{
    const auto& t = builtin_template(pairwise ? "alignment_pairwise" : "quality_pointwise");
    return Instruction { t.template_id,
        pairwise ? "Compare the two images against the prompt using the predefined criteria."
                 : "Evaluate the single image against the prompt using the predefined criteria.",
        CotOrder::DecisionFirst };
}

} // namespace rewarddance
