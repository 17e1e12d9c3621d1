#include "types.hpp"

#include <algorithm>
#include <cmath>

namespace rewarddance {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Dimension: return "dimension_mismatch";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::Empty: return "empty";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Config: return "config";
    case ErrorCode::Scoring: return "scoring";
    case ErrorCode::NotDifferentiable: return "not_differentiable";
    case ErrorCode::Diverged: return "diverged";
    case ErrorCode::RemoteTimeout: return "remote_timeout";
    case ErrorCode::RemoteHttp: return "remote_http";
    case ErrorCode::RemoteMalformed: return "remote_malformed";
    case ErrorCode::RemoteNoDecision: return "remote_no_decision";
    case ErrorCode::PortBinding: return "port_binding";
    case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

double sigmoid(double x)
{
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x)
{
    // -softplus(-x)
    if (x >= 0) {
        return -std::log1p(std::exp(-x));
    }
    return x - std::log1p(std::exp(x));
}

double yes_no_probability(double yes_logit, double no_logit)
{
    return sigmoid(yes_logit - no_logit);
}

RewardScore RewardScore::from_probability(double p)
{
    RewardScore s;
    s.value = p;
    return s;
}

RewardScore RewardScore::from_yes_no(double yes_logit, double no_logit)
{
    RewardScore s;
    s.value = yes_no_probability(yes_logit, no_logit);
    s.decision_token_logits = std::map<std::string, double> { { "yes", yes_logit }, { "no", no_logit } };
    s.normalization = Normalization::YesNoPair;
    return s;
}

const char* to_string(Split s)
{
    switch (s) {
    case Split::Train: return "train";
    case Split::ID: return "id";
    case Split::OOD: return "ood";
    }
    return "train";
}

Split split_from_string(std::string_view s)
{
    if (s == "train") return Split::Train;
    if (s == "id") return Split::ID;
    if (s == "ood") return Split::OOD;
    fail(ErrorCode::Parse, "unknown split '" + std::string(s) + "'");
}

const char* to_string(CotOrder o)
{
    switch (o) {
    case CotOrder::None: return "none";
    case CotOrder::DecisionFirst: return "decision_first";
    case CotOrder::ReasoningFirst: return "reasoning_first";
    }
    return "none";
}

CotOrder cot_order_from_string(std::string_view s)
{
    if (s == "none") return CotOrder::None;
    if (s == "decision_first") return CotOrder::DecisionFirst;
    if (s == "reasoning_first") return CotOrder::ReasoningFirst;
    fail(ErrorCode::Parse, "unknown cot order '" + std::string(s) + "'");
}

const char* to_string(Normalization n)
{
    return n == Normalization::FullVocab ? "full_vocab" : "yes_no_pair";
}

Normalization normalization_from_string(std::string_view s)
{
    if (s == "full_vocab") return Normalization::FullVocab;
    if (s == "yes_no_pair") return Normalization::YesNoPair;
    fail(ErrorCode::Parse, "unknown normalization '" + std::string(s) + "'");
}

namespace {

void check_candidate(const Candidate& c, std::size_t index, std::size_t dim, const char* role,
                     std::vector<Violation>& out)
{
    if (c.features.size() != dim) {
        out.push_back({ index, "dimension",
            std::string(role) + " candidate '" + c.id + "' has " + std::to_string(c.features.size())
                + " features, expected " + std::to_string(dim) });
    }
    if (std::any_of(c.features.begin(), c.features.end(), [](double v) { return !std::isfinite(v); })) {
        out.push_back({ index, "non_finite", std::string(role) + " candidate '" + c.id + "' has non-finite features" });
    }
    if (c.oracle_quality) {
        const double q = *c.oracle_quality;
        if (!std::isfinite(q) || q < 0.0 || q > 1.0) {
            out.push_back({ index, "oracle_quality",
                std::string(role) + " candidate '" + c.id + "' has oracle_quality outside [0,1]" });
        }
    }
}

} // namespace

std::vector<Violation> validate_dataset(const std::vector<PreferencePair>& pairs, std::size_t dim)
{
    std::vector<Violation> out;
    if (pairs.empty()) {
        out.push_back({ 0, "empty", "dataset contains no pairs" });
        return out;
    }
    // Ids may repeat across pairs only when they denote the same object.
    std::map<std::string, const Candidate*> candidates;
    std::map<std::string, const Prompt*> prompts;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.chosen.id == p.rejected.id) {
            out.push_back({ i, "same_candidate", "pair " + std::to_string(i) + " (prompt '" + p.prompt.id
                    + "') uses candidate '" + p.chosen.id + "' as both chosen and rejected" });
        }
        if (p.prompt.condition < 0) {
            out.push_back({ i, "condition", "pair " + std::to_string(i) + " has negative condition" });
        }
        auto [pit, fresh_prompt] = prompts.emplace(p.prompt.id, &p.prompt);
        if (!fresh_prompt && !(*pit->second == p.prompt)) {
            out.push_back({ i, "duplicate_id", "prompt id '" + p.prompt.id + "' is reused for a different prompt" });
        }
        check_candidate(p.chosen, i, dim, "chosen", out);
        check_candidate(p.rejected, i, dim, "rejected", out);
        for (const Candidate* c : { &p.chosen, &p.rejected }) {
            if (c == &p.rejected && p.chosen.id == p.rejected.id) {
                continue;
            }
            auto [it, fresh] = candidates.emplace(c->id, c);
            if (!fresh && it->second != c && !(*it->second == *c)) {
                out.push_back({ i, "duplicate_id", "candidate id '" + c->id + "' is reused for a different candidate" });
            }
        }
    }
    return out;
}

std::vector<PreferencePair> filter_split(const std::vector<PreferencePair>& pairs, Split split)
{
    std::vector<PreferencePair> out;
    std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out),
                 [split](const PreferencePair& p) { return p.split == split; });
    return out;
}

} // namespace rewarddance
