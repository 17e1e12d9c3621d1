#include "backend.hpp"

#include <cmath>

namespace rewarddance {

namespace {

void check_score(const ScoringBackend& b, const RewardScore& s)
{
    if (!std::isfinite(s.value) || s.value < 0.0 || s.value > 1.0) {
        fail(ErrorCode::Scoring, b.name() + " produced an invalid reward " + std::to_string(s.value));
    }
}

void check_pairwise(const ScoringBackend& b, const ScoreRequest& req)
{
    require(req.pairwise(), ErrorCode::InvalidArgument, "pairwise scoring needs two candidates");
    require(b.supports_pairwise(), ErrorCode::InvalidArgument, b.name() + " does not support pairwise scoring");
    require(req.candidate_a.id != req.candidate_b->id || req.candidate_a == *req.candidate_b,
        ErrorCode::InvalidArgument, "pairwise request reuses candidate id '" + req.candidate_a.id + "'");
}

void check_pointwise(const ScoringBackend& b, const ScoreRequest& req)
{
    require(!req.pairwise(), ErrorCode::InvalidArgument, "pointwise scoring takes exactly one candidate");
    require(b.supports_pointwise(), ErrorCode::InvalidArgument, b.name() + " does not support pointwise scoring");
}

} // namespace

RewardScore ScoringBackend::score_pairwise(const ScoreRequest& req) const
{
    check_pairwise(*this, req);
    RewardScore s = pairwise_impl(req);
    check_score(*this, s);
    return s;
}

RewardScore ScoringBackend::score_pointwise(const ScoreRequest& req) const
{
    check_pointwise(*this, req);
    RewardScore s = pointwise_impl(req);
    check_score(*this, s);
    return s;
}

ScoreWithGradient ScoringBackend::score_with_gradient(const ScoreRequest& req) const
{
    if (!differentiable()) {
        fail(ErrorCode::NotDifferentiable, name() + " has no differentiable scoring path");
    }
    if (req.pairwise()) {
        check_pairwise(*this, req);
    } else {
        check_pointwise(*this, req);
    }
    ScoreWithGradient out = gradient_impl(req);
    check_score(*this, out.score);
    return out;
}

RewardScore ScoringBackend::pairwise_impl(const ScoreRequest&) const
{
    fail(ErrorCode::InvalidArgument, name() + " does not support pairwise scoring");
}

RewardScore ScoringBackend::pointwise_impl(const ScoreRequest&) const
{
    fail(ErrorCode::InvalidArgument, name() + " does not support pointwise scoring");
}

ScoreWithGradient ScoringBackend::gradient_impl(const ScoreRequest&) const
{
    fail(ErrorCode::NotDifferentiable, name() + " has no differentiable scoring path");
}

ScoreRequest make_pairwise_request(const Prompt& prompt, const Candidate& a, const Candidate& b,
                                   const Instruction& instruction)
{
    return ScoreRequest { prompt, a, b, instruction };
}

ScoreRequest make_pointwise_request(const Prompt& prompt, const Candidate& a, const Instruction& instruction)
{
    return ScoreRequest { prompt, a, std::nullopt, instruction };
}

namespace {

ScoreRequest swapped(const ScoreRequest& req)
{
    ScoreRequest out = req;
    std::swap(out.candidate_a, *out.candidate_b);
    return out;
}

} // namespace

SymmetrizedBackend::SymmetrizedBackend(BackendPtr inner)
    : inner_(std::move(inner))
{
    require(inner_ != nullptr, ErrorCode::InvalidArgument, "cannot symmetrize a null backend");
    require(inner_->supports_pairwise(), ErrorCode::InvalidArgument,
        "symmetrization needs a pairwise-capable backend, got " + inner_->name());
}

double SymmetrizedBackend::margin(const ScoreRequest& req) const
{
    require(req.pairwise(), ErrorCode::InvalidArgument, "margin needs a pairwise request");
    const double forward = inner_->score_pairwise(req).value;
    const double reverse = inner_->score_pairwise(swapped(req)).value;
    return (forward - reverse) / 2.0;
}

RewardScore SymmetrizedBackend::pairwise_impl(const ScoreRequest& req) const
{
    return RewardScore::from_probability(0.5 + margin(req));
}

RewardScore SymmetrizedBackend::pointwise_impl(const ScoreRequest& req) const
{
    return inner_->score_pointwise(req);
}

ScoreWithGradient SymmetrizedBackend::gradient_impl(const ScoreRequest& req) const
{
    if (!req.pairwise()) {
        return inner_->score_with_gradient(req);
    }
    const auto fwd = inner_->score_with_gradient(req);
    const auto rev = inner_->score_with_gradient(swapped(req));
    ScoreWithGradient out;
    out.score = RewardScore::from_probability(0.5 + (fwd.score.value - rev.score.value) / 2.0);
    out.grad_a.resize(fwd.grad_a.size());
    out.grad_b.resize(fwd.grad_b.size());
    for (std::size_t i = 0; i < out.grad_a.size(); ++i) {
        out.grad_a[i] = (fwd.grad_a[i] - rev.grad_b[i]) / 2.0;
    }
    for (std::size_t i = 0; i < out.grad_b.size(); ++i) {
        out.grad_b[i] = (fwd.grad_b[i] - rev.grad_a[i]) / 2.0;
    }
    return out;
}

BackendPtr swap_symmetrize(BackendPtr backend)
{
    return std::make_shared<SymmetrizedBackend>(std::move(backend));
}

RewardScore CountingBackend::pairwise_impl(const ScoreRequest& req) const
{
    ++pairwise_calls_;
    return inner_->score_pairwise(req);
}

RewardScore CountingBackend::pointwise_impl(const ScoreRequest& req) const
{
    ++pointwise_calls_;
    return inner_->score_pointwise(req);
}

ScoreWithGradient CountingBackend::gradient_impl(const ScoreRequest& req) const
{
    ++(req.pairwise() ? pairwise_calls_ : pointwise_calls_);
    return inner_->score_with_gradient(req);
}

} // namespace rewarddance
