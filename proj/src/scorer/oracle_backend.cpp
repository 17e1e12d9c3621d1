#include "oracle_backend.hpp"

namespace rewarddance {

OracleBackend::OracleBackend(OracleMode mode, std::optional<QualityModel> quality)
    : mode_(mode)
    , quality_(std::move(quality))
{
}

double OracleBackend::quality(const Candidate& c, int condition) const
{
    if (c.oracle_quality) {
        return *c.oracle_quality;
    }
    if (!quality_) {
        fail(ErrorCode::Scoring, "candidate '" + c.id + "' has no oracle_quality and the oracle has no quality model");
    }
    return quality_->quality(c.features, condition);
}

Vector OracleBackend::candidate_grad(const Candidate& c, int condition) const
{
    if (c.oracle_quality) {
        // Metadata quality is a constant with respect to the features.
        return Vector(c.features.size(), 0.0);
    }
    return quality_->quality_grad(c.features, condition);
}

RewardScore OracleBackend::pairwise_impl(const ScoreRequest& req) const
{
    const double qa = quality(req.candidate_a, req.prompt.condition);
    const double qb = quality(*req.candidate_b, req.prompt.condition);
    if (mode_ == OracleMode::Hard) {
        return RewardScore::from_probability(qa > qb ? 1.0 : (qa < qb ? 0.0 : 0.5));
    }
    return RewardScore::from_probability(0.5 * (1.0 + qa - qb));
}

RewardScore OracleBackend::pointwise_impl(const ScoreRequest& req) const
{
    const double q = quality(req.candidate_a, req.prompt.condition);
    if (mode_ == OracleMode::Hard) {
        return RewardScore::from_probability(q > 0.5 ? 1.0 : (q < 0.5 ? 0.0 : 0.5));
    }
    return RewardScore::from_probability(q);
}

ScoreWithGradient OracleBackend::gradient_impl(const ScoreRequest& req) const
{
    ScoreWithGradient out;
    const int cond = req.prompt.condition;
    if (req.pairwise()) {
        out.score = pairwise_impl(req);
        out.grad_a = candidate_grad(req.candidate_a, cond);
        out.grad_b = candidate_grad(*req.candidate_b, cond);
        for (auto& g : out.grad_a) g *= 0.5;
        for (auto& g : out.grad_b) g *= -0.5;
    } else {
        out.score = pointwise_impl(req);
        out.grad_a = candidate_grad(req.candidate_a, cond);
    }
    return out;
}

} // namespace rewarddance
