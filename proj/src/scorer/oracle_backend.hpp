#pragma once

#include <optional>

#include "backend.hpp"
#include "core/mixture.hpp"

namespace rewarddance {

enum class OracleMode { Hard, Soft };

// Ground-truth scorer. Quality comes from a candidate's oracle_quality when
// present, otherwise from the quality model evaluated on its features.
//   hard pairwise: 1 if q(a) > q(b), 0 if less, 0.5 on an exact tie
//   soft pairwise: (1 + q(a) - q(b)) / 2
//   soft pointwise: q(a); hard pointwise: step of q(a) at 0.5
// Only the soft mode over feature-derived quality is differentiable.
class OracleBackend final : public ScoringBackend {
public:
    OracleBackend(OracleMode mode, std::optional<QualityModel> quality = std::nullopt);

    std::string name() const override { return mode_ == OracleMode::Hard ? "oracle-hard" : "oracle-soft"; }
    bool supports_pairwise() const override { return true; }
    bool supports_pointwise() const override { return true; }
    bool differentiable() const override { return mode_ == OracleMode::Soft && quality_.has_value(); }

    double quality(const Candidate& c, int condition) const;
    OracleMode mode() const { return mode_; }

protected:
    RewardScore pairwise_impl(const ScoreRequest& req) const override;
    RewardScore pointwise_impl(const ScoreRequest& req) const override;
    ScoreWithGradient gradient_impl(const ScoreRequest& req) const override;

private:
    Vector candidate_grad(const Candidate& c, int condition) const;

    OracleMode mode_;
    std::optional<QualityModel> quality_;
};

} // namespace rewarddance
