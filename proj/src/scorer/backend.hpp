#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "templates.hpp"

namespace rewarddance {

// Reward and its gradient with respect to the candidates' feature vectors.
struct ScoreWithGradient {
    RewardScore score;
    Vector grad_a;
    Vector grad_b; // empty for pointwise requests
};

// Generative reward contract: the reward is the probability of "yes" given
// (candidate_a, candidate_b, prompt, instruction). Pairwise scores are the
// probability that candidate_a is superior to candidate_b. Implementations
// must be safe for concurrent score calls.
class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;

    virtual std::string name() const = 0;
    virtual bool supports_pairwise() const = 0;
    virtual bool supports_pointwise() const = 0;
    virtual bool differentiable() const { return false; }

    RewardScore score_pairwise(const ScoreRequest& req) const;
    RewardScore score_pointwise(const ScoreRequest& req) const;

    // Only for differentiable backends; otherwise throws NotDifferentiable.
    ScoreWithGradient score_with_gradient(const ScoreRequest& req) const;

protected:
    virtual RewardScore pairwise_impl(const ScoreRequest& req) const;
    virtual RewardScore pointwise_impl(const ScoreRequest& req) const;
    virtual ScoreWithGradient gradient_impl(const ScoreRequest& req) const;
};

using BackendPtr = std::shared_ptr<const ScoringBackend>;

// Free-function spellings of the contract.
inline RewardScore score_pairwise(const ScoringBackend& b, const ScoreRequest& req) { return b.score_pairwise(req); }
inline RewardScore score_pointwise(const ScoringBackend& b, const ScoreRequest& req) { return b.score_pointwise(req); }

ScoreRequest make_pairwise_request(const Prompt& prompt, const Candidate& a, const Candidate& b,
                                   const Instruction& instruction);
ScoreRequest make_pointwise_request(const Prompt& prompt, const Candidate& a, const Instruction& instruction);

// r_sym(a, b) = (r(a, b) + 1 - r(b, a)) / 2, evaluated as 0.5 + margin with
// margin = (r(a, b) - r(b, a)) / 2 so that the margin is exactly
// antisymmetric under swapping a and b.
class SymmetrizedBackend final : public ScoringBackend {
public:
    explicit SymmetrizedBackend(BackendPtr inner);

    std::string name() const override { return "symmetrized(" + inner_->name() + ")"; }
    bool supports_pairwise() const override { return true; }
    bool supports_pointwise() const override { return inner_->supports_pointwise(); }
    bool differentiable() const override { return inner_->differentiable(); }

    // Signed margin r_sym(a, b) - 0.5.
    double margin(const ScoreRequest& req) const;

    const ScoringBackend& inner() const { return *inner_; }

protected:
    RewardScore pairwise_impl(const ScoreRequest& req) const override;
    RewardScore pointwise_impl(const ScoreRequest& req) const override;
    ScoreWithGradient gradient_impl(const ScoreRequest& req) const override;

private:
    BackendPtr inner_;
};

BackendPtr swap_symmetrize(BackendPtr backend);

// Counts underlying calls; used to audit evaluation cost.
class CountingBackend final : public ScoringBackend {
public:
    explicit CountingBackend(BackendPtr inner)
        : inner_(std::move(inner))
    {
    }

    std::string name() const override { return "counting(" + inner_->name() + ")"; }
    bool supports_pairwise() const override { return inner_->supports_pairwise(); }
    bool supports_pointwise() const override { return inner_->supports_pointwise(); }
    bool differentiable() const override { return inner_->differentiable(); }

    std::size_t pairwise_calls() const { return pairwise_calls_.load(); }
    std::size_t pointwise_calls() const { return pointwise_calls_.load(); }

protected:
    RewardScore pairwise_impl(const ScoreRequest& req) const override;
    RewardScore pointwise_impl(const ScoreRequest& req) const override;
    ScoreWithGradient gradient_impl(const ScoreRequest& req) const override;

private:
    BackendPtr inner_;
    mutable std::atomic<std::size_t> pairwise_calls_ { 0 };
    mutable std::atomic<std::size_t> pointwise_calls_ { 0 };
};

} // namespace rewarddance
