#pragma once

#include <array>
#include <filesystem>
#include <span>

#include "autodiff/toynet.hpp"
#include "backend.hpp"

namespace rewarddance {

enum class Paradigm { PointwiseRegressive, PointwiseGenerative, PairwiseGenerative };

const char* to_string(Paradigm p);
Paradigm paradigm_from_string(std::string_view s);

// Decision vocabulary of the toy generative heads.
enum Token : std::size_t { kYes = 0, kNo = 1, kPad = 2, kUnk = 3 };
inline constexpr std::size_t kVocabSize = 4;

struct RewardModelShape {
    Paradigm paradigm = Paradigm::PairwiseGenerative;
    std::size_t dim = 2;
    std::size_t num_classes = 2;
    std::size_t template_buckets = 4;

    bool pairwise_input() const { return paradigm == Paradigm::PairwiseGenerative; }
    std::size_t input_size() const;
    std::size_t output_size() const { return paradigm == Paradigm::PointwiseRegressive ? 1 : kVocabSize; }

    bool operator==(const RewardModelShape&) const = default;
};

// Stable bucket for a template id (FNV-1a).
std::size_t template_bucket(std::string_view template_id, std::size_t buckets);

// Toy stand-in for the VLM judge. Pairwise input is
// features_a ++ features_b ++ onehot(condition) ++ onehot(template bucket);
// pointwise input drops features_b. Generative heads emit logits over
// {yes, no, pad, unk}; the regressive head emits one scalar.
class RewardModel {
public:
    RewardModel(RewardModelShape shape, ToyNet net);

    static RewardModel create(RewardModelShape shape, const std::vector<std::size_t>& hidden, Activation activation,
                              std::uint64_t seed);

    const RewardModelShape& shape() const { return shape_; }
    const ToyNet& net() const { return net_; }

    RewardModel with_net(ToyNet net) const { return RewardModel(shape_, std::move(net)); }

    Vector encode_pair(std::span<const double> a, std::span<const double> b, int condition,
                       std::string_view template_id) const;
    Vector encode_point(std::span<const double> x, int condition, std::string_view template_id) const;

    bool operator==(const RewardModel&) const = default;

private:
    void encode_context(Vector& out, int condition, std::string_view template_id) const;

    RewardModelShape shape_;
    ToyNet net_;
};

// Probability of "yes" under the normalization and its gradient with
// respect to the logits.
struct YesProbability {
    double value = 0.0;
    Vector dlogits;
};
YesProbability yes_probability(std::span<const double> logits, Normalization normalization);

void save_reward_model(const std::filesystem::path& path, const RewardModel& model);
RewardModel load_reward_model(const std::filesystem::path& path);

// Scorer backed by a trained RewardModel. Pairwise generative models score
// pairs natively. Pointwise models score pairs as a Bradley-Terry
// probability of their pointwise scores: sigma(s_a - s_b) on the raw scalar
// (regressive) or on P(yes) (generative).
class ToyBackend final : public ScoringBackend {
public:
    explicit ToyBackend(RewardModel model, Normalization normalization = Normalization::YesNoPair);

    std::string name() const override;
    bool supports_pairwise() const override { return true; }
    bool supports_pointwise() const override { return model_.shape().paradigm != Paradigm::PairwiseGenerative; }
    bool differentiable() const override { return true; }

    const RewardModel& model() const { return model_; }
    Normalization normalization() const { return normalization_; }

protected:
    RewardScore pairwise_impl(const ScoreRequest& req) const override;
    RewardScore pointwise_impl(const ScoreRequest& req) const override;
    ScoreWithGradient gradient_impl(const ScoreRequest& req) const override;

private:
    // Pointwise score before the final squashing: the raw scalar for the
    // regressive head, P(yes) for the generative head. Gradient w.r.t. x.
    std::pair<double, Vector> point_value(const Candidate& c, const ScoreRequest& req, bool with_grad) const;
    RewardScore score_from_logits(const Vector& logits) const;

    RewardModel model_;
    Normalization normalization_;
};

} // namespace rewarddance
