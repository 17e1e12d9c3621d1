#pragma once

#include <functional>

#include "core/config.hpp"
#include "core/serialization.hpp"
#include "scorer/reward_model.hpp"

namespace rewarddance {

enum class Optimizer { Sgd, Adam };
const char* to_string(Optimizer o);
Optimizer optimizer_from_string(std::string_view s);

struct TrainConfig {
    Paradigm paradigm = Paradigm::PairwiseGenerative;
    Optimizer optimizer = Optimizer::Adam;
    double lr = 0.003;
    double momentum = 0.9; // Sgd only
    std::size_t epochs = 40;
    double ce_coefficient = 0.1; // lambda
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    bool swap_augment = true;
    std::vector<std::size_t> hidden { 64 };
    Activation activation = Activation::Tanh;
    Normalization normalization = Normalization::YesNoPair;
    std::size_t template_buckets = 4;

    void validate() const;
    static TrainConfig from_config(const Config& cfg);
};

struct TrainStats {
    std::vector<double> epoch_losses;
    std::size_t examples_seen = 0;
};

struct TrainResult {
    RewardModel model;
    TrainStats stats;
};

// Bradley-Terry loss -ln sigma(r_w - r_l).
double bt_loss(double r_w, double r_l);

// d bt_loss / d r_w; the derivative w.r.t. r_l is its negation.
double bt_loss_grad(double r_w, double r_l);

struct LossAndGradient {
    double loss = 0.0;
    Gradient grad;
};

// Per-pair objectives, exposed for gradient checks.
LossAndGradient regressive_pair_loss(const RewardModel& model, const PreferencePair& pair);
LossAndGradient pointwise_generative_pair_loss(const RewardModel& model, const PreferencePair& pair, double ce_coefficient,
                                               Normalization normalization);
// Cross-entropy of the decision token for (first, second) with target yes/no.
LossAndGradient pairwise_generative_loss(const RewardModel& model, const Prompt& prompt, const Candidate& first,
                                         const Candidate& second, Token target);

TrainResult train_regressive(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs, const RewardModel& model);
TrainResult train_pointwise_generative(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs,
                                       const RewardModel& model);
TrainResult train_pairwise_generative(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs,
                                      const RewardModel& model);

RewardModel initial_reward_model(const TrainConfig& cfg, std::size_t dim, std::size_t num_classes);

// Builds the initial model from cfg and dispatches on cfg.paradigm. Only
// Train-split pairs are used.
TrainResult train_reward_model(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs, std::size_t dim,
                               std::size_t num_classes);

struct AccuracyReport {
    Split split = Split::ID;
    std::size_t correct = 0;
    std::size_t ties = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
};

Json to_json(const AccuracyReport& r);

// Pairwise-capable backends score (chosen, rejected) against 0.5; pointwise
// backends compare r(chosen) with r(rejected). Ties count half.
AccuracyReport eval_accuracy(const ScoringBackend& backend, const std::vector<PreferencePair>& pairs, Split split,
                             std::size_t threads = 1);

} // namespace rewarddance
