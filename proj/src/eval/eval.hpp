#pragma once

#include "core/config.hpp"
#include "core/mixture.hpp"
#include "rmtrain/rm_train.hpp"
#include "scorer/backend.hpp"

namespace rewarddance {

// (G - B) / (G + S + B)
double gsb_score(const GsbTally& tally);

enum class Verdict { Good, Same, Bad };
const char* to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct JudgeVerdict {
    std::string prompt_id;
    Verdict verdict = Verdict::Same;
    double margin = 0.0;
};

Json to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const Json& j);

inline constexpr double kDefaultSameThreshold = 0.05;

// margin = r_sym(a, b) - 0.5; Good if margin >= tau, Bad if margin <= -tau,
// Same otherwise. A zero margin is always Same.
JudgeVerdict judge_pair(const ScoringBackend& backend, const Prompt& prompt, const Candidate& a, const Candidate& b,
                        double tau = kDefaultSameThreshold);

GsbTally tally(const std::vector<JudgeVerdict>& verdicts);

// Mean of 0/1/2 alignment ratings.
double alignment_rubric(const std::vector<int>& scores);

struct SyntheticSpec {
    std::size_t num_pairs = 3000; // total over all splits
    std::size_t id_pairs = 500;
    std::size_t ood_pairs = 500;
    double noise_rate = 0.1; // eta
    std::size_t dim = 8;
    std::size_t num_classes = 4;
    double ood_shift = 0.5;
    std::uint64_t seed = 0;
    double radius = 2.0;    // distance of class means from the origin
    double spread = 1.5;    // candidates lie within this distance of their class mean
    double quality_tau = 1.0;
    bool holdout_class = true; // keep the last class out of the train and ID splits

    std::size_t train_pairs() const { return num_pairs - id_pairs - ood_pairs; }
    Mixture mixture() const;
    QualityModel quality_model(Split split) const;
    void validate() const;
    static SyntheticSpec from_config(const Config& cfg);
};

struct SyntheticDataset {
    std::vector<PreferencePair> pairs;
    std::vector<std::size_t> flipped; // indices whose label was flipped
};

// Per pair: draw a condition, two candidates at independent uniform radii
// around the class mean, chosen = higher oracle quality, then flip with
// probability eta. Train and ID pairs hold out the last class; OOD pairs use
// all classes with means shifted by ood_shift.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

struct ScalingRow {
    std::size_t width = 0;
    double id_accuracy = 0.0;
    double ood_accuracy = 0.0;
};

// One PairwiseGenerative reward model per width on identical data and seed.
std::vector<ScalingRow> scaling_report(const std::vector<std::size_t>& widths, const std::vector<PreferencePair>& pairs,
                                       std::size_t dim, std::size_t num_classes, const TrainConfig& cfg);

} // namespace rewarddance
