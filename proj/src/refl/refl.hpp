#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bon/bon.hpp"
#include "core/config.hpp"
#include "core/random.hpp"
#include "diffusion/flow.hpp"
#include "scorer/backend.hpp"

namespace rewarddance {

enum class ReflMode { Gradient, LogOnly };
enum class RewardSource { Pairwise, Pointwise };
const char* to_string(ReflMode m);
const char* to_string(RewardSource s);
ReflMode refl_mode_from_string(std::string_view s);
RewardSource reward_source_from_string(std::string_view s);

struct ReflConfig {
    std::size_t iterations = 500;
    double lr = 1e-3;
    double t_min = 0.75;
    double t_max = 0.95;
    double reward_weight = 1.0;
    std::size_t bon_n = 16;
    std::size_t bon_top_k = 2;
    std::uint64_t seed = 0;
    std::size_t log_window = 1000;
    std::size_t sample_steps = 20; // Euler steps over the full [0, 1] range
    std::size_t batch_size = 8;
    bool log_space = false;       // loss -log r instead of 1 - r
    double drift_penalty = 0.0;   // weight on ||x̂1 - x̂1_frozen||^2
    std::size_t refresh_interval = 0; // 0 keeps the initial references
    ReflMode mode = ReflMode::Gradient;
    RewardSource source = RewardSource::Pairwise;
    std::size_t threads = 1;

    static ReflConfig from_config(const Config& c);
    void validate() const;
};

// Conditions map to their Top-k references, best first.
using References = std::map<int, std::vector<Candidate>>;

// One prompt per condition of the flow model.
std::vector<Prompt> condition_prompts(std::size_t num_classes);

References prepare_references(BackendPtr backend, const FlowModel& model, const std::vector<Prompt>& prompts,
                              const ReflConfig& cfg, std::uint64_t round = 0);

struct ReflState {
    AdamState optimizer;
    std::map<int, std::size_t> reference_uses;
};

struct ReflStepResult {
    FlowModel model;
    double reward = 0.0;           // batch mean
    std::vector<double> rewards;   // per batch element
    std::vector<Vector> predictions;
    std::vector<double> times;
};

struct ReflSampleLoss {
    double loss = 0.0;
    double reward = 0.0;
    Vector prediction; // x̂1
    Gradient grad;     // empty in log_only mode
};

// Loss of one sample at state x_t and time t, with x_t held constant:
// w (1 - r) or w (-log r) on r = reward of x̂1, plus drift_penalty ||x̂1 - x̂1_frozen||^2.
ReflSampleLoss refl_sample_loss(const FlowModel& model, const ScoringBackend& backend, const Prompt& prompt,
                                const Candidate* reference, std::span<const double> xt, double t, const ReflConfig& cfg,
                                const FlowModel* anchor = nullptr);

// `anchor` is the frozen pre-RL model, used only when drift_penalty > 0.
ReflStepResult refl_step(const FlowModel& model, const ScoringBackend& backend, const References& references,
                         const Prompt& prompt, const ReflConfig& cfg, Rng& rng, ReflState& state,
                         const FlowModel* anchor = nullptr);

// Trailing-window statistics over the per-iteration reward series.
struct RewardLog {
    std::size_t window = 1000;
    std::vector<double> rewards;
    std::vector<double> window_mean;
    std::vector<double> window_std; // population std

    void append(double reward);
    std::size_t size() const { return rewards.size(); }
};

void write_reward_log_csv(const std::filesystem::path& path, const RewardLog& log);
RewardLog read_reward_log_csv(const std::filesystem::path& path, std::size_t window);

struct ReflResult {
    FlowModel model;
    RewardLog log;
    References references;
    std::optional<std::string> aborted;
};

ReflResult run_refl(const FlowModel& model, BackendPtr backend, const ReflConfig& cfg,
                    std::optional<References> references = std::nullopt);

struct CollapseFlag {
    std::size_t window_index = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    double mean = 0.0;
    double std = 0.0;
};

// Splits the series into consecutive blocks of `window` entries (default:
// the log's window). A block is flagged when its std is below
// threshold × the largest std seen so far while its mean is at or above the
// 90th percentile of all block means.
std::vector<CollapseFlag> detect_variance_collapse(const RewardLog& log, double threshold, std::size_t window = 0);

} // namespace rewarddance
