#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "autodiff/toynet.hpp"
#include "core/config.hpp"
#include "core/mixture.hpp"
#include "core/types.hpp"

namespace rewarddance {

// Conditional rectified flow. The velocity net reads state ⊕ time ⊕
// one-hot(condition) and returns a velocity with `dim` entries.
class FlowModel {
public:
    FlowModel(ToyNet net, std::size_t dim, std::size_t num_classes);

    static FlowModel create(std::size_t dim, std::size_t num_classes, const std::vector<std::size_t>& hidden,
                            Activation activation, std::uint64_t seed);

    const ToyNet& net() const { return net_; }
    std::size_t dim() const { return dim_; }
    std::size_t num_classes() const { return num_classes_; }

    FlowModel with_net(ToyNet net) const { return FlowModel(std::move(net), dim_, num_classes_); }

    Vector encode(std::span<const double> x, double t, int condition) const;

private:
    ToyNet net_;
    std::size_t dim_;
    std::size_t num_classes_;
};

Vector velocity(const FlowModel& model, std::span<const double> x, double t, int condition);

struct SampleTrace {
    std::vector<Vector> states; // steps + 1 entries
    std::vector<double> times;  // increasing from start to end time
    std::uint64_t seed = 0;
    int condition = 0;

    const Vector& final_state() const { return states.back(); }
};

// Standard-normal starting point for stream `stream` of `seed`. Plain
// sampling uses stream 0.
Vector initial_noise(std::size_t dim, std::uint64_t seed, std::uint64_t stream = 0);

// Euler integration of dx/dt = v(x, t, c) from t0 to t1 in `steps` equal steps.
SampleTrace integrate(const FlowModel& model, Vector x, double t0, double t1, int condition, std::size_t steps);

// Full trajectory from noise at t=0 to t=1.
SampleTrace sample(const FlowModel& model, int condition, std::size_t steps, std::uint64_t seed);

// x̂1 = x + (1 - t) v(x, t, c).
Vector one_step_predict_x0(const FlowModel& model, std::span<const double> x, double t, int condition);

// Gradient with respect to the velocity-net weights of <upstream, x̂1>.
// The state x is treated as a constant.
Gradient one_step_weight_grad(const FlowModel& model, std::span<const double> x, double t, int condition,
                              std::span<const double> upstream);

struct FlowPoint {
    Vector x;
    int condition = 0;
};

// n points drawn from the mixture with classes assigned round-robin.
std::vector<FlowPoint> mixture_dataset(const Mixture& mixture, std::size_t n, std::uint64_t seed);

struct FlowTrainConfig {
    std::vector<std::size_t> hidden { 64, 64 };
    Activation activation = Activation::Tanh;
    double lr = 3e-3;
    std::size_t iterations = 3000;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;

    static FlowTrainConfig from_config(const Config& c);
    void validate() const;
};

// One flow-matching term ||v(x_t, t, c) - (x1 - x0)||^2 with
// x_t = (1 - t) x0 + t x1, and its weight gradient.
struct FlowLoss {
    double loss = 0.0;
    Gradient grad;
};
FlowLoss flow_matching_loss(const FlowModel& model, std::span<const double> x1, std::span<const double> x0, double t,
                            int condition);

struct FlowTrainStats {
    std::vector<double> batch_losses;
};

FlowModel train_flow(const FlowModel& model, const std::vector<FlowPoint>& data, const FlowTrainConfig& cfg,
                     FlowTrainStats* stats = nullptr);

// Checkpoint: magic, dim, num_classes, then the velocity net.
void save_flow(const std::filesystem::path& path, const FlowModel& model);
FlowModel load_flow(const std::filesystem::path& path);

struct GeneratedSample {
    Vector x;
    int condition = 0;
    std::uint64_t seed = 0;
};

// Columns x, y, condition, seed for 2-D samples; x0..x{d-1} otherwise.
void write_samples_csv(const std::filesystem::path& path, const std::vector<GeneratedSample>& samples);

} // namespace rewarddance

namespace rewarddance {

// Mean oracle quality of n samples with conditions assigned round-robin and
// per-sample seeds derive_seed(seed, i).
double mean_sample_quality(const FlowModel& model, const QualityModel& quality, std::size_t n, std::size_t steps,
                           std::uint64_t seed);

} // namespace rewarddance
