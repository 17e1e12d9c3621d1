#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace rewarddance {

enum class Activation { Tanh, ReLU };

const char* to_string(Activation a);
Activation activation_from_string(std::string_view s);

// Fixed-topology dense network. Hidden layers apply the activation; the
// output layer is linear (logits). Weights are stored layer by layer as a
// row-major (out x in) matrix followed by the out-length bias.
class ToyNet {
public:
    ToyNet() = default;
    ToyNet(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed);
    ToyNet(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed, Vector weights);

    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from the stored seed.
    static ToyNet initialized(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed);
    static ToyNet zeros(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed = 0);

    const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
    Activation activation() const { return activation_; }
    std::uint64_t seed() const { return seed_; }
    const Vector& weights() const { return weights_; }
    Vector& mutable_weights() { return weights_; }

    std::size_t input_size() const { return layer_sizes_.front(); }
    std::size_t output_size() const { return layer_sizes_.back(); }
    std::size_t num_layers() const { return layer_sizes_.size() - 1; }

    // Offset of layer l's weight matrix; its bias follows at + in*out.
    std::size_t layer_offset(std::size_t l) const { return offsets_[l]; }

    static std::size_t parameter_count(const std::vector<std::size_t>& layer_sizes);

    bool operator==(const ToyNet& other) const;

private:
    void compute_offsets();

    std::vector<std::size_t> layer_sizes_;
    Activation activation_ = Activation::Tanh;
    std::uint64_t seed_ = 0;
    Vector weights_;
    std::vector<std::size_t> offsets_;
};

struct Gradient {
    Vector values;
};

struct BackwardResult {
    Gradient weights;
    Vector input; // d loss / d input
};

Vector forward(const ToyNet& net, std::span<const double> input);

// Exact reverse-mode gradient of a scalar loss whose gradient at the output
// logits is `output_grad`.
BackwardResult backward(const ToyNet& net, std::span<const double> input, std::span<const double> output_grad);

// w' = w + v', v' = momentum * v - lr * g. `velocity` is resized on first use.
ToyNet sgd_step(const ToyNet& net, const Gradient& grad, double lr, double momentum, Vector& velocity);
ToyNet sgd_step(const ToyNet& net, const Gradient& grad, double lr);

struct AdamState {
    Vector m;
    Vector v;
    std::size_t t = 0;
};

// Bias-corrected Adam update.
ToyNet adam_step(const ToyNet& net, const Gradient& grad, double lr, AdamState& state, double beta1 = 0.9,
                 double beta2 = 0.999, double eps = 1e-8);

void accumulate(Gradient& into, const Gradient& g, double scale = 1.0);

// Binary checkpoint: magic, layer sizes, activation, seed, then the weight
// array as little-endian IEEE-754 doubles.
void write_net(std::ostream& out, const ToyNet& net);
ToyNet read_net(std::istream& in);
void save_net(const std::filesystem::path& path, const ToyNet& net);
ToyNet load_net(const std::filesystem::path& path);

namespace detail {
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
} // namespace detail

} // namespace rewarddance
