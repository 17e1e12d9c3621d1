#include "toynet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "core/random.hpp"

namespace rewarddance {

namespace {

constexpr char kNetMagic[8] = { 'R', 'D', 'N', 'E', 'T', '0', '0', '1' };

double activate(Activation a, double x)
{
    return a == Activation::Tanh ? std::tanh(x) : std::max(0.0, x);
}

// Derivative expressed through the activated value y.
double activate_grad(Activation a, double y)
{
    return a == Activation::Tanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

// Activations of every layer; acts[0] is the input.
std::vector<Vector> forward_all(const ToyNet& net, std::span<const double> input)
{
    require(input.size() == net.input_size(), ErrorCode::Dimension,
        "network input has " + std::to_string(input.size()) + " entries, expected " + std::to_string(net.input_size()));
    const auto& sizes = net.layer_sizes();
    const auto& w = net.weights();
    std::vector<Vector> acts;
    acts.reserve(sizes.size());
    acts.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const double* W = w.data() + net.layer_offset(l);
        const double* b = W + in * out;
        const Vector& x = acts.back();
        Vector y(out);
        const bool hidden = l + 1 < net.num_layers();
        for (std::size_t o = 0; o < out; ++o) {
            double s = b[o];
            const double* row = W + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                s += row[i] * x[i];
            }
            y[o] = hidden ? activate(net.activation(), s) : s;
        }
        acts.push_back(std::move(y));
    }
    return acts;
}

} // namespace

const char* to_string(Activation a)
{
    return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_string(std::string_view s)
{
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::ReLU;
    fail(ErrorCode::Parse, "unknown activation '" + std::string(s) + "'");
}

std::size_t ToyNet::parameter_count(const std::vector<std::size_t>& layer_sizes)
{
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
    }
    return n;
}

ToyNet::ToyNet(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed)
    : ToyNet(layer_sizes, activation, seed, Vector(parameter_count(layer_sizes), 0.0))
{
}

ToyNet::ToyNet(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed, Vector weights)
    : layer_sizes_(std::move(layer_sizes))
    , activation_(activation)
    , seed_(seed)
    , weights_(std::move(weights))
{
    require(layer_sizes_.size() >= 2, ErrorCode::InvalidArgument, "a network needs at least an input and an output layer");
    require(std::all_of(layer_sizes_.begin(), layer_sizes_.end(), [](std::size_t s) { return s > 0; }),
        ErrorCode::InvalidArgument, "layer sizes must be positive");
    require(weights_.size() == parameter_count(layer_sizes_), ErrorCode::Dimension,
        "weight vector has " + std::to_string(weights_.size()) + " entries, expected "
            + std::to_string(parameter_count(layer_sizes_)));
    require(std::all_of(weights_.begin(), weights_.end(), [](double v) { return std::isfinite(v); }),
        ErrorCode::NonFinite, "network weights must be finite");
    compute_offsets();
}

void ToyNet::compute_offsets()
{
    offsets_.clear();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        offsets_.push_back(off);
        off += (layer_sizes_[l] + 1) * layer_sizes_[l + 1];
    }
}

ToyNet ToyNet::initialized(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed)
{
    ToyNet net(std::move(layer_sizes), activation, seed);
    Rng rng(seed);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const std::size_t in = net.layer_sizes_[l];
        const std::size_t out = net.layer_sizes_[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        double* W = net.weights_.data() + net.offsets_[l];
        for (std::size_t k = 0; k < (in + 1) * out; ++k) {
            W[k] = u(rng);
        }
    }
    return net;
}

ToyNet ToyNet::zeros(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed)
{
    return ToyNet(std::move(layer_sizes), activation, seed);
}

bool ToyNet::operator==(const ToyNet& other) const
{
    return layer_sizes_ == other.layer_sizes_ && activation_ == other.activation_ && seed_ == other.seed_
        && weights_ == other.weights_;
}

Vector forward(const ToyNet& net, std::span<const double> input)
{
    auto acts = forward_all(net, input);
    return std::move(acts.back());
}

BackwardResult backward(const ToyNet& net, std::span<const double> input, std::span<const double> output_grad)
{
    require(output_grad.size() == net.output_size(), ErrorCode::Dimension,
        "output gradient has " + std::to_string(output_grad.size()) + " entries, expected "
            + std::to_string(net.output_size()));
    const auto acts = forward_all(net, input);
    const auto& sizes = net.layer_sizes();
    const auto& w = net.weights();

    BackwardResult res;
    res.weights.values.assign(w.size(), 0.0);
    Vector delta(output_grad.begin(), output_grad.end()); // d loss / d pre-activation of layer l+1
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const double* W = w.data() + net.layer_offset(l);
        double* gW = res.weights.values.data() + net.layer_offset(l);
        double* gb = gW + in * out;
        const Vector& x = acts[l];
        Vector dx(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            gb[o] += d;
            const double* row = W + o * in;
            double* grow = gW + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                grow[i] += d * x[i];
                dx[i] += d * row[i];
            }
        }
        if (l > 0) {
            for (std::size_t i = 0; i < in; ++i) {
                dx[i] *= activate_grad(net.activation(), x[i]);
            }
        }
        delta = std::move(dx);
    }
    res.input = std::move(delta);
    return res;
}

ToyNet sgd_step(const ToyNet& net, const Gradient& grad, double lr, double momentum, Vector& velocity)
{
    require(lr >= 0.0 && std::isfinite(lr), ErrorCode::InvalidArgument, "learning rate must be non-negative");
    require(momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidArgument, "momentum must be in [0, 1)");
    require(grad.values.size() == net.weights().size(), ErrorCode::Dimension, "gradient length differs from weights");
    require(std::all_of(grad.values.begin(), grad.values.end(), [](double g) { return std::isfinite(g); }),
        ErrorCode::NonFinite, "gradient has non-finite entries");
    if (velocity.size() != grad.values.size()) {
        velocity.assign(grad.values.size(), 0.0);
    }
    Vector w = net.weights();
    for (std::size_t k = 0; k < w.size(); ++k) {
        velocity[k] = momentum * velocity[k] - lr * grad.values[k];
        w[k] += velocity[k];
    }
    return ToyNet(net.layer_sizes(), net.activation(), net.seed(), std::move(w));
}

ToyNet sgd_step(const ToyNet& net, const Gradient& grad, double lr)
{
    Vector velocity;
    return sgd_step(net, grad, lr, 0.0, velocity);
}

ToyNet adam_step(const ToyNet& net, const Gradient& grad, double lr, AdamState& state, double beta1, double beta2,
                 double eps)
{
    require(lr >= 0.0 && std::isfinite(lr), ErrorCode::InvalidArgument, "learning rate must be non-negative");
    require(grad.values.size() == net.weights().size(), ErrorCode::Dimension, "gradient length differs from weights");
    require(std::all_of(grad.values.begin(), grad.values.end(), [](double g) { return std::isfinite(g); }),
        ErrorCode::NonFinite, "gradient has non-finite entries");
    if (state.m.size() != grad.values.size()) {
        state.m.assign(grad.values.size(), 0.0);
        state.v.assign(grad.values.size(), 0.0);
        state.t = 0;
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    Vector w = net.weights();
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double g = grad.values[k];
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g;
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g;
        w[k] -= lr * (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) + eps);
    }
    return ToyNet(net.layer_sizes(), net.activation(), net.seed(), std::move(w));
}

void accumulate(Gradient& into, const Gradient& g, double scale)
{
    if (into.values.empty()) {
        into.values.assign(g.values.size(), 0.0);
    }
    require(into.values.size() == g.values.size(), ErrorCode::Dimension, "gradient length mismatch");
    for (std::size_t k = 0; k < g.values.size(); ++k) {
        into.values[k] += scale * g.values[k];
    }
}

namespace detail {

void write_u32(std::ostream& out, std::uint32_t v)
{
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v)
{
    write_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t read_u32(std::istream& in)
{
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    require(in.gcount() == 4, ErrorCode::Parse, "truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    }
    return v;
}

std::uint64_t read_u64(std::istream& in)
{
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    require(in.gcount() == 8, ErrorCode::Parse, "truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

double read_f64(std::istream& in)
{
    return std::bit_cast<double>(read_u64(in));
}

} // namespace detail

void write_net(std::ostream& out, const ToyNet& net)
{
    out.write(kNetMagic, sizeof(kNetMagic));
    detail::write_u32(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
    for (auto s : net.layer_sizes()) {
        detail::write_u32(out, static_cast<std::uint32_t>(s));
    }
    detail::write_u32(out, net.activation() == Activation::Tanh ? 0u : 1u);
    detail::write_u64(out, net.seed());
    detail::write_u64(out, net.weights().size());
    for (double v : net.weights()) {
        detail::write_f64(out, v);
    }
}

ToyNet read_net(std::istream& in)
{
    char magic[8];
    in.read(magic, 8);
    require(in.gcount() == 8 && std::equal(magic, magic + 8, kNetMagic), ErrorCode::Parse, "not a network checkpoint");
    const std::uint32_t n_layers = detail::read_u32(in);
    require(n_layers >= 2 && n_layers < 64, ErrorCode::Parse, "implausible layer count in checkpoint");
    std::vector<std::size_t> sizes(n_layers);
    for (auto& s : sizes) {
        s = detail::read_u32(in);
    }
    const std::uint32_t act = detail::read_u32(in);
    require(act <= 1, ErrorCode::Parse, "unknown activation code in checkpoint");
    const std::uint64_t seed = detail::read_u64(in);
    const std::uint64_t n = detail::read_u64(in);
    require(n == ToyNet::parameter_count(sizes), ErrorCode::Parse, "checkpoint weight count does not match layer sizes");
    Vector w(n);
    for (auto& v : w) {
        v = detail::read_f64(in);
    }
    return ToyNet(std::move(sizes), act == 0 ? Activation::Tanh : Activation::ReLU, seed, std::move(w));
}

void save_net(const std::filesystem::path& path, const ToyNet& net)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_net(out, net);
}

ToyNet load_net(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    return read_net(in);
}

} // namespace rewarddance
