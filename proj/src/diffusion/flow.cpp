#include "flow.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/random.hpp"

namespace rewarddance {

namespace {

constexpr char kFlowMagic[8] = { 'R', 'D', 'F', 'L', 'W', '0', '0', '1' };

void check_state(std::span<const double> x, std::size_t dim)
{
    require(x.size() == dim, ErrorCode::Dimension,
        "state has " + std::to_string(x.size()) + " coordinates, expected " + std::to_string(dim));
}

} // namespace

FlowModel::FlowModel(ToyNet net, std::size_t dim, std::size_t num_classes)
    : net_(std::move(net))
    , dim_(dim)
    , num_classes_(num_classes)
{
    require(dim_ >= 1 && num_classes_ >= 1, ErrorCode::InvalidArgument, "flow model needs dim >= 1 and classes >= 1");
    require(net_.input_size() == dim_ + 1 + num_classes_ && net_.output_size() == dim_, ErrorCode::Dimension,
        "velocity net must map dim + 1 + classes inputs to dim outputs");
}

FlowModel FlowModel::create(std::size_t dim, std::size_t num_classes, const std::vector<std::size_t>& hidden,
                            Activation activation, std::uint64_t seed)
{
    std::vector<std::size_t> sizes { dim + 1 + num_classes };
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(dim);
    return FlowModel(ToyNet::initialized(sizes, activation, seed), dim, num_classes);
}

Vector FlowModel::encode(std::span<const double> x, double t, int condition) const
{
    check_state(x, dim_);
    require(condition >= 0 && static_cast<std::size_t>(condition) < num_classes_, ErrorCode::InvalidArgument,
        "condition " + std::to_string(condition) + " outside [0, " + std::to_string(num_classes_) + ")");
    Vector in(dim_ + 1 + num_classes_, 0.0);
    std::copy(x.begin(), x.end(), in.begin());
    in[dim_] = t;
    in[dim_ + 1 + static_cast<std::size_t>(condition)] = 1.0;
    return in;
}

Vector velocity(const FlowModel& model, std::span<const double> x, double t, int condition)
{
    return forward(model.net(), model.encode(x, t, condition));
}

Vector initial_noise(std::size_t dim, std::uint64_t seed, std::uint64_t stream)
{
    Rng rng(derive_seed(seed, stream));
    return standard_normal(rng, dim);
}

SampleTrace integrate(const FlowModel& model, Vector x, double t0, double t1, int condition, std::size_t steps)
{
    require(steps >= 1, ErrorCode::InvalidArgument, "sampling needs at least one step");
    require(0.0 <= t0 && t0 <= t1 && t1 <= 1.0, ErrorCode::InvalidArgument, "integration times must satisfy 0 <= t0 <= t1 <= 1");
    check_state(x, model.dim());
    SampleTrace trace;
    trace.condition = condition;
    trace.states.reserve(steps + 1);
    trace.times.reserve(steps + 1);
    trace.states.push_back(x);
    trace.times.push_back(t0);
    const double dt = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + dt * static_cast<double>(k);
        const Vector v = velocity(model, x, t, condition);
        for (std::size_t d = 0; d < x.size(); ++d) {
            x[d] += dt * v[d];
            require(std::isfinite(x[d]), ErrorCode::NonFinite, "sampler state became non-finite at step " + std::to_string(k));
        }
        trace.states.push_back(x);
        trace.times.push_back(k + 1 == steps ? t1 : t0 + dt * static_cast<double>(k + 1));
    }
    return trace;
}

SampleTrace sample(const FlowModel& model, int condition, std::size_t steps, std::uint64_t seed)
{
    auto trace = integrate(model, initial_noise(model.dim(), seed), 0.0, 1.0, condition, steps);
    trace.seed = seed;
    return trace;
}

Vector one_step_predict_x0(const FlowModel& model, std::span<const double> x, double t, int condition)
{
    require(t >= 0.0 && t < 1.0, ErrorCode::InvalidArgument, "one-step prediction needs 0 <= t < 1");
    const Vector v = velocity(model, x, t, condition);
    Vector out(x.begin(), x.end());
    for (std::size_t d = 0; d < out.size(); ++d) {
        out[d] += (1.0 - t) * v[d];
    }
    return out;
}

Gradient one_step_weight_grad(const FlowModel& model, std::span<const double> x, double t, int condition,
                              std::span<const double> upstream)
{
    require(t >= 0.0 && t < 1.0, ErrorCode::InvalidArgument, "one-step prediction needs 0 <= t < 1");
    require(upstream.size() == model.dim(), ErrorCode::Dimension, "upstream gradient has the wrong length");
    Vector g(upstream.begin(), upstream.end());
    for (auto& v : g) {
        v *= 1.0 - t;
    }
    return backward(model.net(), model.encode(x, t, condition), g).weights;
}

std::vector<FlowPoint> mixture_dataset(const Mixture& mixture, std::size_t n, std::uint64_t seed)
{
    require(mixture.num_classes() >= 1, ErrorCode::InvalidArgument, "mixture has no classes");
    Rng rng(derive_seed(seed, 0xf10e));
    std::vector<FlowPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        FlowPoint p;
        p.condition = static_cast<int>(i % mixture.num_classes());
        p.x = standard_normal(rng, mixture.dim());
        const auto& mu = mixture.means[static_cast<std::size_t>(p.condition)];
        for (std::size_t d = 0; d < p.x.size(); ++d) {
            p.x[d] = mu[d] + mixture.stddev * p.x[d];
        }
        out.push_back(std::move(p));
    }
    return out;
}

FlowTrainConfig FlowTrainConfig::from_config(const Config& c)
{
    FlowTrainConfig f;
    const auto hidden = c.get_int_list("flow.hidden", {});
    if (!hidden.empty()) {
        f.hidden.clear();
        for (auto h : hidden) {
            if (h <= 0) {
                c.invalid("flow.hidden", "layer widths must be positive");
            }
            f.hidden.push_back(static_cast<std::size_t>(h));
        }
    }
    try {
        f.activation = activation_from_string(c.get_string("flow.activation", to_string(f.activation)));
    } catch (const Error& e) {
        c.invalid("flow.activation", e.what());
    }
    f.lr = c.get_double("flow.lr", f.lr);
    f.iterations = c.get_uint("flow.iterations", f.iterations);
    f.batch_size = c.get_uint("flow.batch_size", f.batch_size);
    f.seed = c.get_uint("flow.seed", f.seed);
    if (!(f.lr >= 0.0)) {
        c.invalid("flow.lr", "must be non-negative");
    }
    if (f.batch_size == 0) {
        c.invalid("flow.batch_size", "must be at least 1");
    }
    return f;
}

void FlowTrainConfig::validate() const
{
    require(lr >= 0.0 && std::isfinite(lr), ErrorCode::Config, "flow lr must be non-negative");
    require(batch_size >= 1, ErrorCode::Config, "flow batch size must be at least 1");
}

FlowLoss flow_matching_loss(const FlowModel& model, std::span<const double> x1, std::span<const double> x0, double t,
                            int condition)
{
    check_state(x1, model.dim());
    check_state(x0, model.dim());
    Vector xt(model.dim());
    for (std::size_t d = 0; d < xt.size(); ++d) {
        xt[d] = (1.0 - t) * x0[d] + t * x1[d];
    }
    const Vector in = model.encode(xt, t, condition);
    const Vector v = forward(model.net(), in);
    FlowLoss out;
    Vector g(v.size());
    for (std::size_t d = 0; d < v.size(); ++d) {
        const double r = v[d] - (x1[d] - x0[d]);
        out.loss += r * r;
        g[d] = 2.0 * r;
    }
    out.grad = backward(model.net(), in, g).weights;
    return out;
}

FlowModel train_flow(const FlowModel& model, const std::vector<FlowPoint>& data, const FlowTrainConfig& cfg,
                     FlowTrainStats* stats)
{
    cfg.validate();
    require(!data.empty(), ErrorCode::Empty, "flow training set is empty");
    for (const auto& p : data) {
        check_state(p.x, model.dim());
    }
    Rng rng(derive_seed(cfg.seed, 0xf1a7));
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FlowModel current = model;
    AdamState adam;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Gradient batch { Vector(current.net().weights().size(), 0.0) };
        double loss = 0.0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const auto& p = data[pick(rng)];
            const Vector x0 = standard_normal(rng, current.dim());
            const double t = unit(rng);
            const auto term = flow_matching_loss(current, p.x, x0, t, p.condition);
            loss += term.loss;
            accumulate(batch, term.grad, 1.0 / static_cast<double>(cfg.batch_size));
        }
        loss /= static_cast<double>(cfg.batch_size);
        require(std::isfinite(loss), ErrorCode::Diverged,
            "flow training diverged at iteration " + std::to_string(it));
        if (stats) {
            stats->batch_losses.push_back(loss);
        }
        current = current.with_net(adam_step(current.net(), batch, cfg.lr, adam));
    }
    return current;
}

void save_flow(const std::filesystem::path& path, const FlowModel& model)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(kFlowMagic, sizeof(kFlowMagic));
    detail::write_u64(out, model.dim());
    detail::write_u64(out, model.num_classes());
    write_net(out, model.net());
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

FlowModel load_flow(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    require(in.gcount() == 8 && std::equal(magic, magic + 8, kFlowMagic), ErrorCode::Parse,
        path.string() + " is not a flow checkpoint");
    const auto dim = detail::read_u64(in);
    const auto classes = detail::read_u64(in);
    return FlowModel(read_net(in), dim, classes);
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<GeneratedSample>& samples)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    const std::size_t dim = samples.empty() ? 2 : samples.front().x.size();
    if (dim == 2) {
        out << "x,y";
    } else {
        for (std::size_t d = 0; d < dim; ++d) {
            out << (d ? "," : "") << 'x' << d;
        }
    }
    out << ",condition,seed\n";
    out.precision(17);
    for (const auto& s : samples) {
        require(s.x.size() == dim, ErrorCode::Dimension, "samples have mixed dimensions");
        for (std::size_t d = 0; d < dim; ++d) {
            out << (d ? "," : "") << s.x[d];
        }
        out << ',' << s.condition << ',' << s.seed << '\n';
    }
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

} // namespace rewarddance

namespace rewarddance {

double mean_sample_quality(const FlowModel& model, const QualityModel& quality, std::size_t n, std::size_t steps,
                           std::uint64_t seed)
{
    require(n >= 1, ErrorCode::InvalidArgument, "quality estimate needs at least one sample");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % model.num_classes());
        total += quality.quality(sample(model, c, steps, derive_seed(seed, i)).final_state(), c);
    }
    return total / static_cast<double>(n);
}

} // namespace rewarddance
