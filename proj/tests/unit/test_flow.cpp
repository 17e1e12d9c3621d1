#include <doctest.h>

#include <cmath>
#include <fstream>

#include "core/error.hpp"
#include "core/mixture.hpp"
#include "diffusion/flow.hpp"
#include "support.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

namespace {

// Velocity net that ignores its input and returns u.
FlowModel constant_field(const Vector& u, std::size_t num_classes = 2)
{
    const std::size_t dim = u.size();
    auto net = ToyNet::zeros({ dim + 1 + num_classes, 4, dim }, Activation::Tanh);
    const std::size_t bias = net.layer_offset(1) + 4 * dim;
    for (std::size_t d = 0; d < dim; ++d) {
        net.mutable_weights()[bias + d] = u[d];
    }
    return FlowModel(net, dim, num_classes);
}

double distance(const Vector& a, const Vector& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

} // namespace

TEST_CASE("zero field leaves the noise in place")
{
    const auto model = constant_field({ 0.0, 0.0 });
    const auto trace = sample(model, 1, 25, 7);
    CHECK(trace.final_state() == initial_noise(2, 7));
    CHECK(trace.states.size() == 26);
    CHECK(trace.times.front() == 0.0);
    CHECK(trace.times.back() == 1.0);
    for (double t : { 0.0, 0.3, 0.99 }) {
        CHECK(one_step_predict_x0(model, Vector { 0.4, -2.0 }, t, 0) == Vector { 0.4, -2.0 });
    }
}

TEST_CASE("constant field moves the noise by exactly u")
{
    const Vector u { 1.5, -0.25 };
    const auto model = constant_field(u);
    for (std::size_t steps : { 1, 7, 100 }) {
        const auto trace = sample(model, 0, steps, 3);
        const auto x0 = initial_noise(2, 3);
        for (std::size_t d = 0; d < 2; ++d) {
            CHECK(trace.final_state()[d] == doctest::Approx(x0[d] + u[d]).epsilon(1e-12));
        }
    }
}

TEST_CASE("one-step prediction under a constant field equals full integration")
{
    const Vector u { -0.8, 2.0 };
    const auto model = constant_field(u);
    const Vector x { 0.3, 0.1 };
    for (double t : { 0.0, 0.25, 0.6, 0.9 }) {
        const auto pred = one_step_predict_x0(model, x, t, 1);
        const auto full = integrate(model, x, t, 1.0, 1, 400).final_state();
        for (std::size_t d = 0; d < 2; ++d) {
            CHECK(pred[d] == doctest::Approx(full[d]).epsilon(1e-12));
            CHECK(pred[d] == doctest::Approx(x[d] + (1.0 - t) * u[d]).epsilon(1e-15));
        }
    }
    CHECK_THROWS_AS(one_step_predict_x0(model, x, 1.0, 1), Error);
}

TEST_CASE("flow-matching loss and one-step weight gradient match central differences")
{
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto model = FlowModel::create(2, 2, { 8, 8 }, Activation::Tanh, static_cast<std::uint64_t>(trial));
        const Vector x1 = random_vector(rng, 2, 2.0), x0 = random_vector(rng, 2);
        const double t = uniform(rng, 0.0, 1.0);
        const int c = trial % 2;
        const auto at = [&](const Vector& w) { return model.with_net(ToyNet(model.net().layer_sizes(), model.net().activation(), 0, w)); };

        const auto analytic = flow_matching_loss(model, x1, x0, t, c).grad.values;
        const auto numeric = numeric_gradient([&](const Vector& w) { return flow_matching_loss(at(w), x1, x0, t, c).loss; },
            model.net().weights());
        CHECK(relative_error(analytic, numeric) < 1e-4);

        const Vector upstream = random_vector(rng, 2);
        const auto g = one_step_weight_grad(model, x0, t, c, upstream).values;
        const auto ng = numeric_gradient(
            [&](const Vector& w) {
                const auto p = one_step_predict_x0(at(w), x0, t, c);
                return p[0] * upstream[0] + p[1] * upstream[1];
            },
            model.net().weights());
        CHECK(relative_error(g, ng) < 1e-4);
    }
}

TEST_CASE("zero learning rate leaves the model unchanged")
{
    const auto model = FlowModel::create(2, 2, { 8 }, Activation::Tanh, 1);
    FlowTrainConfig cfg;
    cfg.lr = 0.0;
    cfg.iterations = 5;
    cfg.hidden = { 8 };
    const auto data = mixture_dataset(Mixture::standard(2, 2), 32, 0);
    CHECK(train_flow(model, data, cfg).net() == model.net());
}

TEST_CASE("training on a single point pulls samples toward it")
{
    const Vector p { 1.0, -1.0 };
    const std::vector<FlowPoint> data(64, FlowPoint { p, 0 });
    FlowTrainConfig cfg;
    cfg.hidden = { 32 };
    cfg.iterations = 100;
    cfg.batch_size = 32;
    auto model = FlowModel::create(2, 1, cfg.hidden, cfg.activation, 0);
    std::vector<double> mean_distance;
    for (int stage = 0; stage < 5; ++stage) {
        double total = 0.0;
        for (std::uint64_t s = 0; s < 100; ++s) {
            total += distance(sample(model, 0, 20, s).final_state(), p);
        }
        mean_distance.push_back(total / 100.0);
        cfg.seed = static_cast<std::uint64_t>(stage);
        model = train_flow(model, data, cfg);
    }
    for (std::size_t i = 1; i < mean_distance.size(); ++i) {
        CHECK(mean_distance[i] < mean_distance[i - 1]);
    }
    CHECK(mean_distance.back() < 0.25 * mean_distance.front());
}

TEST_CASE("trained two-mode flow lands near the conditioned mode")
{
    const auto mix = Mixture::standard(2, 2, 2.0, 0.5);
    const auto data = mixture_dataset(mix, 2000, 0);
    FlowTrainConfig cfg;
    FlowTrainStats stats;
    const auto model = train_flow(FlowModel::create(2, 2, cfg.hidden, cfg.activation, 0), data, cfg, &stats);
    CHECK(stats.batch_losses.size() == cfg.iterations);
    const QualityModel qm { mix, 0.5 };
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 500; ++i) {
        const int c = static_cast<int>(i % 2);
        hits += qm.nearest_class(sample(model, c, 20, derive_seed(99, i)).final_state()) == c;
    }
    CHECK(hits >= 450);
}

TEST_CASE("flow checkpoints and sample export")
{
    TempDir dir("flow");
    const auto model = FlowModel::create(2, 3, { 6 }, Activation::ReLU, 4);
    save_flow(dir / "f.bin", model);
    const auto back = load_flow(dir / "f.bin");
    CHECK(back.net() == model.net());
    CHECK(back.num_classes() == 3);
    std::ofstream(dir / "bad.bin") << "RDFLW00";
    CHECK_THROWS_AS(load_flow(dir / "bad.bin"), Error);

    write_samples_csv(dir / "s.csv", { GeneratedSample { { 0.5, -1.0 }, 1, 9 } });
    std::ifstream in(dir / "s.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "x,y,condition,seed");
    CHECK(row.rfind("0.5,-1,1,9", 0) == 0);
}

TEST_CASE("sampling preconditions")
{
    const auto model = constant_field({ 0.0, 0.0 });
    CHECK_THROWS_AS(sample(model, 0, 0, 1), Error);
    CHECK_THROWS_AS(sample(model, 2, 10, 1), Error);
    CHECK_THROWS_AS(integrate(model, Vector { 0.0 }, 0.0, 1.0, 0, 5), Error);
}
