#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/mixture.hpp"
#include "refl/refl.hpp"
#include "scorer/oracle_backend.hpp"
#include "scorer/reward_model.hpp"
#include "scorer/templates.hpp"
#include "support.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

namespace {

const Mixture kMix = Mixture::standard(2, 2, 2.0, 0.5);
const QualityModel kQuality { kMix, 0.5 };

const FlowModel& trained_flow()
{
    static const FlowModel model = [] {
        FlowTrainConfig cfg;
        cfg.iterations = 600;
        return train_flow(FlowModel::create(2, 2, cfg.hidden, cfg.activation, 0), mixture_dataset(kMix, 2000, 0), cfg);
    }();
    return model;
}

ReflConfig quick_config()
{
    ReflConfig cfg;
    cfg.iterations = 40;
    cfg.log_window = 10;
    cfg.batch_size = 4;
    cfg.bon_n = 8;
    return cfg;
}

RewardLog log_of(const std::vector<double>& rewards, std::size_t window)
{
    RewardLog log;
    log.window = window;
    for (double r : rewards) {
        log.append(r);
    }
    return log;
}

// Ten blocks of ten; values alternate mean +/- spread so each block's std is exactly `spread`.
std::vector<double> blocks(const std::vector<double>& means, const std::vector<double>& spreads)
{
    std::vector<double> out;
    for (std::size_t k = 0; k < means.size(); ++k) {
        for (int i = 0; i < 10; ++i) {
            out.push_back(means[k] + (i % 2 ? spreads[k] : -spreads[k]));
        }
    }
    return out;
}

} // namespace

TEST_CASE("hard-oracle references are the best of the drawn pool")
{
    const auto backend = std::make_shared<OracleBackend>(OracleMode::Hard, kQuality);
    auto cfg = quick_config();
    cfg.bon_top_k = 2;
    const auto prompts = condition_prompts(2);
    const auto refs = prepare_references(backend, trained_flow(), prompts, cfg);
    for (const auto& prompt : prompts) {
        std::vector<std::pair<double, Vector>> pool;
        for (std::size_t j = 0; j < cfg.bon_n; ++j) {
            const auto seed = derive_seed(cfg.seed, 0xb0b0, static_cast<std::uint64_t>(prompt.condition) * 1000 + j);
            const auto x = sample(trained_flow(), prompt.condition, cfg.sample_steps, seed).final_state();
            pool.emplace_back(kQuality.quality(x, prompt.condition), x);
        }
        std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        const auto& chosen = refs.at(prompt.condition);
        REQUIRE(chosen.size() == 2);
        CHECK(chosen[0].features == pool[0].second);
        CHECK(chosen[1].features == pool[1].second);
    }
    CHECK(prepare_references(backend, trained_flow(), prompts, cfg).at(1) == refs.at(1));
}

TEST_CASE("a pool of two with k = 2 keeps both")
{
    auto cfg = quick_config();
    cfg.bon_n = 2;
    cfg.bon_top_k = 2;
    const auto refs = prepare_references(std::make_shared<OracleBackend>(OracleMode::Soft, kQuality), trained_flow(),
        condition_prompts(2), cfg);
    CHECK(refs.at(0).size() == 2);
    CHECK(kQuality.quality(refs.at(0)[0].features, 0) >= kQuality.quality(refs.at(0)[1].features, 0));
}

TEST_CASE("ReFL sample loss gradient matches central differences")
{
    // Wide bandwidth keeps the oracle gradients away from underflow.
    const auto soft = std::make_shared<OracleBackend>(OracleMode::Soft, QualityModel { kQuality.mixture, 2.0 });
    const ToyBackend toy(RewardModel::create({ Paradigm::PairwiseGenerative, 2, 2, 4 }, { 8 }, Activation::Tanh, 2));
    const auto prompts = condition_prompts(2);
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const auto model = FlowModel::create(2, 2, { 6, 6 }, Activation::Tanh, static_cast<std::uint64_t>(trial));
        const auto anchor = FlowModel::create(2, 2, { 6, 6 }, Activation::Tanh, 1000 + static_cast<std::uint64_t>(trial));
        ReflConfig cfg;
        cfg.source = trial % 3 == 0 ? RewardSource::Pointwise : RewardSource::Pairwise;
        cfg.log_space = trial % 2 == 1;
        cfg.drift_penalty = trial % 4 == 0 ? 0.3 : 0.0;
        cfg.reward_weight = 1.7;
        const ScoringBackend& backend = trial % 3 == 2 ? static_cast<const ScoringBackend&>(toy) : *soft;
        const Candidate ref = make_candidate("ref", random_vector(rng, 2, 2.0));
        const Vector xt = random_vector(rng, 2);
        const double t = uniform(rng, 0.5, 0.95);
        const auto& prompt = prompts[static_cast<std::size_t>(trial % 2)];
        const auto got = refl_sample_loss(model, backend, prompt, &ref, xt, t, cfg, &anchor);

        // Independent loss: predict, score through the public contract, apply the formula.
        const auto loss = [&](const Vector& w) {
            const auto m = model.with_net(ToyNet(model.net().layer_sizes(), model.net().activation(), 0, w));
            const auto pred = one_step_predict_x0(m, xt, t, prompt.condition);
            const auto cand = make_candidate("x", pred);
            const double r = cfg.source == RewardSource::Pairwise
                ? backend.score_pairwise(make_pairwise_request(prompt, cand, ref, default_instruction(true))).value
                : backend.score_pointwise(make_pointwise_request(prompt, cand, default_instruction(false))).value;
            const auto frozen = one_step_predict_x0(anchor, xt, t, prompt.condition);
            const double drift = std::pow(pred[0] - frozen[0], 2) + std::pow(pred[1] - frozen[1], 2);
            return cfg.reward_weight * (cfg.log_space ? -std::log(r) : 1.0 - r) + cfg.drift_penalty * drift;
        };
        CHECK(got.loss == doctest::Approx(loss(model.net().weights())).epsilon(1e-12));
        CHECK(relative_error(got.grad.values, numeric_gradient(loss, model.net().weights())) < 1e-4);
    }
}

TEST_CASE("reward returned by a step equals an independent score of its prediction")
{
    const auto soft = std::make_shared<OracleBackend>(OracleMode::Soft, kQuality);
    auto cfg = quick_config();
    cfg.source = RewardSource::Pointwise;
    Rng rng(3);
    ReflState state;
    const Prompt prompt = condition_prompts(2)[1];
    const auto step = refl_step(trained_flow(), *soft, {}, prompt, cfg, rng, state);
    REQUIRE(step.predictions.size() == cfg.batch_size);
    double mean = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        const double r = soft->score_pointwise(make_pointwise_request(prompt, make_candidate("x", step.predictions[b]),
                                 default_instruction(false)))
                             .value;
        CHECK(step.rewards[b] == r);
        mean += r / static_cast<double>(cfg.batch_size);
    }
    CHECK(step.reward == doctest::Approx(mean).epsilon(1e-15));
    for (double t : step.times) {
        CHECK(t >= cfg.t_min);
        CHECK(t <= cfg.t_max);
    }
}

TEST_CASE("degenerate runs")
{
    const auto soft = std::make_shared<OracleBackend>(OracleMode::Soft, kQuality);
    SUBCASE("zero reward weight leaves the model unchanged")
    {
        auto cfg = quick_config();
        cfg.reward_weight = 0.0;
        CHECK(run_refl(trained_flow(), soft, cfg).model.net() == trained_flow().net());
    }
    SUBCASE("zero iterations")
    {
        auto cfg = quick_config();
        cfg.iterations = 0;
        const auto r = run_refl(trained_flow(), soft, cfg);
        CHECK(r.log.size() == 0);
        CHECK(r.model.net() == trained_flow().net());
    }
    SUBCASE("gradient mode needs a differentiable backend")
    {
        const auto hard = std::make_shared<OracleBackend>(OracleMode::Hard, kQuality);
        CHECK_THROWS_AS(run_refl(trained_flow(), hard, quick_config()), Error);
        auto cfg = quick_config();
        cfg.mode = ReflMode::LogOnly;
        const auto r = run_refl(trained_flow(), hard, cfg);
        CHECK(r.log.size() == cfg.iterations);
        CHECK(r.model.net() == trained_flow().net());
    }
}

TEST_CASE("soft-oracle ReFL raises the smoothed reward and is reproducible")
{
    const auto soft = std::make_shared<OracleBackend>(OracleMode::Soft, kQuality);
    auto cfg = quick_config();
    cfg.iterations = 200;
    cfg.log_window = 20;
    cfg.source = RewardSource::Pointwise;
    const auto a = run_refl(trained_flow(), soft, cfg);
    CHECK_FALSE(a.aborted.has_value());
    CHECK(a.log.window_mean.back() > a.log.window_mean[cfg.log_window - 1]);
    const auto b = run_refl(trained_flow(), soft, cfg);
    CHECK(a.log.rewards == b.log.rewards);
    CHECK(a.model.net() == b.model.net());
}

TEST_CASE("reward log statistics and CSV round trip")
{
    const auto log = log_of({ 1.0, 3.0, 5.0, 7.0 }, 2);
    CHECK(log.window_mean == std::vector<double> { 1.0, 2.0, 4.0, 6.0 });
    CHECK(log.window_std == std::vector<double> { 0.0, 1.0, 1.0, 1.0 });
    TempDir dir("rlog");
    write_reward_log_csv(dir / "log.csv", log);
    const auto back = read_reward_log_csv(dir / "log.csv", 2);
    CHECK(back.rewards == log.rewards);
    CHECK(back.window_mean == log.window_mean);
}

TEST_CASE("variance-collapse detector")
{
    SUBCASE("rising mean with constant std raises no flags")
    {
        const auto log = log_of(blocks({ 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0 }, std::vector<double>(10, 0.1)), 10);
        CHECK(detect_variance_collapse(log, 0.5).empty());
    }
    SUBCASE("plateau at the maximum with vanishing std is flagged")
    {
        // Block means 0.1..0.5 then five blocks at 1.0; the 90th percentile of
        // the ten means is 1.0 and the last five stds are 0 < 0.5 * 0.1.
        const auto log = log_of(blocks({ 0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0 },
                                    { 0.1, 0.1, 0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0 }),
            10);
        const auto flags = detect_variance_collapse(log, 0.5);
        REQUIRE(flags.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(flags[i].window_index == 5 + i);
            CHECK(flags[i].begin == 50 + 10 * i);
            CHECK(flags[i].mean == 1.0);
            CHECK(flags[i].std == 0.0);
        }
        CHECK(detect_variance_collapse(log, 0.0).empty());
    }
    SUBCASE("too short a log is rejected")
    {
        CHECK_THROWS_AS(detect_variance_collapse(log_of({ 1.0, 2.0 }, 10), 0.5), Error);
    }
}
