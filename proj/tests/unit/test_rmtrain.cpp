#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "rmtrain/rm_train.hpp"
#include "scorer/oracle_backend.hpp"
#include "support.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

namespace {

// Chosen has the larger first coordinate; every pair is labelled by that rule.
std::vector<PreferencePair> separable(std::size_t n, std::uint64_t seed, Split split = Split::Train)
{
    Rng rng(seed);
    std::vector<PreferencePair> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vector a = random_vector(rng, 2), b = random_vector(rng, 2);
        if (a[0] < b[0]) {
            std::swap(a, b);
        }
        PreferencePair p;
        p.prompt = Prompt { "s" + std::to_string(seed) + "_" + std::to_string(i), "t", static_cast<int>(i % 2) };
        p.chosen = make_candidate(p.prompt.id + "_a", a, 0.5 + 0.1 * std::tanh(a[0]));
        p.rejected = make_candidate(p.prompt.id + "_b", b, 0.5 + 0.1 * std::tanh(b[0]));
        p.split = split;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<PreferencePair> with_held_out(std::size_t train, std::size_t held_out)
{
    auto pairs = separable(train, 1);
    for (auto& p : separable(held_out, 2, Split::ID)) {
        pairs.push_back(std::move(p));
    }
    return pairs;
}

TrainConfig small_config(Paradigm paradigm)
{
    TrainConfig cfg;
    cfg.paradigm = paradigm;
    cfg.hidden = { 16 };
    cfg.epochs = 50;
    cfg.batch_size = 16;
    cfg.lr = 0.01;
    return cfg;
}

double net_loss(const std::function<LossAndGradient(const RewardModel&)>& loss, const RewardModel& m, const Vector& w)
{
    return loss(m.with_net(ToyNet(m.net().layer_sizes(), m.net().activation(), m.net().seed(), w))).loss;
}

} // namespace

TEST_CASE("Bradley-Terry loss closed forms")
{
    CHECK(std::abs(bt_loss(0.3, 0.3) - std::log(2.0)) <= 1e-12);
    CHECK(bt_loss(1.0, 0.0) == doctest::Approx(0.313262).epsilon(1e-6));
    double prev = bt_loss(0.0, 0.0);
    for (double m = 1.0; m <= 64.0; m *= 2.0) {
        const double l = bt_loss(m, 0.0);
        CHECK(l < prev);
        prev = l;
    }
    CHECK(bt_loss(800.0, 0.0) < 1e-300);
    CHECK(std::isfinite(bt_loss(0.0, 800.0)));
    CHECK(bt_loss_grad(0.0, 0.0) == -0.5);
}

TEST_CASE("pair losses match central differences")
{
    Rng rng(9);
    const auto pairs = separable(100, 3);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& pair = pairs[i];
        const auto seed = static_cast<std::uint64_t>(i);
        const auto reg = RewardModel::create({ Paradigm::PointwiseRegressive, 2, 2, 4 }, { 5 }, Activation::Tanh, seed);
        const auto gen = RewardModel::create({ Paradigm::PointwiseGenerative, 2, 2, 4 }, { 5 }, Activation::Tanh, seed);
        const auto pw = RewardModel::create({ Paradigm::PairwiseGenerative, 2, 2, 4 }, { 5 }, Activation::Tanh, seed);
        const auto norm = i % 2 ? Normalization::FullVocab : Normalization::YesNoPair;

        const auto f_reg = [&](const RewardModel& m) { return regressive_pair_loss(m, pair); };
        const auto f_gen = [&](const RewardModel& m) { return pointwise_generative_pair_loss(m, pair, 0.1, norm); };
        const auto f_pw = [&](const RewardModel& m) {
            return pairwise_generative_loss(m, pair.prompt, pair.chosen, pair.rejected, i % 3 ? kYes : kNo);
        };
        for (const auto& [f, m] : { std::pair { std::function(f_reg), reg }, std::pair { std::function(f_gen), gen },
                 std::pair { std::function(f_pw), pw } }) {
            const auto analytic = f(m).grad.values;
            const auto numeric = numeric_gradient([&](const Vector& w) { return net_loss(f, m, w); }, m.net().weights());
            CHECK(relative_error(analytic, numeric) < 1e-4);
        }
    }
}

TEST_CASE("pointwise generative loss with lambda 0 is BT on the yes-probabilities")
{
    const auto m = RewardModel::create({ Paradigm::PointwiseGenerative, 2, 2, 4 }, { 5 }, Activation::Tanh, 4);
    const ToyBackend backend(m);
    for (const auto& p : separable(10, 5)) {
        const auto ins = Instruction { "quality_pointwise", "", CotOrder::DecisionFirst };
        const double pw = backend.score_pointwise(make_pointwise_request(p.prompt, p.chosen, ins)).value;
        const double pl = backend.score_pointwise(make_pointwise_request(p.prompt, p.rejected, ins)).value;
        CHECK(pointwise_generative_pair_loss(m, p, 0.0, Normalization::YesNoPair).loss
            == doctest::Approx(bt_loss(pw, pl)).epsilon(1e-14));
    }
}

TEST_CASE("cross-entropy of a certain yes is zero")
{
    RewardModelShape shape { Paradigm::PairwiseGenerative, 2, 2, 4 };
    auto net = ToyNet::zeros({ shape.input_size(), 2, kVocabSize }, Activation::Tanh);
    const std::size_t bias = net.layer_offset(1) + 2 * kVocabSize;
    net.mutable_weights()[bias + kYes] = 800.0;
    const RewardModel m(shape, net);
    const auto p = separable(1, 6)[0];
    CHECK(pairwise_generative_loss(m, p.prompt, p.chosen, p.rejected, kYes).loss == 0.0);
}

TEST_CASE("training contracts")
{
    const auto pairs = separable(64, 7);
    SUBCASE("lr 0 leaves the weights unchanged")
    {
        for (const auto paradigm : { Paradigm::PointwiseRegressive, Paradigm::PointwiseGenerative, Paradigm::PairwiseGenerative }) {
            auto cfg = small_config(paradigm);
            cfg.lr = 0.0;
            cfg.epochs = 2;
            const auto init = initial_reward_model(cfg, 2, 2);
            CHECK(train_reward_model(cfg, pairs, 2, 2).model == init);
        }
    }
    SUBCASE("fixed seed gives bit-identical weights")
    {
        auto cfg = small_config(Paradigm::PairwiseGenerative);
        cfg.epochs = 3;
        CHECK(train_reward_model(cfg, pairs, 2, 2).model == train_reward_model(cfg, pairs, 2, 2).model);
    }
    SUBCASE("swap augmentation doubles the examples per epoch")
    {
        auto cfg = small_config(Paradigm::PairwiseGenerative);
        cfg.epochs = 2;
        cfg.swap_augment = false;
        const auto plain = train_reward_model(cfg, pairs, 2, 2).stats.examples_seen;
        cfg.swap_augment = true;
        CHECK(plain == 2 * pairs.size());
        CHECK(train_reward_model(cfg, pairs, 2, 2).stats.examples_seen == 2 * plain);
    }
    SUBCASE("the paradigm must match the model")
    {
        const auto cfg = small_config(Paradigm::PairwiseGenerative);
        const auto m = RewardModel::create({ Paradigm::PointwiseRegressive, 2, 2, 4 }, { 4 }, Activation::Tanh, 0);
        CHECK_THROWS_AS(train_pairwise_generative(cfg, pairs, m), Error);
    }
}

TEST_CASE("regressive model separates a separable set")
{
    const auto pairs = separable(200, 8);
    const auto trained = train_reward_model(small_config(Paradigm::PointwiseRegressive), pairs, 2, 2);
    CHECK(eval_accuracy(ToyBackend(trained.model), pairs, Split::Train).accuracy == 1.0);
}

TEST_CASE("generative models generalize on a separable split")
{
    const auto pairs = with_held_out(400, 200);
    const auto gen = train_reward_model(small_config(Paradigm::PointwiseGenerative), pairs, 2, 2);
    CHECK(eval_accuracy(ToyBackend(gen.model), pairs, Split::ID).accuracy > 0.9);

    const auto pw = train_reward_model(small_config(Paradigm::PairwiseGenerative), pairs, 2, 2);
    const ToyBackend backend(pw.model);
    std::size_t above = 0, total = 0;
    for (const auto& p : filter_split(pairs, Split::ID)) {
        above += backend.score_pairwise(make_pairwise_request(p.prompt, p.chosen, p.rejected, default_instruction(true))).value > 0.5;
        ++total;
    }
    CHECK(static_cast<double>(above) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("accuracy against the oracle")
{
    auto pairs = separable(300, 10, Split::ID);
    const OracleBackend hard(OracleMode::Hard);
    CHECK(eval_accuracy(hard, pairs, Split::ID).accuracy == 1.0);
    for (auto& p : pairs) {
        std::swap(p.chosen, p.rejected);
    }
    CHECK(eval_accuracy(hard, pairs, Split::ID).accuracy == 0.0);
    CHECK_THROWS_AS(eval_accuracy(hard, pairs, Split::OOD), Error);
}

TEST_CASE("an untrained symmetric scorer is at chance")
{
    // Labels are fair coin flips, so each pair is right with probability 1/2;
    // 3 sigma of the binomial over 1000 pairs is 3 * sqrt(0.25 / 1000) = 0.0474.
    auto pairs = separable(1000, 11, Split::ID);
    Rng coin(13);
    for (auto& p : pairs) {
        if (std::bernoulli_distribution(0.5)(coin)) {
            std::swap(p.chosen, p.rejected);
        }
    }
    const auto m = RewardModel::create({ Paradigm::PointwiseRegressive, 2, 2, 4 }, { 8 }, Activation::Tanh, 12);
    const auto acc = eval_accuracy(ToyBackend(m), pairs, Split::ID).accuracy;
    CHECK(std::abs(acc - 0.5) <= 3.0 * std::sqrt(0.25 / 1000.0));
}
