#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "eval/eval.hpp"
#include "scorer/oracle_backend.hpp"
#include "scorer/reward_model.hpp"
#include "support.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

TEST_CASE("GSB score")
{
    CHECK(gsb_score(GsbTally { 49, 30, 21 }) == 0.28);
    CHECK(gsb_score(GsbTally { 7, 11, 7 }) == 0.0);
    CHECK(gsb_score(GsbTally { 5, 0, 0 }) == 1.0);
    CHECK_THROWS_AS(gsb_score(GsbTally {}), Error);
}

TEST_CASE("alignment rubric")
{
    CHECK(alignment_rubric({ 2, 2, 2 }) == 2.0);
    CHECK(alignment_rubric({ 0, 1, 2 }) == 1.0);
    // 33 twos and 17 ones: (66 + 17) / 50.
    std::vector<int> scores(33, 2);
    scores.insert(scores.end(), 17, 1);
    CHECK(alignment_rubric(scores) == doctest::Approx(1.66).epsilon(1e-15));
    CHECK_THROWS_AS(alignment_rubric({ 3 }), Error);
    CHECK_THROWS_AS(alignment_rubric({}), Error);
}

TEST_CASE("judge verdicts")
{
    const OracleBackend hard(OracleMode::Hard);
    const Prompt prompt { "p", "t", 0 };
    const auto a = make_candidate("a", { 0.0 }, 0.9);
    const auto b = make_candidate("b", { 0.0 }, 0.1);
    CHECK(judge_pair(hard, prompt, a, b, 0.1).verdict == Verdict::Good);
    CHECK(judge_pair(hard, prompt, b, a, 0.1).verdict == Verdict::Bad);
    const auto same = judge_pair(hard, prompt, a, a, 0.0);
    CHECK(same.verdict == Verdict::Same);
    CHECK(same.margin == 0.0);
    CHECK(to_json(same) == Json { { "prompt_id", "p" }, { "verdict", "same" }, { "margin", 0.0 } });
}

TEST_CASE("judge verdicts are antisymmetric and Same grows with tau")
{
    const ToyBackend toy(RewardModel::create({ Paradigm::PairwiseGenerative, 2, 2, 4 }, { 8 }, Activation::Tanh, 5));
    Rng rng(3);
    std::vector<std::pair<Candidate, Candidate>> pairs;
    for (int i = 0; i < 1000; ++i) {
        pairs.emplace_back(make_candidate("a", random_vector(rng, 2)), make_candidate("b", random_vector(rng, 2)));
    }
    const Prompt prompt { "p", "t", 1 };
    for (const auto& [a, b] : pairs) {
        const auto ab = judge_pair(toy, prompt, a, b, 0.01);
        const auto ba = judge_pair(toy, prompt, b, a, 0.01);
        CHECK(ab.margin == -ba.margin);
        const auto mirrored = ab.verdict == Verdict::Good ? Verdict::Bad : (ab.verdict == Verdict::Bad ? Verdict::Good : Verdict::Same);
        CHECK(ba.verdict == mirrored);
    }
    std::size_t prev = 0;
    for (double tau = 0.0; tau <= 0.5; tau += 0.05) {
        std::vector<JudgeVerdict> verdicts;
        for (std::size_t i = 0; i < 200; ++i) {
            verdicts.push_back(judge_pair(toy, prompt, pairs[i].first, pairs[i].second, tau));
        }
        const auto same = tally(verdicts).same;
        CHECK(same >= prev);
        prev = same;
    }
}

TEST_CASE("synthetic benchmark generation")
{
    SyntheticSpec spec;
    spec.num_pairs = 600;
    spec.id_pairs = 100;
    spec.ood_pairs = 100;
    SUBCASE("split sizes, holdout and validity")
    {
        const auto data = generate_synthetic(spec);
        CHECK(data.pairs.size() == 600);
        CHECK(filter_split(data.pairs, Split::Train).size() == 400);
        CHECK(filter_split(data.pairs, Split::ID).size() == 100);
        CHECK(filter_split(data.pairs, Split::OOD).size() == 100);
        CHECK(validate_dataset(data.pairs, spec.dim).empty());
        for (const auto& p : data.pairs) {
            if (p.split != Split::OOD) {
                CHECK(p.prompt.condition < static_cast<int>(spec.num_classes) - 1);
            }
        }
    }
    SUBCASE("clean labels agree with the hard oracle")
    {
        spec.noise_rate = 0.0;
        const auto data = generate_synthetic(spec);
        CHECK(eval_accuracy(OracleBackend(OracleMode::Hard), data.pairs, Split::ID).accuracy == 1.0);
        CHECK(eval_accuracy(OracleBackend(OracleMode::Hard), data.pairs, Split::OOD).accuracy == 1.0);
    }
    SUBCASE("noisy labels flip at the configured rate")
    {
        spec.noise_rate = 0.2;
        spec.num_pairs = 3000;
        spec.id_pairs = 1000;
        const auto data = generate_synthetic(spec);
        const double acc = eval_accuracy(OracleBackend(OracleMode::Hard), data.pairs, Split::ID).accuracy;
        CHECK(std::abs(acc - 0.8) <= 3.0 * std::sqrt(0.8 * 0.2 / 1000.0));
    }
    SUBCASE("no shift leaves the quality model unchanged")
    {
        spec.ood_shift = 0.0;
        CHECK(spec.quality_model(Split::OOD).mixture.means == spec.quality_model(Split::ID).mixture.means);
    }
    SUBCASE("same seed, same data")
    {
        CHECK(generate_synthetic(spec).pairs == generate_synthetic(spec).pairs);
    }
    SUBCASE("all classes when holdout is off")
    {
        spec.holdout_class = false;
        bool saw_last = false;
        for (const auto& p : filter_split(generate_synthetic(spec).pairs, Split::Train)) {
            saw_last = saw_last || p.prompt.condition == static_cast<int>(spec.num_classes) - 1;
        }
        CHECK(saw_last);
    }
}

TEST_CASE("scaling report")
{
    SyntheticSpec spec;
    spec.num_pairs = 900;
    spec.id_pairs = 150;
    spec.ood_pairs = 150;
    spec.noise_rate = 0.0;
    spec.dim = 2;
    spec.num_classes = 2;
    spec.holdout_class = false;
    const auto data = generate_synthetic(spec);
    TrainConfig cfg;
    cfg.epochs = 20;
    const auto rows = scaling_report({ 16, 256 }, data.pairs, 2, 2, cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].width == 16);
    CHECK(rows[1].ood_accuracy >= rows[0].ood_accuracy);
    CHECK_THROWS_AS(scaling_report({ 16 }, data.pairs, 2, 2, cfg), Error);
}
