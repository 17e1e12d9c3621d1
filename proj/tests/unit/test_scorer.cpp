#include <doctest.h>

#include <cmath>
#include <fstream>

#include "core/error.hpp"
#include "core/mixture.hpp"
#include "scorer/oracle_backend.hpp"
#include "scorer/reward_model.hpp"
#include "scorer/templates.hpp"
#include "support.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

namespace {

// Generative model whose logits are the constant `bias` for every input.
RewardModel constant_logits(Paradigm paradigm, const Vector& bias)
{
    RewardModelShape shape { paradigm, 2, 2, 4 };
    auto net = ToyNet::zeros({ shape.input_size(), 3, shape.output_size() }, Activation::Tanh);
    const std::size_t at = net.layer_offset(1) + 3 * shape.output_size();
    for (std::size_t k = 0; k < bias.size(); ++k) {
        net.mutable_weights()[at + k] = bias[k];
    }
    return RewardModel(shape, net);
}

const Prompt kPrompt { "p0", "two mugs on a table", 1 };

} // namespace

TEST_CASE("toy backend decision logits")
{
    SUBCASE("yes 2, no 0 under YesNoPair is sigmoid(2)")
    {
        const ToyBackend b(constant_logits(Paradigm::PairwiseGenerative, { 2.0, 0.0, 0.0, 0.0 }));
        const auto s = b.score_pairwise(make_pairwise_request(kPrompt, make_candidate("a", { 0.1, 0.2 }),
            make_candidate("b", { 0.3, 0.4 }), default_instruction(true)));
        CHECK(std::abs(s.value - 1.0 / (1.0 + std::exp(-2.0))) <= 1e-12);
        CHECK(std::abs(s.value - 0.880797) < 1e-6);
    }
    SUBCASE("equal yes/no logits give 0.5")
    {
        const ToyBackend b(constant_logits(Paradigm::PointwiseGenerative, { 0.7, 0.7, -1.0, 3.0 }));
        CHECK(b.score_pointwise(make_pointwise_request(kPrompt, make_candidate("a", { 1.0, 2.0 }), default_instruction(false)))
                  .value
            == 0.5);
    }
    SUBCASE("zero net under FullVocab gives one quarter")
    {
        const ToyBackend b(constant_logits(Paradigm::PointwiseGenerative, { 0.0, 0.0, 0.0, 0.0 }), Normalization::FullVocab);
        CHECK(b.score_pointwise(make_pointwise_request(kPrompt, make_candidate("a", { 1.0, 2.0 }), default_instruction(false)))
                  .value
            == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("pairwise model refuses pointwise requests")
    {
        const ToyBackend b(constant_logits(Paradigm::PairwiseGenerative, { 0.0, 0.0, 0.0, 0.0 }));
        CHECK_THROWS_AS(
            b.score_pointwise(make_pointwise_request(kPrompt, make_candidate("a", { 1.0, 2.0 }), default_instruction(false))),
            Error);
    }
}

TEST_CASE("oracle backend")
{
    const auto a = make_candidate("a", { 0.0, 0.0 }, 0.9);
    const auto b = make_candidate("b", { 0.0, 0.0 }, 0.1);
    const auto req = make_pairwise_request(kPrompt, a, b, default_instruction(true));
    CHECK(OracleBackend(OracleMode::Hard).score_pairwise(req).value == 1.0);
    CHECK(OracleBackend(OracleMode::Hard).score_pairwise(make_pairwise_request(kPrompt, b, a, default_instruction(true))).value == 0.0);
    CHECK(OracleBackend(OracleMode::Soft).score_pairwise(req).value == doctest::Approx(0.9));
    CHECK(OracleBackend(OracleMode::Soft).score_pointwise(make_pointwise_request(kPrompt, a, default_instruction(false))).value
        == 0.9);
    CHECK_FALSE(OracleBackend(OracleMode::Soft).differentiable());
    CHECK_THROWS_AS(OracleBackend(OracleMode::Hard).score_with_gradient(req), Error);
}

TEST_CASE("soft oracle gradients match central differences")
{
    const QualityModel qm { Mixture::standard(2, 2, 2.0), 0.5 };
    const OracleBackend oracle(OracleMode::Soft, qm);
    const Vector& mu = qm.mixture.means[1];
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        Vector xa = random_vector(rng, 2, 0.4), xb = random_vector(rng, 2, 0.4);
        for (std::size_t d = 0; d < 2; ++d) {
            xa[d] += mu[d];
            xb[d] += mu[d];
        }
        const auto g = oracle.score_with_gradient(
            make_pairwise_request(kPrompt, make_candidate("a", xa), make_candidate("b", xb), default_instruction(true)));
        const auto f = [&](const Vector& x) {
            return oracle
                .score_pairwise(make_pairwise_request(kPrompt, make_candidate("a", x), make_candidate("b", xb), default_instruction(true)))
                .value;
        };
        CHECK(relative_error(g.grad_a, numeric_gradient(f, xa)) < 1e-6);
    }
}

TEST_CASE("symmetrized backend")
{
    const auto model = RewardModel::create({ Paradigm::PairwiseGenerative, 2, 2, 4 }, { 8 }, Activation::Tanh, 3);
    const auto inner = std::make_shared<ToyBackend>(model);
    const SymmetrizedBackend sym(inner);
    const auto a = make_candidate("a", { 0.4, -1.2 });
    const auto b = make_candidate("b", { -0.7, 0.9 });
    const auto ins = default_instruction(true);

    const double rab = inner->score_pairwise(make_pairwise_request(kPrompt, a, b, ins)).value;
    const double rba = inner->score_pairwise(make_pairwise_request(kPrompt, b, a, ins)).value;
    const double s_ab = sym.score_pairwise(make_pairwise_request(kPrompt, a, b, ins)).value;
    const double s_ba = sym.score_pairwise(make_pairwise_request(kPrompt, b, a, ins)).value;
    CHECK(s_ab == doctest::Approx((rab + 1.0 - rba) / 2.0).epsilon(1e-15));
    CHECK(s_ab + s_ba == 1.0);
    CHECK(sym.score_pairwise(make_pairwise_request(kPrompt, a, a, ins)).value == 0.5);

    // The symmetrized gradient is the average of the two orderings' gradients.
    const auto g = sym.score_with_gradient(make_pairwise_request(kPrompt, a, b, ins));
    const auto f = [&](const Vector& x) {
        return sym.score_pairwise(make_pairwise_request(kPrompt, make_candidate("a", x), b, ins)).value;
    };
    CHECK(relative_error(g.grad_a, numeric_gradient(f, a.features)) < 1e-6);
}

TEST_CASE("symmetrizing the hard oracle keeps every decision")
{
    const auto oracle = std::make_shared<OracleBackend>(OracleMode::Hard);
    const SymmetrizedBackend sym(oracle);
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto a = make_candidate("a", { 0.0 }, u(rng));
        const auto b = make_candidate("b", { 0.0 }, u(rng));
        const auto req = make_pairwise_request(kPrompt, a, b, default_instruction(true));
        CHECK((oracle->score_pairwise(req).value > 0.5) == (sym.score_pairwise(req).value > 0.5));
    }
}

TEST_CASE("toy backend input gradients match central differences")
{
    Rng rng(2);
    for (const auto paradigm : { Paradigm::PairwiseGenerative, Paradigm::PointwiseGenerative, Paradigm::PointwiseRegressive }) {
        const ToyBackend b(RewardModel::create({ paradigm, 2, 2, 4 }, { 6, 5 }, Activation::Tanh, 4));
        for (int i = 0; i < 20; ++i) {
            const Vector xa = random_vector(rng, 2), xb = random_vector(rng, 2);
            const auto f = [&](const Vector& x) {
                return b.score_pairwise(make_pairwise_request(kPrompt, make_candidate("a", x), make_candidate("b", xb),
                                            default_instruction(true)))
                    .value;
            };
            const auto g = b.score_with_gradient(
                make_pairwise_request(kPrompt, make_candidate("a", xa), make_candidate("b", xb), default_instruction(true)));
            CHECK(relative_error(g.grad_a, numeric_gradient(f, xa)) < 1e-4);
        }
    }
}

TEST_CASE("prompt templates")
{
    ScoreRequest req = make_pairwise_request(Prompt { "p", "cat", 0 }, make_candidate("a", {}), make_candidate("b", {}),
        default_instruction(true));
    SUBCASE("placeholders are filled in")
    {
        CHECK(render_prompt(PromptTemplate { "t", "{prompt}|{image_a}|{image_b}" }, req) == "cat|a|b");
    }
    SUBCASE("pointwise request with a pairwise template")
    {
        req.candidate_b.reset();
        CHECK_THROWS_AS(render_prompt(PromptTemplate { "t", "{prompt}|{image_a}|{image_b}" }, req), Error);
    }
    SUBCASE("prompt text with braces is not re-expanded")
    {
        req.prompt.text = "{image_b}";
        CHECK(render_prompt(PromptTemplate { "t", "{prompt}|{image_a}|{image_b}" }, req) == "{image_b}|a|b");
    }
    SUBCASE("shipped templates order their clauses by cot_order")
    {
        for (const auto& t : builtin_templates()) {
            const auto decision = t.body.find(kDecisionClause);
            const auto reasoning = t.body.find(kReasoningClause);
            REQUIRE(decision != std::string::npos);
            REQUIRE(reasoning != std::string::npos);
            if (t.cot_order == CotOrder::DecisionFirst) {
                CHECK(decision < reasoning);
            } else {
                CHECK(reasoning < decision);
            }
        }
    }
    SUBCASE("template files round trip")
    {
        TempDir dir("tmpl");
        for (const auto& t : builtin_templates()) {
            std::ofstream(dir / (t.template_id + ".txt")) << template_file_contents(t);
            const auto loaded = load_template(dir / (t.template_id + ".txt"));
            CHECK(loaded.template_id == t.template_id);
            CHECK(loaded.body == t.body);
            CHECK(loaded.cot_order == t.cot_order);
        }
    }
}

TEST_CASE("shipped template files match the built-ins")
{
    for (const auto& t : builtin_templates()) {
        const auto path = std::filesystem::path(RD_SOURCE_DIR) / "templates" / (t.template_id + ".txt");
        REQUIRE(std::filesystem::exists(path));
        const auto loaded = load_template(path);
        CHECK(loaded.body == t.body);
        CHECK(loaded.cot_order == t.cot_order);
    }
}

TEST_CASE("reward model checkpoints round trip")
{
    TempDir dir("rm");
    const auto model = RewardModel::create({ Paradigm::PointwiseGenerative, 3, 4, 4 }, { 5 }, Activation::ReLU, 8);
    save_reward_model(dir / "rm.bin", model);
    CHECK(load_reward_model(dir / "rm.bin") == model);
}
