#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "bon/bon.hpp"
#include "core/error.hpp"
#include "scorer/oracle_backend.hpp"
#include "scorer/reward_model.hpp"
#include "scorer/templates.hpp"
#include "support.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

namespace {

const Prompt kPrompt { "p", "t", 0 };

std::vector<Candidate> with_qualities(const std::vector<double>& q)
{
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < q.size(); ++i) {
        out.push_back(make_candidate("c" + std::to_string(i), { 0.0 }, q[i]));
    }
    return out;
}

TournamentResult hard_tournament(const std::vector<Candidate>& cands, std::size_t threads = 1)
{
    TournamentConfig cfg;
    cfg.threads = threads;
    return run_tournament(std::make_shared<OracleBackend>(OracleMode::Hard), kPrompt, cands, default_instruction(true), cfg);
}

// Ids ordered by decreasing oracle quality.
std::vector<std::string> true_order(const std::vector<Candidate>& cands)
{
    auto sorted = cands;
    std::sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) { return *a.oracle_quality > *b.oracle_quality; });
    std::vector<std::string> ids;
    for (const auto& c : sorted) {
        ids.push_back(c.id);
    }
    return ids;
}

} // namespace

TEST_CASE("four-candidate hard-oracle tournament")
{
    const auto r = hard_tournament(with_qualities({ 0.9, 0.1, 0.5, 0.7 }));
    CHECK(r.candidate_ids == std::vector<std::string> { "c0", "c1", "c2", "c3" });
    CHECK(r.win_counts == std::vector<double> { 3, 0, 1, 2 });
    CHECK(r.ranked_ids() == std::vector<std::string> { "c0", "c3", "c2", "c1" });
    CHECK(select(r, SelectMode::TopK, 2) == std::vector<std::string> { "c0", "c3" });
    CHECK(select(r, SelectMode::TopK, 4) == r.ranked_ids());
    CHECK(select(r, SelectMode::BottomK, 1) == std::vector<std::string> { "c1" });
    CHECK(tournament_result_from_json(to_json(r)).ranked_ids() == r.ranked_ids());
}

TEST_CASE("two candidates play one game")
{
    const auto backend = std::make_shared<CountingBackend>(std::make_shared<OracleBackend>(OracleMode::Hard));
    const auto r = run_tournament(backend, kPrompt, with_qualities({ 0.2, 0.6 }), default_instruction(true));
    CHECK(r.ranked_ids() == std::vector<std::string> { "c1", "c0" });
    // One symmetrized game is two underlying calls.
    CHECK(backend->pairwise_calls() == 2);
}

TEST_CASE("identical candidates split every game")
{
    const auto r = hard_tournament(with_qualities({ 0.5, 0.5, 0.5, 0.5, 0.5 }));
    for (double w : r.win_counts) {
        CHECK(w == 2.0);
    }
    CHECK(r.ranked_ids() == std::vector<std::string> { "c0", "c1", "c2", "c3", "c4" });
}

TEST_CASE("top-k equals the true quality order for every permutation up to N = 6")
{
    std::size_t failures = 0, cases = 0;
    for (std::size_t n = 2; n <= 6; ++n) {
        std::vector<double> q(n);
        std::iota(q.begin(), q.end(), 1.0);
        for (auto& v : q) {
            v /= static_cast<double>(n + 1);
        }
        do {
            const auto cands = with_qualities(q);
            const auto r = hard_tournament(cands);
            const auto truth = true_order(cands);
            for (std::size_t k = 1; k <= n; ++k) {
                const auto top = select(r, SelectMode::TopK, k);
                failures += !std::equal(top.begin(), top.end(), truth.begin());
            }
            ++cases;
        } while (std::next_permutation(q.begin(), q.end()));
    }
    CHECK(cases == 872);
    CHECK(failures == 0);
}

TEST_CASE("parallel and serial tournaments agree")
{
    const ToyBackend toy(RewardModel::create({ Paradigm::PairwiseGenerative, 2, 1, 4 }, { 8 }, Activation::Tanh, 1));
    const auto backend = std::make_shared<ToyBackend>(toy);
    Rng rng(4);
    std::vector<Candidate> cands;
    for (int i = 0; i < 12; ++i) {
        cands.push_back(make_candidate("x" + std::to_string(i), random_vector(rng, 2)));
    }
    TournamentConfig serial, parallel;
    parallel.threads = 4;
    const auto a = run_tournament(backend, kPrompt, cands, default_instruction(true), serial);
    const auto b = run_tournament(backend, kPrompt, cands, default_instruction(true), parallel);
    CHECK(a.win_counts == b.win_counts);
    CHECK(a.mean_margins == b.mean_margins);
    CHECK(a.ranking == b.ranking);
}

TEST_CASE("tournament preconditions")
{
    CHECK_THROWS_AS(hard_tournament(with_qualities({ 0.5 })), Error);
    auto dup = with_qualities({ 0.1, 0.2 });
    dup[1].id = "c0";
    CHECK_THROWS_AS(hard_tournament(dup), Error);
    CHECK_THROWS_AS(hard_tournament(with_qualities(std::vector<double>(17, 0.5))), Error);
    const auto r = hard_tournament(with_qualities({ 0.1, 0.2 }));
    CHECK_THROWS_AS(select(r, SelectMode::TopK, 3), Error);
    CHECK_THROWS_AS(select(r, SelectMode::TopK, 0), Error);
}
