#include <doctest.h>

#include <cmath>
#include <fstream>

#include "core/error.hpp"
#include "core/mixture.hpp"
#include "scorer/oracle_backend.hpp"
#include "scorer/templates.hpp"
#include "support.hpp"
#include "tts/search.hpp"

using namespace rewarddance;
using namespace rewarddance::testing;

namespace {

const QualityModel kQuality { Mixture::standard(2, 2, 2.0, 0.5), 0.5 };

const FlowModel& trained_flow()
{
    static const FlowModel model = [] {
        FlowTrainConfig cfg;
        cfg.iterations = 600;
        return train_flow(FlowModel::create(2, 2, cfg.hidden, cfg.activation, 0),
            mixture_dataset(kQuality.mixture, 2000, 0), cfg);
    }();
    return model;
}

} // namespace

TEST_CASE("renoise")
{
    Rng rng(1);
    const Vector x { 0.5, -0.5 };
    CHECK(renoise(x, 0.4, 0.0, rng) == x);
    const auto near_end = renoise(x, 1.0 - 1e-12, 1.0, rng);
    CHECK(std::abs(near_end[0] - x[0]) < 1e-10);
    CHECK_THROWS_AS(renoise(x, 1.0, 1.0, rng), Error);

    // Empirical std of 10^4 draws against sigma (1 - t) = 0.8 * 0.7.
    const double t = 0.3, sigma = 0.8, want = sigma * (1.0 - t);
    double sum = 0.0, sq = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double d = renoise(Vector { 0.0 }, t, sigma, rng)[0];
        sum += d;
        sq += d * d;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(sd - want) <= 0.05 * want);
}

TEST_CASE("a single path reproduces plain sampling bit for bit")
{
    const auto oracle = OracleBackend(OracleMode::Soft, kQuality);
    SearchConfig cfg;
    cfg.num_paths = 1;
    cfg.keep = 1;
    for (std::uint64_t seed : { 0, 1, 77 }) {
        cfg.seed = seed;
        const auto r = search(trained_flow(), oracle, 1, cfg);
        REQUIRE(r.best.has_value());
        CHECK(r.best->features == sample(trained_flow(), 1, cfg.total_steps, seed).final_state());
    }
}

TEST_CASE("without pruning or noise the search is best-of-N")
{
    const auto oracle = OracleBackend(OracleMode::Soft, kQuality);
    SearchConfig cfg;
    cfg.num_paths = 6;
    cfg.keep = 6;
    cfg.renoise_sigma_scale = 0.0;
    cfg.seed = 5;
    const auto r = search(trained_flow(), oracle, 0, cfg);
    double best = -1.0;
    Vector best_x;
    for (std::size_t p = 0; p < cfg.num_paths; ++p) {
        const auto x = integrate(trained_flow(), initial_noise(2, cfg.seed, p), 0.0, 1.0, 0, cfg.total_steps).final_state();
        const double q = kQuality.quality(x, 0);
        if (q > best) {
            best = q;
            best_x = x;
        }
    }
    CHECK(r.best->features == best_x);
    CHECK(r.best_score == best);
}

TEST_CASE("search keeps the population size and writes an audit")
{
    const auto oracle = OracleBackend(OracleMode::Soft, kQuality);
    SearchConfig cfg;
    const auto r = search(trained_flow(), oracle, 1, cfg);
    CHECK(r.final_paths.size() == cfg.num_paths);
    // Checkpoints at steps 5, 10, 15 prune; step 20 is the final record.
    REQUIRE(r.audit.size() == 4);
    CHECK(r.audit[0]["kept"].size() == cfg.keep);
    CHECK(r.audit[0]["pruned"].size() == cfg.num_paths - cfg.keep);
    CHECK(r.audit[0]["clones"].size() == cfg.num_paths - cfg.keep);
    CHECK(r.audit.back()["final"] == true);
    TempDir dir("tts");
    write_audit_jsonl(dir / "audit.jsonl", r.audit);
    std::ifstream in(dir / "audit.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) {
        CHECK(Json::parse(line).is_object());
        ++lines;
    }
    CHECK(lines == 4);
    CHECK(search(trained_flow(), oracle, 1, cfg).best == r.best);
}

TEST_CASE("search with pruning beats a single path on average")
{
    const auto oracle = OracleBackend(OracleMode::Soft, kQuality);
    SearchConfig wide, single;
    single.num_paths = 1;
    single.keep = 1;
    double gain = 0.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        wide.seed = single.seed = seed;
        const int c = static_cast<int>(seed % 2);
        gain += kQuality.quality(search(trained_flow(), oracle, c, wide).best->features, c)
            - kQuality.quality(search(trained_flow(), oracle, c, single).best->features, c);
    }
    CHECK(gain > 0.0);
}

TEST_CASE("search preconditions")
{
    const auto oracle = OracleBackend(OracleMode::Soft, kQuality);
    SearchConfig cfg;
    cfg.keep = 9;
    CHECK_THROWS_AS(search(trained_flow(), oracle, 0, cfg), Error);
    CHECK_THROWS_AS(search(trained_flow(), oracle, 2, SearchConfig {}), std::exception);
}
