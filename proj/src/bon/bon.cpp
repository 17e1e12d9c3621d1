#include "bon.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>

#include "core/parallel.hpp"

namespace rewarddance {

std::vector<std::string> TournamentResult::ranked_ids() const
{
    std::vector<std::string> out;
    out.reserve(ranking.size());
    for (std::size_t i : ranking) {
        out.push_back(candidate_ids.at(i));
    }
    return out;
}

Json to_json(const TournamentResult& r)
{
    return Json { { "candidate_ids", r.candidate_ids }, { "win_counts", r.win_counts },
        { "mean_margins", r.mean_margins }, { "ranking", r.ranked_ids() } };
}

TournamentResult tournament_result_from_json(const Json& j)
{
    TournamentResult r;
    r.candidate_ids = j.at("candidate_ids").get<std::vector<std::string>>();
    r.win_counts = j.at("win_counts").get<std::vector<double>>();
    r.mean_margins = j.at("mean_margins").get<std::vector<double>>();
    const auto ids = j.at("ranking").get<std::vector<std::string>>();
    require(r.win_counts.size() == r.candidate_ids.size() && r.mean_margins.size() == r.candidate_ids.size()
            && ids.size() == r.candidate_ids.size(),
        ErrorCode::Parse, "tournament result fields have inconsistent lengths");
    r.ranking.clear();
    for (const auto& id : ids) {
        const auto it = std::find(r.candidate_ids.begin(), r.candidate_ids.end(), id);
        require(it != r.candidate_ids.end(), ErrorCode::Parse, "ranking names unknown candidate '" + id + "'");
        r.ranking.push_back(static_cast<std::size_t>(it - r.candidate_ids.begin()));
    }
    return r;
}

namespace {

struct PairOutcome {
    double margin = 0.0;
    std::optional<std::string> error;
};

} // namespace

TournamentResult run_tournament(BackendPtr backend, const Prompt& prompt, const std::vector<Candidate>& candidates,
                                const Instruction& instruction, const TournamentConfig& cfg)
{
    require(backend != nullptr, ErrorCode::InvalidArgument, "tournament needs a backend");
    require(backend->supports_pairwise(), ErrorCode::InvalidArgument,
        "backend '" + backend->name() + "' cannot score pairs");
    const std::size_t n = candidates.size();
    require(n >= 2, ErrorCode::InvalidArgument, "tournament needs at least 2 candidates");
    require(n <= cfg.max_candidates, ErrorCode::InvalidArgument,
        "tournament has " + std::to_string(n) + " candidates, limit is " + std::to_string(cfg.max_candidates));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
        [&](std::size_t a, std::size_t b) { return candidates[a].id < candidates[b].id; });
    std::set<std::string> seen;
    for (const auto& c : candidates) {
        require(seen.insert(c.id).second, ErrorCode::InvalidArgument, "duplicate candidate id '" + c.id + "'");
    }

    auto sym = std::dynamic_pointer_cast<const SymmetrizedBackend>(backend);
    if (!sym) {
        sym = std::make_shared<SymmetrizedBackend>(backend);
    }

    std::vector<std::pair<std::size_t, std::size_t>> games;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            games.emplace_back(i, j);
        }
    }
    std::vector<PairOutcome> outcomes(games.size());
    parallel_for(games.size(), cfg.threads, [&](std::size_t g) {
        const auto& a = candidates[order[games[g].first]];
        const auto& b = candidates[order[games[g].second]];
        try {
            outcomes[g].margin = sym->margin(make_pairwise_request(prompt, a, b, instruction));
        } catch (const std::exception& e) {
            outcomes[g].error = e.what();
        }
    });

    std::size_t failed = 0;
    std::string first_error;
    for (std::size_t g = 0; g < games.size(); ++g) {
        if (outcomes[g].error) {
            if (failed++ == 0) {
                first_error = "(" + candidates[order[games[g].first]].id + ", "
                    + candidates[order[games[g].second]].id + "): " + *outcomes[g].error;
            }
        }
    }
    if (failed > 0) {
        fail(ErrorCode::Scoring,
            "tournament for prompt '" + prompt.id + "' scored " + std::to_string(games.size() - failed) + " of "
                + std::to_string(games.size()) + " pairs; first failure " + first_error);
    }

    TournamentResult r;
    r.win_counts.assign(n, 0.0);
    r.mean_margins.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        r.candidate_ids.push_back(candidates[order[i]].id);
    }
    for (std::size_t g = 0; g < games.size(); ++g) {
        const auto [i, j] = games[g];
        const double m = outcomes[g].margin;
        if (m > 0.0) {
            r.win_counts[i] += 1.0;
        } else if (m < 0.0) {
            r.win_counts[j] += 1.0;
        } else {
            r.win_counts[i] += 0.5;
            r.win_counts[j] += 0.5;
        }
        r.mean_margins[i] += m;
        r.mean_margins[j] -= m;
    }
    for (auto& m : r.mean_margins) {
        m /= static_cast<double>(n - 1);
    }
    r.ranking.resize(n);
    std::iota(r.ranking.begin(), r.ranking.end(), 0);
    std::sort(r.ranking.begin(), r.ranking.end(), [&](std::size_t a, std::size_t b) {
        if (r.win_counts[a] != r.win_counts[b]) return r.win_counts[a] > r.win_counts[b];
        if (r.mean_margins[a] != r.mean_margins[b]) return r.mean_margins[a] > r.mean_margins[b];
        return r.candidate_ids[a] < r.candidate_ids[b];
    });
    return r;
}

const char* to_string(SelectMode m)
{
    return m == SelectMode::TopK ? "top" : "bottom";
}

SelectMode select_mode_from_string(std::string_view s)
{
    if (s == "top" || s == "topk") return SelectMode::TopK;
    if (s == "bottom" || s == "bottomk") return SelectMode::BottomK;
    fail(ErrorCode::Parse, "unknown selection mode '" + std::string(s) + "'");
}

std::vector<std::string> select(const TournamentResult& result, SelectMode mode, std::size_t k)
{
    const std::size_t n = result.ranking.size();
    require(k >= 1 && k <= n, ErrorCode::InvalidArgument,
        "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    const auto ids = result.ranked_ids();
    if (mode == SelectMode::TopK) {
        return { ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k) };
    }
    return { ids.rbegin(), ids.rbegin() + static_cast<std::ptrdiff_t>(k) };
}

} // namespace rewarddance
