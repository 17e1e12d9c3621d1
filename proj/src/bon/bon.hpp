#pragma once

#include <string>
#include <vector>

#include "core/serialization.hpp"
#include "scorer/backend.hpp"

namespace rewarddance {

inline constexpr std::size_t kDefaultMaxCandidates = 16;

struct TournamentConfig {
    std::size_t max_candidates = kDefaultMaxCandidates;
    std::size_t threads = 1;
};

// Per-candidate tallies are indexed like candidate_ids, which are sorted by
// id. `ranking` holds indices into candidate_ids, best first.
struct TournamentResult {
    std::vector<std::string> candidate_ids;
    std::vector<double> win_counts;
    std::vector<double> mean_margins;
    std::vector<std::size_t> ranking;

    std::vector<std::string> ranked_ids() const;
};

Json to_json(const TournamentResult& r);
TournamentResult tournament_result_from_json(const Json& j);

// Round-robin over all unordered pairs, each scored once through the
// symmetrized backend. A backend that is already symmetrized is used as is.
TournamentResult run_tournament(BackendPtr backend, const Prompt& prompt, const std::vector<Candidate>& candidates,
                                const Instruction& instruction, const TournamentConfig& cfg = {});

enum class SelectMode { TopK, BottomK };
const char* to_string(SelectMode m);
SelectMode select_mode_from_string(std::string_view s);

// TopK: first k of the ranking. BottomK: last k, worst first.
std::vector<std::string> select(const TournamentResult& result, SelectMode mode, std::size_t k);

} // namespace rewarddance
