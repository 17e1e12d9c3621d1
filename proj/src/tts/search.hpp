#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/random.hpp"
#include "core/serialization.hpp"
#include "diffusion/flow.hpp"
#include "scorer/backend.hpp"

namespace rewarddance {

struct SearchConfig {
    std::size_t num_paths = 8;   // N
    std::size_t keep = 2;        // M
    std::size_t verify_every = 5; // Euler steps between checkpoints
    double renoise_sigma_scale = 0.5;
    std::size_t total_steps = 20;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    static SearchConfig from_config(const Config& c);
    void validate() const;
};

struct TrajectoryState {
    std::size_t path_id = 0;
    Vector state;
    double t = 0.0;
    std::vector<double> scores;
    std::vector<std::size_t> lineage; // ancestors, root first
};

// state + sigma_scale (1 - t) eps with eps standard normal.
Vector renoise(std::span<const double> state, double t, double sigma_scale, Rng& rng);

struct SearchResult {
    std::optional<Candidate> best;
    double best_score = 0.0;
    std::vector<TrajectoryState> final_paths;
    std::vector<Json> audit; // one record per checkpoint, then a final record
    std::optional<std::string> aborted;
};

// Path p starts from initial_noise(dim, seed, p), so a single path
// reproduces sample(model, condition, total_steps, seed).
SearchResult search(const FlowModel& model, const ScoringBackend& verifier, int condition, const SearchConfig& cfg);

void write_audit_jsonl(const std::filesystem::path& path, const std::vector<Json>& audit);

} // namespace rewarddance
