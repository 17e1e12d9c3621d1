#include "search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "core/error.hpp"
#include "core/parallel.hpp"
#include "refl/refl.hpp"

namespace rewarddance {

SearchConfig SearchConfig::from_config(const Config& c)
{
    SearchConfig s;
    s.num_paths = c.get_uint("tts.num_paths", s.num_paths);
    s.keep = c.get_uint("tts.keep", s.keep);
    s.verify_every = c.get_uint("tts.verify_every", s.verify_every);
    s.renoise_sigma_scale = c.get_double("tts.renoise_sigma_scale", s.renoise_sigma_scale);
    s.total_steps = c.get_uint("tts.total_steps", s.total_steps);
    s.seed = c.get_uint("tts.seed", s.seed);
    s.threads = c.get_uint("tts.threads", s.threads);
    if (s.num_paths == 0) c.invalid("tts.num_paths", "must be at least 1");
    if (s.keep == 0 || s.keep > s.num_paths) c.invalid("tts.keep", "need 1 <= keep <= num_paths");
    if (s.total_steps == 0) c.invalid("tts.total_steps", "must be at least 1");
    if (s.verify_every == 0 || s.verify_every > s.total_steps) c.invalid("tts.verify_every", "need 1 <= verify_every <= total_steps");
    if (!(s.renoise_sigma_scale >= 0.0)) c.invalid("tts.renoise_sigma_scale", "must be non-negative");
    return s;
}

void SearchConfig::validate() const
{
    require(num_paths >= 1 && keep >= 1 && keep <= num_paths, ErrorCode::Config, "search needs 1 <= keep <= num_paths");
    require(total_steps >= 1 && verify_every >= 1 && verify_every <= total_steps, ErrorCode::Config,
        "search needs 1 <= verify_every <= total_steps");
    require(renoise_sigma_scale >= 0.0 && std::isfinite(renoise_sigma_scale), ErrorCode::Config,
        "renoise sigma scale must be non-negative");
}

Vector renoise(std::span<const double> state, double t, double sigma_scale, Rng& rng)
{
    require(t >= 0.0 && t < 1.0, ErrorCode::InvalidArgument, "renoise needs 0 <= t < 1");
    Vector out(state.begin(), state.end());
    const Vector eps = standard_normal(rng, out.size());
    const double scale = sigma_scale * (1.0 - t);
    for (std::size_t d = 0; d < out.size(); ++d) {
        out[d] += scale * eps[d];
    }
    return out;
}

namespace {

Json path_json(const TrajectoryState& p)
{
    return Json { { "id", p.path_id }, { "score", p.scores.empty() ? 0.0 : p.scores.back() }, { "lineage", p.lineage } };
}

} // namespace

SearchResult search(const FlowModel& model, const ScoringBackend& verifier, int condition, const SearchConfig& cfg)
{
    cfg.validate();
    require(verifier.supports_pointwise(), ErrorCode::InvalidArgument,
        "verifier '" + verifier.name() + "' cannot score single candidates");
    const Prompt prompt = condition_prompts(model.num_classes()).at(static_cast<std::size_t>(condition));
    const Instruction instruction = default_instruction(false);
    const double dt = 1.0 / static_cast<double>(cfg.total_steps);

    SearchResult result;
    std::vector<TrajectoryState> paths(cfg.num_paths);
    for (std::size_t p = 0; p < cfg.num_paths; ++p) {
        paths[p].path_id = p;
        paths[p].state = initial_noise(model.dim(), cfg.seed, p);
        paths[p].lineage = { p };
    }
    std::size_t next_id = cfg.num_paths;

    auto score_all = [&](std::size_t step) -> bool {
        const double t = dt * static_cast<double>(step);
        std::vector<double> scores(paths.size());
        std::vector<std::string> errors(paths.size());
        parallel_for(paths.size(), cfg.threads, [&](std::size_t i) {
            try {
                Candidate c;
                c.id = "path" + std::to_string(paths[i].path_id);
                c.features = step == cfg.total_steps ? paths[i].state
                                                     : one_step_predict_x0(model, paths[i].state, t, condition);
                scores[i] = verifier.score_pointwise(make_pointwise_request(prompt, c, instruction)).value;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < paths.size(); ++i) {
            if (!errors[i].empty()) {
                result.aborted = "verifier failed on path " + std::to_string(paths[i].path_id) + " at step "
                    + std::to_string(step) + ": " + errors[i];
                return false;
            }
            paths[i].scores.push_back(scores[i]);
        }
        return true;
    };

    std::size_t step = 0;
    while (step < cfg.total_steps) {
        const std::size_t target = std::min(cfg.total_steps, step + cfg.verify_every);
        parallel_for(paths.size(), cfg.threads, [&](std::size_t i) {
            auto& x = paths[i].state;
            for (std::size_t k = step; k < target; ++k) {
                const Vector v = velocity(model, x, dt * static_cast<double>(k), condition);
                for (std::size_t d = 0; d < x.size(); ++d) {
                    x[d] += dt * v[d];
                }
            }
            paths[i].t = target == cfg.total_steps ? 1.0 : dt * static_cast<double>(target);
        });
        for (const auto& p : paths) {
            require(std::all_of(p.state.begin(), p.state.end(), [](double v) { return std::isfinite(v); }),
                ErrorCode::NonFinite, "search path " + std::to_string(p.path_id) + " became non-finite");
        }
        step = target;
        if (!score_all(step)) {
            return result;
        }
        if (step == cfg.total_steps) {
            break;
        }

        // Stable sort keeps the lower index first among equal scores.
        std::vector<std::size_t> order(paths.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return paths[a].scores.back() > paths[b].scores.back(); });
        Json record { { "step", step }, { "t", dt * static_cast<double>(step) } };
        record["paths"] = Json::array();
        for (const auto& p : paths) {
            record["paths"].push_back(path_json(p));
        }
        std::vector<TrajectoryState> survivors;
        Json kept = Json::array(), pruned = Json::array(), clones = Json::array();
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (r < cfg.keep) {
                survivors.push_back(paths[order[r]]);
                kept.push_back(paths[order[r]].path_id);
            } else {
                pruned.push_back(paths[order[r]].path_id);
            }
        }
        const std::size_t copies = (cfg.num_paths + cfg.keep - 1) / cfg.keep;
        std::vector<TrajectoryState> next;
        for (const auto& s : survivors) {
            for (std::size_t c = 0; c < copies && next.size() < cfg.num_paths; ++c) {
                if (c == 0) {
                    next.push_back(s);
                    continue;
                }
                TrajectoryState clone = s;
                clone.path_id = next_id++;
                clone.lineage.push_back(clone.path_id);
                Rng rng(derive_seed(cfg.seed, clone.path_id, step));
                clone.state = renoise(s.state, s.t, cfg.renoise_sigma_scale, rng);
                clones.push_back(Json { { "id", clone.path_id }, { "parent", s.path_id } });
                next.push_back(std::move(clone));
            }
        }
        record["kept"] = kept;
        record["pruned"] = pruned;
        record["clones"] = clones;
        result.audit.push_back(std::move(record));
        paths = std::move(next);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < paths.size(); ++i) {
        if (paths[i].scores.back() > paths[best].scores.back()) {
            best = i;
        }
    }
    Candidate out;
    out.id = "tts_c" + std::to_string(condition) + "_s" + std::to_string(cfg.seed) + "_p"
        + std::to_string(paths[best].path_id);
    out.features = paths[best].state;
    result.best = out;
    result.best_score = paths[best].scores.back();
    Json final { { "step", cfg.total_steps }, { "t", 1.0 }, { "final", true }, { "best", paths[best].path_id } };
    final["paths"] = Json::array();
    for (const auto& p : paths) {
        final["paths"].push_back(path_json(p));
    }
    result.audit.push_back(std::move(final));
    result.final_paths = std::move(paths);
    return result;
}

void write_audit_jsonl(const std::filesystem::path& path, const std::vector<Json>& audit)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    for (const auto& r : audit) {
        out << r.dump() << '\n';
    }
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

} // namespace rewarddance
