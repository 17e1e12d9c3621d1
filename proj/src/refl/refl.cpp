#include "refl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace rewarddance {

const char* to_string(ReflMode m)
{
    return m == ReflMode::Gradient ? "gradient" : "log_only";
}

const char* to_string(RewardSource s)
{
    return s == RewardSource::Pairwise ? "pairwise" : "pointwise";
}

ReflMode refl_mode_from_string(std::string_view s)
{
    if (s == "gradient") return ReflMode::Gradient;
    if (s == "log_only") return ReflMode::LogOnly;
    fail(ErrorCode::Parse, "unknown refl mode '" + std::string(s) + "'");
}

RewardSource reward_source_from_string(std::string_view s)
{
    if (s == "pairwise") return RewardSource::Pairwise;
    if (s == "pointwise") return RewardSource::Pointwise;
    fail(ErrorCode::Parse, "unknown reward source '" + std::string(s) + "'");
}

ReflConfig ReflConfig::from_config(const Config& c)
{
    ReflConfig r;
    r.iterations = c.get_uint("refl.iterations", r.iterations);
    r.lr = c.get_double("refl.lr", r.lr);
    r.t_min = c.get_double("refl.t_min", r.t_min);
    r.t_max = c.get_double("refl.t_max", r.t_max);
    r.reward_weight = c.get_double("refl.reward_weight", r.reward_weight);
    r.bon_n = c.get_uint("refl.bon_n", r.bon_n);
    r.bon_top_k = c.get_uint("refl.bon_top_k", r.bon_top_k);
    r.seed = c.get_uint("refl.seed", r.seed);
    r.log_window = c.get_uint("refl.log_window", r.log_window);
    r.sample_steps = c.get_uint("refl.sample_steps", r.sample_steps);
    r.batch_size = c.get_uint("refl.batch_size", r.batch_size);
    r.log_space = c.get_bool("refl.log_space", r.log_space);
    r.drift_penalty = c.get_double("refl.drift_penalty", r.drift_penalty);
    r.refresh_interval = c.get_uint("refl.refresh_interval", r.refresh_interval);
    r.threads = c.get_uint("refl.threads", r.threads);
    try {
        r.mode = refl_mode_from_string(c.get_string("refl.mode", to_string(r.mode)));
    } catch (const Error& e) {
        c.invalid("refl.mode", e.what());
    }
    try {
        r.source = reward_source_from_string(c.get_string("refl.reward_source", to_string(r.source)));
    } catch (const Error& e) {
        c.invalid("refl.reward_source", e.what());
    }
    if (!(r.lr >= 0.0)) c.invalid("refl.lr", "must be non-negative");
    if (!(0.0 <= r.t_min && r.t_min <= r.t_max && r.t_max < 1.0)) c.invalid("refl.t_max", "need 0 <= t_min <= t_max < 1");
    if (r.bon_top_k > r.bon_n || r.bon_top_k == 0) c.invalid("refl.bon_top_k", "need 1 <= bon_top_k <= bon_n");
    if (r.log_window == 0) c.invalid("refl.log_window", "must be at least 1");
    if (r.sample_steps == 0) c.invalid("refl.sample_steps", "must be at least 1");
    if (r.batch_size == 0) c.invalid("refl.batch_size", "must be at least 1");
    if (!(r.drift_penalty >= 0.0)) c.invalid("refl.drift_penalty", "must be non-negative");
    return r;
}

void ReflConfig::validate() const
{
    require(lr >= 0.0 && std::isfinite(lr), ErrorCode::Config, "refl lr must be non-negative");
    require(0.0 <= t_min && t_min <= t_max && t_max < 1.0, ErrorCode::Config, "refl times need 0 <= t_min <= t_max < 1");
    require(bon_top_k >= 1 && bon_top_k <= bon_n, ErrorCode::Config, "refl needs 1 <= bon_top_k <= bon_n");
    require(log_window >= 1, ErrorCode::Config, "refl log window must be at least 1");
    require(sample_steps >= 1 && batch_size >= 1, ErrorCode::Config, "refl sample steps and batch size must be positive");
    require(drift_penalty >= 0.0 && std::isfinite(reward_weight), ErrorCode::Config, "refl weights must be finite");
}

std::vector<Prompt> condition_prompts(std::size_t num_classes)
{
    std::vector<Prompt> out;
    for (std::size_t c = 0; c < num_classes; ++c) {
        out.push_back(Prompt { "c" + std::to_string(c), "a sample from mode " + std::to_string(c), static_cast<int>(c) });
    }
    return out;
}

References prepare_references(BackendPtr backend, const FlowModel& model, const std::vector<Prompt>& prompts,
                              const ReflConfig& cfg, std::uint64_t round)
{
    cfg.validate();
    require(cfg.bon_n >= 2, ErrorCode::InvalidArgument, "reference selection needs bon_n >= 2");
    require(backend && backend->supports_pairwise(), ErrorCode::InvalidArgument, "reference selection needs a pairwise backend");
    const Instruction instruction = default_instruction(true);
    References refs;
    TournamentConfig tc;
    tc.threads = cfg.threads;
    tc.max_candidates = std::max(kDefaultMaxCandidates, cfg.bon_n);
    for (const auto& prompt : prompts) {
        std::vector<Candidate> pool;
        for (std::size_t j = 0; j < cfg.bon_n; ++j) {
            const std::uint64_t seed = derive_seed(cfg.seed, 0xb0b0 + round, static_cast<std::uint64_t>(prompt.condition) * 1000 + j);
            Candidate cand;
            cand.id = "ref_" + prompt.id + "_r" + std::to_string(round) + "_" + std::to_string(j);
            cand.features = sample(model, prompt.condition, cfg.sample_steps, seed).final_state();
            pool.push_back(std::move(cand));
        }
        const auto result = run_tournament(backend, prompt, pool, instruction, tc);
        auto& chosen = refs[prompt.condition];
        for (const auto& id : select(result, SelectMode::TopK, cfg.bon_top_k)) {
            chosen.push_back(*std::find_if(pool.begin(), pool.end(), [&](const Candidate& c) { return c.id == id; }));
        }
    }
    return refs;
}

ReflSampleLoss refl_sample_loss(const FlowModel& model, const ScoringBackend& backend, const Prompt& prompt,
                                const Candidate* reference, std::span<const double> xt, double t, const ReflConfig& cfg,
                                const FlowModel* anchor)
{
    const bool pairwise = cfg.source == RewardSource::Pairwise;
    require(!pairwise || reference != nullptr, ErrorCode::InvalidArgument, "pairwise reward needs a reference");
    ReflSampleLoss out;
    out.prediction = one_step_predict_x0(model, xt, t, prompt.condition);
    Candidate cand;
    cand.id = "refl_sample";
    cand.features = out.prediction;
    const ScoreRequest req = pairwise ? make_pairwise_request(prompt, cand, *reference, default_instruction(true))
                                      : make_pointwise_request(prompt, cand, default_instruction(false));
    Vector frozen;
    if (cfg.drift_penalty > 0.0) {
        require(anchor != nullptr, ErrorCode::InvalidArgument, "drift penalty needs the frozen model");
        frozen = one_step_predict_x0(*anchor, xt, t, prompt.condition);
    }
    double drift = 0.0;
    for (std::size_t d = 0; d < frozen.size(); ++d) {
        drift += (out.prediction[d] - frozen[d]) * (out.prediction[d] - frozen[d]);
    }
    if (cfg.mode == ReflMode::LogOnly) {
        out.reward = pairwise ? backend.score_pairwise(req).value : backend.score_pointwise(req).value;
    } else {
        const auto scored = backend.score_with_gradient(req);
        out.reward = scored.score.value;
        // dL/dx̂ for L = w (1 - r) or w (-log r), plus the drift term.
        const double dr = cfg.log_space ? -cfg.reward_weight / std::max(out.reward, 1e-12) : -cfg.reward_weight;
        Vector upstream(model.dim());
        for (std::size_t d = 0; d < upstream.size(); ++d) {
            upstream[d] = dr * scored.grad_a[d];
            if (!frozen.empty()) {
                upstream[d] += 2.0 * cfg.drift_penalty * (out.prediction[d] - frozen[d]);
            }
        }
        out.grad = one_step_weight_grad(model, xt, t, prompt.condition, upstream);
    }
    out.loss = cfg.reward_weight * (cfg.log_space ? -std::log(std::max(out.reward, 1e-12)) : 1.0 - out.reward)
        + cfg.drift_penalty * drift;
    return out;
}

ReflStepResult refl_step(const FlowModel& model, const ScoringBackend& backend, const References& references,
                         const Prompt& prompt, const ReflConfig& cfg, Rng& rng, ReflState& state,
                         const FlowModel* anchor)
{
    cfg.validate();
    const bool gradient = cfg.mode == ReflMode::Gradient;
    require(!gradient || backend.differentiable(), ErrorCode::NotDifferentiable,
        "backend '" + backend.name() + "' has no gradient; use log_only mode");
    require(cfg.drift_penalty == 0.0 || anchor != nullptr, ErrorCode::InvalidArgument, "drift penalty needs the frozen model");
    const bool pairwise = cfg.source == RewardSource::Pairwise;
    const Candidate* reference = nullptr;
    if (pairwise) {
        const auto it = references.find(prompt.condition);
        require(it != references.end() && !it->second.empty(), ErrorCode::InvalidArgument,
            "no reference for condition " + std::to_string(prompt.condition));
        const std::size_t use = state.reference_uses[prompt.condition]++;
        reference = &it->second[use % it->second.size()];
    }
    ReflStepResult out { model, 0.0, {}, {}, {} };
    std::uniform_real_distribution<double> time_dist(cfg.t_min, cfg.t_max);
    Gradient total { Vector(model.net().weights().size(), 0.0) };
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        const double t = cfg.t_min == cfg.t_max ? cfg.t_min : time_dist(rng);
        const Vector x0 = standard_normal(rng, model.dim());
        const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * static_cast<double>(cfg.sample_steps))));
        const Vector xt = t == 0.0 ? x0 : integrate(model, x0, 0.0, t, prompt.condition, steps).final_state();
        const auto sample = refl_sample_loss(model, backend, prompt, reference, xt, t, cfg, anchor);
        if (gradient) {
            accumulate(total, sample.grad, 1.0 / static_cast<double>(cfg.batch_size));
        }
        const double r = sample.reward;
        out.rewards.push_back(r);
        out.predictions.push_back(sample.prediction);
        out.times.push_back(t);
    }
    out.reward = std::accumulate(out.rewards.begin(), out.rewards.end(), 0.0) / static_cast<double>(cfg.batch_size);
    require(std::isfinite(out.reward), ErrorCode::Diverged, "reward became non-finite");
    if (gradient && (cfg.reward_weight != 0.0 || cfg.drift_penalty != 0.0)) {
        out.model = model.with_net(adam_step(model.net(), total, cfg.lr, state.optimizer));
        const auto& w = out.model.net().weights();
        require(std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); }), ErrorCode::Diverged,
            "flow weights became non-finite");
    }
    return out;
}

void RewardLog::append(double reward)
{
    rewards.push_back(reward);
    const std::size_t n = rewards.size();
    const std::size_t begin = n > window ? n - window : 0;
    const double count = static_cast<double>(n - begin);
    double mean = 0.0;
    for (std::size_t i = begin; i < n; ++i) {
        mean += rewards[i];
    }
    mean /= count;
    double var = 0.0;
    for (std::size_t i = begin; i < n; ++i) {
        var += (rewards[i] - mean) * (rewards[i] - mean);
    }
    window_mean.push_back(mean);
    window_std.push_back(std::sqrt(var / count));
}

void write_reward_log_csv(const std::filesystem::path& path, const RewardLog& log)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << "iteration,reward,window_mean,window_std\n";
    out.precision(17);
    for (std::size_t i = 0; i < log.size(); ++i) {
        out << i << ',' << log.rewards[i] << ',' << log.window_mean[i] << ',' << log.window_std[i] << '\n';
    }
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

RewardLog read_reward_log_csv(const std::filesystem::path& path, std::size_t window)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    require(window >= 1, ErrorCode::InvalidArgument, "log window must be at least 1");
    RewardLog log;
    log.window = window;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string iteration, reward;
        require(std::getline(fields, iteration, ',') && std::getline(fields, reward, ','), ErrorCode::Parse,
            path.string() + ":" + std::to_string(lineno) + ": expected iteration,reward,...");
        try {
            log.append(std::stod(reward));
        } catch (const std::logic_error&) {
            fail(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad reward value '" + reward + "'");
        }
    }
    return log;
}

ReflResult run_refl(const FlowModel& model, BackendPtr backend, const ReflConfig& cfg,
                    std::optional<References> references)
{
    cfg.validate();
    require(backend != nullptr, ErrorCode::InvalidArgument, "refl needs a backend");
    const auto prompts = condition_prompts(model.num_classes());
    ReflResult result { model, {}, {}, std::nullopt };
    result.log.window = cfg.log_window;
    if (cfg.source == RewardSource::Pairwise) {
        result.references = references ? std::move(*references) : prepare_references(backend, model, prompts, cfg);
    }
    const FlowModel anchor = model;
    Rng rng(derive_seed(cfg.seed, 0x5ef1));
    ReflState state;
    std::vector<std::size_t> order(prompts.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (it % prompts.size() == 0) {
            std::shuffle(order.begin(), order.end(), rng);
        }
        if (cfg.source == RewardSource::Pairwise && cfg.refresh_interval > 0 && it > 0 && it % cfg.refresh_interval == 0) {
            result.references = prepare_references(backend, result.model, prompts, cfg, it / cfg.refresh_interval);
            state.reference_uses.clear();
        }
        try {
            auto step = refl_step(result.model, *backend, result.references, prompts[order[it % prompts.size()]], cfg,
                rng, state, &anchor);
            result.model = std::move(step.model);
            result.log.append(step.reward);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Diverged && e.code() != ErrorCode::NonFinite) {
                throw;
            }
            result.aborted = "iteration " + std::to_string(it) + ": " + e.what();
            break;
        }
    }
    return result;
}

std::vector<CollapseFlag> detect_variance_collapse(const RewardLog& log, double threshold, std::size_t window)
{
    if (window == 0) {
        window = log.window;
    }
    require(window >= 1, ErrorCode::InvalidArgument, "collapse window must be at least 1");
    const std::size_t blocks = log.size() / window;
    require(blocks >= 2, ErrorCode::InvalidArgument,
        "collapse detection needs at least 2 windows of " + std::to_string(window) + " entries");
    std::vector<double> means(blocks), stds(blocks);
    for (std::size_t k = 0; k < blocks; ++k) {
        const auto first = log.rewards.begin() + static_cast<std::ptrdiff_t>(k * window);
        const auto last = first + static_cast<std::ptrdiff_t>(window);
        const double m = std::accumulate(first, last, 0.0) / static_cast<double>(window);
        double v = 0.0;
        for (auto p = first; p != last; ++p) {
            v += (*p - m) * (*p - m);
        }
        means[k] = m;
        stds[k] = std::sqrt(v / static_cast<double>(window));
    }
    // 90th percentile with linear interpolation between order statistics.
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    const double pos = 0.9 * static_cast<double>(blocks - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, blocks - 1);
    const double p90 = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);

    std::vector<CollapseFlag> flags;
    double max_std = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
        max_std = std::max(max_std, stds[k]);
        if (stds[k] < threshold * max_std && means[k] >= p90) {
            flags.push_back(CollapseFlag { k, k * window, (k + 1) * window, means[k], stds[k] });
        }
    }
    return flags;
}

} // namespace rewarddance
