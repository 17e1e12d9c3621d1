#include "eval.hpp"

#include <cmath>
#include <numeric>

#include "core/random.hpp"
#include "scorer/reward_model.hpp"

namespace rewarddance {

double gsb_score(const GsbTally& t)
{
    require(t.total() > 0, ErrorCode::Empty, "GSB score needs at least one judgment");
    return (static_cast<double>(t.good) - static_cast<double>(t.bad)) / static_cast<double>(t.total());
}

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Good: return "good";
    case Verdict::Same: return "same";
    case Verdict::Bad: return "bad";
    }
    return "same";
}

Verdict verdict_from_string(std::string_view s)
{
    if (s == "good") return Verdict::Good;
    if (s == "same") return Verdict::Same;
    if (s == "bad") return Verdict::Bad;
    fail(ErrorCode::Parse, "unknown verdict '" + std::string(s) + "'");
}

Json to_json(const JudgeVerdict& v)
{
    return Json { { "prompt_id", v.prompt_id }, { "verdict", to_string(v.verdict) }, { "margin", v.margin } };
}

JudgeVerdict verdict_from_json(const Json& j)
{
    try {
        return JudgeVerdict { j.at("prompt_id").get<std::string>(), verdict_from_string(j.at("verdict").get<std::string>()),
            j.at("margin").get<double>() };
    } catch (const Json::exception& e) {
        fail(ErrorCode::Parse, std::string("verdict record: ") + e.what());
    }
}

JudgeVerdict judge_pair(const ScoringBackend& backend, const Prompt& prompt, const Candidate& a, const Candidate& b,
                        double tau)
{
    require(tau >= 0.0, ErrorCode::InvalidArgument, "Same threshold must be >= 0");
    const auto* sym = dynamic_cast<const SymmetrizedBackend*>(&backend);
    std::shared_ptr<const SymmetrizedBackend> owned;
    if (sym == nullptr) {
        owned = std::make_shared<SymmetrizedBackend>(BackendPtr(&backend, [](const ScoringBackend*) {}));
        sym = owned.get();
    }
    const double margin = sym->margin(make_pairwise_request(prompt, a, b, default_instruction(true)));
    JudgeVerdict v { prompt.id, Verdict::Same, margin };
    if (margin != 0.0) {
        if (margin >= tau) {
            v.verdict = Verdict::Good;
        } else if (margin <= -tau) {
            v.verdict = Verdict::Bad;
        }
    }
    return v;
}

GsbTally tally(const std::vector<JudgeVerdict>& verdicts)
{
    GsbTally t;
    for (const auto& v : verdicts) {
        switch (v.verdict) {
        case Verdict::Good: ++t.good; break;
        case Verdict::Same: ++t.same; break;
        case Verdict::Bad: ++t.bad; break;
        }
    }
    return t;
}

double alignment_rubric(const std::vector<int>& scores)
{
    require(!scores.empty(), ErrorCode::Empty, "rubric needs at least one rating");
    long sum = 0;
    for (int s : scores) {
        require(s >= 0 && s <= 2, ErrorCode::InvalidArgument, "rubric ratings must be 0, 1 or 2, got " + std::to_string(s));
        sum += s;
    }
    return static_cast<double>(sum) / static_cast<double>(scores.size());
}

Mixture SyntheticSpec::mixture() const
{
    return Mixture::standard(dim, num_classes, radius);
}

QualityModel SyntheticSpec::quality_model(Split split) const
{
    return QualityModel { split == Split::OOD ? mixture().shifted(ood_shift) : mixture(), quality_tau };
}

void SyntheticSpec::validate() const
{
    require(noise_rate >= 0.0 && noise_rate < 0.5, ErrorCode::Config, "noise_rate must be in [0, 0.5)");
    require(ood_shift >= 0.0, ErrorCode::Config, "ood_shift must be >= 0");
    require(dim >= 1, ErrorCode::Config, "dim must be >= 1");
    require(num_classes >= 1, ErrorCode::Config, "num_classes must be >= 1");
    require(id_pairs + ood_pairs <= num_pairs, ErrorCode::Config, "id_pairs + ood_pairs exceeds num_pairs");
    require(spread > 0.0 && quality_tau > 0.0, ErrorCode::Config, "spread and quality_tau must be positive");
}

SyntheticSpec SyntheticSpec::from_config(const Config& c)
{
    SyntheticSpec s;
    auto count = [&](const std::string& key, std::size_t fallback) {
        const auto v = c.get_int(key, static_cast<std::int64_t>(fallback));
        if (v < 0) {
            c.invalid(key, "must be >= 0");
        }
        return static_cast<std::size_t>(v);
    };
    s.num_pairs = count("data.num_pairs", s.num_pairs);
    s.id_pairs = count("data.id_pairs", s.num_pairs / 6);
    s.ood_pairs = count("data.ood_pairs", s.num_pairs / 6);
    s.noise_rate = c.get_double("data.noise_rate", s.noise_rate);
    if (s.noise_rate < 0 || s.noise_rate >= 0.5) {
        c.invalid("data.noise_rate", "must be in [0, 0.5)");
    }
    s.dim = count("data.dim", s.dim);
    if (s.dim < 1) {
        c.invalid("data.dim", "must be >= 1");
    }
    s.num_classes = count("data.num_classes", s.num_classes);
    if (s.num_classes < 1) {
        c.invalid("data.num_classes", "must be >= 1");
    }
    s.ood_shift = c.get_double("data.ood_shift", s.ood_shift);
    if (s.ood_shift < 0) {
        c.invalid("data.ood_shift", "must be >= 0");
    }
    s.seed = c.get_uint("data.seed", s.seed);
    s.holdout_class = c.get_bool("data.holdout_class", s.holdout_class);
    s.radius = c.get_double("data.radius", s.radius);
    s.spread = c.get_double("data.spread", s.spread);
    if (s.spread <= 0) {
        c.invalid("data.spread", "must be > 0");
    }
    s.quality_tau = c.get_double("data.quality_tau", s.quality_tau);
    if (s.quality_tau <= 0) {
        c.invalid("data.quality_tau", "must be > 0");
    }
    if (s.id_pairs + s.ood_pairs > s.num_pairs) {
        c.invalid("data.num_pairs", "smaller than id_pairs + ood_pairs");
    }
    return s;
}

namespace {

Candidate draw_candidate(Rng& rng, const QualityModel& qm, int condition, double spread, const std::string& id)
{
    const auto& mu = qm.mixture.means[static_cast<std::size_t>(condition)];
    Vector dir = standard_normal(rng, mu.size());
    double norm = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
    if (norm == 0.0) {
        dir[0] = 1.0;
        norm = 1.0;
    }
    const double r = uniform(rng, 0.0, spread);
    Candidate c;
    c.id = id;
    c.features.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        c.features[i] = mu[i] + r * dir[i] / norm;
    }
    c.oracle_quality = qm.quality(c.features, condition);
    return c;
}

} // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    SyntheticDataset out;
    out.pairs.reserve(spec.num_pairs);
    const QualityModel in_dist = spec.quality_model(Split::ID);
    const QualityModel shifted = spec.quality_model(Split::OOD);
    const int seen_classes = spec.holdout_class && spec.num_classes > 1 ? static_cast<int>(spec.num_classes) - 1
                                                                        : static_cast<int>(spec.num_classes);
    const std::size_t train_end = spec.train_pairs();
    const std::size_t id_end = train_end + spec.id_pairs;

    for (std::size_t i = 0; i < spec.num_pairs; ++i) {
        Rng rng(derive_seed(spec.seed, i));
        const Split split = i < train_end ? Split::Train : (i < id_end ? Split::ID : Split::OOD);
        const bool ood = split == Split::OOD;
        const int classes = ood ? static_cast<int>(spec.num_classes) : seen_classes;
        const int condition = std::uniform_int_distribution<int>(0, classes - 1)(rng);
        const QualityModel& qm = ood ? shifted : in_dist;

        PreferencePair p;
        p.prompt.id = "p" + std::to_string(i);
        p.prompt.text = "an image of class " + std::to_string(condition);
        p.prompt.condition = condition;
        p.split = split;
        Candidate a = draw_candidate(rng, qm, condition, spec.spread, p.prompt.id + "_a");
        Candidate b = draw_candidate(rng, qm, condition, spec.spread, p.prompt.id + "_b");
        if (*b.oracle_quality > *a.oracle_quality) {
            std::swap(a, b);
        }
        if (std::bernoulli_distribution(spec.noise_rate)(rng)) {
            std::swap(a, b);
            out.flipped.push_back(i);
        }
        p.chosen = std::move(a);
        p.rejected = std::move(b);
        out.pairs.push_back(std::move(p));
    }
    return out;
}

std::vector<ScalingRow> scaling_report(const std::vector<std::size_t>& widths, const std::vector<PreferencePair>& pairs,
                                       std::size_t dim, std::size_t num_classes, const TrainConfig& cfg)
{
    require(widths.size() >= 2, ErrorCode::InvalidArgument, "a scaling report needs at least two widths");
    std::vector<ScalingRow> rows;
    for (std::size_t w : widths) {
        TrainConfig c = cfg;
        c.paradigm = Paradigm::PairwiseGenerative;
        c.hidden.assign(cfg.hidden.size(), w);
        const auto trained = train_reward_model(c, pairs, dim, num_classes);
        const ToyBackend backend(trained.model, c.normalization);
        rows.push_back({ w, eval_accuracy(backend, pairs, Split::ID).accuracy, eval_accuracy(backend, pairs, Split::OOD).accuracy });
    }
    return rows;
}

} // namespace rewarddance
