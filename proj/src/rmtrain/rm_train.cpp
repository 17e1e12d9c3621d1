#include "rm_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/parallel.hpp"
#include "core/random.hpp"

namespace rewarddance {

namespace {

const std::string kPairwiseTemplate = "alignment_pairwise";
const std::string kPointwiseTemplate = "quality_pointwise";

// -log softmax(logits)[target] and its gradient.
std::pair<double, Vector> cross_entropy(const Vector& logits, std::size_t target)
{
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) {
        z += std::exp(l - m);
    }
    const double log_z = m + std::log(z);
    Vector g(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        g[k] = std::exp(logits[k] - log_z) - (k == target ? 1.0 : 0.0);
    }
    return { log_z - logits[target], std::move(g) };
}

void check_paradigm(const TrainConfig& cfg, const RewardModel& model, Paradigm expected)
{
    require(cfg.paradigm == expected, ErrorCode::InvalidArgument,
        std::string("config paradigm is ") + to_string(cfg.paradigm) + ", trainer expects " + to_string(expected));
    require(model.shape().paradigm == expected, ErrorCode::InvalidArgument,
        std::string("model head is ") + to_string(model.shape().paradigm) + ", trainer expects " + to_string(expected));
}

std::vector<const PreferencePair*> train_split(const std::vector<PreferencePair>& pairs)
{
    std::vector<const PreferencePair*> out;
    for (const auto& p : pairs) {
        if (p.split == Split::Train) {
            out.push_back(&p);
        }
    }
    require(!out.empty(), ErrorCode::Empty, "no Train-split pairs to train on");
    return out;
}

// Mini-batch SGD over `num_examples` examples; example_loss(i, model)
// returns the loss and gradient of example i.
template <typename ExampleLoss>
TrainResult run_sgd(const TrainConfig& cfg, const RewardModel& initial, std::size_t num_examples,
                    ExampleLoss&& example_loss)
{
    cfg.validate();
    TrainResult result { initial, {} };
    Vector velocity;
    AdamState adam;
    std::vector<std::size_t> order(num_examples);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(cfg.seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < num_examples; start += cfg.batch_size) {
            const std::size_t end = std::min(num_examples, start + cfg.batch_size);
            Gradient batch;
            batch.values.assign(result.model.net().weights().size(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                LossAndGradient lg = example_loss(order[k], result.model);
                epoch_loss += lg.loss;
                accumulate(batch, lg.grad);
                ++result.stats.examples_seen;
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto& g : batch.values) {
                g *= scale;
            }
            if (!std::all_of(batch.values.begin(), batch.values.end(), [](double g) { return std::isfinite(g); })) {
                fail(ErrorCode::Diverged, "non-finite gradient in epoch " + std::to_string(epoch));
            }
            result.model = result.model.with_net(cfg.optimizer == Optimizer::Adam
                    ? adam_step(result.model.net(), batch, cfg.lr, adam)
                    : sgd_step(result.model.net(), batch, cfg.lr, cfg.momentum, velocity));
        }
        epoch_loss /= static_cast<double>(num_examples);
        if (!std::isfinite(epoch_loss)) {
            fail(ErrorCode::Diverged, "training loss diverged in epoch " + std::to_string(epoch));
        }
        result.stats.epoch_losses.push_back(epoch_loss);
    }
    return result;
}

} // namespace

const char* to_string(Optimizer o)
{
    return o == Optimizer::Adam ? "adam" : "sgd";
}

Optimizer optimizer_from_string(std::string_view s)
{
    if (s == "adam") return Optimizer::Adam;
    if (s == "sgd") return Optimizer::Sgd;
    fail(ErrorCode::Parse, "unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const
{
    require(lr >= 0.0 && std::isfinite(lr), ErrorCode::Config, "lr must be a finite non-negative number");
    require(momentum >= 0.0 && momentum < 1.0, ErrorCode::Config, "momentum must be in [0, 1)");
    require(epochs >= 1, ErrorCode::Config, "epochs must be >= 1");
    require(ce_coefficient >= 0.0, ErrorCode::Config, "ce_coefficient must be >= 0");
    require(batch_size >= 1, ErrorCode::Config, "batch_size must be >= 1");
    require(!hidden.empty(), ErrorCode::Config, "at least one hidden layer is required");
    require(template_buckets >= 1, ErrorCode::Config, "template_buckets must be >= 1");
}

TrainConfig TrainConfig::from_config(const Config& c)
{
    TrainConfig t;
    try {
        t.paradigm = paradigm_from_string(c.get_string("train.paradigm", to_string(t.paradigm)));
    } catch (const Error& e) {
        c.invalid("train.paradigm", e.what());
    }
    try {
        t.optimizer = optimizer_from_string(c.get_string("train.optimizer", to_string(t.optimizer)));
    } catch (const Error& e) {
        c.invalid("train.optimizer", e.what());
    }
    t.lr = c.get_double("train.lr", t.lr);
    t.momentum = c.get_double("train.momentum", t.momentum);
    const auto epochs = c.get_int("train.epochs", static_cast<std::int64_t>(t.epochs));
    if (epochs < 1) {
        c.invalid("train.epochs", "must be >= 1");
    }
    t.epochs = static_cast<std::size_t>(epochs);
    t.ce_coefficient = c.get_double("train.ce_coefficient", t.ce_coefficient);
    if (t.ce_coefficient < 0) {
        c.invalid("train.ce_coefficient", "must be >= 0");
    }
    const auto batch = c.get_int("train.batch_size", static_cast<std::int64_t>(t.batch_size));
    if (batch < 1) {
        c.invalid("train.batch_size", "must be >= 1");
    }
    t.batch_size = static_cast<std::size_t>(batch);
    t.seed = c.get_uint("train.seed", t.seed);
    t.swap_augment = c.get_bool("train.swap_augment", t.swap_augment);
    std::vector<std::int64_t> fallback(t.hidden.begin(), t.hidden.end());
    t.hidden.clear();
    for (auto h : c.get_int_list("train.hidden", fallback)) {
        if (h < 1) {
            c.invalid("train.hidden", "hidden widths must be >= 1");
        }
        t.hidden.push_back(static_cast<std::size_t>(h));
    }
    if (t.hidden.empty()) {
        c.invalid("train.hidden", "at least one hidden width is required");
    }
    try {
        t.activation = activation_from_string(c.get_string("train.activation", to_string(t.activation)));
    } catch (const Error& e) {
        c.invalid("train.activation", e.what());
    }
    try {
        t.normalization = normalization_from_string(c.get_string("train.normalization", to_string(t.normalization)));
    } catch (const Error& e) {
        c.invalid("train.normalization", e.what());
    }
    if (t.lr < 0) {
        c.invalid("train.lr", "must be >= 0");
    }
    if (t.momentum < 0 || t.momentum >= 1) {
        c.invalid("train.momentum", "must be in [0, 1)");
    }
    return t;
}

double bt_loss(double r_w, double r_l)
{
    require(std::isfinite(r_w) && std::isfinite(r_l), ErrorCode::NonFinite, "bt_loss needs finite rewards");
    return -log_sigmoid(r_w - r_l);
}

double bt_loss_grad(double r_w, double r_l)
{
    return sigmoid(r_w - r_l) - 1.0;
}

LossAndGradient regressive_pair_loss(const RewardModel& model, const PreferencePair& pair)
{
    const int c = pair.prompt.condition;
    const Vector xw = model.encode_point(pair.chosen.features, c, kPointwiseTemplate);
    const Vector xl = model.encode_point(pair.rejected.features, c, kPointwiseTemplate);
    const double rw = forward(model.net(), xw)[0];
    const double rl = forward(model.net(), xl)[0];
    const double g = bt_loss_grad(rw, rl);
    LossAndGradient out { bt_loss(rw, rl), {} };
    const Vector gw { g };
    const Vector gl { -g };
    out.grad = backward(model.net(), xw, gw).weights;
    accumulate(out.grad, backward(model.net(), xl, gl).weights);
    return out;
}

LossAndGradient pointwise_generative_pair_loss(const RewardModel& model, const PreferencePair& pair,
                                               double ce_coefficient, Normalization normalization)
{
    const int c = pair.prompt.condition;
    const Vector xw = model.encode_point(pair.chosen.features, c, kPointwiseTemplate);
    const Vector xl = model.encode_point(pair.rejected.features, c, kPointwiseTemplate);
    const Vector lw = forward(model.net(), xw);
    const Vector ll = forward(model.net(), xl);
    const auto pw = yes_probability(lw, normalization);
    const auto pl = yes_probability(ll, normalization);

    // BT on the yes-probabilities plus lambda * (CE(chosen -> yes) + CE(rejected -> no)).
    const double g_bt = bt_loss_grad(pw.value, pl.value);
    auto [ce_w, dce_w] = cross_entropy(lw, kYes);
    auto [ce_l, dce_l] = cross_entropy(ll, kNo);

    Vector dw(kVocabSize), dl(kVocabSize);
    for (std::size_t k = 0; k < kVocabSize; ++k) {
        dw[k] = g_bt * pw.dlogits[k] + ce_coefficient * dce_w[k];
        dl[k] = -g_bt * pl.dlogits[k] + ce_coefficient * dce_l[k];
    }
    LossAndGradient out { bt_loss(pw.value, pl.value) + ce_coefficient * (ce_w + ce_l), {} };
    out.grad = backward(model.net(), xw, dw).weights;
    accumulate(out.grad, backward(model.net(), xl, dl).weights);
    return out;
}

LossAndGradient pairwise_generative_loss(const RewardModel& model, const Prompt& prompt, const Candidate& first,
                                         const Candidate& second, Token target)
{
    const Vector x = model.encode_pair(first.features, second.features, prompt.condition, kPairwiseTemplate);
    const Vector logits = forward(model.net(), x);
    auto [loss, dlogits] = cross_entropy(logits, target);
    return LossAndGradient { loss, backward(model.net(), x, dlogits).weights };
}

TrainResult train_regressive(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs, const RewardModel& model)
{
    check_paradigm(cfg, model, Paradigm::PointwiseRegressive);
    const auto train = train_split(pairs);
    return run_sgd(cfg, model, train.size(),
        [&](std::size_t i, const RewardModel& m) { return regressive_pair_loss(m, *train[i]); });
}

TrainResult train_pointwise_generative(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs,
                                       const RewardModel& model)
{
    check_paradigm(cfg, model, Paradigm::PointwiseGenerative);
    const auto train = train_split(pairs);
    return run_sgd(cfg, model, train.size(), [&](std::size_t i, const RewardModel& m) {
        return pointwise_generative_pair_loss(m, *train[i], cfg.ce_coefficient, cfg.normalization);
    });
}

TrainResult train_pairwise_generative(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs,
                                      const RewardModel& model)
{
    check_paradigm(cfg, model, Paradigm::PairwiseGenerative);
    const auto train = train_split(pairs);
    const std::size_t n = train.size();
    // Examples [0, n) are (chosen, rejected) -> yes; [n, 2n) the swapped
    // orientation -> no.
    const std::size_t num_examples = cfg.swap_augment ? 2 * n : n;
    return run_sgd(cfg, model, num_examples, [&](std::size_t i, const RewardModel& m) {
        if (i < n) {
            return pairwise_generative_loss(m, train[i]->prompt, train[i]->chosen, train[i]->rejected, kYes);
        }
        const auto& p = *train[i - n];
        return pairwise_generative_loss(m, p.prompt, p.rejected, p.chosen, kNo);
    });
}

RewardModel initial_reward_model(const TrainConfig& cfg, std::size_t dim, std::size_t num_classes)
{
    RewardModelShape shape { cfg.paradigm, dim, num_classes, cfg.template_buckets };
    return RewardModel::create(shape, cfg.hidden, cfg.activation, derive_seed(cfg.seed, 0x5eed));
}

TrainResult train_reward_model(const TrainConfig& cfg, const std::vector<PreferencePair>& pairs, std::size_t dim,
                               std::size_t num_classes)
{
    const RewardModel init = initial_reward_model(cfg, dim, num_classes);
    switch (cfg.paradigm) {
    case Paradigm::PointwiseRegressive: return train_regressive(cfg, pairs, init);
    case Paradigm::PointwiseGenerative: return train_pointwise_generative(cfg, pairs, init);
    case Paradigm::PairwiseGenerative: return train_pairwise_generative(cfg, pairs, init);
    }
    fail(ErrorCode::Internal, "unhandled paradigm");
}

Json to_json(const AccuracyReport& r)
{
    return Json { { "split", to_string(r.split) }, { "correct", r.correct }, { "ties", r.ties }, { "total", r.total },
        { "accuracy", r.accuracy } };
}

AccuracyReport eval_accuracy(const ScoringBackend& backend, const std::vector<PreferencePair>& pairs, Split split,
                             std::size_t threads)
{
    std::vector<const PreferencePair*> selected;
    for (const auto& p : pairs) {
        if (p.split == split) {
            selected.push_back(&p);
        }
    }
    require(!selected.empty(), ErrorCode::Empty, std::string("no pairs in split '") + to_string(split) + "'");

    const bool pairwise = backend.supports_pairwise();
    const Instruction instruction = default_instruction(pairwise);
    // +1 correct, 0 tie, -1 wrong
    std::vector<int> outcome(selected.size(), 0);
    parallel_for(selected.size(), threads, [&](std::size_t i) {
        const auto& p = *selected[i];
        if (pairwise) {
            const double r = backend.score_pairwise(make_pairwise_request(p.prompt, p.chosen, p.rejected, instruction)).value;
            outcome[i] = r > 0.5 ? 1 : (r < 0.5 ? -1 : 0);
        } else {
            const double rw = backend.score_pointwise(make_pointwise_request(p.prompt, p.chosen, instruction)).value;
            const double rl = backend.score_pointwise(make_pointwise_request(p.prompt, p.rejected, instruction)).value;
            outcome[i] = rw > rl ? 1 : (rw < rl ? -1 : 0);
        }
    });

    AccuracyReport r;
    r.split = split;
    r.total = selected.size();
    r.correct = static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), 1));
    r.ties = static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), 0));
    r.accuracy = (static_cast<double>(r.correct) + 0.5 * static_cast<double>(r.ties)) / static_cast<double>(r.total);
    return r;
}

} // namespace rewarddance
