#include "reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rewarddance {

namespace {

constexpr char kRewardMagic[8] = { 'R', 'D', 'R', 'W', 'D', '0', '0', '1' };

std::span<const double> features_of(const Candidate& c, std::size_t dim)
{
    require(c.features.size() == dim, ErrorCode::Dimension,
        "candidate '" + c.id + "' has " + std::to_string(c.features.size()) + " features, expected "
            + std::to_string(dim));
    return c.features;
}

} // namespace

const char* to_string(Paradigm p)
{
    switch (p) {
    case Paradigm::PointwiseRegressive: return "pointwise_regressive";
    case Paradigm::PointwiseGenerative: return "pointwise_generative";
    case Paradigm::PairwiseGenerative: return "pairwise_generative";
    }
    return "pairwise_generative";
}

Paradigm paradigm_from_string(std::string_view s)
{
    if (s == "pointwise_regressive") return Paradigm::PointwiseRegressive;
    if (s == "pointwise_generative") return Paradigm::PointwiseGenerative;
    if (s == "pairwise_generative") return Paradigm::PairwiseGenerative;
    fail(ErrorCode::Parse, "unknown paradigm '" + std::string(s) + "'");
}

std::size_t RewardModelShape::input_size() const
{
    return (pairwise_input() ? 2 * dim : dim) + num_classes + template_buckets;
}

std::size_t template_bucket(std::string_view template_id, std::size_t buckets)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : template_id) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h % buckets);
}

RewardModel::RewardModel(RewardModelShape shape, ToyNet net)
    : shape_(shape)
    , net_(std::move(net))
{
    require(shape_.dim > 0 && shape_.num_classes > 0 && shape_.template_buckets > 0, ErrorCode::InvalidArgument,
        "reward model shape needs positive dim, classes and template buckets");
    require(net_.input_size() == shape_.input_size(), ErrorCode::Dimension,
        "network input size " + std::to_string(net_.input_size()) + " does not match the encoding size "
            + std::to_string(shape_.input_size()));
    require(net_.output_size() == shape_.output_size(), ErrorCode::Dimension,
        "network output size does not match the reward head");
}

RewardModel RewardModel::create(RewardModelShape shape, const std::vector<std::size_t>& hidden, Activation activation,
                                std::uint64_t seed)
{
    std::vector<std::size_t> sizes { shape.input_size() };
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(shape.output_size());
    return RewardModel(shape, ToyNet::initialized(std::move(sizes), activation, seed));
}

void RewardModel::encode_context(Vector& out, int condition, std::string_view template_id) const
{
    require(condition >= 0 && static_cast<std::size_t>(condition) < shape_.num_classes, ErrorCode::InvalidArgument,
        "condition " + std::to_string(condition) + " outside [0, " + std::to_string(shape_.num_classes) + ")");
    const std::size_t base = out.size();
    out.resize(base + shape_.num_classes + shape_.template_buckets, 0.0);
    out[base + static_cast<std::size_t>(condition)] = 1.0;
    out[base + shape_.num_classes + template_bucket(template_id, shape_.template_buckets)] = 1.0;
}

Vector RewardModel::encode_pair(std::span<const double> a, std::span<const double> b, int condition,
                                std::string_view template_id) const
{
    require(a.size() == shape_.dim && b.size() == shape_.dim, ErrorCode::Dimension, "pair features have wrong dimension");
    Vector out;
    out.reserve(shape_.input_size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    encode_context(out, condition, template_id);
    return out;
}

Vector RewardModel::encode_point(std::span<const double> x, int condition, std::string_view template_id) const
{
    require(x.size() == shape_.dim, ErrorCode::Dimension, "features have wrong dimension");
    Vector out;
    out.reserve(shape_.input_size());
    out.insert(out.end(), x.begin(), x.end());
    encode_context(out, condition, template_id);
    return out;
}

YesProbability yes_probability(std::span<const double> logits, Normalization normalization)
{
    require(logits.size() == kVocabSize, ErrorCode::Dimension, "decision logits must cover the 4-token vocabulary");
    YesProbability out;
    out.dlogits.assign(kVocabSize, 0.0);
    if (normalization == Normalization::YesNoPair) {
        const double p = yes_no_probability(logits[kYes], logits[kNo]);
        out.value = p;
        out.dlogits[kYes] = p * (1.0 - p);
        out.dlogits[kNo] = -p * (1.0 - p);
        return out;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    std::array<double, kVocabSize> e {};
    for (std::size_t k = 0; k < kVocabSize; ++k) {
        e[k] = std::exp(logits[k] - m);
        z += e[k];
    }
    const double p = e[kYes] / z;
    out.value = p;
    for (std::size_t k = 0; k < kVocabSize; ++k) {
        out.dlogits[k] = p * ((k == kYes ? 1.0 : 0.0) - e[k] / z);
    }
    return out;
}

void save_reward_model(const std::filesystem::path& path, const RewardModel& model)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(kRewardMagic, sizeof(kRewardMagic));
    const auto& s = model.shape();
    detail::write_u32(out, static_cast<std::uint32_t>(s.paradigm));
    detail::write_u32(out, static_cast<std::uint32_t>(s.dim));
    detail::write_u32(out, static_cast<std::uint32_t>(s.num_classes));
    detail::write_u32(out, static_cast<std::uint32_t>(s.template_buckets));
    write_net(out, model.net());
}

RewardModel load_reward_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    require(in.gcount() == 8 && std::equal(magic, magic + 8, kRewardMagic), ErrorCode::Parse,
        path.string() + " is not a reward model checkpoint");
    RewardModelShape s;
    const auto paradigm = detail::read_u32(in);
    require(paradigm <= 2, ErrorCode::Parse, "unknown paradigm code in checkpoint");
    s.paradigm = static_cast<Paradigm>(paradigm);
    s.dim = detail::read_u32(in);
    s.num_classes = detail::read_u32(in);
    s.template_buckets = detail::read_u32(in);
    return RewardModel(s, read_net(in));
}

ToyBackend::ToyBackend(RewardModel model, Normalization normalization)
    : model_(std::move(model))
    , normalization_(normalization)
{
}

std::string ToyBackend::name() const
{
    return std::string("toy-") + to_string(model_.shape().paradigm);
}

RewardScore ToyBackend::score_from_logits(const Vector& logits) const
{
    RewardScore s;
    s.value = yes_probability(logits, normalization_).value;
    s.normalization = normalization_;
    s.decision_token_logits = std::map<std::string, double> {
        { "yes", logits[kYes] }, { "no", logits[kNo] }, { "pad", logits[kPad] }, { "unk", logits[kUnk] } };
    return s;
}

std::pair<double, Vector> ToyBackend::point_value(const Candidate& c, const ScoreRequest& req, bool with_grad) const
{
    const auto& shape = model_.shape();
    const Vector input = model_.encode_point(features_of(c, shape.dim), req.prompt.condition, req.instruction.template_id);
    const Vector out = forward(model_.net(), input);
    Vector dout;
    double value = 0.0;
    if (shape.paradigm == Paradigm::PointwiseRegressive) {
        value = out[0];
        dout = { 1.0 };
    } else {
        auto p = yes_probability(out, normalization_);
        value = p.value;
        dout = std::move(p.dlogits);
    }
    Vector grad;
    if (with_grad) {
        auto b = backward(model_.net(), input, dout);
        grad.assign(b.input.begin(), b.input.begin() + static_cast<std::ptrdiff_t>(shape.dim));
    }
    return { value, std::move(grad) };
}

RewardScore ToyBackend::pointwise_impl(const ScoreRequest& req) const
{
    const auto& shape = model_.shape();
    if (shape.paradigm == Paradigm::PointwiseGenerative) {
        const Vector input = model_.encode_point(features_of(req.candidate_a, shape.dim), req.prompt.condition,
            req.instruction.template_id);
        return score_from_logits(forward(model_.net(), input));
    }
    return RewardScore::from_probability(sigmoid(point_value(req.candidate_a, req, false).first));
}

RewardScore ToyBackend::pairwise_impl(const ScoreRequest& req) const
{
    const auto& shape = model_.shape();
    if (shape.paradigm == Paradigm::PairwiseGenerative) {
        const Vector input = model_.encode_pair(features_of(req.candidate_a, shape.dim),
            features_of(*req.candidate_b, shape.dim), req.prompt.condition, req.instruction.template_id);
        return score_from_logits(forward(model_.net(), input));
    }
    const double sa = point_value(req.candidate_a, req, false).first;
    const double sb = point_value(*req.candidate_b, req, false).first;
    return RewardScore::from_probability(sigmoid(sa - sb));
}

ScoreWithGradient ToyBackend::gradient_impl(const ScoreRequest& req) const
{
    const auto& shape = model_.shape();
    ScoreWithGradient out;
    if (!req.pairwise()) {
        auto [v, g] = point_value(req.candidate_a, req, true);
        if (shape.paradigm == Paradigm::PointwiseRegressive) {
            const double p = sigmoid(v);
            for (auto& x : g) x *= p * (1.0 - p);
            out.score = RewardScore::from_probability(p);
        } else {
            out.score = pointwise_impl(req);
        }
        out.grad_a = std::move(g);
        return out;
    }
    if (shape.paradigm == Paradigm::PairwiseGenerative) {
        const Vector input = model_.encode_pair(features_of(req.candidate_a, shape.dim),
            features_of(*req.candidate_b, shape.dim), req.prompt.condition, req.instruction.template_id);
        const Vector logits = forward(model_.net(), input);
        auto p = yes_probability(logits, normalization_);
        auto b = backward(model_.net(), input, p.dlogits);
        out.score = score_from_logits(logits);
        out.grad_a.assign(b.input.begin(), b.input.begin() + static_cast<std::ptrdiff_t>(shape.dim));
        out.grad_b.assign(b.input.begin() + static_cast<std::ptrdiff_t>(shape.dim),
            b.input.begin() + static_cast<std::ptrdiff_t>(2 * shape.dim));
        return out;
    }
    auto [sa, ga] = point_value(req.candidate_a, req, true);
    auto [sb, gb] = point_value(*req.candidate_b, req, true);
    const double p = sigmoid(sa - sb);
    const double dp = p * (1.0 - p);
    for (auto& x : ga) x *= dp;
    for (auto& x : gb) x *= -dp;
    out.score = RewardScore::from_probability(p);
    out.grad_a = std::move(ga);
    out.grad_b = std::move(gb);
    return out;
}

} // namespace rewarddance
