#include "client.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "core/error.hpp"
#include "core/serialization.hpp"

namespace rewarddance {

RemoteConfig RemoteConfig::from_config(const Config& c)
{
    RemoteConfig r;
    r.base_url = c.get_string("remote.base_url", r.base_url);
    r.model_name = c.get_string("remote.model_name", r.model_name);
    r.api_key_env_var_name = c.get_string("remote.api_key_env_var_name", r.api_key_env_var_name);
    r.timeout_ms = static_cast<int>(c.get_int("remote.timeout_ms", r.timeout_ms));
    r.max_retries = static_cast<int>(c.get_int("remote.max_retries", r.max_retries));
    r.max_in_flight = static_cast<int>(c.get_int("remote.max_in_flight", r.max_in_flight));
    r.top_logprobs = static_cast<int>(c.get_int("remote.top_logprobs", r.top_logprobs));
    r.backoff_base_ms = static_cast<int>(c.get_int("remote.backoff_base_ms", r.backoff_base_ms));
    r.backoff_max_ms = static_cast<int>(c.get_int("remote.backoff_max_ms", r.backoff_max_ms));
    r.decision_tokens.yes_token = c.get_string("remote.yes_token", r.decision_tokens.yes_token);
    r.decision_tokens.no_token = c.get_string("remote.no_token", r.decision_tokens.no_token);
    if (r.timeout_ms <= 0) c.invalid("remote.timeout_ms", "must be positive");
    if (r.max_retries < 0) c.invalid("remote.max_retries", "must be non-negative");
    if (r.max_in_flight < 1 || r.max_in_flight > 1024) c.invalid("remote.max_in_flight", "must be in [1, 1024]");
    if (r.top_logprobs < 5) c.invalid("remote.top_logprobs", "must be at least 5");
    if (r.backoff_base_ms < 0 || r.backoff_max_ms < r.backoff_base_ms) c.invalid("remote.backoff_max_ms", "need 0 <= base <= max");
    if (r.decision_tokens.yes_token == r.decision_tokens.no_token) c.invalid("remote.no_token", "must differ from yes_token");
    return r;
}

void RemoteConfig::validate() const
{
    require(timeout_ms > 0, ErrorCode::Config, "remote timeout must be positive");
    require(max_retries >= 0, ErrorCode::Config, "remote max_retries must be non-negative");
    require(max_in_flight >= 1 && max_in_flight <= 1024, ErrorCode::Config, "remote max_in_flight must be in [1, 1024]");
    require(top_logprobs >= 5, ErrorCode::Config, "remote top_logprobs must be at least 5");
    require(backoff_base_ms >= 0 && backoff_max_ms >= backoff_base_ms, ErrorCode::Config, "remote backoff bounds invalid");
    require(!decision_tokens.yes_token.empty() && !decision_tokens.no_token.empty()
            && decision_tokens.yes_token != decision_tokens.no_token,
        ErrorCode::Config, "decision tokens must be non-empty and distinct");
    require(base_url.rfind("http://", 0) == 0 || base_url.rfind("https://", 0) == 0, ErrorCode::Config,
        "remote base_url must start with http:// or https://");
}

std::vector<std::string> token_variants(const std::string& token)
{
    std::string cap = token, upper = token;
    if (!cap.empty()) {
        cap[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cap[0])));
    }
    std::transform(upper.begin(), upper.end(), upper.begin(),
        [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    std::vector<std::string> out;
    for (const auto& v : { token, " " + token, cap, " " + cap, upper, " " + upper }) {
        if (std::find(out.begin(), out.end(), v) == out.end()) {
            out.push_back(v);
        }
    }
    return out;
}

std::map<std::string, double> DecisionLogprobs::as_map(const DecisionTokens& tokens) const
{
    return { { tokens.yes_token, yes_logprob }, { tokens.no_token, no_logprob } };
}

DecisionLogprobs extract_decision(const std::vector<std::pair<std::string, double>>& top, const DecisionTokens& tokens)
{
    require(!top.empty(), ErrorCode::RemoteMalformed, "response has an empty top_logprobs list");
    auto find = [&](const std::string& token) -> std::optional<std::pair<std::string, double>> {
        for (const auto& variant : token_variants(token)) {
            for (const auto& entry : top) {
                if (entry.first == variant) {
                    return entry;
                }
            }
        }
        return std::nullopt;
    };
    const auto yes = find(tokens.yes_token);
    const auto no = find(tokens.no_token);
    require(yes || no, ErrorCode::RemoteNoDecision,
        "neither '" + tokens.yes_token + "' nor '" + tokens.no_token + "' appears in the top-" + std::to_string(top.size())
            + " logprobs");
    double mass = 0.0;
    double smallest = 1.0;
    for (const auto& [token, lp] : top) {
        require(std::isfinite(lp) && lp <= 1e-9, ErrorCode::RemoteMalformed, "logprob for '" + token + "' is not a log-probability");
        const double p = std::exp(lp);
        mass += p;
        smallest = std::min(smallest, p);
    }
    const double residual = std::max(1.0 - mass, 1e-300);
    const double floor = std::log(std::min(residual, smallest));

    DecisionLogprobs out;
    if (yes) {
        out.yes_token_matched = yes->first;
        out.yes_logprob = yes->second;
    } else {
        out.yes_logprob = floor;
        out.yes_floored = true;
    }
    if (no) {
        out.no_token_matched = no->first;
        out.no_logprob = no->second;
    } else {
        out.no_logprob = floor;
        out.no_floored = true;
    }
    return out;
}

std::vector<std::pair<std::string, double>> parse_top_logprobs(const std::string& body)
{
    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::RemoteMalformed, std::string("response is not JSON: ") + e.what());
    }
    try {
        const auto& list = j.at("choices").at(0).at("logprobs").at("content").at(0).at("top_logprobs");
        std::vector<std::pair<std::string, double>> out;
        for (const auto& entry : list) {
            out.emplace_back(entry.at("token").get<std::string>(), entry.at("logprob").get<double>());
        }
        return out;
    } catch (const Json::exception& e) {
        fail(ErrorCode::RemoteMalformed, std::string("response lacks choices[0].logprobs.content[0].top_logprobs: ") + e.what());
    }
}

std::string build_request_body(const RemoteConfig& cfg, const std::string& rendered_prompt,
                               const std::vector<std::string>& media_refs)
{
    Json content = Json::array();
    content.push_back(Json { { "type", "text" }, { "text", rendered_prompt } });
    for (const auto& ref : media_refs) {
        content.push_back(Json { { "type", "image_url" }, { "image_url", Json { { "url", ref } } } });
    }
    const Json body { { "model", cfg.model_name },
        { "messages", Json::array({ Json { { "role", "user" }, { "content", content } } }) }, { "logprobs", true },
        { "top_logprobs", cfg.top_logprobs }, { "max_tokens", 1 }, { "temperature", 0 } };
    return body.dump();
}

RemoteClient::RemoteClient(RemoteConfig cfg, std::shared_ptr<spdlog::logger> logger)
    : cfg_(std::move(cfg))
    , logger_(logger ? std::move(logger) : spdlog::default_logger())
    , in_flight_(cfg_.max_in_flight)
    , jitter_rng_(std::random_device {}())
{
    cfg_.validate();
}

std::chrono::milliseconds RemoteClient::backoff(int attempt) const
{
    const double base = std::min<double>(cfg_.backoff_max_ms, cfg_.backoff_base_ms * std::pow(2.0, attempt));
    double jitter = 0.0;
    {
        std::lock_guard lock(rng_mutex_);
        jitter = uniform(jitter_rng_, 0.5, 1.0);
    }
    return std::chrono::milliseconds(static_cast<long>(base * jitter));
}

namespace {

struct SemaphoreGuard {
    std::counting_semaphore<1024>& sem;
    explicit SemaphoreGuard(std::counting_semaphore<1024>& s)
        : sem(s)
    {
        sem.acquire();
    }
    ~SemaphoreGuard() { sem.release(); }
};

bool retryable_status(int status)
{
    return status == 408 || status == 429 || status >= 500;
}

} // namespace

DecisionLogprobs RemoteClient::fetch_decision_logprobs(const std::string& rendered_prompt,
                                                       const std::vector<std::string>& media_refs) const
{
    const std::string body = build_request_body(cfg_, rendered_prompt, media_refs);
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env_var_name.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string path = "/v1/chat/completions";
    const int attempts = cfg_.max_retries + 1;
    ErrorCode last_code = ErrorCode::RemoteHttp;
    std::string last_error;

    SemaphoreGuard guard(in_flight_);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto wait = backoff(attempt - 1);
            logger_->warn("remote attempt {}/{} to {} failed ({}); retrying in {} ms", attempt, attempts, cfg_.base_url,
                last_error, wait.count());
            std::this_thread::sleep_for(wait);
        }
        httplib::Client cli(cfg_.base_url);
        const auto seconds = cfg_.timeout_ms / 1000;
        const auto micros = (cfg_.timeout_ms % 1000) * 1000;
        cli.set_connection_timeout(seconds, micros);
        cli.set_read_timeout(seconds, micros);
        cli.set_write_timeout(seconds, micros);
        logger_->debug("remote POST {}{} model={} bytes={}", cfg_.base_url, path, cfg_.model_name, body.size());
        const auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timeout = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                || err == httplib::Error::Write;
            last_code = timeout ? ErrorCode::RemoteTimeout : ErrorCode::RemoteHttp;
            last_error = timeout ? "timed out after " + std::to_string(cfg_.timeout_ms) + " ms"
                                 : "transport error: " + httplib::to_string(err);
            continue;
        }
        if (res->status != 200) {
            last_code = ErrorCode::RemoteHttp;
            last_error = "HTTP " + std::to_string(res->status);
            if (!retryable_status(res->status)) {
                fail(ErrorCode::RemoteHttp, "remote endpoint returned " + last_error + " (not retried)");
            }
            continue;
        }
        auto out = extract_decision(parse_top_logprobs(res->body), cfg_.decision_tokens);
        out.attempts = static_cast<std::size_t>(attempt) + 1;
        if (out.floored()) {
            logger_->warn("decision token missing from top-{} logprobs; using floor {:.4f}", cfg_.top_logprobs,
                out.yes_floored ? out.yes_logprob : out.no_logprob);
        }
        return out;
    }
    logger_->error("remote request to {} failed after {} attempts: {}", cfg_.base_url, attempts, last_error);
    fail(last_code, "remote request failed after " + std::to_string(attempts) + " attempts: " + last_error);
}

RemoteBackend::RemoteBackend(std::shared_ptr<const RemoteClient> client, Normalization normalization,
                             std::optional<PromptTemplate> template_override)
    : client_(std::move(client))
    , normalization_(normalization)
    , template_override_(std::move(template_override))
{
    require(client_ != nullptr, ErrorCode::InvalidArgument, "remote backend needs a client");
    require(!template_override_ || template_override_->cot_order != CotOrder::ReasoningFirst, ErrorCode::InvalidArgument,
        "remote scoring reads the first generated token and needs a decision-first template, got '"
            + (template_override_ ? template_override_->template_id : std::string()) + "'");
}

std::string RemoteBackend::render(const ScoreRequest& req) const
{
    const PromptTemplate& t = template_override_ ? *template_override_ : builtin_template(req.instruction.template_id);
    require(t.cot_order != CotOrder::ReasoningFirst, ErrorCode::InvalidArgument,
        "remote scoring reads the first generated token and needs a decision-first template, got '" + t.template_id + "'");
    return render_prompt(t, req);
}

RewardScore RemoteBackend::score(const ScoreRequest& req) const
{
    std::vector<std::string> media;
    if (req.candidate_a.media_ref) media.push_back(*req.candidate_a.media_ref);
    if (req.candidate_b && req.candidate_b->media_ref) media.push_back(*req.candidate_b->media_ref);
    const auto d = client_->fetch_decision_logprobs(render(req), media);
    RewardScore s = RewardScore::from_yes_no(d.yes_logprob, d.no_logprob);
    if (normalization_ == Normalization::FullVocab) {
        s.value = std::exp(d.yes_logprob);
        s.normalization = Normalization::FullVocab;
    }
    return s;
}

RewardScore RemoteBackend::pairwise_impl(const ScoreRequest& req) const
{
    return score(req);
}

RewardScore RemoteBackend::pointwise_impl(const ScoreRequest& req) const
{
    return score(req);
}

} // namespace rewarddance
