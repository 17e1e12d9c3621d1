#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <spdlog/logger.h>

#include "core/config.hpp"
#include "core/random.hpp"
#include "scorer/backend.hpp"

namespace rewarddance {

struct DecisionTokens {
    std::string yes_token = "yes";
    std::string no_token = "no";
};

struct RemoteConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string model_name = "reward-model";
    std::string api_key_env_var_name = "REWARDDANCE_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
    int max_in_flight = 4;
    int top_logprobs = 5;
    int backoff_base_ms = 200;
    int backoff_max_ms = 5000;
    DecisionTokens decision_tokens;

    static RemoteConfig from_config(const Config& c);
    void validate() const;
};

// Spellings tried for a decision token, in priority order: as given, with a
// leading space, capitalized, capitalized with a leading space, upper case.
std::vector<std::string> token_variants(const std::string& token);

struct DecisionLogprobs {
    double yes_logprob = 0.0;
    double no_logprob = 0.0;
    std::string yes_token_matched; // empty when floored
    std::string no_token_matched;
    bool yes_floored = false;
    bool no_floored = false;
    std::size_t attempts = 0;

    std::map<std::string, double> as_map(const DecisionTokens& tokens) const;
    bool floored() const { return yes_floored || no_floored; }
};

// Picks the decision tokens out of one position's top-k list. A missing
// token gets log(min(residual mass, smallest listed probability)).
DecisionLogprobs extract_decision(const std::vector<std::pair<std::string, double>>& top_logprobs,
                                  const DecisionTokens& tokens);

// Reads choices[0].logprobs.content[0].top_logprobs from a response body.
std::vector<std::pair<std::string, double>> parse_top_logprobs(const std::string& body);

std::string build_request_body(const RemoteConfig& cfg, const std::string& rendered_prompt,
                               const std::vector<std::string>& media_refs);

// Thread-safe client; at most max_in_flight requests run at once.
class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig cfg, std::shared_ptr<spdlog::logger> logger = nullptr);

    const RemoteConfig& config() const { return cfg_; }

    DecisionLogprobs fetch_decision_logprobs(const std::string& rendered_prompt,
                                             const std::vector<std::string>& media_refs = {}) const;

private:
    std::chrono::milliseconds backoff(int attempt) const;

    RemoteConfig cfg_;
    std::shared_ptr<spdlog::logger> logger_;
    mutable std::counting_semaphore<1024> in_flight_;
    mutable std::mutex rng_mutex_;
    mutable Rng jitter_rng_;
};

// Scores requests through a remote model. Not differentiable.
class RemoteBackend final : public ScoringBackend {
public:
    RemoteBackend(std::shared_ptr<const RemoteClient> client, Normalization normalization = Normalization::YesNoPair,
                  std::optional<PromptTemplate> template_override = std::nullopt);

    std::string name() const override { return "remote(" + client_->config().model_name + ")"; }
    bool supports_pairwise() const override { return true; }
    bool supports_pointwise() const override { return true; }

    std::string render(const ScoreRequest& req) const;

protected:
    RewardScore pairwise_impl(const ScoreRequest& req) const override;
    RewardScore pointwise_impl(const ScoreRequest& req) const override;

private:
    RewardScore score(const ScoreRequest& req) const;

    std::shared_ptr<const RemoteClient> client_;
    Normalization normalization_;
    std::optional<PromptTemplate> template_override_;
};

} // namespace rewarddance
