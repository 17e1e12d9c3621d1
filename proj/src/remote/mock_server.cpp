#include "mock_server.hpp"

#include <chrono>

#include <httplib.h>

#include "core/error.hpp"
#include "core/serialization.hpp"

namespace rewarddance {

std::string MockFixture::rendered_body() const
{
    if (!body.empty()) {
        return body;
    }
    Json top = Json::array();
    for (const auto& [token, lp] : top_logprobs) {
        top.push_back(Json { { "token", token }, { "logprob", lp } });
    }
    const std::string first = top_logprobs.empty() ? std::string() : top_logprobs.front().first;
    const double first_lp = top_logprobs.empty() ? 0.0 : top_logprobs.front().second;
    const Json content = Json { { "token", first }, { "logprob", first_lp }, { "top_logprobs", top } };
    const Json choice { { "index", 0 }, { "message", Json { { "role", "assistant" }, { "content", first } } },
        { "logprobs", Json { { "content", Json::array({ content }) } } }, { "finish_reason", "length" } };
    return Json { { "id", "mock-completion" }, { "object", "chat.completion" }, { "choices", Json::array({ choice }) } }
        .dump();
}

MockServer::MockServer(std::vector<MockFixture> fixtures)
    : fixtures_(std::move(fixtures))
    , server_(std::make_unique<httplib::Server>())
{
    for (const auto& f : fixtures_) {
        bodies_.push_back(f.rendered_body());
    }
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        RecordedRequest rec { req.method, req.path, req.body, req.has_header("Authorization"), 404 };
        const MockFixture* hit = nullptr;
        std::size_t index = 0;
        if (req.path == "/v1/chat/completions") {
            for (; index < fixtures_.size(); ++index) {
                if (fixtures_[index].match.empty() || req.body.find(fixtures_[index].match) != std::string::npos) {
                    hit = &fixtures_[index];
                    break;
                }
            }
        }
        if (!hit) {
            const Json diag { { "error", Json { { "message", "no fixture matches " + req.method + " " + req.path },
                                               { "fixtures", fixtures_.size() } } } };
            res.status = 404;
            res.set_content(diag.dump(), "application/json");
        } else {
            if (hit->delay_ms > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(hit->delay_ms));
            }
            res.status = hit->status;
            res.set_content(bodies_[index], "application/json");
            rec.status = hit->status;
        }
        std::lock_guard lock(mutex_);
        requests_.push_back(std::move(rec));
    };
    server_->Post(".*", handler);
    server_->Get(".*", handler);
    port_ = server_->bind_to_any_port("127.0.0.1");
    require(port_ > 0, ErrorCode::PortBinding, "mock server could not bind a port on 127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockServer::~MockServer()
{
    stop();
}

void MockServer::stop()
{
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::vector<RecordedRequest> MockServer::requests() const
{
    std::lock_guard lock(mutex_);
    return requests_;
}

} // namespace rewarddance
