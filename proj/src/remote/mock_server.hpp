#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace rewarddance {

// A fixture answers requests whose body contains `match` (empty matches
// everything). Fixtures are tried in order.
struct MockFixture {
    std::string match;
    int status = 200;
    std::vector<std::pair<std::string, double>> top_logprobs; // used when body is empty
    std::string body;     // raw body override
    int delay_ms = 0;

    // Body served for this fixture; fixed at registration.
    std::string rendered_body() const;
};

struct RecordedRequest {
    std::string method;
    std::string path;
    std::string body;
    bool has_authorization = false;
    int status = 0;
};

// OpenAI-compatible chat-completions stub on 127.0.0.1 with an OS-chosen port.
class MockServer {
public:
    explicit MockServer(std::vector<MockFixture> fixtures);
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::vector<RecordedRequest> requests() const;
    void stop();

private:
    std::vector<MockFixture> fixtures_;
    std::vector<std::string> bodies_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<RecordedRequest> requests_;
};

} // namespace rewarddance
