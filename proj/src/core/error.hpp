#pragma once

#include <stdexcept>
#include <string>

namespace rewarddance {

enum class ErrorCode {
    InvalidArgument,
    Dimension,
    NonFinite,
    Empty,
    Io,
    Parse,
    Config,
    Scoring,
    NotDifferentiable,
    Diverged,
    RemoteTimeout,
    RemoteHttp,
    RemoteMalformed,
    RemoteNoDecision,
    PortBinding,
    Internal,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what)
        , code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what)
{
    if (!cond) {
        fail(code, what);
    }
}

} // namespace rewarddance
