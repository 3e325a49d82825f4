#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "prdiag/policy.hpp"
#include "prdiag/rewards.hpp"

namespace prdiag {

// Line-delimited request/response JSON objects over a child process's
// stdin/stdout. Endpoint strings use the form "cmd:<shell command>".
//
// Policy messages:
//   -> {"id", "prompt_parts": [{"kind": "image"|"text", "data"}],
//       "response_prefix"?, "seed", "max_tokens"}
//   <- {"id", "text"} | {"id", "error"}
// Teacher messages ride the same transport:
//   -> {"image", "task_kind", "instruction"}
//   <- {"perception_text"} | {"error"}

class SubprocessTransport {
public:
    SubprocessTransport(const std::string& command, int timeout_ms);
    ~SubprocessTransport();

    SubprocessTransport(const SubprocessTransport&) = delete;
    SubprocessTransport& operator=(const SubprocessTransport&) = delete;

    // Writes one line, reads one line. Errors are transport failures.
    Parse<std::string> round_trip(const std::string& request_line);

private:
    int child_stdin_ = -1;
    int child_stdout_ = -1;
    long pid_ = -1;
    int timeout_ms_;
    std::string buffer_;
    std::mutex mutex_;
};

std::string encode_policy_request(const std::string& id, const GenRequest& req);

struct PolicyResponse {
    std::string id;
    std::optional<std::string> text;
    std::optional<std::string> error;
};

Parse<PolicyResponse> decode_policy_response(const std::string& line);

class ExternalPolicy : public Policy {
public:
    // endpoint: "cmd:<shell command>". Throws std::invalid_argument on an
    // unrecognized scheme.
    ExternalPolicy(const std::string& endpoint, int timeout_ms);

    GenResult generate(const GenRequest& req) override;
    std::string tag() const override;

private:
    std::string endpoint_;
    std::unique_ptr<SubprocessTransport> transport_;
    std::uint64_t next_id_ = 0;
    std::mutex mutex_;
};

class ExternalTeacher : public TeacherClient {
public:
    ExternalTeacher(const std::string& endpoint, int timeout_ms);

    Parse<std::string> describe(const std::string& image_svg, TaskKind kind,
                                const std::string& instruction, std::uint64_t seed) override;
    std::string tag() const override;

private:
    std::string endpoint_;
    std::unique_ptr<SubprocessTransport> transport_;
    std::mutex mutex_;
};

}  // namespace prdiag
