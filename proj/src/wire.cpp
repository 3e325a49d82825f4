#include "prdiag/wire.hpp"

#include <csignal>
#include <cstring>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace prdiag {

using ordered_json = nlohmann::ordered_json;

namespace {

std::once_flag sigpipe_once;

void ignore_sigpipe() {
    std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

std::string expect_cmd_endpoint(const std::string& endpoint) {
    if (endpoint.rfind("cmd:", 0) != 0)
        throw std::invalid_argument("endpoint must use the form cmd:<shell command>: " +
                                    endpoint);
    std::string command = endpoint.substr(4);
    if (command.empty()) throw std::invalid_argument("empty endpoint command");
    return command;
}

}  // namespace

SubprocessTransport::SubprocessTransport(const std::string& command, int timeout_ms)
    : timeout_ms_(timeout_ms) {
    ignore_sigpipe();
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw std::runtime_error("pipe() failed");
    pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork() failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    child_stdin_ = to_child[1];
    child_stdout_ = from_child[0];
    pid_ = pid;
}

SubprocessTransport::~SubprocessTransport() {
    if (child_stdin_ >= 0) close(child_stdin_);
    if (child_stdout_ >= 0) close(child_stdout_);
    if (pid_ > 0) {
        int status = 0;
        if (waitpid(static_cast<pid_t>(pid_), &status, WNOHANG) == 0) {
            kill(static_cast<pid_t>(pid_), SIGTERM);
            waitpid(static_cast<pid_t>(pid_), &status, 0);
        }
    }
}

Parse<std::string> SubprocessTransport::round_trip(const std::string& request_line) {
    std::lock_guard<std::mutex> lock(mutex_);

    std::string payload = request_line + "\n";
    std::size_t written = 0;
    while (written < payload.size()) {
        ssize_t n = write(child_stdin_, payload.data() + written, payload.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            return {std::nullopt, std::string("write to endpoint failed: ") + strerror(errno)};
        }
        written += static_cast<std::size_t>(n);
    }

    for (;;) {
        auto newline = buffer_.find('\n');
        if (newline != std::string::npos) {
            std::string line = buffer_.substr(0, newline);
            buffer_.erase(0, newline + 1);
            return {std::move(line), {}};
        }
        struct pollfd pfd{child_stdout_, POLLIN, 0};
        int ready = poll(&pfd, 1, timeout_ms_);
        if (ready == 0) return {std::nullopt, "endpoint timed out"};
        if (ready < 0) {
            if (errno == EINTR) continue;
            return {std::nullopt, std::string("poll failed: ") + strerror(errno)};
        }
        char chunk[4096];
        ssize_t n = read(child_stdout_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            return {std::nullopt, std::string("read from endpoint failed: ") + strerror(errno)};
        }
        if (n == 0) return {std::nullopt, "endpoint closed the stream"};
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::string encode_policy_request(const std::string& id, const GenRequest& req) {
    ordered_json j;
    j["id"] = id;
    ordered_json parts = ordered_json::array();
    for (const auto& part : req.parts) {
        ordered_json p;
        p["kind"] = part.kind == PromptPart::Kind::Image ? "image" : "text";
        p["data"] = part.data;
        parts.push_back(p);
    }
    j["prompt_parts"] = parts;
    if (req.response_prefix) j["response_prefix"] = *req.response_prefix;
    j["seed"] = req.seed;
    j["max_tokens"] = req.max_tokens;
    return j.dump();
}

Parse<PolicyResponse> decode_policy_response(const std::string& line) {
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) return {std::nullopt, "response is not valid JSON"};
    PolicyResponse resp;
    if (j.contains("id")) resp.id = j["id"].get<std::string>();
    if (j.contains("text")) resp.text = j["text"].get<std::string>();
    if (j.contains("error")) resp.error = j["error"].get<std::string>();
    if (!resp.text && !resp.error)
        return {std::nullopt, "response carries neither text nor error"};
    return {std::move(resp), {}};
}

ExternalPolicy::ExternalPolicy(const std::string& endpoint, int timeout_ms)
    : endpoint_(endpoint),
      transport_(std::make_unique<SubprocessTransport>(expect_cmd_endpoint(endpoint),
                                                       timeout_ms)) {}

GenResult ExternalPolicy::generate(const GenRequest& req) {
    std::string id;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        id = "q-" + std::to_string(next_id_++);
    }
    auto line = transport_->round_trip(encode_policy_request(id, req));
    if (!line)
        return {std::nullopt, PolicyFailure{PolicyFailure::Kind::Transport, line.error}};
    auto resp = decode_policy_response(*line.value);
    if (!resp)
        return {std::nullopt, PolicyFailure{PolicyFailure::Kind::Protocol, resp.error}};
    if (resp.value->id != id)
        return {std::nullopt, PolicyFailure{PolicyFailure::Kind::Protocol,
                                            "response id mismatch"}};
    if (resp.value->error)
        return {std::nullopt,
                PolicyFailure{PolicyFailure::Kind::Transport, *resp.value->error}};
    if (req.response_prefix &&
        resp.value->text->rfind(*req.response_prefix, 0) != 0)
        return {std::nullopt,
                PolicyFailure{PolicyFailure::Kind::Contract,
                              "response does not begin with the requested prefix"}};
    return {std::move(*resp.value->text), std::nullopt};
}

std::string ExternalPolicy::tag() const { return "endpoint(" + endpoint_ + ")"; }

ExternalTeacher::ExternalTeacher(const std::string& endpoint, int timeout_ms)
    : endpoint_(endpoint),
      transport_(std::make_unique<SubprocessTransport>(expect_cmd_endpoint(endpoint),
                                                       timeout_ms)) {}

Parse<std::string> ExternalTeacher::describe(const std::string& image_svg, TaskKind kind,
                                             const std::string& instruction,
                                             std::uint64_t) {
    ordered_json j;
    j["image"] = image_svg;
    j["task_kind"] = to_string(kind);
    j["instruction"] = instruction;
    auto line = transport_->round_trip(j.dump());
    if (!line) return {std::nullopt, line.error};
    ordered_json resp = ordered_json::parse(*line.value, nullptr, false);
    if (resp.is_discarded()) return {std::nullopt, "teacher response is not valid JSON"};
    if (resp.contains("error"))
        return {std::nullopt, resp["error"].get<std::string>()};
    if (!resp.contains("perception_text"))
        return {std::nullopt, "teacher response lacks perception_text"};
    return {resp["perception_text"].get<std::string>(), {}};
}

std::string ExternalTeacher::tag() const { return "endpoint(" + endpoint_ + ")"; }

}  // namespace prdiag
