#pragma once

#include "tempus/core.hpp"
#include "tempus/errors.hpp"
#include "tempus/forecasters.hpp"
#include "tempus/pipeline.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace tempus::adapter {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::chrono::milliseconds kDefaultTimeout{120'000};

class AdapterTimeout : public Error {
public:
    explicit AdapterTimeout(const std::string& detail) : Error("AdapterTimeout", detail) {}
};

class AdapterCrash : public Error {
public:
    AdapterCrash(int exit_code, std::string captured_stderr)
        : Error("AdapterCrash", "adapter exited with code " + std::to_string(exit_code) +
                                    (captured_stderr.empty() ? "" : ": " + captured_stderr)),
          exit_code_(exit_code), stderr_(std::move(captured_stderr)) {}
    int exit_code() const noexcept { return exit_code_; }
    const std::string& captured_stderr() const noexcept { return stderr_; }

private:
    int exit_code_;
    std::string stderr_;
};

class MalformedResponse : public Error {
public:
    explicit MalformedResponse(std::string reason)
        : Error("MalformedResponse", "malformed adapter response: " + reason),
          reason_(std::move(reason)) {}
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

/// An error record sent back by the adapter itself.
class AdapterError : public Error {
public:
    AdapterError(std::string adapter_code, const std::string& message)
        : Error("AdapterError", adapter_code + ": " + message),
          adapter_code_(std::move(adapter_code)) {}
    const std::string& adapter_code() const noexcept { return adapter_code_; }

private:
    std::string adapter_code_;
};

struct ForecastRequest {
    std::string task_id;
    Matrix context;            // n x l
    Matrix covariates_past;    // m x l
    Matrix covariates_future;  // m x h
    std::size_t horizon = 1;
    std::optional<forecasters::Params> params;
};

struct ResponseError {
    std::string code;
    std::string message;
};

struct ForecastResponse {
    std::optional<Matrix> values;
    std::optional<ResponseError> error;
};

struct Capabilities {
    std::string name;
    bool supports_covariates = false;
    std::optional<std::map<std::string, std::vector<double>>> hyper_grid;
};

std::string encode_hello();
std::string encode_request(const ForecastRequest& request);
/// Validates the envelope and, for values, the (n_targets, horizon) shape.
/// Throws MalformedResponse or ShapeMismatch.
ForecastResponse decode_response(const std::string& line, std::size_t n_targets,
                                 std::size_t horizon);
/// Throws MalformedResponse("version") on a protocol version mismatch.
Capabilities decode_capabilities(const std::string& line);

/// Cartesian product of a declared grid, sorted like native grids.
forecasters::HyperGrid expand_grid(const std::string& model,
                                   const std::map<std::string, std::vector<double>>& grid);

/// A child process with line-oriented pipes on stdin/stdout; stderr is
/// captured (bounded) for crash reports. Killed on destruction.
class Process {
public:
    explicit Process(const std::vector<std::string>& command);
    ~Process();
    Process(const Process&) = delete;
    Process& operator=(const Process&) = delete;

    void write_line(const std::string& line, std::chrono::steady_clock::time_point deadline);
    /// Throws AdapterTimeout past the deadline (after killing the child) and
    /// AdapterCrash when stdout closes.
    std::string read_line(std::chrono::steady_clock::time_point deadline);

    bool alive() const { return pid_ > 0; }
    const std::string& captured_stderr() const { return stderr_; }

private:
    void drain_stderr();
    int reap(bool force);
    [[noreturn]] void crashed();

    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    int stderr_fd_ = -1;
    std::string buffer_;
    std::string stderr_;
};

/// Sequential request/response session with one adapter process. The process
/// is started lazily and restarted at most once after a crash or timeout.
class AdapterClient {
public:
    AdapterClient(std::vector<std::string> command,
                  std::chrono::milliseconds timeout = kDefaultTimeout);

    Capabilities handshake();
    ForecastResponse call(const ForecastRequest& request);

private:
    std::string exchange(const std::string& line);

    std::vector<std::string> command_;
    std::chrono::milliseconds timeout_;
    std::unique_ptr<Process> process_;
    int restarts_left_ = 1;
    bool needs_restart_ = false;
    std::optional<Capabilities> capabilities_;
};

/// One-shot: spawn, send one request, read one response.
ForecastResponse call_adapter(const std::vector<std::string>& command,
                              const ForecastRequest& request,
                              std::chrono::milliseconds timeout = kDefaultTimeout);

Capabilities handshake(const std::vector<std::string>& command,
                       std::chrono::milliseconds timeout = kDefaultTimeout);

/// Benchmark entry backed by an adapter process (one process per cell).
class ExternalModel final : public pipeline::ModelSpec {
public:
    ExternalModel(std::string id, std::vector<std::string> command,
                  std::chrono::milliseconds timeout = kDefaultTimeout);

    const std::string& id() const override { return id_; }
    std::unique_ptr<pipeline::ModelRunner> open(const TaskSpec& task) const override;

private:
    std::string id_;
    std::vector<std::string> command_;
    std::chrono::milliseconds timeout_;
};

}  // namespace tempus::adapter
