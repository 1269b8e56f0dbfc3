#include "tempus/extern_protocol.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace tempus::adapter {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Wire format

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index t = 0; t < m.cols(); ++t) row.push_back(m(i, t));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix json_to_matrix(const json& rows, std::size_t n_targets, std::size_t horizon) {
    if (!rows.is_array()) throw MalformedResponse("values must be an array of rows");
    if (rows.size() != n_targets)
        throw ShapeMismatch("adapter returned " + std::to_string(rows.size()) + " rows, expected " +
                            std::to_string(n_targets));
    Matrix out(static_cast<Eigen::Index>(n_targets), static_cast<Eigen::Index>(horizon));
    for (std::size_t i = 0; i < n_targets; ++i) {
        const json& row = rows[i];
        if (!row.is_array()) throw MalformedResponse("values must be an array of rows");
        if (row.size() != horizon)
            throw ShapeMismatch("adapter row " + std::to_string(i) + " has " +
                                std::to_string(row.size()) + " steps, expected " +
                                std::to_string(horizon));
        for (std::size_t t = 0; t < horizon; ++t) {
            if (!row[t].is_number()) throw MalformedResponse("values must be numbers");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = row[t].get<double>();
        }
    }
    if (!out.allFinite()) throw MalformedResponse("values must be finite");
    return out;
}

json parse_object(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw MalformedResponse("invalid JSON");
    if (!j.is_object()) throw MalformedResponse("expected a JSON object");
    return j;
}

}  // namespace

std::string encode_hello() {
    return json{{"op", "hello"}, {"protocol_version", kProtocolVersion}}.dump();
}

std::string encode_request(const ForecastRequest& request) {
    if (request.horizon < 1) throw InvalidParams("horizon must be >= 1");
    json j;
    j["op"] = "forecast";
    j["protocol_version"] = kProtocolVersion;
    j["task_id"] = request.task_id;
    j["horizon"] = request.horizon;
    j["context"] = matrix_to_json(request.context);
    j["covariates_past"] = matrix_to_json(request.covariates_past);
    j["covariates_future"] = matrix_to_json(request.covariates_future);
    if (request.params) {
        json params = json::object();
        for (const auto& [name, value] : request.params->values()) params[name] = value;
        j["params"] = std::move(params);
    }
    return j.dump();
}

ForecastResponse decode_response(const std::string& line, std::size_t n_targets,
                                 std::size_t horizon) {
    const json j = parse_object(line);
    const bool has_values = j.contains("values");
    const bool has_error = j.contains("error");
    if (has_values == has_error) throw MalformedResponse("exactly one of values/error required");

    ForecastResponse out;
    if (has_error) {
        const json& e = j["error"];
        if (!e.is_object() || !e.contains("code") || !e["code"].is_string())
            throw MalformedResponse("error record needs a string code");
        out.error = ResponseError{e["code"].get<std::string>(),
                                  e.contains("message") && e["message"].is_string()
                                      ? e["message"].get<std::string>()
                                      : std::string()};
        return out;
    }
    out.values = json_to_matrix(j["values"], n_targets, horizon);
    return out;
}

Capabilities decode_capabilities(const std::string& line) {
    const json j = parse_object(line);
    if (!j.contains("protocol_version") || !j["protocol_version"].is_number_integer() ||
        j["protocol_version"].get<int>() != kProtocolVersion)
        throw MalformedResponse("version");
    if (!j.contains("name") || !j["name"].is_string()) throw MalformedResponse("name");

    Capabilities caps;
    caps.name = j["name"].get<std::string>();
    if (j.contains("supports_covariates")) {
        if (!j["supports_covariates"].is_boolean()) throw MalformedResponse("supports_covariates");
        caps.supports_covariates = j["supports_covariates"].get<bool>();
    }
    if (j.contains("hyper_grid") && !j["hyper_grid"].is_null()) {
        const json& grid = j["hyper_grid"];
        if (!grid.is_object()) throw MalformedResponse("hyper_grid");
        std::map<std::string, std::vector<double>> values;
        for (const auto& [name, options] : grid.items()) {
            if (!options.is_array() || options.empty()) throw MalformedResponse("hyper_grid");
            for (const json& v : options) {
                if (!v.is_number()) throw MalformedResponse("hyper_grid");
                values[name].push_back(v.get<double>());
            }
        }
        caps.hyper_grid = std::move(values);
    }
    return caps;
}

forecasters::HyperGrid expand_grid(const std::string& model,
                                   const std::map<std::string, std::vector<double>>& grid) {
    forecasters::HyperGrid out;
    out.family = model;
    out.assignments.push_back({model, {}});
    for (const auto& [name, options] : grid) {
        std::vector<forecasters::HyperAssignment> next;
        for (const auto& partial : out.assignments) {
            for (double v : options) {
                auto a = partial;
                a.params.set(name, v);
                next.push_back(std::move(a));
            }
        }
        out.assignments = std::move(next);
    }
    std::sort(out.assignments.begin(), out.assignments.end());
    out.assignments.erase(std::unique(out.assignments.begin(), out.assignments.end()),
                          out.assignments.end());
    return out;
}

// ---------------------------------------------------------------------------
// Process

namespace {

constexpr std::size_t kStderrCap = 64 * 1024;

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return static_cast<int>(std::clamp<long long>(left.count(), 0, 1'000'000));
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

}  // namespace

Process::Process(const std::vector<std::string>& command) {
    if (command.empty()) throw InvalidParams("empty adapter command");
    ignore_sigpipe();

    int in[2], out[2], err[2], status[2];
    if (::pipe2(in, O_CLOEXEC) != 0 || ::pipe2(out, O_CLOEXEC) != 0 ||
        ::pipe2(err, O_CLOEXEC) != 0 || ::pipe2(status, O_CLOEXEC) != 0)
        throw AdapterCrash(-1, std::string("pipe: ") + std::strerror(errno));

    std::vector<char*> argv;
    for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
    argv.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) throw AdapterCrash(-1, std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
        ::dup2(in[0], STDIN_FILENO);
        ::dup2(out[1], STDOUT_FILENO);
        ::dup2(err[1], STDERR_FILENO);
        ::execvp(argv[0], argv.data());
        const int code = errno;
        [[maybe_unused]] auto n = ::write(status[1], &code, sizeof code);
        ::_exit(127);
    }

    ::close(in[0]);
    ::close(out[1]);
    ::close(err[1]);
    ::close(status[1]);
    stdin_fd_ = in[1];
    stdout_fd_ = out[0];
    stderr_fd_ = err[0];
    ::fcntl(stdin_fd_, F_SETFL, O_NONBLOCK);
    ::fcntl(stderr_fd_, F_SETFL, O_NONBLOCK);

    int exec_errno = 0;
    const auto n = ::read(status[0], &exec_errno, sizeof exec_errno);
    ::close(status[0]);
    if (n == static_cast<ssize_t>(sizeof exec_errno)) {
        reap(true);
        close_fd(stdin_fd_);
        close_fd(stdout_fd_);
        close_fd(stderr_fd_);
        throw AdapterCrash(127, "cannot execute '" + command.front() +
                                    "': " + std::strerror(exec_errno));
    }
}

Process::~Process() {
    close_fd(stdin_fd_);
    if (pid_ > 0) {
        // Give a well-behaved adapter a moment to exit on EOF.
        for (int i = 0; i < 20 && pid_ > 0; ++i) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        reap(true);
    }
    close_fd(stdout_fd_);
    close_fd(stderr_fd_);
}

void Process::drain_stderr() {
    if (stderr_fd_ < 0) return;
    char chunk[4096];
    while (true) {
        const auto n = ::read(stderr_fd_, chunk, sizeof chunk);
        if (n <= 0) {
            if (n == 0) close_fd(stderr_fd_);
            return;
        }
        if (stderr_.size() < kStderrCap)
            stderr_.append(chunk, std::min<std::size_t>(static_cast<std::size_t>(n),
                                                        kStderrCap - stderr_.size()));
    }
}

int Process::reap(bool force) {
    if (pid_ <= 0) return -1;
    if (force) ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

void Process::crashed() {
    // Collect whatever the child wrote to stderr before it went away.
    if (stderr_fd_ >= 0) {
        ::fcntl(stderr_fd_, F_SETFL, 0);
        pollfd p{stderr_fd_, POLLIN, 0};
        while (stderr_fd_ >= 0 && ::poll(&p, 1, 200) > 0) {
            const auto before = stderr_.size();
            ::fcntl(stderr_fd_, F_SETFL, O_NONBLOCK);
            drain_stderr();
            if (stderr_.size() == before) break;
        }
    }
    const int code = reap(false);
    throw AdapterCrash(code, stderr_);
}

void Process::write_line(const std::string& line, Clock::time_point deadline) {
    if (pid_ <= 0) throw AdapterCrash(-1, "adapter process is not running");
    std::string payload = line + "\n";
    std::size_t written = 0;
    while (written < payload.size()) {
        pollfd fds[2] = {{stdin_fd_, POLLOUT, 0}, {stderr_fd_, POLLIN, 0}};
        const int ready = ::poll(fds, stderr_fd_ >= 0 ? 2 : 1, remaining_ms(deadline));
        if (ready == 0) {
            reap(true);
            throw AdapterTimeout("timed out writing request to adapter");
        }
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw AdapterCrash(-1, std::string("poll: ") + std::strerror(errno));
        }
        if (stderr_fd_ >= 0 && (fds[1].revents & (POLLIN | POLLHUP))) drain_stderr();
        if (fds[0].revents & (POLLERR | POLLHUP)) crashed();
        if (fds[0].revents & POLLOUT) {
            const auto n = ::write(stdin_fd_, payload.data() + written, payload.size() - written);
            if (n < 0) {
                if (errno == EAGAIN || errno == EINTR) continue;
                crashed();
            }
            written += static_cast<std::size_t>(n);
        }
    }
}

std::string Process::read_line(Clock::time_point deadline) {
    if (pid_ <= 0) throw AdapterCrash(-1, "adapter process is not running");
    while (true) {
        const auto newline = buffer_.find('\n');
        if (newline != std::string::npos) {
            std::string line = buffer_.substr(0, newline);
            buffer_.erase(0, newline + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        pollfd fds[2] = {{stdout_fd_, POLLIN, 0}, {stderr_fd_, POLLIN, 0}};
        const int ready = ::poll(fds, stderr_fd_ >= 0 ? 2 : 1, remaining_ms(deadline));
        if (ready == 0) {
            reap(true);
            throw AdapterTimeout("adapter did not answer within the timeout");
        }
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw AdapterCrash(-1, std::string("poll: ") + std::strerror(errno));
        }
        if (stderr_fd_ >= 0 && (fds[1].revents & (POLLIN | POLLHUP))) drain_stderr();
        if (fds[0].revents & (POLLIN | POLLHUP)) {
            char chunk[65536];
            const auto n = ::read(stdout_fd_, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) crashed();
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }
}

// ---------------------------------------------------------------------------
// Client

AdapterClient::AdapterClient(std::vector<std::string> command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {}

std::string AdapterClient::exchange(const std::string& line) {
    if (!process_) {
        if (needs_restart_) {
            if (restarts_left_ <= 0)
                throw AdapterCrash(-1, "adapter already restarted once; giving up");
            --restarts_left_;
        }
        process_ = std::make_unique<Process>(command_);
        if (needs_restart_ && capabilities_) {
            needs_restart_ = false;
            const auto deadline = Clock::now() + timeout_;
            try {
                process_->write_line(encode_hello(), deadline);
                decode_capabilities(process_->read_line(deadline));
            } catch (const Error&) {
                process_.reset();
                needs_restart_ = true;
                throw;
            }
        }
        needs_restart_ = false;
    }
    const auto deadline = Clock::now() + timeout_;
    try {
        process_->write_line(line, deadline);
        return process_->read_line(deadline);
    } catch (const AdapterTimeout&) {
        process_.reset();
        needs_restart_ = true;
        throw;
    } catch (const AdapterCrash&) {
        process_.reset();
        needs_restart_ = true;
        throw;
    }
}

Capabilities AdapterClient::handshake() {
    capabilities_ = decode_capabilities(exchange(encode_hello()));
    return *capabilities_;
}

ForecastResponse AdapterClient::call(const ForecastRequest& request) {
    const std::string reply = exchange(encode_request(request));
    return decode_response(reply, static_cast<std::size_t>(request.context.rows()),
                           request.horizon);
}

ForecastResponse call_adapter(const std::vector<std::string>& command,
                              const ForecastRequest& request, std::chrono::milliseconds timeout) {
    Process process(command);
    const auto deadline = Clock::now() + timeout;
    process.write_line(encode_request(request), deadline);
    return decode_response(process.read_line(deadline),
                           static_cast<std::size_t>(request.context.rows()), request.horizon);
}

Capabilities handshake(const std::vector<std::string>& command, std::chrono::milliseconds timeout) {
    Process process(command);
    const auto deadline = Clock::now() + timeout;
    process.write_line(encode_hello(), deadline);
    return decode_capabilities(process.read_line(deadline));
}

// ---------------------------------------------------------------------------
// Benchmark entry

namespace {

class ExternalRunner final : public pipeline::ModelRunner {
public:
    ExternalRunner(std::string id, std::vector<std::string> command,
                   std::chrono::milliseconds timeout)
        : id_(std::move(id)), client_(std::move(command), timeout) {}

    std::optional<forecasters::HyperGrid> grid() override {
        capabilities_ = client_.handshake();
        if (!capabilities_->hyper_grid) return std::nullopt;
        return expand_grid(id_, *capabilities_->hyper_grid);
    }

    ForecastMatrix forecast(const TaskSpec& task, const pipeline::WindowData& window,
                            const forecasters::HyperAssignment& assignment) override {
        ForecastRequest request;
        request.task_id = task.id;
        request.context = window.context;
        request.horizon = task.horizon;
        if (capabilities_ && capabilities_->supports_covariates) {
            request.covariates_past = window.covariates_past;
            request.covariates_future = window.covariates_future;
        }
        if (!assignment.params.empty()) request.params = assignment.params;

        ForecastResponse response = client_.call(request);
        if (response.error) throw AdapterError(response.error->code, response.error->message);
        return ForecastMatrix(std::move(*response.values));
    }

private:
    std::string id_;
    AdapterClient client_;
    std::optional<Capabilities> capabilities_;
};

}  // namespace

ExternalModel::ExternalModel(std::string id, std::vector<std::string> command,
                             std::chrono::milliseconds timeout)
    : id_(std::move(id)), command_(std::move(command)), timeout_(timeout) {
    if (command_.empty()) throw InvalidParams("external model '" + id_ + "' has no command");
}

std::unique_ptr<pipeline::ModelRunner> ExternalModel::open(const TaskSpec&) const {
    return std::make_unique<ExternalRunner>(id_, command_, timeout_);
}

}  // namespace tempus::adapter
