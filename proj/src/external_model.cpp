#include "camfmc/external_model.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <json.hpp>

#include "camfmc/errors.hpp"

namespace camfmc::engine {

using nlohmann::json;

namespace {

// Blocking line-oriented pipe pair around a child process.
class Subprocess {
 public:
  Subprocess(const std::string& command, const std::string& workdir) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw ProtocolError("failed to create pipes: " + std::string(strerror(errno)));
    pid_ = fork();
    if (pid_ < 0) throw ProtocolError("fork failed: " + std::string(strerror(errno)));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(127);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~Subprocess() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  void write_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t off = 0;
    while (off < payload.size()) {
      const ssize_t n = write(write_fd_, payload.data() + off, payload.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("write to child failed: " + std::string(strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    std::string line;
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("read from child failed: " + std::string(strerror(errno)));
      }
      if (n == 0) throw ProtocolError("child closed its output stream");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

}  // namespace

struct ExternalModel::Impl {
  Options opts;
  std::unique_ptr<Subprocess> child;
  std::size_t dimension = 0;
  std::string child_label;
  std::uint64_t next_id = 1;
  double total_seconds = 0.0;
  long long total_evals = 0;
  double last_train_seconds = 0.0;

  json roundtrip(const json& request) {
    if (!child) throw ProtocolError("external model '" + opts.label + "' not started");
    child->write_line(request.dump());
    const std::string line = child->read_line();
    json response;
    try {
      response = json::parse(line);
    } catch (const json::exception& e) {
      throw ProtocolError("malformed response from '" + opts.label + "': " + e.what());
    }
    if (!response.is_object() || !response.contains("ok"))
      throw ProtocolError("response from '" + opts.label + "' lacks an ok field");
    return response;
  }
};

ExternalModel::ExternalModel(Options opts) : impl_(std::make_unique<Impl>()) {
  if (opts.command.empty()) throw ConfigError("external model needs a command");
  if (!(opts.high_fi_seconds > 0.0))
    throw ConfigError("high_fi_seconds must be positive");
  if (opts.chunk == 0) opts.chunk = 1;
  impl_->opts = std::move(opts);
}

ExternalModel::~ExternalModel() = default;

void ExternalModel::start() {
  impl_->child = std::make_unique<Subprocess>(impl_->opts.command, impl_->opts.workdir);
  const json response = impl_->roundtrip({{"op", "info"}});
  if (!response.value("ok", false))
    throw ProtocolError("info failed for '" + impl_->opts.label +
                        "': " + response.value("error", "unknown error"));
  impl_->dimension = response.value("dimension", std::size_t{0});
  impl_->child_label = response.value("label", impl_->opts.label);
}

bool ExternalModel::running() const { return impl_->child != nullptr; }

std::size_t ExternalModel::dimension() const { return impl_->dimension; }

double ExternalModel::train_cost_seconds() const { return impl_->last_train_seconds; }

void ExternalModel::train(long long n, std::uint64_t seed) {
  const json response =
      impl_->roundtrip({{"op", "train"}, {"n", n}, {"seed", seed}});
  if (!response.value("ok", false))
    throw ProtocolError("train failed for '" + impl_->opts.label +
                        "': " + response.value("error", "unknown error"));
  impl_->last_train_seconds = response.value("train_cost_seconds", 0.0);
}

const std::string& ExternalModel::label() const { return impl_->opts.label; }

double ExternalModel::cost_per_eval() const {
  if (impl_->total_evals == 0) return impl_->opts.assumed_cost;
  return impl_->total_seconds / static_cast<double>(impl_->total_evals) /
         impl_->opts.high_fi_seconds;
}

std::vector<double> ExternalModel::evaluate_batch(const SampleBatch& batch,
                                                  std::size_t m,
                                                  const ChargeSink& charge) {
  std::vector<double> out;
  out.reserve(m);
  for (std::size_t begin = 0; begin < m; begin += impl_->opts.chunk) {
    const std::size_t end = std::min(m, begin + impl_->opts.chunk);
    json inputs = json::array();
    for (std::size_t i = begin; i < end; ++i) {
      const auto theta = batch.input(i);
      inputs.push_back(std::vector<double>(theta.begin(), theta.end()));
    }
    const std::uint64_t id = impl_->next_id++;
    const auto t0 = std::chrono::steady_clock::now();
    json response;
    try {
      response = impl_->roundtrip({{"op", "eval"}, {"id", id}, {"inputs", inputs}});
    } catch (const ProtocolError& e) {
      throw EvalError(std::string(e.what()) + " (sample " + std::to_string(begin) + ")",
                      begin);
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (!response.value("ok", false))
      throw EvalError("evaluation failed at sample " + std::to_string(begin) +
                          ": " + response.value("error", "unknown error"),
                      begin);
    if (response.value("id", std::uint64_t{0}) != id)
      throw EvalError("out-of-order response (sample " + std::to_string(begin) + ")",
                      begin);
    const auto& outputs = response["outputs"];
    if (!outputs.is_array() || outputs.size() != end - begin)
      throw EvalError("response outputs have the wrong length (sample " +
                          std::to_string(begin) + ")",
                      begin);
    for (const auto& v : outputs) out.push_back(v.get<double>());

    double seconds = response.value("cost_seconds", -1.0);
    if (seconds < 0.0)
      seconds = std::chrono::duration<double>(t1 - t0).count();
    impl_->total_seconds += seconds;
    impl_->total_evals += static_cast<long long>(end - begin);
    if (charge) charge(end - begin, seconds / impl_->opts.high_fi_seconds);
  }
  return out;
}

}  // namespace camfmc::engine
