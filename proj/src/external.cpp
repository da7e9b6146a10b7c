#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <vector>

#include "slge/error.hpp"
#include "slge/fitness.hpp"

namespace slge {

using Clock = std::chrono::steady_clock;

/// One evaluator child process with line-oriented pipes.
class ExternalEvaluator::Process {
 public:
  explicit Process(const std::string& command) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw io_error("pipe");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw io_error("pipe");
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw io_error("fork");
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~Process() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      // Give a well-behaved evaluator a moment to exit on EOF.
      for (int i = 0; i < 20; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        ::usleep(5000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  void write_line(const std::string& line) {
    std::string data = line + '\n';
    std::size_t written = 0;
    while (written < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + written, data.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::Protocol,
                    std::string("evaluator process is not accepting input: ") +
                        std::strerror(errno));
      }
      written += static_cast<std::size_t>(n);
    }
  }

  /// Next complete line, or nullopt when the deadline passes first.
  std::optional<std::string> read_line(Clock::time_point deadline) {
    while (true) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) return std::nullopt;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw io_error("poll");
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw io_error("read");
      }
      if (n == 0) throw Error(ErrorCode::Protocol, "evaluator process closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  static Error io_error(const char* what) {
    return Error(ErrorCode::Protocol,
                 std::string("evaluator process ") + what + " failed: " + std::strerror(errno));
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

class ExternalEvaluator::Pool {
 public:
  Pool(std::string command, int size) : command_(std::move(command)) {
    slots_.resize(static_cast<std::size_t>(std::max(size, 1)));
    for (std::size_t i = 0; i < slots_.size(); ++i) free_.push_back(i);
  }

  struct Lease {
    Pool* pool;
    std::size_t slot;
    bool healthy = false;
    Process& process() { return *pool->slots_[slot]; }
    ~Lease() { pool->release(slot, healthy); }
  };

  Lease acquire() {
    std::unique_lock lock(mutex_);
    available_.wait(lock, [&] { return !free_.empty(); });
    const std::size_t slot = free_.back();
    free_.pop_back();
    lock.unlock();
    try {
      if (!slots_[slot]) slots_[slot] = std::make_unique<Process>(command_);
    } catch (...) {
      release(slot, false);
      throw;
    }
    return Lease{this, slot};
  }

 private:
  void release(std::size_t slot, bool healthy) {
    if (!healthy) slots_[slot].reset();
    std::lock_guard lock(mutex_);
    free_.push_back(slot);
    available_.notify_one();
  }

  std::string command_;
  std::vector<std::unique_ptr<Process>> slots_;
  std::vector<std::size_t> free_;
  std::mutex mutex_;
  std::condition_variable available_;
};

ExternalEvaluator::ExternalEvaluator(ExternalOptions options)
    : options_(std::move(options)),
      pool_(std::make_unique<Pool>(options_.command, options_.workers)) {
  if (options_.command.empty()) {
    throw Error(ErrorCode::InvalidArgument, "external evaluator command is empty");
  }
  if (options_.epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  validate(options_.macro);
}

ExternalEvaluator::~ExternalEvaluator() = default;

std::string ExternalEvaluator::next_request_id() {
  return "req-" + std::to_string(next_id_.fetch_add(1));
}

EvalResponse ExternalEvaluator::send(const EvalRequest& request) {
  auto lease = pool_->acquire();
  const auto deadline = Clock::now() + options_.timeout;
  lease.process().write_line(format_request(request));
  const auto line = lease.process().read_line(deadline);
  if (!line) {
    throw Error(ErrorCode::Timeout, "no response to request " + request.id + " within " +
                                        std::to_string(options_.timeout.count()) + " ms");
  }
  EvalResponse response = parse_response(*line);
  if (response.id != request.id) {
    throw Error(ErrorCode::Protocol,
                "response id '" + response.id + "' does not match request '" + request.id + "'");
  }
  lease.healthy = true;
  return response;
}

FitnessValue ExternalEvaluator::evaluate(const Chromosome& chromosome) {
  const CellGraph cell = develop(chromosome);
  const NetworkSpec network = assemble(cell, options_.macro);
  EvalRequest request{next_request_id(), encode_text(chromosome), to_json(network),
                      options_.epochs};
  const EvalResponse response = send(request);
  if (response.error) {
    throw Error(ErrorCode::Evaluation, "evaluator reported: " + *response.error);
  }
  return FitnessValue(*response.accuracy);
}

}  // namespace slge
