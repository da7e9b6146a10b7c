#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "slge/assembler.hpp"
#include "slge/genome.hpp"
#include "slge/mapper.hpp"

namespace slge {

/// Survival score in [0, 1]; higher is better. Construction rejects
/// out-of-range and NaN values rather than clamping.
class FitnessValue {
 public:
  explicit FitnessValue(double value);
  double value() const { return value_; }
  auto operator<=>(const FitnessValue&) const = default;

 private:
  double value_;
};

/// Implementations must be safe to call concurrently when used with more
/// than one evolution worker.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual FitnessValue evaluate(const Chromosome& chromosome) = 0;
};

/// 1 - Hamming(chromosome, target) / element count. Throws
/// Error(InvalidArgument) when the genome configs differ.
FitnessValue eval_synthetic_target(const Chromosome& chromosome, const Chromosome& target);

/// Heuristic: 0.5 * distinct conv kinds / 4 + 0.5 * min(longest Input-Output
/// path in edges, 8) / 8. Not an accuracy estimate.
FitnessValue eval_graph_proxy(const CellGraph& cell);

/// Longest Input-to-Output path measured in edges.
int longest_path_length(const CellGraph& cell);

class SyntheticTargetEvaluator final : public Evaluator {
 public:
  explicit SyntheticTargetEvaluator(Chromosome target) : target_(std::move(target)) {}
  FitnessValue evaluate(const Chromosome& chromosome) override;
  const Chromosome& target() const { return target_; }

 private:
  Chromosome target_;
};

class GraphProxyEvaluator final : public Evaluator {
 public:
  FitnessValue evaluate(const Chromosome& chromosome) override;
};

class CallbackEvaluator final : public Evaluator {
 public:
  using Fn = std::function<double(const Chromosome&)>;
  explicit CallbackEvaluator(Fn fn) : fn_(std::move(fn)) {}
  FitnessValue evaluate(const Chromosome& chromosome) override {
    return FitnessValue(fn_(chromosome));
  }

 private:
  Fn fn_;
};

// ---------------------------------------------------------------------------
// External evaluator protocol: one JSON object per line over the child
// process's stdin/stdout.
//
//   request:  {"id":str,"chromosome":str,"network":<network JSON>,"budget":{"epochs":int}}
//   response: {"id":str,"accuracy":float[,"params":int]} or {"id":str,"error":str}
// ---------------------------------------------------------------------------

struct EvalRequest {
  std::string id;
  std::string chromosome;
  std::string network_json;
  int epochs = 25;
};

struct EvalResponse {
  std::string id;
  std::optional<double> accuracy;
  std::optional<std::uint64_t> params;
  std::optional<std::string> error;
};

std::string format_request(const EvalRequest& request);

/// Throws Error(Protocol) for anything that is not a well-formed response
/// line: bad JSON, missing id, both or neither of accuracy/error, accuracy
/// outside [0, 1].
EvalResponse parse_response(std::string_view line);

struct ExternalOptions {
  std::string command;  // run through /bin/sh -c
  MacroConfig macro;    // network sent with each request
  int epochs = 25;
  int workers = 1;      // evaluator processes kept alive
  std::chrono::milliseconds timeout{std::chrono::minutes(30)};
};

/// Talks to a pool of evaluator processes. Each process handles one request
/// at a time; concurrent evaluate() calls use different processes. Errors:
/// Error(Evaluation) when the evaluator replies with an error,
/// Error(Timeout) when no reply arrives in time (the process is restarted),
/// Error(Protocol) for malformed or mismatched replies or a dead process.
class ExternalEvaluator final : public Evaluator {
 public:
  explicit ExternalEvaluator(ExternalOptions options);
  ~ExternalEvaluator() override;
  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  FitnessValue evaluate(const Chromosome& chromosome) override;
  EvalResponse send(const EvalRequest& request);
  std::string next_request_id();

 private:
  class Process;
  class Pool;
  ExternalOptions options_;
  std::unique_ptr<Pool> pool_;
  std::atomic<std::uint64_t> next_id_{0};
};

/// Turns evaluator-reported failures and timeouts into fitness 0 after
/// passing a warning to `warn`. Protocol errors still propagate.
class TolerantEvaluator final : public Evaluator {
 public:
  using WarningSink = std::function<void(const std::string&)>;
  TolerantEvaluator(std::shared_ptr<Evaluator> inner, WarningSink warn)
      : inner_(std::move(inner)), warn_(std::move(warn)) {}
  FitnessValue evaluate(const Chromosome& chromosome) override;

 private:
  std::shared_ptr<Evaluator> inner_;
  WarningSink warn_;
};

/// Caches results by canonical chromosome text. Thread-safe; concurrent
/// misses on the same key may both call the inner evaluator, last write wins.
class MemoizedEvaluator final : public Evaluator {
 public:
  explicit MemoizedEvaluator(std::shared_ptr<Evaluator> inner) : inner_(std::move(inner)) {}
  FitnessValue evaluate(const Chromosome& chromosome) override;

  std::uint64_t inner_calls() const { return inner_calls_.load(); }
  std::uint64_t hits() const { return hits_.load(); }
  std::size_t size() const;

  /// Line-delimited {"chromosome":str,"fitness":float}. load() merges into
  /// the current cache and throws Error(Parse) naming the line number on bad
  /// input; save() writes atomically.
  void load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::shared_ptr<Evaluator> inner_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, double> cache_;
  std::atomic<std::uint64_t> inner_calls_{0};
  std::atomic<std::uint64_t> hits_{0};
};

std::shared_ptr<MemoizedEvaluator> memoize(std::shared_ptr<Evaluator> inner);

}  // namespace slge
