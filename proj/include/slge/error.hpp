#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slge {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Overflow,
  Assembly,
  Evaluation,
  Protocol,
  Timeout,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Chromosome text that could not be decoded. `offset` is the character
/// position of the first offending token.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::Parse,
              "at offset " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Raised by evolve() when the evaluator throws; carries the genotype that
// was being scored and the original error category.
class EvaluationFailure : public Error {
 public:
  EvaluationFailure(ErrorCode cause, std::string chromosome,
                    const std::string& message)
      : Error(cause, "evaluation of '" + chromosome + "' failed: " + message),
        chromosome_(std::move(chromosome)) {}

  const std::string& chromosome() const noexcept { return chromosome_; }

 private:
  std::string chromosome_;
};

}  // namespace slge
