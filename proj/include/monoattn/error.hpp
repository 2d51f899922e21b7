#pragma once

#include <stdexcept>
#include <string>

namespace monoattn {

// All errors carry a stable machine-parsable category; the CLI prints
// "error: <category>: <message>" and exits nonzero.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string& m) : Error("index", m) {}
};
struct InvalidMaskError : Error {
  explicit InvalidMaskError(const std::string& m) : Error("invalid-mask", m) {}
};
struct EmptySequenceError : Error {
  explicit EmptySequenceError(const std::string& m) : Error("empty-sequence", m) {}
};
struct EmptyCorpusError : Error {
  explicit EmptyCorpusError(const std::string& m) : Error("empty-corpus", m) {}
};
struct DeterminismError : Error {
  explicit DeterminismError(const std::string& m) : Error("determinism", m) {}
};
struct UninitializedGradientError : Error {
  explicit UninitializedGradientError(const std::string& m)
      : Error("uninitialized-gradient", m) {}
};
struct DivergedTrainingError : Error {
  explicit DivergedTrainingError(const std::string& m) : Error("diverged-training", m) {}
};
struct VocabMismatchError : Error {
  explicit VocabMismatchError(const std::string& m) : Error("vocab-mismatch", m) {}
};
struct CheckpointFormatError : Error {
  explicit CheckpointFormatError(const std::string& m) : Error("checkpoint-format", m) {}
};
struct CheckpointVersionError : Error {
  explicit CheckpointVersionError(const std::string& m) : Error("checkpoint-version", m) {}
};
struct CheckpointTruncatedError : Error {
  explicit CheckpointTruncatedError(const std::string& m)
      : Error("checkpoint-truncated", m) {}
};
struct CheckpointShapeError : Error {
  explicit CheckpointShapeError(const std::string& m) : Error("checkpoint-shape", m) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct NotApplicableError : Error {
  explicit NotApplicableError(const std::string& m) : Error("not-applicable", m) {}
};
struct BenchAssertionError : Error {
  explicit BenchAssertionError(const std::string& m) : Error("bench-assertion", m) {}
};

}  // namespace monoattn
