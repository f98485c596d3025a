#pragma once

#include <stdexcept>
#include <string>

namespace metanet {

// Error categories surfaced on the CLI as "error: <kind>: <message>".
enum class ErrorKind {
  Argument,
  PlacementIncomplete,
  Scheduling,
  Optimization,
  Normalizer,
  Coverage,
  Divergence,
  Checkpoint,
  Configuration,
  Comparability,
  Unsupported,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::PlacementIncomplete: return "placement-incomplete";
    case ErrorKind::Scheduling: return "scheduling";
    case ErrorKind::Optimization: return "optimization";
    case ErrorKind::Normalizer: return "normalizer";
    case ErrorKind::Coverage: return "coverage";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Checkpoint: return "checkpoint";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Comparability: return "comparability";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class MetaError : public std::runtime_error {
 public:
  MetaError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace metanet
