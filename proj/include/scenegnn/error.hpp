#pragma once

#include <stdexcept>
#include <string>

namespace scenegnn {

enum class ErrorKind {
  MalformedRecord,
  EmptyFile,
  InvalidConfig,
  BadRatios,
  EmptyScene,
  NoNeighbor,
  LabelOutOfRange,
  ShapeMismatch,
  NonFinite,
  NotScalar,
  InputOutOfRange,
  AggregatorMismatch,
  BadTarget,
  EmptyDataset,
  UnlabeledSample,
  EmptySubset,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::BadRatios: return "BadRatios";
    case ErrorKind::EmptyScene: return "EmptyScene";
    case ErrorKind::NoNeighbor: return "NoNeighbor";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NotScalar: return "NotScalar";
    case ErrorKind::InputOutOfRange: return "InputOutOfRange";
    case ErrorKind::AggregatorMismatch: return "AggregatorMismatch";
    case ErrorKind::BadTarget: return "BadTarget";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::UnlabeledSample: return "UnlabeledSample";
    case ErrorKind::EmptySubset: return "EmptySubset";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Library-wide exception. `kind()` identifies the failure class so callers
/// (and the CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Carries the 1-based line number of the offending record.
class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line_no, const std::string& what)
      : Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": " + what),
        line_no_(line_no) {}

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace scenegnn
