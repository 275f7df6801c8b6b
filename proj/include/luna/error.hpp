#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace luna {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary or JSON container.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A record violates a dataset invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t record, const std::string& what)
      : Error("record " + std::to_string(record) + ": " + what), record_(record) {}
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

/// Invalid parameters (integrator windows, search settings, weights).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An integrator output does not fit its feature word.
class FeatureOverflow : public Error {
 public:
  using Error::Error;
};

class InfeasibleTopology : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(int epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class TableSizeError : public Error {
 public:
  using Error::Error;
};

/// Feature vector shape does not match a network's input map.
class InterfaceError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class SearchError : public Error {
 public:
  using Error::Error;
};

/// Design point and extracted tables disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// HDL text outside the emitted dialect.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A verification gate (checksum, equivalence, latency) failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace luna
