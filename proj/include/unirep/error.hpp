#ifndef UNIREP_ERROR_HPP_
#define UNIREP_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace unirep {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or axis-length mismatch. The message names the offending axis.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Invalid or inconsistent configuration, detected before any compute.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
  ConfigError(const std::string& msg, std::vector<std::string> violations)
      : Error(msg), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

private:
  std::vector<std::string> violations_;
};

/// A class label outside [0, K). Names the offending batch index.
class LabelError : public Error {
public:
  using Error::Error;
};

/// Domain id outside [1, D].
class DomainIndexError : public Error {
public:
  using Error::Error;
};

/// Frozen-moment normalization requested before any moments were accumulated.
class UnfrozenMomentsError : public Error {
public:
  using Error::Error;
};

/// Batch-statistics normalization applied to a batch tagged with more than
/// one domain.
class PurityViolationError : public Error {
public:
  using Error::Error;
};

/// Operation invoked out of order (e.g. backward without a forward pass).
class LifecycleError : public Error {
public:
  using Error::Error;
};

/// Out-of-range step handed to a schedule.
class ScheduleError : public Error {
public:
  using Error::Error;
};

/// Training loss became non-finite. Carries the step index.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& msg, std::size_t step)
      : Error(msg), step_(step) {}
  std::size_t step() const { return step_; }

private:
  std::size_t step_;
};

/// Malformed binary file. Carries the byte offset of the defect.
class FormatError : public Error {
public:
  FormatError(const std::string& msg, std::size_t byte_offset)
      : Error(msg), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

private:
  std::size_t byte_offset_;
};

/// Checkpoint does not match the model or config it is loaded against.
class CompatibilityError : public Error {
public:
  using Error::Error;
};

/// File system problem (missing file, unwritable directory, ...).
class IoError : public Error {
public:
  using Error::Error;
};

/// A dataset channel with zero standard deviation cannot be whitened.
class DegenerateChannelError : public Error {
public:
  using Error::Error;
};

/// Synthetic generation could not satisfy the requested class geometry.
class GenerationError : public Error {
public:
  using Error::Error;
};

}  // namespace unirep

#endif  // UNIREP_ERROR_HPP_
