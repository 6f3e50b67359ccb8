#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <string>

namespace irrnn {

// Exception hierarchy. The CLI maps these onto exit codes:
// InvalidArgument -> 1, FormatError -> 2, numerical failures -> 3.

class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent on-disk data. `field()` names the offending entry.
class FormatError : public std::runtime_error {
  public:
    FormatError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// A file or directory could not be created or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Base for failures of the numerical procedures themselves.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class TrainingDivergedError : public NumericalError {
  public:
    TrainingDivergedError(std::size_t step, std::string reason, const std::string& context = {})
        : NumericalError(context + (context.empty() ? "" : ": ") + "training diverged at step " +
                         std::to_string(step) + ": " + reason),
          step_(step),
          reason_(std::move(reason)) {}

    std::size_t step() const noexcept { return step_; }
    const std::string& reason() const noexcept { return reason_; }

  private:
    std::size_t step_;
    std::string reason_;
};

/// A metric that is not defined for the given input (e.g. AUC with one class).
class UndefinedMetricError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

}  // namespace irrnn
