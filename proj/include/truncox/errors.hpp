#pragma once

#include <stdexcept>
#include <string>

namespace truncox {

// Input/data problems. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver/estimation problems. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class MissingColumn : public ValidationError {
public:
  explicit MissingColumn(const std::string& column)
      : ValidationError("missing column: " + column), column(column) {}
  std::string column;
};

class NonNumericCell : public ValidationError {
public:
  NonNumericCell(std::size_t row, const std::string& column, const std::string& cell)
      : ValidationError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                        ", column " + column),
        row(row), column(column) {}
  std::size_t row;
  std::string column;
};

class TruncationViolation : public ValidationError {
public:
  explicit TruncationViolation(std::size_t row)
      : ValidationError("record at row " + std::to_string(row) +
                        " violates l <= t <= r"),
        row(row) {}
  std::size_t row;
};

class EmptyDataset : public ValidationError {
public:
  EmptyDataset() : ValidationError("dataset has no records") {}
};

class NonIdentifiable : public ValidationError {
public:
  explicit NonIdentifiable(const std::string& msg) : ValidationError(msg) {}
};

class NoComparablePairs : public ValidationError {
public:
  NoComparablePairs() : ValidationError("no comparable pairs for Kendall statistic") {}
};

class SingularHessian : public NumericalError {
public:
  SingularHessian() : NumericalError("information matrix is singular") {}
};

class NoConvergence : public NumericalError {
public:
  explicit NoConvergence(int iterations)
      : NumericalError("solver failed to converge after " + std::to_string(iterations) +
                       " iterations"),
        iterations(iterations) {}
  int iterations;
};

class EmptyRiskSet : public NumericalError {
public:
  explicit EmptyRiskSet(double time)
      : NumericalError("empty risk set at event time " + std::to_string(time)),
        time(time) {}
  double time;
};

class AlphaUnderflow : public NumericalError {
public:
  AlphaUnderflow(std::size_t subject, double value)
      : NumericalError("observation probability underflow for subject " +
                       std::to_string(subject) + " (alpha = " + std::to_string(value) + ")"),
        subject(subject), value(value) {}
  std::size_t subject;
  double value;
};

class TooManyFailures : public NumericalError {
public:
  TooManyFailures(int failures, int total)
      : NumericalError(std::to_string(failures) + " of " + std::to_string(total) +
                       " bootstrap replicates failed"),
        failures(failures), total(total) {}
  int failures;
  int total;
};

class TruncationTooSevere : public NumericalError {
public:
  explicit TruncationTooSevere(double acceptance_rate)
      : NumericalError("acceptance rate " + std::to_string(acceptance_rate) +
                       " too low to sample observed data"),
        acceptance_rate(acceptance_rate) {}
  double acceptance_rate;
};

class CalibrationFailed : public NumericalError {
public:
  explicit CalibrationFailed(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace truncox
