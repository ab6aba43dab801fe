#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace singflow {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed field spec, parameter, or violated precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::size_t required)
      : Error(what), required_(required) {}
  std::size_t required() const { return required_; }

 private:
  std::size_t required_;
};

/// Numerical failure somewhere along an integration or a fit.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class EvaluationDomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The orbit left the inflated field region.
class RegionEscapeError : public NumericalError {
 public:
  RegionEscapeError(const std::string& what, double escape_time)
      : NumericalError(what), escape_time_(escape_time) {}
  double escape_time() const { return escape_time_; }

 private:
  double escape_time_;
};

/// The orbit came too close to a singular point: either the step size
/// underflowed or the speed dropped below the configured floor.
class ProximityTruncationError : public NumericalError {
 public:
  ProximityTruncationError(const std::string& what, double time, const Eigen::Vector3d& last)
      : NumericalError(what), time_(time), last_(last) {}
  double time() const { return time_; }
  const Eigen::Vector3d& last_state() const { return last_; }

 private:
  double time_;
  Eigen::Vector3d last_;
};

class SingularPointError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class NoCrossingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TangentialCrossingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotRecurrentError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class WrongCheckerError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class EmptyClassError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class InsufficientDataError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

}  // namespace singflow
