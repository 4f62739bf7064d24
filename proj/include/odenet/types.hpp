#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace odenet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

/// A configuration that cannot produce a valid object (bad sizes, bad enums).
struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Data that violates a declared domain (lengths, family support, ragged CSV).
struct InvalidData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A non-finite value met during numerical evaluation; carries where.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, double where)
      : std::runtime_error(what + " at t=" + std::to_string(where)), location(where) {}
  double location;
};

/// An iterative solver failed; carries the last iterate for diagnostics.
struct ConvergenceFailure : std::runtime_error {
  ConvergenceFailure(const std::string& what, Vec last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  Vec last_iterate;
};

struct LinearAlgebraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line_number)
      : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
  int line;
};

}  // namespace odenet
