#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mlac {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;
using Complex = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;

using ConstVectorRef = Eigen::Ref<const VectorXd>;
using ConstMatrixRef = Eigen::Ref<const MatrixXd>;

// Error kinds map onto CLI exit codes (see cli/commands.hpp).

/// Invalid input shape, parameter, or precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-convergence, breakdown, non-finite iterates.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read, written, or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration file rejected.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlac
