#pragma once

#include "mlac/graph.hpp"
#include "mlac/powermean.hpp"
#include "mlac/types.hpp"

#include <functional>
#include <optional>

namespace mlac {

/// Known labels: one-hot rows of F (zero rows for unlabeled nodes) and the
/// fidelity weights omega_i = omega_0 on labeled nodes, 0 elsewhere.
struct LabelData {
  MatrixXd F;
  VectorXd fidelity;
  int classes = 0;

  /// `labels` holds 1-based class ids, 0 for unlabeled.
  static LabelData from_class_ids(const VectorXi& labels, int classes, double omega0);

  Index size() const { return F.rows(); }
  Index labeled_count() const;
  void validate() const;
};

struct AllenCahnParams {
  double epsilon = 5e-3;
  double omega0 = 1000.0;
  std::optional<double> c;  // default omega0 + 3 / epsilon
  double dt = 0.01;
  double tolerance = 1e-6;
  int max_iter = 300;

  double convexity() const { return c ? *c : omega0 + 3.0 / epsilon; }
  void validate() const;
};

struct AllenCahnResult {
  MatrixXd U;  // n x m, rows on the simplex
  int iterations = 0;
  /// relative_change <= tolerance was reached. An infinite tolerance stops
  /// after the first step and reports false.
  bool converged = false;
  double relative_change = 0.0;
};

/// Euclidean projection onto {x >= 0, sum x = 1} by sorting and thresholding.
VectorXd simplex_project(const ConstVectorRef& row);
MatrixXd project_rows(const ConstMatrixRef& U);

/// Rowwise T_ij = sum_q 1/2 (1 - 2 delta_jq) |u_i - e_q|_1 prod_{p != q} 1/4 |u_i - e_p|_1^2.
MatrixXd nonlinearity_T(const ConstMatrixRef& U);

/// Initial scores: e_j on labeled rows, the uniform vector elsewhere.
MatrixXd initial_scores(const LabelData& labels);

using IterationObserver = std::function<void(int iteration, const MatrixXd& U)>;

/// Multiclass Allen-Cahn iteration in the span of the basis vectors, with the
/// iterate projected onto the simplex after every step.
AllenCahnResult allen_cahn_solve(const SpectralBasis& basis, const LabelData& labels,
                                 const AllenCahnParams& params,
                                 const IterationObserver& observer = {});

/// Argmax per row, ties to the lowest index. 0-based; add 1 for class ids.
VectorXi predict_labels(const ConstMatrixRef& U);

/// Ginzburg-Landau energy with the Dirichlet term from the truncated basis.
double ginzburg_landau_energy(const ConstMatrixRef& U, const SpectralBasis& basis,
                              const LabelData& labels, double epsilon);
/// Same with an explicit Laplacian matrix.
double ginzburg_landau_energy(const ConstMatrixRef& U, const ConstMatrixRef& laplacian,
                              const LabelData& labels, double epsilon);

struct BinaryAllenCahnResult {
  VectorXd u;
  VectorXi sign;  // +1 where u >= 0, -1 elsewhere
  int iterations = 0;
  bool converged = false;
};

/// Two-class scheme on u = Phi v with labels f in {-1, 0, 1}^n and fidelity
/// omega_0 where f != 0. Starts from u = f.
BinaryAllenCahnResult binary_allen_cahn_solve(const SpectralBasis& basis, const ConstVectorRef& f,
                                              const AllenCahnParams& params);

}  // namespace mlac
