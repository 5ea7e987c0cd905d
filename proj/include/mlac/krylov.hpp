#pragma once

#include "mlac/graph.hpp"
#include "mlac/types.hpp"

#include <cstdint>
#include <functional>

namespace mlac {

/// Matrix-free symmetric operator.
struct SymmetricOperator {
  Index n = 0;
  std::function<VectorXd(const VectorXd&)> apply;
};

/// Largest |<u, Av> - <Au, v>| / (||Au|| ||v|| + ||u|| ||Av||) over random probes.
double symmetry_defect(const SymmetricOperator& op, int probes = 3, std::uint64_t seed = 7);

struct EigenResult {
  VectorXd values;   // descending
  MatrixXd vectors;  // n x k, orthonormal
  VectorXd residuals;
  int matvecs = 0;
  int restarts = 0;
};

struct LanczosOptions {
  double tol = 1e-8;
  int max_subspace = 0;  // 0: max(2k + 1, 20), capped at n
  int max_restarts = 500;
  std::uint64_t seed = 42;
  int start_sign = 1;    // multiplies the starting vector
  /// Lanczos steps of the post-convergence probe for missed copies of repeated
  /// eigenvalues; 0 disables the probe.
  int probe_steps = 20;
};

/// k largest eigenpairs of a symmetric operator by thick-restart (Krylov-Schur)
/// Lanczos with full reorthogonalization. A pair is accepted when
/// ||A phi - lambda phi|| <= tol * ||A||_est, with ||A||_est the largest Ritz
/// magnitude seen. Throws NumericalError carrying the residuals on failure.
/// After convergence the complement of the found vectors is probed and any
/// eigenvalue found above the k-th one is merged in.
EigenResult lanczos_largest_eigs(const SymmetricOperator& op, Index k,
                                 const LanczosOptions& options = {});

struct PksmOptions {
  int krylov_dim = 50;
  double tol = 1e-8;
};

struct PksmResult {
  VectorXd value;
  bool converged = false;
  int steps = 0;
};

/// y ~ A^p v for a symmetric positive (semi)definite operator, by Lanczos
/// projection: y = ||v|| V_s f(T_s) e_1 with f(x) = x^p evaluated through the
/// eigendecomposition of T_s. Grows s until ||y_s - y_{s-1}|| <= tol ||y_s||.
PksmResult pksm_apply(const SymmetricOperator& op, double p, const ConstVectorRef& v,
                      const PksmOptions& options = {});

/// (L_sym + delta I)^p v for one layer, delta taken from the layer.
PksmResult pksm_apply(const Layer& layer, double p, const ConstVectorRef& v,
                      const PksmOptions& options = {});

/// Wraps apply_sym_laplacian of a layer.
SymmetricOperator sym_laplacian_operator(const Layer& layer);

}  // namespace mlac
