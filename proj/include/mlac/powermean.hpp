#pragma once

#include "mlac/graph.hpp"
#include "mlac/krylov.hpp"
#include "mlac/types.hpp"

#include <optional>

namespace mlac {

/// p = 1 and p < 0 have matrix-free paths; any other p > 0 is handled by dense
/// assembly up to `dense_limit` nodes.
struct PowerMeanConfig {
  double p = 1.0;
  std::optional<double> delta;  // default log(1 + |p|) for p < 0, 0 for p > 0
  Index dense_limit = 5000;
  PksmOptions pksm;

  double shift() const;
  void validate() const;
};

/// k smallest eigenpairs of the (shifted) power mean Laplacian.
struct SpectralBasis {
  VectorXd values;   // ascending
  MatrixXd vectors;  // n x k, orthonormal
  int matvecs = 0;
};

/// (1/T) sum_t D_t^{-1/2} W_t D_t^{-1/2} v, i.e. (I - L_1) v for unshifted layers.
VectorXd apply_one_minus_L1(const MultilayerGraph& graph, const ConstVectorRef& v);

/// (1/T) sum_t (L_sym^(t) + delta I)^p v by PKSM, p < 0. Layers carry their shift.
VectorXd apply_Lp_power(const MultilayerGraph& graph, double p, const ConstVectorRef& v,
                        const PksmOptions& pksm = {});

/// Dense (1/T) sum_t (L_sym^(t) + delta I)^p, then its 1/p-th root.
MatrixXd dense_power_mean(const MultilayerGraph& graph, double p, double delta);

SpectralBasis power_mean_eigs(const MultilayerGraph& graph, const PowerMeanConfig& config,
                              Index k, const LanczosOptions& lanczos = {});

}  // namespace mlac
