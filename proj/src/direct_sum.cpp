#include "mlac/fastsum.hpp"

#include <cmath>
#include <vector>

namespace mlac {

namespace {

// Upper-triangle sweep over per-axis coordinate arrays; each pair is evaluated
// once. Plain loops so that exp maps onto the vector math library.
template <int D, bool Gaussian>
[[gnu::always_inline]] inline void sweep_body(const double* const* x, int dim, const double* v,
                                              double* out, Index n, double scale) {
  const int d = D > 0 ? D : dim;
  for (Index i = 0; i + 1 < n; ++i) {
    const double vi = v[i];
    double acc = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (int t = 0; t < d; ++t) {
        const double diff = x[t][j] - x[t][i];
        r2 += diff * diff;
      }
      const double w = Gaussian ? std::exp(scale * r2) : std::exp(scale * std::sqrt(r2));
      acc += w * v[j];
      out[j] += w * vi;
    }
    out[i] += acc;
  }
}

#define MLAC_SWEEP(NAME, D, G)                                                          \
  __attribute__((target_clones("avx2", "default"))) void NAME(                          \
      const double* const* x, int dim, const double* v, double* out, Index n, double s) { \
    sweep_body<D, G>(x, dim, v, out, n, s);                                             \
  }

MLAC_SWEEP(gauss1, 1, true)
MLAC_SWEEP(gauss2, 2, true)
MLAC_SWEEP(gauss3, 3, true)
MLAC_SWEEP(gaussd, 0, true)
MLAC_SWEEP(laplace1, 1, false)
MLAC_SWEEP(laplace2, 2, false)
MLAC_SWEEP(laplace3, 3, false)
MLAC_SWEEP(laplaced, 0, false)

#undef MLAC_SWEEP

}  // namespace

VectorXd direct_apply(const ConstMatrixRef& points, const ConstVectorRef& v,
                      const KernelSpec& kernel) {
  if (v.size() != points.rows())
    throw InvalidArgument("direct summation: vector length does not match point count");
  kernel.validate();
  const Index n = points.rows();
  const int d = static_cast<int>(points.cols());
  const MatrixXd pts = points;  // column-major: one contiguous array per axis
  std::vector<const double*> axes(static_cast<std::size_t>(d));
  for (int t = 0; t < d; ++t) axes[static_cast<std::size_t>(t)] = pts.col(t).data();
  const VectorXd vv = v;
  VectorXd out = VectorXd::Zero(n);
  const bool gauss = kernel.family == KernelFamily::Gaussian;
  const double s = gauss ? -1.0 / (kernel.sigma * kernel.sigma) : -1.0 / kernel.sigma;
  using Sweep = void (*)(const double* const*, int, const double*, double*, Index, double);
  static constexpr Sweep gaussian[] = {gaussd, gauss1, gauss2, gauss3};
  static constexpr Sweep laplacian[] = {laplaced, laplace1, laplace2, laplace3};
  const Sweep f = (gauss ? gaussian : laplacian)[d <= 3 ? d : 0];
  f(axes.data(), d, vv.data(), out.data(), n, s);
  return out;
}

}  // namespace mlac
