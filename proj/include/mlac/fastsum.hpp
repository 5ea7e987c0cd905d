#pragma once

// NFFT-based fast summation of radial kernel sums
//
//   (W v)_i = sum_{j != i} v_j K(x_i - x_j),   x_i in R^d, d <= 3,
//
// in O(n) per product for fixed accuracy. K is replaced by a smooth 1-periodic
// regularization K_R (equal to K for ||y|| <= 1/2 - eps_B), which is in turn
// approximated by the trigonometric polynomial
//
//   K_RF(y) = sum_{l in I_N} b_l exp(2 pi i l.y),  I_N = {-N/2, ..., N/2-1}^d.
//
// The product is then adjoint NFFT -> multiply by b_l -> NFFT, minus K(0) v.

#include "mlac/kernel.hpp"
#include "mlac/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mlac {

struct FastsumParams {
  int bandwidth = 64;           // N, even
  int window_cutoff = 5;        // m_NFFT
  double boundary_eps = 1.0 / 16.0;  // eps_B
  int smoothness = 5;           // p_NFFT
  int oversampling = 2;         // rho
};

/// Compactly supported NFFT window. Only the Kaiser-Bessel window is implemented:
///   phi(x)   = sinh(b sqrt(m^2 - n^2 x^2)) / (pi sqrt(m^2 - n^2 x^2)),  |x| <= m/n
///   phihat(k)= I_0(m sqrt(b^2 - (2 pi k / n)^2)) / n,                   b = pi (2 - 1/rho)
struct WindowDescriptor {
  std::string name = "kaiser-bessel";
  int cutoff = 5;      // m
  int grid_size = 128; // n = rho N per dimension
  double shape = 0.0;  // b
};

/// Radial profile k(r) and its derivatives: f(order, r).
using RadialProfile = std::function<double(int, double)>;

/// Fourier coefficients b_l of the regularized kernel, flattened row-major over
/// I_N^d with index l_t + N/2 per axis (last axis fastest).
///
/// On the shell 1/2 - eps_B < r <= 1/2 the profile is replaced by a polynomial
/// of degree 2p in (1/2 - r) that matches k and its first p-1 derivatives at
/// r = 1/2 - eps_B and is even about r = 1/2 with zero second derivative there.
/// For r > 1/2 (corners of the periodic cell) the value at 1/2 is continued.
VectorXc kernel_fourier_coefficients(const RadialProfile& profile, int dim,
                                     int bandwidth, double boundary_eps,
                                     int smoothness);
VectorXc kernel_fourier_coefficients(const KernelSpec& kernel, int dim,
                                     int bandwidth, double boundary_eps,
                                     int smoothness);

/// Evaluates the regularized profile K_R at radius r.
double regularized_profile(const RadialProfile& profile, double r,
                           double boundary_eps, int smoothness);

/// Evaluates the trigonometric polynomial sum_l c_l exp(2 pi i l.y) directly.
Complex evaluate_trig_polynomial(const VectorXc& coeffs, int dim, int bandwidth,
                                 const Eigen::Ref<const VectorXd>& y);

class FastsumPlan {
 public:
  FastsumPlan(const KernelSpec& kernel, int dim, FastsumParams params = {});

  int dim() const { return dim_; }
  int bandwidth() const { return params_.bandwidth; }
  const FastsumParams& params() const { return params_; }
  const KernelSpec& kernel() const { return kernel_; }
  const WindowDescriptor& window() const { return window_; }
  const VectorXc& coeffs() const { return coeffs_; }

  /// Largest admissible Euclidean norm of a node: 1/4 - eps_B/2.
  double max_radius() const { return 0.25 - 0.5 * params_.boundary_eps; }

  // Window and its Fourier coefficients on the oversampled grid.
  double window_value(double x) const;
  double window_hat(int k) const;
  /// 1 / (n * phihat(k)) for k in [-N/2, N/2), indexed k + N/2.
  const VectorXd& deconvolution() const { return deconv_; }
  /// b_l / (n phihat(l))^2 laid out on the real-to-complex half grid of the
  /// oversampled FFT; zero outside I_N.
  const std::vector<double>& half_multiplier() const { return half_mult_; }

 private:
  int dim_;
  FastsumParams params_;
  KernelSpec kernel_;
  WindowDescriptor window_;
  VectorXc coeffs_;
  VectorXd deconv_;
  std::vector<double> half_mult_;
};

/// Node set for the NFFT, rows are points. Every row satisfies
/// ||x_i||_2 <= 1/4 - eps_B/2 so that all differences stay inside the
/// unregularized ball of radius 1/2 - eps_B.
class PointSet {
 public:
  PointSet(MatrixXd coords, double boundary_eps);

  Index size() const { return coords_.rows(); }
  int dim() const { return static_cast<int>(coords_.cols()); }
  const MatrixXd& coords() const { return coords_; }
  double boundary_eps() const { return boundary_eps_; }

 private:
  MatrixXd coords_;
  double boundary_eps_;
};

/// Adjoint NFFT: g_l ~ sum_j v_j exp(-2 pi i l.x_j), l in I_N^d.
VectorXc nfft_adjoint(const PointSet& points, const Eigen::Ref<const VectorXc>& v,
                      const FastsumPlan& plan);

/// NFFT: f_i ~ sum_l c_l exp(2 pi i l.x_i).
VectorXc nfft_forward(const Eigen::Ref<const VectorXc>& coeffs, const PointSet& points,
                      const FastsumPlan& plan);

/// Fast approximation of W v (diagonal excluded).
VectorXd fastsum_apply(const PointSet& points, const ConstVectorRef& v,
                       const FastsumPlan& plan);

/// Exact W v by O(d n^2) summation; any dimension.
VectorXd direct_apply(const ConstMatrixRef& points, const ConstVectorRef& v,
                      const KernelSpec& kernel);

/// Plan bound to a fixed node set with the window weights precomputed, for
/// repeated products against the same points. Immutable once built.
class FastsumOperator {
 public:
  FastsumOperator(std::shared_ptr<const FastsumPlan> plan, PointSet points);

  Index size() const { return points_.size(); }
  const FastsumPlan& plan() const { return *plan_; }
  const PointSet& points() const { return points_; }

  VectorXc adjoint(const Eigen::Ref<const VectorXc>& v) const;
  VectorXc forward(const Eigen::Ref<const VectorXc>& coeffs) const;

  /// W v through real-to-complex transforms.
  VectorXd apply(const ConstVectorRef& v) const;
  /// W v through the complex adjoint/forward pair, with the imaginary residue
  /// checked against 1e-8 ||v||_2. Slower; kept as a cross-check of apply().
  VectorXd apply_complex(const ConstVectorRef& v) const;

 private:
  template <class T>
  void spread(const T* v, T* grid) const;
  template <class T>
  void interpolate(const T* grid, T* out) const;

  std::shared_ptr<const FastsumPlan> plan_;
  PointSet points_;
  int span_;                  // 2m + 2 grid points per axis
  std::vector<int> index_;    // n x d x span wrapped grid indices
  std::vector<double> psi_;   // n x d x span window weights
};

}  // namespace mlac
