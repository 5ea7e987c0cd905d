#include "mlac/fastsum.hpp"

#include "fft_grid.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mlac {

namespace {

constexpr double kPi = std::numbers::pi;

void check_bandwidth(int bandwidth) {
  if (bandwidth < 2 || bandwidth % 2 != 0)
    throw InvalidArgument("fastsum bandwidth N must be even, got " + std::to_string(bandwidth));
}

void check_boundary_eps(double eps) {
  if (!(eps > 0.0 && eps < 0.5))
    throw InvalidArgument("fastsum boundary eps_B must lie in (0, 1/2)");
}

// Shell polynomial P(u) = a_0 + sum_{e = 4, 6, ..., 2p} a_e u^e in u = (1/2 - r) / eps_B.
// Even in u, so every odd derivative vanishes at r = 1/2; with no u^2 term the
// constant continuation past r = 1/2 is C^3. The p coefficients follow from
// matching k and its first p-1 derivatives at u = 1.
struct ShellPolynomial {
  std::vector<int> exponents;
  std::vector<double> coeffs;
  double boundary_eps = 0.0;

  double operator()(double r) const {
    const double u = (0.5 - std::min(r, 0.5)) / boundary_eps;
    const double u2 = u * u;
    double acc = 0.0, power = 1.0;
    int e = 0;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      for (; e < exponents[i]; e += 2) power *= u2;
      acc += coeffs[i] * power;
    }
    return acc;
  }
};

ShellPolynomial shell_polynomial(const RadialProfile& profile, double boundary_eps,
                                 int smoothness) {
  const int p = smoothness;
  const double r0 = 0.5 - boundary_eps;
  ShellPolynomial shell;
  shell.boundary_eps = boundary_eps;
  shell.exponents.push_back(0);
  for (int e = 4; e <= 2 * p; e += 2) shell.exponents.push_back(e);

  // d^i/du^i u^e at u = 1 is e!/(e-i)!; d/du = -eps_B d/dr.
  Eigen::MatrixXd a(p, p);
  Eigen::VectorXd rhs(p);
  double chain = 1.0;
  for (int i = 0; i < p; ++i) {
    for (int col = 0; col < p; ++col) {
      double f = 1.0;
      for (int q = 0; q < i; ++q) f *= (shell.exponents[col] - q);
      a(i, col) = f;
    }
    rhs(i) = chain * profile(i, r0);
    chain *= -boundary_eps;
  }
  const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
  shell.coeffs.assign(sol.data(), sol.data() + p);
  return shell;
}

RadialProfile profile_of(const KernelSpec& kernel) {
  return [kernel](int order, double r) { return kernel.derivative(order, r); };
}

Index grid_volume(int side, int dim) {
  Index v = 1;
  for (int t = 0; t < dim; ++t) v *= side;
  return v;
}

}  // namespace

double regularized_profile(const RadialProfile& profile, double r, double boundary_eps,
                           int smoothness) {
  const double r0 = 0.5 - boundary_eps;
  if (r <= r0) return profile(0, r);
  return shell_polynomial(profile, boundary_eps, smoothness)(r);
}

VectorXc kernel_fourier_coefficients(const RadialProfile& profile, int dim, int bandwidth,
                                     double boundary_eps, int smoothness) {
  check_bandwidth(bandwidth);
  check_boundary_eps(boundary_eps);
  if (dim < 1 || dim > 3) throw InvalidArgument("fastsum supports 1 <= d <= 3");
  if (smoothness < 1) throw InvalidArgument("fastsum regularization degree p must be >= 1");

  const int nb = bandwidth;
  const double r0 = 0.5 - boundary_eps;
  const auto shell = shell_polynomial(profile, boundary_eps, smoothness);
  const Index total = grid_volume(nb, dim);

  // Sample K_R(k / N) with k stored at position k mod N.
  std::vector<Complex> grid(static_cast<std::size_t>(total));
  std::array<int, 3> k{};
  for (Index flat = 0; flat < total; ++flat) {
    Index rem = flat;
    double r2 = 0.0;
    for (int t = dim - 1; t >= 0; --t) {
      const int pos = static_cast<int>(rem % nb);
      rem /= nb;
      k[t] = pos < nb / 2 ? pos : pos - nb;
      const double y = static_cast<double>(k[t]) / nb;
      r2 += y * y;
    }
    const double r = std::sqrt(r2);
    const double value = r <= r0 ? profile(0, r) : shell(r);
    grid[static_cast<std::size_t>(flat)] = value;
  }

  detail::fft_grid(grid, nb, dim, detail::FftDirection::Forward);

  // Reorder to I_N layout, scale by N^-d. K_R is real and even, so b_l is real;
  // the Nyquist index -N/2 has no partner and is dropped to keep the polynomial real.
  VectorXc coeffs(total);
  const double scale = 1.0 / static_cast<double>(total);
  for (Index flat = 0; flat < total; ++flat) {
    Index rem = flat;
    Index src = 0, stride = 1;
    bool nyquist = false;
    for (int t = dim - 1; t >= 0; --t) {
      const int l = static_cast<int>(rem % nb) - nb / 2;
      rem /= nb;
      if (l == -nb / 2) nyquist = true;
      src += stride * ((l + nb) % nb);
      stride *= nb;
    }
    coeffs(flat) = nyquist ? Complex(0.0)
                           : Complex(grid[static_cast<std::size_t>(src)].real() * scale, 0.0);
  }
  return coeffs;
}

VectorXc kernel_fourier_coefficients(const KernelSpec& kernel, int dim, int bandwidth,
                                     double boundary_eps, int smoothness) {
  return kernel_fourier_coefficients(profile_of(kernel), dim, bandwidth, boundary_eps,
                                     smoothness);
}

Complex evaluate_trig_polynomial(const VectorXc& coeffs, int dim, int bandwidth,
                                 const Eigen::Ref<const VectorXd>& y) {
  const Index total = grid_volume(bandwidth, dim);
  if (coeffs.size() != total || y.size() != dim)
    throw InvalidArgument("trigonometric polynomial shape mismatch");
  Complex acc = 0.0;
  for (Index flat = 0; flat < total; ++flat) {
    Index rem = flat;
    double phase = 0.0;
    for (int t = dim - 1; t >= 0; --t) {
      const int l = static_cast<int>(rem % bandwidth) - bandwidth / 2;
      rem /= bandwidth;
      phase += l * y(t);
    }
    acc += coeffs(flat) * std::polar(1.0, 2.0 * kPi * phase);
  }
  return acc;
}

// ---------------------------------------------------------------------------

FastsumPlan::FastsumPlan(const KernelSpec& kernel, int dim, FastsumParams params)
    : dim_(dim), params_(params), kernel_(kernel) {
  kernel_.validate();
  check_bandwidth(params_.bandwidth);
  check_boundary_eps(params_.boundary_eps);
  if (dim < 1 || dim > 3)
    throw InvalidArgument("fastsum supports 1 <= d <= 3 (group features first), got d = " +
                          std::to_string(dim));
  if (params_.window_cutoff < 2) throw InvalidArgument("fastsum window cutoff m must be >= 2");
  if (params_.oversampling < 2) throw InvalidArgument("fastsum oversampling must be >= 2");
  const int n = params_.oversampling * params_.bandwidth;
  if (2 * params_.window_cutoff + 2 > n) throw InvalidArgument("fastsum window wider than grid");

  window_.cutoff = params_.window_cutoff;
  window_.grid_size = n;
  window_.shape = kPi * (2.0 - 1.0 / params_.oversampling);

  coeffs_ = kernel_fourier_coefficients(kernel_, dim_, params_.bandwidth, params_.boundary_eps,
                                        params_.smoothness);

  const int nb = params_.bandwidth;
  deconv_.resize(nb);
  for (int k = -nb / 2; k < nb / 2; ++k) deconv_(k + nb / 2) = 1.0 / (n * window_hat(k));

  // b_l * deconv(l)^2 on the r2c half grid of the oversampled FFT (last axis
  // 0..n/2), zero outside I_N.
  const int last = n / 2 + 1;
  const Index half_total = grid_volume(n, dim_ - 1) * last;
  half_mult_.assign(static_cast<std::size_t>(half_total), 0.0);
  for (Index flat = 0; flat < half_total; ++flat) {
    Index rem = flat, src = 0, stride = 1;
    double factor = 1.0;
    bool inside = true;
    for (int t = dim_ - 1; t >= 0; --t) {
      const int extent = t == dim_ - 1 ? last : n;
      const int i = static_cast<int>(rem % extent);
      rem /= extent;
      const int l = i < n / 2 ? i : i - n;
      if (l < -nb / 2 || l >= nb / 2) inside = false;
      if (inside) {
        factor *= deconv_(l + nb / 2) * deconv_(l + nb / 2);
        src += stride * (l + nb / 2);
      }
      stride *= nb;
    }
    if (inside) half_mult_[static_cast<std::size_t>(flat)] = coeffs_(src).real() * factor;
  }
}

double FastsumPlan::window_value(double x) const {
  const double m = window_.cutoff;
  const double n = window_.grid_size;
  const double arg = m * m - n * n * x * x;
  if (arg < 0.0) return 0.0;
  const double s = std::sqrt(arg);
  if (s < 1e-12) return window_.shape / kPi;
  return std::sinh(window_.shape * s) / (kPi * s);
}

double FastsumPlan::window_hat(int k) const {
  const double m = window_.cutoff;
  const double n = window_.grid_size;
  const double w = 2.0 * kPi * k / n;
  return std::cyl_bessel_i(0.0, m * std::sqrt(window_.shape * window_.shape - w * w)) / n;
}

// ---------------------------------------------------------------------------

PointSet::PointSet(MatrixXd coords, double boundary_eps)
    : coords_(std::move(coords)), boundary_eps_(boundary_eps) {
  check_boundary_eps(boundary_eps);
  if (coords_.cols() < 1) throw InvalidArgument("point set needs at least one coordinate");
  const double limit = 0.25 - 0.5 * boundary_eps;
  for (Index i = 0; i < coords_.rows(); ++i) {
    const double r = coords_.row(i).norm();
    if (!std::isfinite(r) || r > limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "point " << i << " has norm " << r << " outside the admissible ball of radius "
         << limit << " (scale features first)";
      throw InvalidArgument(os.str());
    }
  }
}

FastsumOperator::FastsumOperator(std::shared_ptr<const FastsumPlan> plan, PointSet points)
    : plan_(std::move(plan)), points_(std::move(points)) {
  if (!plan_) throw InvalidArgument("fastsum operator needs a plan");
  if (points_.dim() != plan_->dim())
    throw InvalidArgument("fastsum plan dimension " + std::to_string(plan_->dim()) +
                          " does not match point dimension " + std::to_string(points_.dim()));
  if (points_.boundary_eps() < plan_->params().boundary_eps * (1.0 - 1e-12))
    throw InvalidArgument("point set was validated for a smaller eps_B than the plan uses");

  const int m = plan_->window().cutoff;
  const int n = plan_->window().grid_size;
  const int d = points_.dim();
  span_ = 2 * m + 2;
  const Index count = points_.size();
  index_.resize(static_cast<std::size_t>(count * d * span_));
  psi_.resize(index_.size());
  for (Index j = 0; j < count; ++j) {
    for (int t = 0; t < d; ++t) {
      const double x = points_.coords()(j, t);
      const int first = static_cast<int>(std::floor(x * n)) - m;
      const std::size_t base = static_cast<std::size_t>((j * d + t) * span_);
      for (int s = 0; s < span_; ++s) {
        index_[base + s] = (((first + s) % n) + n) % n;
        psi_[base + s] = plan_->window_value(x - static_cast<double>(first + s) / n);
      }
    }
  }
}

template <class T>
void FastsumOperator::spread(const T* v, T* grid) const {
  const int d = points_.dim();
  const std::size_t n = static_cast<std::size_t>(plan_->window().grid_size);
  const int s = span_;
  for (Index j = 0; j < size(); ++j) {
    const std::size_t base = static_cast<std::size_t>(j * d * s);
    const int* ix = &index_[base];
    const double* w = &psi_[base];
    const T vj = v[j];
    if (d == 1) {
      for (int a = 0; a < s; ++a) grid[ix[a]] += vj * w[a];
    } else if (d == 2) {
      for (int a = 0; a < s; ++a) {
        const T va = vj * w[a];
        T* row = grid + ix[a] * n;
        for (int b = 0; b < s; ++b) row[ix[s + b]] += va * w[s + b];
      }
    } else {
      for (int a = 0; a < s; ++a) {
        const T va = vj * w[a];
        for (int b = 0; b < s; ++b) {
          const T vb = va * w[s + b];
          T* row = grid + (ix[a] * n + ix[s + b]) * n;
          for (int c = 0; c < s; ++c) row[ix[2 * s + c]] += vb * w[2 * s + c];
        }
      }
    }
  }
}

template <class T>
void FastsumOperator::interpolate(const T* grid, T* out) const {
  const int d = points_.dim();
  const std::size_t n = static_cast<std::size_t>(plan_->window().grid_size);
  const int s = span_;
  for (Index j = 0; j < size(); ++j) {
    const std::size_t base = static_cast<std::size_t>(j * d * s);
    const int* ix = &index_[base];
    const double* w = &psi_[base];
    T acc = T(0);
    if (d == 1) {
      for (int a = 0; a < s; ++a) acc += grid[ix[a]] * w[a];
    } else if (d == 2) {
      for (int a = 0; a < s; ++a) {
        const T* row = grid + ix[a] * n;
        T inner = T(0);
        for (int b = 0; b < s; ++b) inner += row[ix[s + b]] * w[s + b];
        acc += inner * w[a];
      }
    } else {
      for (int a = 0; a < s; ++a) {
        T mid = T(0);
        for (int b = 0; b < s; ++b) {
          const T* row = grid + (ix[a] * n + ix[s + b]) * n;
          T inner = T(0);
          for (int c = 0; c < s; ++c) inner += row[ix[2 * s + c]] * w[2 * s + c];
          mid += inner * w[s + b];
        }
        acc += mid * w[a];
      }
    }
    out[j] = acc;
  }
}

VectorXc FastsumOperator::adjoint(const Eigen::Ref<const VectorXc>& v) const {
  if (v.size() != size()) throw InvalidArgument("adjoint NFFT: vector length mismatch");
  const int d = points_.dim();
  const int n = plan_->window().grid_size;
  const int nb = plan_->bandwidth();
  std::vector<Complex> grid(static_cast<std::size_t>(grid_volume(n, d)), Complex(0.0));
  const VectorXc vc = v;
  spread(vc.data(), grid.data());

  detail::fft_grid(grid, n, d, detail::FftDirection::Forward);

  const Index total = grid_volume(nb, d);
  const VectorXd& deconv = plan_->deconvolution();
  VectorXc out(total);
  for (Index flat = 0; flat < total; ++flat) {
    Index rem = flat, src = 0, stride = 1;
    double factor = 1.0;
    for (int t = d - 1; t >= 0; --t) {
      const int idx = static_cast<int>(rem % nb);
      rem /= nb;
      const int l = idx - nb / 2;
      factor *= deconv(idx);
      src += stride * ((l + n) % n);
      stride *= n;
    }
    out(flat) = grid[static_cast<std::size_t>(src)] * factor;
  }
  return out;
}

VectorXc FastsumOperator::forward(const Eigen::Ref<const VectorXc>& coeffs) const {
  const int d = points_.dim();
  const int n = plan_->window().grid_size;
  const int nb = plan_->bandwidth();
  const Index total = grid_volume(nb, d);
  if (coeffs.size() != total) throw InvalidArgument("NFFT: coefficient count mismatch");

  std::vector<Complex> grid(static_cast<std::size_t>(grid_volume(n, d)), Complex(0.0));
  const VectorXd& deconv = plan_->deconvolution();
  for (Index flat = 0; flat < total; ++flat) {
    Index rem = flat, dst = 0, stride = 1;
    double factor = 1.0;
    for (int t = d - 1; t >= 0; --t) {
      const int idx = static_cast<int>(rem % nb);
      rem /= nb;
      factor *= deconv(idx);
      dst += stride * ((idx - nb / 2 + n) % n);
      stride *= n;
    }
    grid[static_cast<std::size_t>(dst)] = coeffs(flat) * factor;
  }

  detail::fft_grid(grid, n, d, detail::FftDirection::Backward);

  VectorXc out(size());
  interpolate(grid.data(), out.data());
  return out;
}

VectorXd FastsumOperator::apply(const ConstVectorRef& v) const {
  if (v.size() != size()) throw InvalidArgument("fastsum: vector length mismatch");
  if (size() == 1) return VectorXd::Zero(1);
  const int d = points_.dim();
  const int n = plan_->window().grid_size;
  // Real input and a real, even multiplier keep the whole pipeline in
  // real-to-complex / complex-to-real form; the result is real by construction.
  std::vector<double> grid(static_cast<std::size_t>(grid_volume(n, d)), 0.0);
  const VectorXd vv = v;
  spread(vv.data(), grid.data());
  std::vector<Complex> half;
  detail::fft_r2c(grid, half, n, d);
  const std::vector<double>& mult = plan_->half_multiplier();
  for (std::size_t i = 0; i < half.size(); ++i) half[i] *= mult[i];
  detail::fft_c2r(half, grid, n, d);
  VectorXd out(size());
  interpolate(grid.data(), out.data());
  return out - plan_->kernel().at_zero() * v;
}

VectorXd FastsumOperator::apply_complex(const ConstVectorRef& v) const {
  if (v.size() != size()) throw InvalidArgument("fastsum: vector length mismatch");
  if (size() == 1) return VectorXd::Zero(1);
  const VectorXc hat = adjoint(v.cast<Complex>());
  const VectorXc f = forward(hat.cwiseProduct(plan_->coeffs()));
  const double residue = f.imag().norm();
  if (residue > 1e-8 * std::max(v.norm(), 1e-300) && residue > 0.0) {
    std::ostringstream os;
    os << "fastsum: imaginary residue " << residue << " exceeds 1e-8 ||v||";
    throw NumericalError(os.str());
  }
  return f.real() - plan_->kernel().at_zero() * v;
}

VectorXc nfft_adjoint(const PointSet& points, const Eigen::Ref<const VectorXc>& v,
                      const FastsumPlan& plan) {
  const FastsumOperator op(std::make_shared<FastsumPlan>(plan), points);
  return op.adjoint(v);
}

VectorXc nfft_forward(const Eigen::Ref<const VectorXc>& coeffs, const PointSet& points,
                      const FastsumPlan& plan) {
  const FastsumOperator op(std::make_shared<FastsumPlan>(plan), points);
  return op.forward(coeffs);
}

VectorXd fastsum_apply(const PointSet& points, const ConstVectorRef& v,
                       const FastsumPlan& plan) {
  const FastsumOperator op(std::make_shared<FastsumPlan>(plan), points);
  return op.apply(v);
}

}  // namespace mlac
