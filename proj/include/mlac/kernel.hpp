#pragma once

#include "mlac/types.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace mlac {

enum class KernelFamily { Gaussian, LaplacianRbf };

/// Radial kernel K(y) = k(||y||_2).
///   gaussian:      exp(-r^2 / sigma^2)
///   laplacian-rbf: exp(-r / sigma)
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double sigma = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily f, double s) : family(f), sigma(s) { validate(); }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw InvalidArgument("kernel sigma must be positive and finite");
  }

  double operator()(double r) const {
    if (family == KernelFamily::Gaussian) return std::exp(-(r * r) / (sigma * sigma));
    return std::exp(-r / sigma);
  }

  double at_zero() const { return 1.0; }

  /// j-th derivative of the radial profile at r >= 0.
  double derivative(int order, double r) const {
    if (order == 0) return (*this)(r);
    if (family == KernelFamily::LaplacianRbf)
      return std::pow(-1.0 / sigma, order) * std::exp(-r / sigma);
    // d^j/dr^j exp(-(r/s)^2) = (-1/s)^j H_j(r/s) exp(-(r/s)^2), physicists' Hermite.
    const double u = r / sigma;
    double h_prev = 1.0, h = 2.0 * u;
    for (int j = 1; j < order; ++j) {
      const double next = 2.0 * u * h - 2.0 * j * h_prev;
      h_prev = h;
      h = next;
    }
    return std::pow(-1.0 / sigma, order) * h * std::exp(-u * u);
  }

  /// Same kernel on coordinates multiplied by `factor`.
  KernelSpec rescaled(double factor) const { return {family, sigma * factor}; }
};

inline std::string_view to_string(KernelFamily f) {
  return f == KernelFamily::Gaussian ? "gaussian" : "laplacian-rbf";
}

inline KernelFamily parse_kernel_family(std::string_view s) {
  if (s == "gaussian") return KernelFamily::Gaussian;
  if (s == "laplacian-rbf" || s == "laplacian") return KernelFamily::LaplacianRbf;
  throw InvalidArgument("unknown kernel family '" + std::string(s) + "'");
}

}  // namespace mlac
