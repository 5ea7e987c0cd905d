#include "mlac/powermean.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mlac {

double PowerMeanConfig::shift() const {
  if (delta) return *delta;
  return p < 0.0 ? std::log1p(std::abs(p)) : 0.0;
}

void PowerMeanConfig::validate() const {
  if (!std::isfinite(p) || p == 0.0)
    throw InvalidArgument("power mean exponent p must be finite and nonzero");
  const double d = shift();
  if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("power mean shift must be >= 0");
  if (p < 0.0 && d == 0.0)
    throw InvalidArgument("negative powers need a positive shift delta");
  if (dense_limit < 1) throw InvalidArgument("dense_limit must be positive");
}

VectorXd apply_one_minus_L1(const MultilayerGraph& graph, const ConstVectorRef& v) {
  if (v.size() != graph.size()) throw InvalidArgument("vector length does not match graph size");
  VectorXd acc = VectorXd::Zero(v.size());
  for (const auto& layer : graph.layers()) {
    const VectorXd& s = layer.inv_sqrt_degrees();
    acc += s.cwiseProduct(apply_weight(layer, s.cwiseProduct(v)));
  }
  return acc / static_cast<double>(graph.layer_count());
}

VectorXd apply_Lp_power(const MultilayerGraph& graph, double p, const ConstVectorRef& v,
                        const PksmOptions& pksm) {
  if (!(p < 0.0)) throw InvalidArgument("apply_Lp_power expects p < 0");
  if (v.size() != graph.size()) throw InvalidArgument("vector length does not match graph size");
  VectorXd acc = VectorXd::Zero(v.size());
  for (const auto& layer : graph.layers()) {
    if (!(layer.shift() > 0.0))
      throw InvalidArgument("negative powers need layers with a positive shift");
    acc += pksm_apply(layer, p, v, pksm).value;
  }
  return acc / static_cast<double>(graph.layer_count());
}

namespace {

MatrixXd symmetric_function(const MatrixXd& a, double power, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigensolve failed");
  VectorXd lam = eig.eigenvalues();
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -1e-10) {
      std::ostringstream os;
      os << what << ": eigenvalue " << lam(i) << " is negative";
      throw NumericalError(os.str());
    }
    lam(i) = std::pow(std::max(lam(i), 0.0), power);
  }
  if (!lam.allFinite()) throw NumericalError(std::string(what) + ": singular matrix power");
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

MatrixXd dense_power_mean(const MultilayerGraph& graph, double p, double delta) {
  const Index n = graph.size();
  MatrixXd mean = MatrixXd::Zero(n, n);
  for (const auto& layer : graph.layers())
    mean += symmetric_function(dense_sym_laplacian(layer.with_shift(delta)), p, "layer power");
  mean /= static_cast<double>(graph.layer_count());
  mean = 0.5 * (mean + mean.transpose());
  return symmetric_function(mean, 1.0 / p, "power mean root");
}

SpectralBasis power_mean_eigs(const MultilayerGraph& graph, const PowerMeanConfig& config,
                              Index k, const LanczosOptions& lanczos) {
  config.validate();
  const Index n = graph.size();
  if (k < 1 || k >= n)
    throw InvalidArgument("eigensolver needs 1 <= k < n, got k = " + std::to_string(k) +
                          ", n = " + std::to_string(n));
  const double p = config.p;
  const double delta = config.shift();
  SpectralBasis basis;

  if (p == 1.0) {
    const MultilayerGraph g = graph.with_shift(0.0);
    SymmetricOperator op{n, [&g](const VectorXd& x) { return apply_one_minus_L1(g, x); }};
    const EigenResult r = lanczos_largest_eigs(op, k, lanczos);
    basis.values = (1.0 + delta - r.values.array()).matrix();
    basis.vectors = r.vectors;
    basis.matvecs = r.matvecs;
  } else if (p < 0.0) {
    const MultilayerGraph g = graph.with_shift(delta);
    SymmetricOperator op{n, [&g, &config](const VectorXd& x) {
                           return apply_Lp_power(g, config.p, x, config.pksm);
                         }};
    const EigenResult r = lanczos_largest_eigs(op, k, lanczos);
    basis.values.resize(k);
    for (Index i = 0; i < k; ++i) {
      double mu = r.values(i);
      if (mu < 0.0) {
        if (mu < -1e-12) {
          std::ostringstream os;
          os << "power mean eigenvalue " << mu << " of L^p is negative; the shift delta = "
             << delta << " is too small";
          throw NumericalError(os.str());
        }
        mu = 0.0;
      }
      basis.values(i) = std::max(std::pow(mu, 1.0 / p), 0.0);
    }
    basis.vectors = r.vectors;
    basis.matvecs = r.matvecs;
  } else {
    if (n > config.dense_limit) {
      std::ostringstream os;
      os << "p = " << p << " (with delta = " << delta << ") needs the dense fallback, which is "
         << "limited to n <= " << config.dense_limit << " (n = " << n
         << "); use p = 1 or p < 0 for large graphs";
      throw InvalidArgument(os.str());
    }
    const MatrixXd lp = dense_power_mean(graph, p, delta);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(lp);
    if (eig.info() != Eigen::Success) throw NumericalError("dense power mean eigensolve failed");
    basis.values = eig.eigenvalues().head(k);
    basis.vectors = eig.eigenvectors().leftCols(k);
    return basis;
  }

  // Ascending order of the Laplacian eigenvalues.
  std::vector<Index> order(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return basis.values(a) < basis.values(b); });
  SpectralBasis sorted;
  sorted.values.resize(k);
  sorted.vectors.resize(n, k);
  sorted.matvecs = basis.matvecs;
  for (Index i = 0; i < k; ++i) {
    sorted.values(i) = basis.values(order[static_cast<std::size_t>(i)]);
    sorted.vectors.col(i) = basis.vectors.col(order[static_cast<std::size_t>(i)]);
  }
  return sorted;
}

}  // namespace mlac
