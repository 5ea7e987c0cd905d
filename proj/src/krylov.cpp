#include "mlac/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mlac {

namespace {

VectorXd checked_apply(const SymmetricOperator& op, const VectorXd& x) {
  VectorXd y = op.apply(x);
  if (y.size() != op.n) throw InvalidArgument("operator returned a vector of the wrong length");
  if (!y.allFinite()) throw NumericalError("operator returned non-finite values");
  return y;
}

// Orthogonalizes w against the first `cols` columns of v, twice (classical
// Gram-Schmidt with one reorthogonalization pass). Returns the coefficients.
VectorXd orthogonalize(const MatrixXd& v, Index cols, VectorXd& w) {
  VectorXd h = v.leftCols(cols).transpose() * w;
  w.noalias() -= v.leftCols(cols) * h;
  const VectorXd h2 = v.leftCols(cols).transpose() * w;
  w.noalias() -= v.leftCols(cols) * h2;
  return h + h2;
}

// Unit vector orthogonal to the first `cols` columns of v.
VectorXd random_orthogonal(const MatrixXd& v, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  for (int attempt = 0; attempt < 10; ++attempt) {
    VectorXd w(v.rows());
    for (auto& x : w) x = normal(rng);
    orthogonalize(v, cols, w);
    const double nrm = w.norm();
    if (nrm > 1e-8) return w / nrm;
  }
  throw NumericalError("Lanczos: could not extend the Krylov basis");
}

}  // namespace

double symmetry_defect(const SymmetricOperator& op, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    VectorXd u(op.n), v(op.n);
    for (auto& x : u) x = normal(rng);
    for (auto& x : v) x = normal(rng);
    const VectorXd au = checked_apply(op, u), av = checked_apply(op, v);
    const double scale = au.norm() * v.norm() + u.norm() * av.norm();
    if (scale > 0.0) worst = std::max(worst, std::abs(u.dot(av) - au.dot(v)) / scale);
  }
  return worst;
}

namespace {

EigenResult lanczos_run(const SymmetricOperator& op, Index k, const LanczosOptions& options,
                        const VectorXd* start_vector) {
  const Index n = op.n;
  Index m = options.max_subspace > 0 ? options.max_subspace : std::max<Index>(2 * k + 1, 20);
  m = std::min(std::max(m, k + 2), n);
  const Index keep = std::min(k + (m - k) / 2, m - 1);

  std::mt19937_64 rng(options.seed);
  MatrixXd v(n, m + 1);
  MatrixXd h = MatrixXd::Zero(m, m);
  if (start_vector) {
    v.col(0) = start_vector->normalized();
  } else {
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    VectorXd start = VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    for (auto& x : start) x += unif(rng) / std::sqrt(static_cast<double>(n));
    v.col(0) = options.start_sign * start.normalized();
  }

  EigenResult result;
  double norm_est = 0.0;
  Index j = 0;  // columns of v that are already expanded
  VectorXd ritz_res;
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    double beta = 0.0;
    for (; j < m; ++j) {
      VectorXd w = checked_apply(op, v.col(j));
      ++result.matvecs;
      const VectorXd coeff = orthogonalize(v, j + 1, w);
      for (Index i = 0; i <= j; ++i) h(i, j) = h(j, i) = coeff(i);
      norm_est = std::max(norm_est, std::abs(coeff(j)));
      beta = w.norm();
      if (j + 1 < m) {
        if (beta <= 1e-13 * std::max(norm_est, 1e-300)) {
          // Invariant subspace: continue with a fresh direction, decoupled.
          v.col(j + 1) = random_orthogonal(v, j + 1, rng);
          h(j + 1, j) = h(j, j + 1) = 0.0;
          beta = 0.0;
        } else {
          v.col(j + 1) = w / beta;
          h(j + 1, j) = h(j, j + 1) = beta;
        }
      } else {
        if (beta > 1e-13 * std::max(norm_est, 1e-300) && m < n) {
          v.col(m) = w / beta;
        } else {
          beta = 0.0;
          if (m < n) v.col(m) = random_orthogonal(v, m, rng);
        }
      }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) throw NumericalError("Lanczos: projected eigensolve failed");
    // Descending order.
    const VectorXd theta = eig.eigenvalues().reverse();
    const MatrixXd y = eig.eigenvectors().rowwise().reverse();
    norm_est = std::max(norm_est, theta.cwiseAbs().maxCoeff());
    ritz_res = (beta * y.row(m - 1).transpose()).cwiseAbs();
    const double threshold = options.tol * std::max(norm_est, 1e-300);
    const bool done = (ritz_res.head(k).array() <= threshold).all();
    result.restarts = restart;

    if (done) {
      result.values = theta.head(k);
      result.vectors = v.leftCols(m) * y.leftCols(k);
      // Re-orthonormalize against round-off.
      Eigen::HouseholderQR<MatrixXd> qr(result.vectors);
      MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, k);
      for (Index c = 0; c < k; ++c)
        if (q.col(c).dot(result.vectors.col(c)) < 0.0) q.col(c) *= -1.0;
      result.vectors = q;
      result.residuals = ritz_res.head(k);
      return result;
    }
    if (restart == options.max_restarts) break;

    // Thick restart: keep the `keep` leading Ritz vectors plus the residual direction.
    const MatrixXd kept = v.leftCols(m) * y.leftCols(keep);
    v.leftCols(keep) = kept;
    v.col(keep) = v.col(m);
    h.setZero();
    for (Index i = 0; i < keep; ++i) {
      h(i, i) = theta(i);
      h(keep, i) = h(i, keep) = beta * y(m - 1, i);
    }
    j = keep;
  }

  std::ostringstream os;
  os << "Lanczos did not converge after " << result.matvecs << " products; residuals of the "
     << k << " wanted pairs:";
  for (Index i = 0; i < k; ++i) os << ' ' << ritz_res(i);
  os << " (threshold " << options.tol * norm_est << ")";
  throw NumericalError(os.str());
}

// Largest Ritz pair after `steps` unrestarted Lanczos steps from `start`.
// The Ritz value is a lower bound on the largest eigenvalue.
std::pair<double, VectorXd> probe_largest(const SymmetricOperator& op, Index steps, VectorXd start,
                                          int& matvecs) {
  const Index n = op.n;
  MatrixXd v(n, steps);
  MatrixXd h = MatrixXd::Zero(steps, steps);
  v.col(0) = start.normalized();
  Index used = steps;
  for (Index j = 0; j < steps; ++j) {
    VectorXd w = checked_apply(op, v.col(j));
    ++matvecs;
    const VectorXd coeff = orthogonalize(v, j + 1, w);
    for (Index i = 0; i <= j; ++i) h(i, j) = h(j, i) = coeff(i);
    const double beta = w.norm();
    if (j + 1 == steps) break;
    if (beta <= 1e-13 * std::max(h.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff(), 1e-300)) {
      used = j + 1;
      break;
    }
    v.col(j + 1) = w / beta;
    h(j + 1, j) = h(j, j + 1) = beta;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h.topLeftCorner(used, used));
  const Index top = used - 1;
  return {eig.eigenvalues()(top), v.leftCols(used) * eig.eigenvectors().col(top)};
}

}  // namespace

EigenResult lanczos_largest_eigs(const SymmetricOperator& op, Index k,
                                 const LanczosOptions& options) {
  const Index n = op.n;
  if (!op.apply) throw InvalidArgument("Lanczos: operator has no apply function");
  if (k < 1 || k >= n)
    throw InvalidArgument("Lanczos: need 1 <= k < n, got k = " + std::to_string(k) +
                          ", n = " + std::to_string(n));
  if (!(options.tol > 0.0)) throw InvalidArgument("Lanczos: tolerance must be positive");

  EigenResult result = lanczos_run(op, k, options, nullptr);
  if (options.probe_steps <= 0) return result;

  // A single Krylov sequence sees one direction per eigenspace, so copies of a
  // repeated eigenvalue can be missed. Probe the complement of the found
  // vectors; a Ritz value clearly above the k-th value exposes a miss.
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  for (Index round = 0; round < k; ++round) {
    const Index room = n - k;
    if (room < 2) break;
    const MatrixXd q = result.vectors;
    const SymmetricOperator deflated{n, [&op, &q](const VectorXd& x) {
                                       const VectorXd px = x - q * (q.transpose() * x);
                                       const VectorXd y = checked_apply(op, px);
                                       return VectorXd(y - q * (q.transpose() * y));
                                     }};
    const double scale = std::max(result.values.cwiseAbs().maxCoeff(), 1e-300);
    const double margin = 10.0 * options.tol * scale;
    const VectorXd start = random_orthogonal(q, k, rng);
    int probe_matvecs = 0;
    auto [theta, y] = probe_largest(deflated, std::min<Index>(options.probe_steps, room), start,
                                    probe_matvecs);
    result.matvecs += probe_matvecs;
    if (theta <= result.values(k - 1) + margin) break;

    const VectorXd y0 = y - q * (q.transpose() * y);
    const Index extra = std::min<Index>(k, room - 1);
    const EigenResult more = lanczos_run(deflated, extra, options, &y0);
    result.matvecs += more.matvecs;

    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < k; ++i) order.emplace_back(result.values(i), i);
    for (Index i = 0; i < extra; ++i) order.emplace_back(more.values(i), k + i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    EigenResult merged = result;
    for (Index i = 0; i < k; ++i) {
      const Index src = order[static_cast<std::size_t>(i)].second;
      merged.values(i) = order[static_cast<std::size_t>(i)].first;
      if (src < k) {
        merged.vectors.col(i) = result.vectors.col(src);
        merged.residuals(i) = result.residuals(src);
      } else {
        merged.vectors.col(i) = more.vectors.col(src - k);
        merged.residuals(i) = more.residuals(src - k);
      }
    }
    Eigen::HouseholderQR<MatrixXd> qr(merged.vectors);
    MatrixXd qq = qr.householderQ() * MatrixXd::Identity(n, k);
    for (Index c = 0; c < k; ++c)
      if (qq.col(c).dot(merged.vectors.col(c)) < 0.0) qq.col(c) *= -1.0;
    merged.vectors = qq;
    result = std::move(merged);
  }
  return result;
}

PksmResult pksm_apply(const SymmetricOperator& op, double p, const ConstVectorRef& v,
                      const PksmOptions& options) {
  const Index n = op.n;
  if (v.size() != n) throw InvalidArgument("PKSM: vector length mismatch");
  if (!v.allFinite()) throw InvalidArgument("PKSM: input vector is not finite");
  if (!std::isfinite(p) || p == 0.0) throw InvalidArgument("PKSM: exponent must be finite and nonzero");
  if (options.krylov_dim < 1) throw InvalidArgument("PKSM: krylov_dim must be >= 1");
  if (!(options.tol >= 0.0)) throw InvalidArgument("PKSM: tolerance must be >= 0");
  const double vnorm = v.norm();
  PksmResult out;
  if (vnorm == 0.0) {
    out.value = VectorXd::Zero(n);
    out.converged = true;
    return out;
  }

  const Index smax = std::min<Index>(options.krylov_dim, n);
  MatrixXd basis(n, smax);
  VectorXd alpha(smax), beta(smax);
  basis.col(0) = v / vnorm;
  VectorXd coeff_prev;
  const bool integer_power = p == std::round(p) && p > 0.0;

  auto project = [&](Index s) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig;
    eig.computeFromTridiagonal(alpha.head(s), beta.head(s - 1), Eigen::ComputeEigenvectors);
    if (eig.info() != Eigen::Success) throw NumericalError("PKSM: tridiagonal eigensolve failed");
    VectorXd lam = eig.eigenvalues();
    if (!integer_power) {
      for (Index i = 0; i < s; ++i) {
        if (lam(i) < -1e-10) {
          std::ostringstream os;
          os << "PKSM: projected operator has eigenvalue " << lam(i)
             << "; the shifted Laplacian must be positive definite for p = " << p;
          throw NumericalError(os.str());
        }
        lam(i) = std::max(lam(i), 0.0);
      }
    }
    VectorXd f(s);
    for (Index i = 0; i < s; ++i) f(i) = std::pow(lam(i), p);
    if (!f.allFinite())
      throw NumericalError("PKSM: projected operator is singular for negative power");
    const auto& q = eig.eigenvectors();
    return VectorXd(vnorm * (q * f.cwiseProduct(q.row(0).transpose())));
  };

  for (Index s = 1; s <= smax; ++s) {
    VectorXd w = checked_apply(op, basis.col(s - 1));
    const VectorXd hcoef = orthogonalize(basis, s, w);
    alpha(s - 1) = hcoef(s - 1);
    const double b = w.norm();
    const VectorXd coeff = project(s);
    out.steps = static_cast<int>(s);
    const double scale = std::max(alpha.head(s).cwiseAbs().maxCoeff(), 1e-300);
    const bool breakdown = b <= 1e-13 * scale;
    bool converged = breakdown || s == n;
    if (!converged && s > 1) {
      VectorXd diff = coeff;
      diff.head(s - 1) -= coeff_prev;
      converged = diff.norm() <= options.tol * coeff.norm();
    }
    if (converged || s == smax) {
      out.value = basis.leftCols(s) * coeff;
      out.converged = converged;
      return out;
    }
    beta(s - 1) = b;
    basis.col(s) = w / b;
    coeff_prev = coeff;
  }
  return out;
}

SymmetricOperator sym_laplacian_operator(const Layer& layer) {
  return {layer.size(), [&layer](const VectorXd& x) { return apply_sym_laplacian(layer, x); }};
}

PksmResult pksm_apply(const Layer& layer, double p, const ConstVectorRef& v,
                      const PksmOptions& options) {
  return pksm_apply(sym_laplacian_operator(layer), p, v, options);
}

}  // namespace mlac
