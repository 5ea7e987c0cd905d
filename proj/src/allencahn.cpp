#include "mlac/allencahn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace mlac {

LabelData LabelData::from_class_ids(const VectorXi& labels, int classes, double omega0) {
  if (classes < 2) throw InvalidArgument("need at least two classes");
  if (!(omega0 > 0.0)) throw InvalidArgument("fidelity weight omega0 must be positive");
  LabelData d;
  d.classes = classes;
  d.F = MatrixXd::Zero(labels.size(), classes);
  d.fidelity = VectorXd::Zero(labels.size());
  for (Index i = 0; i < labels.size(); ++i) {
    const int c = labels(i);
    if (c < 0 || c > classes)
      throw InvalidArgument("label " + std::to_string(c) + " at node " + std::to_string(i) +
                            " is outside 0.." + std::to_string(classes));
    if (c > 0) {
      d.F(i, c - 1) = 1.0;
      d.fidelity(i) = omega0;
    }
  }
  return d;
}

Index LabelData::labeled_count() const { return (fidelity.array() > 0.0).count(); }

void LabelData::validate() const {
  if (classes < 2 || F.cols() != classes) throw InvalidArgument("label matrix has wrong width");
  if (fidelity.size() != F.rows()) throw InvalidArgument("fidelity length mismatch");
  for (Index i = 0; i < F.rows(); ++i) {
    const double s = F.row(i).sum();
    const bool onehot = s == 1.0 && (F.row(i).array() == 1.0).count() == 1;
    const bool empty = (F.row(i).array() == 0.0).all();
    if (!(onehot || empty)) throw InvalidArgument("label row " + std::to_string(i) + " is not one-hot");
    if ((fidelity(i) > 0.0) != onehot)
      throw InvalidArgument("fidelity at node " + std::to_string(i) + " does not match its label");
  }
}

void AllenCahnParams::validate() const {
  if (!(epsilon > 0.0) || !(omega0 > 0.0) || !(dt > 0.0) || !(convexity() > 0.0))
    throw InvalidArgument("Allen-Cahn parameters epsilon, omega0, c, dt must be positive");
  if (!(tolerance > 0.0)) throw InvalidArgument("Allen-Cahn tolerance must be positive");
  if (max_iter < 1) throw InvalidArgument("Allen-Cahn max_iter must be >= 1");
}

VectorXd simplex_project(const ConstVectorRef& row) {
  if (!row.allFinite()) throw InvalidArgument("simplex projection of a non-finite vector");
  const Index m = row.size();
  std::vector<double> sorted(row.data(), row.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double partial = 0.0, theta = 0.0;
  for (Index r = 0; r < m; ++r) {
    partial += sorted[static_cast<std::size_t>(r)];
    const double t = (partial - 1.0) / static_cast<double>(r + 1);
    if (sorted[static_cast<std::size_t>(r)] - t > 0.0) theta = t;
  }
  return (row.array() - theta).cwiseMax(0.0).matrix();
}

MatrixXd project_rows(const ConstMatrixRef& U) {
  MatrixXd out(U.rows(), U.cols());
  for (Index i = 0; i < U.rows(); ++i) out.row(i) = simplex_project(U.row(i).transpose()).transpose();
  return out;
}

MatrixXd nonlinearity_T(const ConstMatrixRef& U) {
  const Index m = U.cols();
  MatrixXd out(U.rows(), m);
  VectorXd a(m), g(m), prod_others(m);
  for (Index i = 0; i < U.rows(); ++i) {
    for (Index q = 0; q < m; ++q) {
      a(q) = U.row(i).cwiseAbs().sum() - std::abs(U(i, q)) + std::abs(U(i, q) - 1.0);
      g(q) = 0.25 * a(q) * a(q);
    }
    for (Index q = 0; q < m; ++q) {
      double p = 1.0;
      for (Index r = 0; r < m; ++r)
        if (r != q) p *= g(r);
      prod_others(q) = p;
    }
    const double s = 0.5 * a.cwiseProduct(prod_others).sum();
    for (Index j = 0; j < m; ++j) out(i, j) = s - a(j) * prod_others(j);
  }
  return out;
}

MatrixXd initial_scores(const LabelData& labels) {
  MatrixXd U = MatrixXd::Constant(labels.size(), labels.classes, 1.0 / labels.classes);
  for (Index i = 0; i < labels.size(); ++i)
    if (labels.fidelity(i) > 0.0) U.row(i) = labels.F.row(i);
  return U;
}

AllenCahnResult allen_cahn_solve(const SpectralBasis& basis, const LabelData& labels,
                                 const AllenCahnParams& params, const IterationObserver& observer) {
  params.validate();
  labels.validate();
  const Index n = labels.size();
  const Index k = basis.values.size();
  if (k < 1 || basis.vectors.cols() != k) throw InvalidArgument("spectral basis is empty or malformed");
  if (basis.vectors.rows() != n)
    throw InvalidArgument("spectral basis has " + std::to_string(basis.vectors.rows()) +
                          " rows but there are " + std::to_string(n) + " labels");

  const double eps = params.epsilon, dt = params.dt, c = params.convexity();
  const VectorXd denom = ((1.0 + c * dt) + eps * dt * basis.values.array()).matrix();
  const MatrixXd Z = denom.cwiseInverse().asDiagonal() * basis.vectors.transpose();

  AllenCahnResult result;
  MatrixXd U = initial_scores(labels);
  for (int it = 1; it <= params.max_iter; ++it) {
    const MatrixXd rhs = (1.0 + c * dt) * U - (dt / (2.0 * eps)) * nonlinearity_T(U) -
                         dt * (labels.fidelity.asDiagonal() * (U - labels.F));
    const MatrixXd V = Z * rhs;
    MatrixXd next = project_rows(basis.vectors * V);
    if (!next.allFinite())
      throw NumericalError("Allen-Cahn iterate became non-finite at iteration " + std::to_string(it));
    const double change = (next - U).rowwise().squaredNorm().maxCoeff();
    const double size = next.rowwise().squaredNorm().maxCoeff();
    result.relative_change = size > 0.0 ? change / size
                                        : (change == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    U = std::move(next);
    result.iterations = it;
    if (observer) observer(it, U);
    if (result.relative_change <= params.tolerance) {
      result.converged = std::isfinite(params.tolerance);
      break;
    }
  }
  result.U = std::move(U);
  return result;
}

VectorXi predict_labels(const ConstMatrixRef& U) {
  VectorXi out(U.rows());
  for (Index i = 0; i < U.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < U.cols(); ++j)
      if (U(i, j) > U(i, best)) best = j;
    out(i) = static_cast<int>(best);
  }
  return out;
}

namespace {

double potential_and_fidelity(const ConstMatrixRef& U, const LabelData& labels, double epsilon) {
  const Index m = U.cols();
  double well = 0.0, fid = 0.0;
  for (Index i = 0; i < U.rows(); ++i) {
    double prod = 1.0;
    for (Index l = 0; l < m; ++l) {
      const double a = U.row(i).cwiseAbs().sum() - std::abs(U(i, l)) + std::abs(U(i, l) - 1.0);
      prod *= 0.25 * a * a;
    }
    well += prod;
    fid += labels.fidelity(i) * (labels.F.row(i) - U.row(i)).squaredNorm();
  }
  return well / (2.0 * epsilon) + 0.5 * fid;
}

void check_energy_shapes(const ConstMatrixRef& U, const LabelData& labels) {
  if (U.rows() != labels.size() || U.cols() != labels.classes)
    throw InvalidArgument("energy: score matrix does not match labels");
}

}  // namespace

double ginzburg_landau_energy(const ConstMatrixRef& U, const SpectralBasis& basis,
                              const LabelData& labels, double epsilon) {
  check_energy_shapes(U, labels);
  const MatrixXd coeff = basis.vectors.transpose() * U;
  const double dirichlet = (basis.values.asDiagonal() * coeff).cwiseProduct(coeff).sum();
  return 0.5 * epsilon * dirichlet + potential_and_fidelity(U, labels, epsilon);
}

double ginzburg_landau_energy(const ConstMatrixRef& U, const ConstMatrixRef& laplacian,
                              const LabelData& labels, double epsilon) {
  check_energy_shapes(U, labels);
  const double dirichlet = (U.transpose() * laplacian * U).trace();
  return 0.5 * epsilon * dirichlet + potential_and_fidelity(U, labels, epsilon);
}

BinaryAllenCahnResult binary_allen_cahn_solve(const SpectralBasis& basis, const ConstVectorRef& f,
                                              const AllenCahnParams& params) {
  params.validate();
  const Index n = f.size();
  const Index k = basis.values.size();
  if (basis.vectors.rows() != n || basis.vectors.cols() != k || k < 1)
    throw InvalidArgument("spectral basis does not match the label vector");
  VectorXd omega(n);
  for (Index i = 0; i < n; ++i) {
    if (f(i) != 0.0 && f(i) != 1.0 && f(i) != -1.0)
      throw InvalidArgument("binary labels must be -1, 0, or 1");
    omega(i) = f(i) != 0.0 ? params.omega0 : 0.0;
  }

  const double eps = params.epsilon, dt = params.dt, c = params.convexity();
  const MatrixXd& phi = basis.vectors;
  const VectorXd denom = ((1.0 + eps * dt * basis.values.array()) + c * dt).matrix();

  BinaryAllenCahnResult result;
  VectorXd v = phi.transpose() * f;
  VectorXd u = f;
  for (int it = 1; it <= params.max_iter; ++it) {
    const VectorXd b = phi.transpose() * u.array().cube().matrix();
    const VectorXd d = phi.transpose() * omega.cwiseProduct(u - f);
    v = (((1.0 + c * dt + dt / eps) * v - (dt / eps) * b - dt * d).array() / denom.array()).matrix();
    VectorXd next = phi * v;
    if (!next.allFinite())
      throw NumericalError("binary Allen-Cahn iterate became non-finite at iteration " +
                           std::to_string(it));
    const double change = (next - u).squaredNorm();
    const double size = next.squaredNorm();
    const double rel = size > 0.0 ? change / size : (change == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    u = std::move(next);
    result.iterations = it;
    if (rel <= params.tolerance) {
      result.converged = std::isfinite(params.tolerance);
      break;
    }
  }
  result.u = u;
  result.sign = (u.array() >= 0.0).select(VectorXi::Ones(n), VectorXi::Constant(n, -1));
  return result;
}

}  // namespace mlac
