#include "helpers.hpp"

#include "mlac/krylov.hpp"

#include <doctest.h>

using namespace mlac;
using namespace testing;

namespace {

SymmetricOperator dense_op(const MatrixXd& a) {
  return {a.rows(), [a](const VectorXd& x) { VectorXd y = a * x; return y; }};
}

MatrixXd random_symmetric(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return (a + a.transpose()) / 2.0;
}

}  // namespace

TEST_CASE("lanczos on a diagonal operator") {
  const MatrixXd a = Eigen::Vector4d(1, 2, 3, 4).asDiagonal();
  const EigenResult r = lanczos_largest_eigs(dense_op(a), 2);
  CHECK(r.values(0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.values(1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(std::abs(r.vectors(3, 0)) - 1.0) <= 1e-10);
  CHECK(std::abs(std::abs(r.vectors(2, 1)) - 1.0) <= 1e-10);
}

TEST_CASE("lanczos on I - L_sym of P3 finds the square-root degree vector") {
  const Layer l = p3_layer();
  const SymmetricOperator op{3, [&l](const VectorXd& x) { return VectorXd(x - apply_sym_laplacian(l, x)); }};
  const EigenResult r = lanczos_largest_eigs(op, 1);
  CHECK(r.values(0) == doctest::Approx(1.0).epsilon(1e-12));
  const VectorXd s = l.degrees().cwiseSqrt().normalized();
  CHECK(std::abs(std::abs(r.vectors.col(0).dot(s)) - 1.0) <= 1e-10);
}

TEST_CASE("lanczos matches a dense eigendecomposition") {
  const MatrixXd a = random_symmetric(100, 5);
  const EigenResult r = lanczos_largest_eigs(dense_op(a), 10);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd ref = es.eigenvalues().tail(10).reverse();
  CHECK((r.values - ref).cwiseAbs().maxCoeff() <= 1e-8 * ref.cwiseAbs().maxCoeff());
  CHECK((r.vectors.transpose() * r.vectors - MatrixXd::Identity(10, 10)).norm() <= 1e-10);
  for (Index i = 0; i < 10; ++i)
    CHECK((a * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm() <= 1e-6);
}

TEST_CASE("lanczos handles degenerate eigenvalues") {
  VectorXd d = VectorXd::LinSpaced(40, 0.0, 1.0);
  d.tail(3).setConstant(2.0);
  const MatrixXd a = d.asDiagonal();
  const EigenResult r = lanczos_largest_eigs(dense_op(a), 3);
  CHECK((r.values.array() - 2.0).abs().maxCoeff() <= 1e-10);
  CHECK((r.vectors.topRows(37)).norm() <= 1e-6);
}

TEST_CASE("lanczos rejects k outside 1..n-1") {
  const MatrixXd a = MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(lanczos_largest_eigs(dense_op(a), 0), InvalidArgument);
  CHECK_THROWS_AS(lanczos_largest_eigs(dense_op(a), 4), InvalidArgument);
}

TEST_CASE("lanczos reports non-convergence as a numerical error") {
  const MatrixXd a = random_symmetric(200, 6);
  LanczosOptions opt;
  opt.max_restarts = 0;
  opt.max_subspace = 12;
  opt.tol = 1e-14;
  CHECK_THROWS_AS(lanczos_largest_eigs(dense_op(a), 10, opt), NumericalError);
}

TEST_CASE("symmetry defect separates symmetric and asymmetric operators") {
  const MatrixXd a = random_symmetric(30, 7);
  CHECK(symmetry_defect(dense_op(a)) <= 1e-14);
  MatrixXd b = a;
  b(0, 1) += 1.0;
  CHECK(symmetry_defect(dense_op(b)) > 1e-4);
}

TEST_CASE("pksm with p = 1 is the Laplacian product") {
  const Layer l = build_layer(WeightOperator::dense(random_weights(20, 0.3, 8)), 0.3);
  const VectorXd v = random_vector(20, 9);
  const PksmResult r = pksm_apply(l, 1.0, v);
  const VectorXd ref = apply_sym_laplacian(l, v);
  CHECK((r.value - ref).norm() <= 1e-12 * ref.norm());
}

TEST_CASE("pksm on a diagonal operator") {
  const double delta = std::log(2.0);
  const MatrixXd a = Eigen::Vector3d(1 + delta, 2 + delta, 4 + delta).asDiagonal();
  const PksmResult r = pksm_apply(dense_op(a), -1.0, Eigen::Vector3d::Ones());
  CHECK(r.converged);
  const Eigen::Vector3d ref(1 / (1 + delta), 1 / (2 + delta), 1 / (4 + delta));
  CHECK((r.value - ref).norm() <= 1e-12);
}

TEST_CASE("pksm matches a dense matrix power") {
  const Index n = 150;
  const MatrixXd w = random_weights(n, 0.1, 10);
  const double delta = std::log(11.0);
  const Layer l = build_layer(WeightOperator::dense(w), delta);
  const VectorXd v = random_vector(n, 11);
  const VectorXd ref = sym_power(sym_laplacian_of(w, delta), -10.0) * v;
  const PksmResult r = pksm_apply(l, -10.0, v);
  CHECK(r.converged);
  CHECK((r.value - ref).norm() <= 1e-6 * ref.norm());
}

TEST_CASE("pksm rejects an indefinite operator for negative powers") {
  const MatrixXd a = Eigen::Vector3d(-1, 2, 3).asDiagonal();
  CHECK_THROWS_AS(pksm_apply(dense_op(a), -1.0, Eigen::Vector3d::Ones()), NumericalError);
}

TEST_CASE("pksm of the zero vector") {
  const Layer l = p3_layer(0.5);
  CHECK(pksm_apply(l, -2.0, VectorXd::Zero(3)).value.norm() == 0.0);
}
