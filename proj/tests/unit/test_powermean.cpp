#include "helpers.hpp"

#include "mlac/powermean.hpp"

#include <doctest.h>

using namespace mlac;
using namespace testing;

namespace {

MultilayerGraph graph_of(const std::vector<MatrixXd>& ws) {
  std::vector<Layer> layers;
  for (const auto& w : ws) layers.push_back(build_layer(WeightOperator::dense(w)));
  return MultilayerGraph(std::move(layers));
}

}  // namespace

TEST_CASE("I - L1 on one layer fixes the square-root degree vector") {
  const MatrixXd w = random_weights(9, 0.4, 1);
  const MultilayerGraph g = graph_of({w});
  const VectorXd v = w.rowwise().sum().cwiseSqrt();
  CHECK((apply_one_minus_L1(g, v) - v).norm() <= 1e-13 * v.norm());
}

TEST_CASE("identical layers average to the single layer") {
  const MatrixXd w = random_weights(12, 0.4, 2);
  const VectorXd v = random_vector(12, 3);
  const MultilayerGraph one = graph_of({w}), two = graph_of({w, w});
  CHECK((apply_one_minus_L1(two, v) - apply_one_minus_L1(one, v)).norm() <= 1e-14 * v.norm());
  const double delta = std::log(3.0);
  const VectorXd a = apply_Lp_power(one.with_shift(delta), -2.0, v);
  const VectorXd b = apply_Lp_power(two.with_shift(delta), -2.0, v);
  CHECK((a - b).norm() <= 1e-12 * a.norm());
  const Layer l = one.layer(0).with_shift(delta);
  CHECK((a - pksm_apply(l, -2.0, v).value).norm() <= 1e-14 * a.norm());
}

TEST_CASE("I - L1 of two layers against dense assembly") {
  const MatrixXd a = random_weights(6, 0.5, 4), b = random_weights(6, 0.5, 5);
  const VectorXd v = random_vector(6, 6);
  const MatrixXd dense = MatrixXd::Identity(6, 6) - (sym_laplacian_of(a) + sym_laplacian_of(b)) / 2.0;
  CHECK((apply_one_minus_L1(graph_of({a, b}), v) - dense * v).norm() <= 1e-14 * v.norm());
}

TEST_CASE("negative power of three layers against per-layer eigendecompositions") {
  std::vector<MatrixXd> ws{random_weights(60, 0.1, 7), random_weights(60, 0.15, 8), random_weights(60, 0.2, 9)};
  const double delta = std::log(3.0);
  const VectorXd v = random_vector(60, 10);
  VectorXd ref = VectorXd::Zero(60);
  for (const auto& w : ws) ref += sym_power(sym_laplacian_of(w, delta), -2.0) * v;
  ref /= 3.0;
  const VectorXd got = apply_Lp_power(graph_of(ws).with_shift(delta), -2.0, v);
  CHECK((got - ref).norm() <= 1e-6 * ref.norm());
}

TEST_CASE("dense power mean against the oracle") {
  std::vector<MatrixXd> ws{random_weights(15, 0.3, 11), random_weights(15, 0.3, 12)};
  const MatrixXd m = dense_power_mean(graph_of(ws), 3.0, 0.0);
  CHECK((m - power_mean_oracle(ws, 3.0, 0.0)).norm() <= 1e-10 * m.norm());
}

TEST_CASE("P3 spectra for p = 1 and p = -2") {
  const MultilayerGraph g = graph_of({p3_weights()});
  PowerMeanConfig c;
  const SpectralBasis b = power_mean_eigs(g, c, 2);
  CHECK(std::abs(b.values(0)) <= 1e-12);
  CHECK(b.values(1) == doctest::Approx(1.0).epsilon(1e-12));

  c.p = -2.0;
  c.delta = std::log(3.0);
  const SpectralBasis n = power_mean_eigs(g, c, 2);
  CHECK(n.values(0) == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(n.values(1) == doctest::Approx(1.0 + std::log(3.0)).epsilon(1e-10));
}

TEST_CASE("duplicated layers leave the basis unchanged") {
  const MatrixXd w = random_weights(30, 0.2, 13);
  for (double p : {1.0, -1.0, -5.0, 2.0}) {
    CAPTURE(p);
    PowerMeanConfig c;
    c.p = p;
    const SpectralBasis a = power_mean_eigs(graph_of({w}), c, 4);
    const SpectralBasis b = power_mean_eigs(graph_of({w, w}), c, 4);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("default shift and validation") {
  PowerMeanConfig c;
  c.p = -10.0;
  CHECK(c.shift() == doctest::Approx(std::log(11.0)));
  c.p = 1.0;
  CHECK(c.shift() == 0.0);
  c.p = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("dense fallback respects its size limit") {
  PowerMeanConfig c;
  c.p = 2.0;
  c.dense_limit = 10;
  CHECK_THROWS_AS(power_mean_eigs(graph_of({random_weights(20, 0.3, 14)}), c, 2), InvalidArgument);
}

TEST_CASE("power mean eigenpairs for p in {1, -1, -10} against dense assembly") {
  std::vector<MatrixXd> ws{random_weights(120, 0.05, 15), random_weights(120, 0.08, 16),
                           random_weights(120, 0.1, 17)};
  for (double p : {1.0, -1.0, -10.0}) {
    CAPTURE(p);
    PowerMeanConfig c;
    c.p = p;
    const SpectralBasis b = power_mean_eigs(graph_of(ws), c, 10);
    const MatrixXd lp = power_mean_oracle(ws, p, c.shift());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(lp);
    const VectorXd ref = es.eigenvalues().head(10);
    CHECK(((b.values - ref).array().abs() / ref.array().abs().max(1e-12)).maxCoeff() <= 1e-7);
    for (Index i = 1; i < 10; ++i) CHECK(b.values(i) >= b.values(i - 1));
    for (Index i = 0; i < 10; ++i)
      CHECK((lp * b.vectors.col(i) - b.values(i) * b.vectors.col(i)).norm() <= 1e-6);
  }
}
