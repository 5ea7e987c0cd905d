#include "mlac/bench.hpp"
#include "mlac/fastsum.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mlac;

namespace {

constexpr double kTwoPi = 6.283185307179586;

MatrixXd ball_points(Index n, int d, std::uint64_t seed) { return random_ball_points(n, d, 1.0 / 16.0, seed); }

VectorXd random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// Kaiser-Bessel aliasing bound for one axis, per unit of ||v||_1:
// 4 pi (sqrt(m) + m) (1 - 1/rho)^(1/4) exp(-2 pi m sqrt(1 - 1/rho)).
double kb_error_bound(int m, double rho) {
  const double s = std::sqrt(1.0 - 1.0 / rho);
  return 4.0 * 3.141592653589793 * (std::sqrt(m) + m) * std::sqrt(s) * std::exp(-kTwoPi * m * s);
}

// Multi-index of flat position f over I_N^d, last axis fastest.
std::vector<int> multi_index(Index f, int d, int N) {
  std::vector<int> l(static_cast<std::size_t>(d));
  for (int t = d - 1; t >= 0; --t) {
    l[static_cast<std::size_t>(t)] = static_cast<int>(f % N) - N / 2;
    f /= N;
  }
  return l;
}

VectorXc naive_adjoint(const MatrixXd& x, const VectorXc& v, int N) {
  const int d = static_cast<int>(x.cols());
  Index total = 1;
  for (int t = 0; t < d; ++t) total *= N;
  VectorXc g = VectorXc::Zero(total);
  for (Index f = 0; f < total; ++f) {
    const auto l = multi_index(f, d, N);
    for (Index j = 0; j < x.rows(); ++j) {
      double phase = 0.0;
      for (int t = 0; t < d; ++t) phase += l[static_cast<std::size_t>(t)] * x(j, t);
      g(f) += v(j) * std::exp(Complex(0.0, -kTwoPi * phase));
    }
  }
  return g;
}

double rel(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("constant kernel has a single Fourier coefficient") {
  const RadialProfile one = [](int order, double) { return order == 0 ? 1.0 : 0.0; };
  for (int d : {1, 2}) {
    const VectorXc b = kernel_fourier_coefficients(one, d, 16, 1.0 / 16.0, 5);
    const Index zero = d == 1 ? 8 : 8 * 16 + 8;
    CHECK(std::abs(b(zero) - 1.0) <= 1e-12);
    VectorXc rest = b;
    rest(zero) = 0.0;
    CHECK(rest.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("trigonometric approximation of a gaussian in one dimension") {
  const KernelSpec k(KernelFamily::Gaussian, 1.0);
  const double eps = 1.0 / 16.0;
  const VectorXc b = kernel_fourier_coefficients(k, 1, 64, eps, 5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-(0.5 - eps), 0.5 - eps);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    VectorXd y(1);
    y(0) = u(rng);
    const Complex val = evaluate_trig_polynomial(b, 1, 64, y);
    worst = std::max(worst, std::abs(val - k(std::abs(y(0)))));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("approximation error does not grow with the bandwidth") {
  const KernelSpec k(KernelFamily::Gaussian, 0.3);
  const double eps = 1.0 / 16.0;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<VectorXd> ys;
  while (ys.size() < 60) {
    VectorXd y(2);
    y << u(rng), u(rng);
    if (y.norm() <= 0.5 - eps) ys.push_back(y);
  }
  auto error = [&](int N) {
    const VectorXc b = kernel_fourier_coefficients(k, 2, N, eps, 5);
    double worst = 0.0;
    for (const auto& y : ys) worst = std::max(worst, std::abs(evaluate_trig_polynomial(b, 2, N, y) - k(y.norm())));
    return worst;
  };
  CHECK(error(64) <= error(32));
}

TEST_CASE("regularized profile matches the kernel inside and is even about one half") {
  const KernelSpec k(KernelFamily::Gaussian, 0.3);
  const RadialProfile f = [&k](int o, double r) { return k.derivative(o, r); };
  const double eps = 1.0 / 16.0;
  auto reg = [&](double r) { return regularized_profile(f, r, eps, 5); };
  CHECK(reg(0.2) == doctest::Approx(k(0.2)).epsilon(1e-14));
  // Flat at 1/2: first and second difference quotients vanish.
  const double h = 1e-4;
  CHECK(std::abs((reg(0.5) - reg(0.5 - h)) / h) <= 1e-6);
  CHECK(std::abs((reg(0.5) - 2.0 * reg(0.5 - h) + reg(0.5 - 2.0 * h)) / (h * h)) <= 1e-3);
  CHECK(reg(0.7) == reg(0.5));
  // Value and slope continuous at the inner shell radius.
  const double r0 = 0.5 - eps;
  CHECK(std::abs(reg(r0 + 1e-9) - k(r0)) <= 1e-8);
  const double d = 1e-6;
  CHECK(std::abs((reg(r0 + d) - reg(r0)) / d - k.derivative(1, r0)) <= 1e-4);
}

TEST_CASE("adjoint NFFT of a single node at the origin") {
  const FastsumPlan plan(KernelSpec(KernelFamily::Gaussian, 0.3), 2, {16, 5, 1.0 / 16.0, 5, 2});
  const PointSet pts(MatrixXd::Zero(1, 2), 1.0 / 16.0);
  VectorXc v(1);
  v(0) = Complex(2.5, 0.0);
  const VectorXc g = nfft_adjoint(pts, v, plan);
  CHECK(g.size() == 256);
  // Tensor-product window: the per-axis errors add up to first order.
  CHECK((g.array() - Complex(2.5, 0.0)).abs().maxCoeff() <= 2.0 * kb_error_bound(5, 2.0) * 2.5);
}

TEST_CASE("adjoint NFFT of a node on the grid equals the plain DFT") {
  const FastsumPlan plan(KernelSpec(KernelFamily::Gaussian, 0.3), 1, {16, 5, 1.0 / 16.0, 5, 2});
  MatrixXd x(1, 1);
  x(0, 0) = 3.0 / 32.0;  // on the oversampled grid of size 32
  VectorXc v(1);
  v(0) = 1.0;
  const VectorXc g = nfft_adjoint(PointSet(x, 1.0 / 16.0), v, plan);
  for (int l = -8; l < 8; ++l)
    CHECK(std::abs(g(l + 8) - std::exp(Complex(0.0, -kTwoPi * l * x(0, 0)))) <= kb_error_bound(5, 2.0));
}

TEST_CASE("NFFT pair against naive sums") {
  const FastsumParams params{16, 5, 1.0 / 16.0, 5, 2};
  const FastsumPlan plan(KernelSpec(KernelFamily::Gaussian, 0.3), 2, params);
  const MatrixXd x = ball_points(50, 2, 9);
  const PointSet pts(x, params.boundary_eps);
  const VectorXc v = random_vector(50, 10).cast<Complex>();
  const VectorXc g = nfft_adjoint(pts, v, plan);
  CHECK((g - naive_adjoint(x, v, 16)).cwiseAbs().maxCoeff() <= 1e-6 * v.cwiseAbs().sum());

  VectorXc c = VectorXc::Zero(256);
  c(8 * 16 + 8) = 1.0;
  CHECK((nfft_forward(c, pts, plan).array() - Complex(1.0, 0.0)).abs().maxCoeff() <= 1e-9);

  c.setZero();
  c(11 * 16 + 5) = 1.0;  // l = (3, -3)
  const VectorXc f = nfft_forward(c, pts, plan);
  for (Index i = 0; i < 50; ++i)
    CHECK(std::abs(f(i) - std::exp(Complex(0.0, kTwoPi * (3 * x(i, 0) - 3 * x(i, 1))))) <= 1e-8);

  const VectorXc cr = random_vector(256, 11).cast<Complex>() + Complex(0, 1) * random_vector(256, 12).cast<Complex>();
  const Complex lhs = nfft_forward(cr, pts, plan).dot(v);
  const Complex rhs = cr.dot(nfft_adjoint(pts, v, plan));
  CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
}

TEST_CASE("fast summation on tiny node sets") {
  const KernelSpec k(KernelFamily::Gaussian, 1.0);
  const FastsumPlan plan(k, 2);
  CHECK(fastsum_apply(PointSet(MatrixXd::Zero(1, 2), 1.0 / 16.0), VectorXd::Ones(1), plan)(0) ==
        doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
  MatrixXd x(2, 2);
  x << 0.1, 0.0, -0.05, 0.08;
  const double kd = k((x.row(0) - x.row(1)).norm());
  const VectorXd v(Eigen::Vector2d(2.0, -3.0));
  const VectorXd fast = fastsum_apply(PointSet(x, 1.0 / 16.0), v, plan);
  const VectorXd exact = direct_apply(x, v, k);
  CHECK(exact(0) == doctest::Approx(kd * -3.0).epsilon(1e-15));
  CHECK(exact(1) == doctest::Approx(kd * 2.0).epsilon(1e-15));
  CHECK((fast - exact).norm() <= 1e-4 * exact.norm());
}

TEST_CASE("points outside the fastsum ball are rejected") {
  MatrixXd x(1, 2);
  x << 0.3, 0.0;
  CHECK_THROWS_AS(PointSet(x, 1.0 / 16.0), InvalidArgument);
}

TEST_CASE("fast summation accuracy at n = 5000, d = 2") {
  const KernelSpec k(KernelFamily::Gaussian, 0.3);
  const MatrixXd x = ball_points(5000, 2, 21);
  const VectorXd v = random_vector(5000, 22);
  const auto plan = std::make_shared<const FastsumPlan>(k, 2);
  const FastsumOperator op(plan, PointSet(x, 1.0 / 16.0));
  const VectorXd exact = direct_apply(x, v, k);
  const VectorXd fast = op.apply(v);
  CHECK(rel(fast, exact) <= 1e-4);
  CHECK(rel(op.apply_complex(v), fast) <= 1e-12);
}

TEST_CASE("laplacian-rbf kernel in three dimensions") {
  const KernelSpec k(KernelFamily::LaplacianRbf, 0.3);
  const MatrixXd x = ball_points(2000, 3, 31);
  const VectorXd v = random_vector(2000, 32);
  CHECK(rel(fastsum_apply(PointSet(x, 1.0 / 16.0), v, FastsumPlan(k, 3)), direct_apply(x, v, k)) <= 1e-3);
}

TEST_CASE("direct summation is symmetric and works in any dimension") {
  const KernelSpec k(KernelFamily::Gaussian, 0.7);
  const MatrixXd x = MatrixXd::Random(100, 5);
  const VectorXd u = random_vector(100, 1), v = random_vector(100, 2);
  const VectorXd wv = direct_apply(x, v, k), wu = direct_apply(x, u, k);
  CHECK(std::abs(u.dot(wv) - wu.dot(v)) <= 1e-12 * std::abs(u.dot(wv)));
  CHECK(wv.size() == 100);
}

TEST_CASE("direct summation agrees with an explicit double loop") {
  for (const auto family : {KernelFamily::Gaussian, KernelFamily::LaplacianRbf}) {
    for (int d : {1, 2, 3, 5}) {
      const KernelSpec k(family, 0.4);
      const MatrixXd x = 0.5 * MatrixXd::Random(137, d);
      const VectorXd v = random_vector(137, 30 + d);
      VectorXd loop = VectorXd::Zero(137);
      for (Index i = 0; i < 137; ++i)
        for (Index j = 0; j < 137; ++j)
          if (i != j) loop(i) += v(j) * k((x.row(i) - x.row(j)).norm());
      CHECK((direct_apply(x, v, k) - loop).norm() <= 1e-13 * loop.norm());
    }
  }
}
