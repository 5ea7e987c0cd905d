// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "mlac/bench.hpp"
#include "mlac/cli/commands.hpp"
#include "mlac/image_io.hpp"
#include "mlac/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

using namespace mlac;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %d %s | %s | %.1f s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              seconds_since(t));
  std::fflush(stdout);
}

std::string fmt(double x, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

const SbmBenchRow& row(const std::vector<SbmBenchRow>& rows, const std::string& variant, double p) {
  for (const auto& r : rows)
    if (r.variant == variant && r.p == p) return r;
  throw std::runtime_error("missing bench row " + variant + " p=" + fmt(p));
}

VectorXd gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

MatrixXd random_weights(Index n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd w = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (u(rng) < density || j == i + 1) w(i, j) = w(j, i) = 0.05 + u(rng);
  return w;
}

MatrixXd sym_laplacian_of(const MatrixXd& w, double delta) {
  const VectorXd s = w.rowwise().sum().cwiseSqrt().cwiseInverse();
  return (1.0 + delta) * MatrixXd::Identity(w.rows(), w.rows()) - s.asDiagonal() * w * s.asDiagonal();
}

MatrixXd sym_power(const MatrixXd& a, double p) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  return es.eigenvectors() * es.eigenvalues().array().pow(p).matrix().asDiagonal() * es.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t = Clock::now();
  SbmBenchConfig c;
  c.experiment = SbmExperiment::NoisyLayer;
  c.repetitions = 100;
  c.powers = {-20.0, 1.0, 10.0};
  c.k = 2;
  c.seed = 2024;
  const auto rows = run_sbm_bench(c);
  const double e20 = row(rows, "full", -20.0).mean, e1 = row(rows, "full", 1.0).mean,
               e10 = row(rows, "full", 10.0).mean;
  const double secs = seconds_since(t);
  const bool ok = e20 <= 5.0 && e10 >= 30.0 && e20 < e1 && e1 < e10 && secs <= 300.0;
  return {ok, "100 graphs: p=-20 " + fmt(e20) + "%, p=1 " + fmt(e1) + "%, p=10 " + fmt(e10) +
                  "% (need <=5, >=30, increasing), " + fmt(secs) + " s"};
}

Outcome criterion2() {
  const auto t = Clock::now();
  SbmBenchConfig c;
  c.experiment = SbmExperiment::Complementary;
  c.repetitions = 100;
  c.powers = {-20.0, 1.0};
  c.k = 3;
  c.seed = 2025;
  const auto rows = run_sbm_bench(c);
  const double full20 = row(rows, "full", -20.0).mean, full1 = row(rows, "full", 1.0).mean;
  std::vector<std::string> failed;
  if (full20 > 0.5) failed.push_back("full p=-20 " + fmt(full20) + "% > 0.5");
  if (full1 > 2.0) failed.push_back("full p=1 " + fmt(full1) + "% > 2");
  std::string singles, pairs;
  double min_single = 1e9, max_pair = -1.0;
  for (const char* v : {"layer 1", "layer 2", "layer 3"}) {
    const double e = row(rows, v, 1.0).mean;
    singles += " " + fmt(e);
    min_single = std::min(min_single, e);
    if (e < 28.0 || e > 40.0) failed.push_back(std::string(v) + " " + fmt(e) + "% outside [28,40]");
  }
  for (const char* v : {"layers 1+2", "layers 1+3", "layers 2+3"}) {
    const double e = row(rows, v, -20.0).mean;
    pairs += " " + fmt(e);
    max_pair = std::max(max_pair, e);
    if (e < 1.0 || e > 8.0) failed.push_back(std::string(v) + " p=-20 " + fmt(e) + "% outside [1,8]");
  }
  if (!(min_single > max_pair && max_pair > full20)) failed.push_back("not monotone single > pair > full");
  const double secs = seconds_since(t);
  if (secs > 600.0) failed.push_back("runtime " + fmt(secs) + " s > 600");
  std::string detail = "100 graphs: singles" + singles + "%, pairs p=-20" + pairs + "%, full p=-20 " +
                       fmt(full20) + "%, full p=1 " + fmt(full1) + "%";
  for (const auto& f : failed) detail += "; " + f;
  return {failed.empty(), detail};
}

Outcome criterion3() {
  const KernelSpec k(KernelFamily::Gaussian, 0.3);
  double worst = 0.0;
  std::string detail;
  for (int d : {1, 2, 3}) {
    const MatrixXd x = random_ball_points(5000, d, 1.0 / 16.0, 100 + static_cast<std::uint64_t>(d));
    std::mt19937_64 rng(200 + static_cast<std::uint64_t>(d));
    const VectorXd v = gaussian_vector(5000, rng);
    const VectorXd fast = fastsum_apply(PointSet(x, 1.0 / 16.0), v, FastsumPlan(k, d));
    const VectorXd exact = direct_apply(x, v, k);
    const double e = (fast - exact).norm() / exact.norm();
    worst = std::max(worst, e);
    detail += "d=" + std::to_string(d) + " " + fmt(e) + "  ";
  }
  return {worst <= 1e-4, detail + "(need <= 1e-4; gaussian sigma=0.3, n=5000, N=64, m=5, eps_B=1/16, p=5)"};
}

Outcome criterion4() {
  FastsumBenchConfig c;
  c.sizes = {100000, 200000};
  c.dims = {2};
  c.repetitions = 5;
  c.direct_limit = 200000;
  c.seed = 4;
  const auto rows = run_fastsum_bench(c);
  const auto& r = rows.at(1);
  const bool ok = r.fast_ratio <= 2.5 && r.direct_ratio >= 3.5;
  return {ok, "fast " + fmt(rows[0].fast_seconds) + " -> " + fmt(r.fast_seconds) + " s (ratio " +
                  fmt(r.fast_ratio) + ", need <= 2.5); direct " + fmt(rows[0].direct_seconds) + " -> " +
                  fmt(r.direct_seconds) + " s (ratio " + fmt(r.direct_ratio) + ", need >= 3.5)"};
}

Outcome criterion5() {
  std::mt19937_64 rng(5);
  const double powers[] = {-1.0, -5.0, -10.0, -20.0};
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const double p = powers[inst % 4];
    const double delta = std::log1p(std::abs(p));
    const Index n = 40 + 5 * inst;  // up to 135
    const MatrixXd w = random_weights(n, 0.03 + 0.01 * (inst % 5), rng);
    const Layer layer = build_layer(WeightOperator::dense(w), delta);
    const VectorXd v = gaussian_vector(n, rng);
    const VectorXd ref = sym_power(sym_laplacian_of(w, delta), p) * v;
    const VectorXd got = pksm_apply(layer, p, v).value;
    worst = std::max(worst, (got - ref).norm() / ref.norm());
  }
  return {worst <= 1e-6, "20 instances, n <= 135: worst relative error " + fmt(worst) + " (need <= 1e-6)"};
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  double worst_val = 0.0, worst_res = 0.0;
  for (Index n : {150, 300}) {
    std::vector<MatrixXd> ws;
    std::vector<Layer> layers;
    for (int t = 0; t < 3; ++t) {
      ws.push_back(random_weights(n, 0.02 + 0.02 * t, rng));
      layers.push_back(build_layer(WeightOperator::dense(ws.back())));
    }
    const MultilayerGraph g(layers);
    for (double p : {1.0, -1.0, -10.0}) {
      PowerMeanConfig cfg;
      cfg.p = p;
      const double delta = cfg.shift();
      MatrixXd m = MatrixXd::Zero(n, n);
      for (const auto& w : ws) m += sym_power(sym_laplacian_of(w, delta), p);
      const MatrixXd lp = sym_power(m / 3.0, 1.0 / p);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(lp);
      const SpectralBasis b = power_mean_eigs(g, cfg, 10);
      for (Index i = 0; i < 10; ++i) {
        const double ref = es.eigenvalues()(i);
        // The p = 1 null space has eigenvalue 0; there the error is taken absolutely.
        worst_val = std::max(worst_val, std::abs(b.values(i) - ref) / (ref != 0.0 && std::abs(ref) > 1e-12 ? std::abs(ref) : 1.0));
        worst_res = std::max(worst_res, (lp * b.vectors.col(i) - b.values(i) * b.vectors.col(i)).norm());
      }
    }
  }
  return {worst_val <= 1e-7 && worst_res <= 1e-6,
          "n in {150,300}, p in {1,-1,-10}, k=10: eigenvalue error " + fmt(worst_val) + " (need <= 1e-7), residual " +
              fmt(worst_res) + " (need <= 1e-6)"};
}

Outcome criterion7() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (Index n : {4, 7, 10}) {
    const MatrixXd lap = sym_laplacian_of(random_weights(n, 0.4, rng), 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(lap);
    const SpectralBasis basis{es.eigenvalues(), es.eigenvectors(), 0};
    VectorXi ids = VectorXi::Zero(n);
    ids(0) = 1;
    ids(1) = 2;
    ids(n - 1) = 3;
    const LabelData labels = LabelData::from_class_ids(ids, 3, 1000.0);
    AllenCahnParams p;
    p.tolerance = 1e-300;
    p.max_iter = 50;
    const double c = p.convexity();
    const MatrixXd a = (1.0 + c * p.dt) * MatrixXd::Identity(n, n) + p.epsilon * p.dt * lap;
    const auto solver = a.ldlt();
    MatrixXd ref = initial_scores(labels);
    int steps = 0;
    allen_cahn_solve(basis, labels, p, [&](int, const MatrixXd& U) {
      const MatrixXd rhs = (1.0 + c * p.dt) * ref - (p.dt / (2.0 * p.epsilon)) * nonlinearity_T(ref) -
                           p.dt * labels.fidelity.asDiagonal() * (ref - labels.F);
      ref = project_rows(solver.solve(rhs));
      worst = std::max(worst, (U - ref).cwiseAbs().maxCoeff());
      ++steps;
    });
    if (steps != 50) return {false, "iteration stopped after " + std::to_string(steps) + " steps"};
  }
  return {worst <= 1e-8, "n in {4,7,10}, 50 steps: max per-step deviation " + fmt(worst) + " (need <= 1e-8)"};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst_sum = 0.0, worst_neg = 0.0, worst_idem = 0.0, worst_grid = 0.0;
  // Grid on the 2-simplex with spacing 1e-3, scanned exhaustively for m = 3.
  const int steps = 1000;
  std::vector<double> gx, gy;
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; i + j <= steps; ++j) {
      gx.push_back(i * 1e-3);
      gy.push_back(j * 1e-3);
    }
  for (int m : {2, 3, 5}) {
    for (int s = 0; s < 10000; ++s) {
      VectorXd y(m);
      for (auto& c : y) c = u(rng);
      const VectorXd x = simplex_project(y);
      worst_sum = std::max(worst_sum, std::abs(x.sum() - 1.0));
      worst_neg = std::max(worst_neg, -x.minCoeff());
      worst_idem = std::max(worst_idem, (simplex_project(x) - x).cwiseAbs().maxCoeff());
      if (m == 3) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t g = 0; g < gx.size(); ++g) {
          const double a = gx[g] - y(0), b = gy[g] - y(1), c = (1.0 - gx[g] - gy[g]) - y(2);
          const double d = a * a + b * b + c * c;
          if (d < best) {
            best = d;
            arg = g;
          }
        }
        const Eigen::Vector3d g(gx[arg], gy[arg], 1.0 - gx[arg] - gy[arg]);
        worst_grid = std::max(worst_grid, (g - x).norm());
      }
    }
  }
  const bool ok = worst_sum <= 1e-12 && worst_neg <= 0.0 && worst_idem <= 1e-15 && worst_grid <= 1e-3;
  return {ok, "3 x 10^4 points: row-sum error " + fmt(worst_sum) + ", min entry " + fmt(-worst_neg) +
                  ", idempotence " + fmt(worst_idem) + ", grid distance (m=3) " + fmt(worst_grid) + " (need <= 1e-3)"};
}

Outcome criterion9() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mlac_acceptance_segmentation";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const int size = 64;
  const std::array<std::array<int, 3>, 4> colors{{{180, 60, 60}, {60, 170, 70}, {70, 80, 190}, {200, 190, 70}}};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 10.0);
  Image img{size, size, {}}, truth{size, size, {}};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const auto& c = colors[static_cast<std::size_t>((y >= size / 2) * 2 + (x >= size / 2))];
      for (int ch = 0; ch < 3; ++ch) {
        const double val = std::clamp(std::round(c[static_cast<std::size_t>(ch)] + noise(rng)), 0.0, 255.0);
        img.rgb.push_back(static_cast<std::uint8_t>(val));
        truth.rgb.push_back(static_cast<std::uint8_t>(c[static_cast<std::size_t>(ch)]));
      }
    }
  write_png((dir / "image.png").string(), img);
  write_png((dir / "truth.png").string(), truth);
  cli::Json colors_json = cli::Json::array();
  for (const auto& c : colors) colors_json.push_back({c[0], c[1], c[2]});
  const cli::Json j = {{"seed", 9},
                       {"input",
                        {{"images", {(dir / "image.png").string()}},
                         {"label_images", {(dir / "truth.png").string()}},
                         {"label_colors", colors_json},
                         {"label_fraction", 0.02}}},
                       {"power", {{"p", 1}}},
                       {"eig", {{"k", 12}}},
                       {"output", {{"dir", (dir / "out").string()}}}};
  const auto t = Clock::now();
  const cli::Json report = cli::cmd_segment_image(cli::parse_config(j));
  const double secs = seconds_since(t);
  fs::remove_all(dir);
  const double acc = report["accuracy"].get<double>();
  return {acc >= 0.99 && secs <= 60.0, "64x64, noise std 10, 2% labels, p=1, k=12: accuracy " + fmt(acc, 5) +
                                           " (need >= 0.99), " + fmt(secs) + " s (need <= 60)"};
}

}  // namespace

int main() {
  run(1, "SBM noisy layer", criterion1);
  run(2, "SBM complementary layers", criterion2);
  run(3, "fastsum accuracy", criterion3);
  run(4, "fastsum scaling", criterion4);
  run(5, "PKSM oracle", criterion5);
  run(6, "power mean eigenpairs", criterion6);
  run(7, "Allen-Cahn full basis", criterion7);
  run(8, "simplex projection", criterion8);
  run(9, "synthetic segmentation", criterion9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
