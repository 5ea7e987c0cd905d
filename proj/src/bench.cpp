#include "mlac/bench.hpp"

#include "mlac/log.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace mlac {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <class F>
void parallel_for(int count, int threads, F&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

Misclassification misclassification(const VectorXi& predicted_ids, const VectorXi& truth,
                                    const VectorXi& known_ids) {
  if (predicted_ids.size() != truth.size())
    throw InvalidArgument("prediction and ground truth lengths differ");
  Misclassification m;
  Index wrong = 0, wrong_unlabeled = 0, unlabeled = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    const bool bad = predicted_ids(i) != truth(i);
    wrong += bad;
    if (known_ids.size() == 0 || known_ids(i) == 0) {
      ++unlabeled;
      wrong_unlabeled += bad;
    }
  }
  m.all = truth.size() > 0 ? static_cast<double>(wrong) / truth.size() : 0.0;
  m.unlabeled = unlabeled > 0 ? static_cast<double>(wrong_unlabeled) / unlabeled : 0.0;
  return m;
}

ClassifyResult classify(const MultilayerGraph& graph, const LabelData& labels,
                        const PowerMeanConfig& power, Index k, const AllenCahnParams& ac,
                        const LanczosOptions& eig) {
  ClassifyResult r;
  r.basis = power_mean_eigs(graph, power, k, eig);
  r.ac = allen_cahn_solve(r.basis, labels, ac);
  r.predicted = (predict_labels(r.ac.U).array() + 1).matrix();
  return r;
}

// ---------------------------------------------------------------------------

std::vector<SbmBenchRow> run_sbm_bench(const SbmBenchConfig& config) {
  if (config.repetitions < 1) throw InvalidArgument("sbm bench needs at least one repetition");
  const bool noisy = config.experiment == SbmExperiment::NoisyLayer;
  std::vector<double> powers = config.powers;
  if (powers.empty())
    powers = noisy ? std::vector<double>{-20.0, 1.0, 10.0}
                   : std::vector<double>{10.0, 5.0, 1.0, -1.0, -5.0, -10.0, -20.0, -30.0};
  const SbmSpec base = noisy ? sbm_noisy_layer_spec(config.cluster_size, config.p_in, config.p_out)
                             : sbm_complementary_spec(config.cluster_size, config.p_in, config.p_out);
  const int classes = static_cast<int>(base.block_sizes.size());
  const std::size_t layer_count = base.layers.size();
  const Index k = config.k > 0 ? config.k : classes;

  struct Variant {
    std::string name;
    std::vector<std::size_t> layers;
    double p;
    bool plain;  // single layer, unshifted L_sym
  };
  std::vector<Variant> variants;
  if (!noisy && config.single_layers)
    for (std::size_t t = 0; t < layer_count; ++t)
      variants.push_back({"layer " + std::to_string(t + 1), {t}, 1.0, true});
  if (!noisy && config.layer_pairs) {
    for (std::size_t a = 0; a < layer_count; ++a)
      for (std::size_t b = a + 1; b < layer_count; ++b)
        for (double p : powers)
          variants.push_back({"layers " + std::to_string(a + 1) + "+" + std::to_string(b + 1),
                              {a, b}, p, false});
  }
  for (double p : powers) {
    std::vector<std::size_t> all(layer_count);
    for (std::size_t t = 0; t < layer_count; ++t) all[t] = t;
    variants.push_back({"full", all, p, false});
  }

  const int reps = config.repetitions;
  const std::size_t nv = variants.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> err(static_cast<std::size_t>(reps) * nv, nan), err_u(err.size(), nan);

  parallel_for(reps, config.threads, [&](int r) {
    SbmSpec spec = base;
    spec.seed = splitmix64(config.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(r));
    const SbmInstance inst = sbm_generate(spec);
    const VectorXi known =
        sample_label_ids(inst.truth, classes, config.label_fraction, splitmix64(spec.seed));
    const LabelData labels = LabelData::from_class_ids(known, classes, config.ac.omega0);
    for (std::size_t v = 0; v < nv; ++v) {
      const auto& var = variants[v];
      PowerMeanConfig pm;
      pm.p = var.p;
      pm.pksm = config.pksm;
      if (var.plain) pm.delta = 0.0;
      LanczosOptions eig = config.eig;
      eig.seed = splitmix64(spec.seed + v);
      try {
        const auto res = classify(inst.graph.subset(var.layers), labels, pm, k, config.ac, eig);
        const auto mc = misclassification(res.predicted, inst.truth, known);
        err[static_cast<std::size_t>(r) * nv + v] = mc.all;
        err_u[static_cast<std::size_t>(r) * nv + v] = mc.unlabeled;
      } catch (const NumericalError& e) {
        log::warn("sbm bench: repetition ", r, ", ", var.name, ", p = ", var.p, ": ", e.what());
      }
    }
  });

  std::vector<SbmBenchRow> rows;
  for (std::size_t v = 0; v < nv; ++v) {
    SbmBenchRow row;
    row.variant = variants[v].name;
    row.p = variants[v].p;
    double sum = 0.0, sum_u = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double e = err[static_cast<std::size_t>(r) * nv + v];
      if (std::isnan(e)) {
        ++row.failures;
        continue;
      }
      ++row.runs;
      sum += e;
      sum_u += err_u[static_cast<std::size_t>(r) * nv + v];
    }
    row.mean = row.runs ? 100.0 * sum / row.runs : nan;
    row.mean_unlabeled = row.runs ? 100.0 * sum_u / row.runs : nan;
    double var = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double e = err[static_cast<std::size_t>(r) * nv + v];
      if (!std::isnan(e)) var += (100.0 * e - row.mean) * (100.0 * e - row.mean);
    }
    row.std = row.runs ? std::sqrt(var / row.runs) : nan;
    rows.push_back(row);
  }
  return rows;
}

std::string format_sbm_table(const std::vector<SbmBenchRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "variant" << std::right << std::setw(8) << "p"
     << std::setw(8) << "runs" << std::setw(12) << "error %" << std::setw(10) << "std %"
     << std::setw(16) << "unlabeled %" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.variant << std::right << std::setw(8)
       << std::setprecision(1) << r.p << std::setw(8) << r.runs << std::setw(12)
       << std::setprecision(2) << r.mean << std::setw(10) << r.std << std::setw(16)
       << r.mean_unlabeled;
    if (r.failures) os << "  (" << r.failures << " failed)";
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

MatrixXd random_ball_points(Index n, int dim, double boundary_eps, std::uint64_t seed) {
  const double radius = 0.25 - 0.5 * boundary_eps;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatrixXd X(n, dim);
  for (Index i = 0; i < n; ++i) {
    VectorXd x(dim);
    for (auto& c : x) c = normal(rng);
    const double nrm = x.norm();
    const double r = radius * std::pow(unif(rng), 1.0 / dim);
    X.row(i) = (nrm > 0.0 ? x / nrm * r : x).transpose();
  }
  return X;
}

std::vector<FastsumBenchRow> run_fastsum_bench(const FastsumBenchConfig& config) {
  if (config.repetitions < 1) throw InvalidArgument("fastsum bench needs at least one repetition");
  std::vector<FastsumBenchRow> rows;
  for (int d : config.dims) {
    for (double sigma : config.sigmas) {
      const KernelSpec kernel(config.kernel, sigma);
      auto t0 = std::chrono::steady_clock::now();
      auto plan = std::make_shared<const FastsumPlan>(kernel, d, config.params);
      const double plan_seconds = seconds_since(t0);
      std::optional<FastsumBenchRow> prev;
      for (Index n : config.sizes) {
        const std::uint64_t s = splitmix64(config.seed + static_cast<std::uint64_t>(n) * 31 + d);
        const MatrixXd X = random_ball_points(n, d, config.params.boundary_eps, s);
        VectorXd v(n);
        std::mt19937_64 rng(splitmix64(s));
        std::normal_distribution<double> normal;
        for (auto& x : v) x = normal(rng);

        FastsumBenchRow row;
        row.dim = d;
        row.n = n;
        row.sigma = sigma;
        row.plan_seconds = plan_seconds;
        const FastsumOperator op(plan, PointSet(X, config.params.boundary_eps));
        VectorXd fast = op.apply(v);  // warm-up (FFT planning)
        t0 = std::chrono::steady_clock::now();
        fast = op.apply(v);
        // Single products take milliseconds, well inside scheduler noise, so each
        // repetition times a batch of at least ~0.25 s and records the mean.
        const double warm = std::max(seconds_since(t0), 1e-6);
        const int batch = static_cast<int>(std::clamp(std::ceil(0.25 / warm), 1.0, 1000.0));
        std::vector<double> times;
        for (int r = 0; r < config.repetitions; ++r) {
          t0 = std::chrono::steady_clock::now();
          for (int b = 0; b < batch; ++b) fast = op.apply(v);
          times.push_back(seconds_since(t0) / batch);
        }
        row.fast_seconds = median(times);
        if (n <= config.direct_limit) {
          times.clear();
          VectorXd exact;
          for (int r = 0; r < config.repetitions; ++r) {
            t0 = std::chrono::steady_clock::now();
            exact = direct_apply(X, v, kernel);
            times.push_back(seconds_since(t0));
          }
          row.direct_seconds = median(times);
          row.rel_error = (fast - exact).norm() / exact.norm();
        }
        if (prev) {
          row.fast_ratio = row.fast_seconds / prev->fast_seconds;
          if (row.direct_seconds > 0.0 && prev->direct_seconds > 0.0)
            row.direct_ratio = row.direct_seconds / prev->direct_seconds;
        }
        rows.push_back(row);
        prev = row;
        log::info("fastsum bench d=", d, " n=", n, " fast ", row.fast_seconds, " s");
      }
    }
  }
  return rows;
}

std::string format_fastsum_table(const std::vector<FastsumBenchRow>& rows) {
  std::ostringstream os;
  os << std::setw(3) << "d" << std::setw(10) << "n" << std::setw(8) << "sigma" << std::setw(12)
     << "fast s" << std::setw(12) << "direct s" << std::setw(12) << "rel err" << std::setw(10)
     << "fast x" << std::setw(10) << "direct x" << '\n';
  auto opt = [](double x, int prec, bool sci) {
    std::ostringstream s;
    if (x < 0.0) return std::string("-");
    if (sci) s << std::scientific;
    else s << std::fixed;
    s << std::setprecision(prec) << x;
    return s.str();
  };
  for (const auto& r : rows) {
    os << std::setw(3) << r.dim << std::setw(10) << r.n << std::setw(8) << opt(r.sigma, 3, false)
       << std::setw(12) << opt(r.fast_seconds, 2, true) << std::setw(12)
       << opt(r.direct_seconds, 2, true) << std::setw(12) << opt(r.rel_error, 2, true)
       << std::setw(10) << opt(r.fast_ratio, 2, false) << std::setw(10)
       << opt(r.direct_ratio, 2, false) << '\n';
  }
  return os.str();
}

}  // namespace mlac
