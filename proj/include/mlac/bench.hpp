#pragma once

#include "mlac/allencahn.hpp"
#include "mlac/datapipe.hpp"
#include "mlac/fastsum.hpp"
#include "mlac/powermean.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mlac {

struct Misclassification {
  double all = 0.0;        // fraction over all nodes
  double unlabeled = 0.0;  // fraction over nodes without a known label
};

Misclassification misclassification(const VectorXi& predicted_ids, const VectorXi& truth,
                                    const VectorXi& known_ids);

/// One classifier run: power mean eigenpairs, Allen-Cahn, argmax.
struct ClassifyResult {
  SpectralBasis basis;
  AllenCahnResult ac;
  VectorXi predicted;  // 1-based
};

ClassifyResult classify(const MultilayerGraph& graph, const LabelData& labels,
                        const PowerMeanConfig& power, Index k, const AllenCahnParams& ac,
                        const LanczosOptions& eig = {});

enum class SbmExperiment { NoisyLayer, Complementary };

struct SbmBenchConfig {
  SbmExperiment experiment = SbmExperiment::NoisyLayer;
  int repetitions = 100;
  std::vector<double> powers;  // empty: experiment default
  int cluster_size = 50;
  double p_in = 0.7;
  double p_out = 0.3;
  double label_fraction = 0.04;
  Index k = 0;                 // 0: number of classes
  bool single_layers = true;   // complementary experiment only
  bool layer_pairs = true;     // complementary experiment only
  AllenCahnParams ac;
  PksmOptions pksm;
  LanczosOptions eig;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SbmBenchRow {
  std::string variant;  // "full", "layer 1", "layers 1+2", ...
  double p = 1.0;
  int runs = 0;
  double mean = 0.0;  // percent, all nodes
  double std = 0.0;   // percent, population standard deviation
  double mean_unlabeled = 0.0;
  int failures = 0;   // runs that raised a numerical error (counted as excluded)
};

std::vector<SbmBenchRow> run_sbm_bench(const SbmBenchConfig& config);
std::string format_sbm_table(const std::vector<SbmBenchRow>& rows);

struct FastsumBenchConfig {
  std::vector<Index> sizes{1000, 2000, 4000, 8000};
  std::vector<int> dims{2};
  std::vector<double> sigmas{0.3};  // in fastsum-ball units
  KernelFamily kernel = KernelFamily::Gaussian;
  FastsumParams params;
  int repetitions = 5;
  Index direct_limit = 200000;  // skip the direct sum above this size
  std::uint64_t seed = 1;
};

struct FastsumBenchRow {
  int dim = 0;
  Index n = 0;
  double sigma = 0.0;
  double plan_seconds = 0.0;
  double fast_seconds = 0.0;    // median over repetitions of batched per-product time
  double direct_seconds = -1.0; // median, -1 when skipped
  double rel_error = -1.0;      // -1 when direct skipped
  double fast_ratio = -1.0;     // time ratio to the previous size in the sweep
  double direct_ratio = -1.0;
};

/// Uniform random points in the fastsum ball of radius 1/4 - eps_B/2.
MatrixXd random_ball_points(Index n, int dim, double boundary_eps, std::uint64_t seed);

std::vector<FastsumBenchRow> run_fastsum_bench(const FastsumBenchConfig& config);
std::string format_fastsum_table(const std::vector<FastsumBenchRow>& rows);

}  // namespace mlac
