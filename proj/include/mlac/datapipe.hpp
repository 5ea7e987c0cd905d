#pragma once

#include "mlac/allencahn.hpp"
#include "mlac/fastsum.hpp"
#include "mlac/graph.hpp"
#include "mlac/image_io.hpp"
#include "mlac/kernel.hpp"
#include "mlac/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mlac {

struct FeatureMatrix {
  MatrixXd X;
  std::vector<std::string> names;  // empty or one per column
};

enum class ScalingMode {
  FastsumBall,  // centered, isotropically scaled into the fastsum ball; NFFT products
  UnitBox,      // centered, isotropically scaled into [-1, 1]^d; direct products
  None          // raw coordinates; direct products
};

std::string_view to_string(ScalingMode mode);
ScalingMode parse_scaling_mode(std::string_view s);

/// One feature group becomes one layer. The kernel sigma is given in the units
/// of the raw columns and is carried through the scaling.
struct FeatureGroup {
  std::vector<Index> columns;
  KernelSpec kernel;
  ScalingMode scaling = ScalingMode::FastsumBall;
  /// Evaluate the kernel only inside the row blocks given by
  /// GroupingSpec::component_offsets (block-diagonal layer).
  bool per_component = false;
};

struct GroupingSpec {
  std::vector<FeatureGroup> groups;
  FastsumParams fastsum;
  std::vector<Index> component_offsets;  // empty: one component
};

struct GroupScaling {
  VectorXd center;
  double factor = 1.0;  // scaled = (x - center) * factor
  KernelSpec kernel;    // kernel in scaled units
};

/// Centers every column at the midpoint of its range and applies one common
/// factor so that the largest row norm equals `radius` (1/4 - eps_B/2 for the
/// fastsum ball). Constant columns map to 0; an all-constant group stays at 0.
GroupScaling fit_ball_scaling(const ConstMatrixRef& X, double radius);
/// Same centering; one factor so that every coordinate lies in [-1, 1].
GroupScaling fit_box_scaling(const ConstMatrixRef& X);

MatrixXd scale_for_fastsum(const ConstMatrixRef& X, double boundary_eps = 1.0 / 16.0);

MultilayerGraph feature_group(const FeatureMatrix& features, const GroupingSpec& spec,
                              std::vector<GroupScaling>* scalings = nullptr);

// ---------------------------------------------------------------------------

struct SbmLayerSpec {
  std::vector<int> block_of_class;  // one block id per class
  double p_in = 0.7;
  double p_out = 0.3;
};

struct SbmSpec {
  std::vector<int> block_sizes;  // nodes per class
  std::vector<SbmLayerSpec> layers;
  std::uint64_t seed = 1;
  int max_retries = 100;

  void validate() const;
};

struct SbmInstance {
  MultilayerGraph graph;
  VectorXi truth;  // 1-based class ids
  std::vector<SparseMatrix> adjacency;
};

SbmInstance sbm_generate(const SbmSpec& spec);

/// Two classes; layer 1 informative (p_in, p_out), layer 2 pure noise (0.5, 0.5).
SbmSpec sbm_noisy_layer_spec(int cluster_size = 50, double p_in = 0.7, double p_out = 0.3);
/// Three classes; layer i separates class i from the other two.
SbmSpec sbm_complementary_spec(int cluster_size = 50, double p_in = 0.7, double p_out = 0.3);

// ---------------------------------------------------------------------------

struct ImageFeatures {
  FeatureMatrix rgb;  // n x 3, values in [0, 255]
  FeatureMatrix xy;   // n x 2, (column, row)
  std::vector<std::pair<int, int>> shapes;  // (width, height) per image
  std::vector<Index> offsets;               // first pixel of each image, plus n
  VectorXi component;                       // image index per pixel
};

ImageFeatures image_to_features(const std::vector<Image>& images);

// ---------------------------------------------------------------------------

/// Per class, max(1, ceil(fraction * size)) nodes drawn uniformly without
/// replacement. Returns 1-based ids on sampled nodes, 0 elsewhere.
VectorXi sample_label_ids(const VectorXi& truth, int classes, const std::vector<double>& fraction,
                          std::uint64_t seed);
VectorXi sample_label_ids(const VectorXi& truth, int classes, double fraction, std::uint64_t seed);
LabelData sample_labels(const VectorXi& truth, int classes, double fraction, std::uint64_t seed,
                        double omega0 = 1000.0);

// ---------------------------------------------------------------------------

/// Comma-separated numbers, optional header row of names.
FeatureMatrix read_feature_csv(const std::string& path);
/// Single integer column (optional header).
VectorXi read_label_csv(const std::string& path);
void write_predictions_csv(const std::string& path, const VectorXi& class_ids);
void write_matrix_csv(const std::string& path, const ConstMatrixRef& M,
                      const std::vector<std::string>& header = {});

}  // namespace mlac
