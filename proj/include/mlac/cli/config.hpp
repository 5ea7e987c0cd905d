#pragma once

#include "mlac/allencahn.hpp"
#include "mlac/bench.hpp"
#include "mlac/datapipe.hpp"
#include "mlac/fastsum.hpp"
#include "mlac/powermean.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mlac::cli {

using Json = nlohmann::ordered_json;

struct GroupConfig {
  std::vector<Index> columns;
  KernelFamily kernel = KernelFamily::Gaussian;
  std::optional<double> sigma;  // in raw feature units
  double sigma_box = 1.0;       // used when sigma is absent: multiple of the group's half extent
  ScalingMode scaling = ScalingMode::FastsumBall;
  bool per_component = false;
};

struct InputConfig {
  std::string features;
  std::vector<std::string> layers;
  Index nodes = 0;
  std::string labels;
  std::string truth;
  double label_fraction = 0.0;
  int classes = 0;
  std::vector<std::string> images;
  std::vector<std::string> label_images;
  std::vector<std::array<int, 3>> label_colors;
};

struct ImageConfig {
  std::optional<double> sigma_rgb;
  std::optional<double> sigma_xy;
  double sigma_rgb_box = 1.0;
  double sigma_xy_box = 4.0;
  bool separate_components = true;
};

struct BenchSection {
  SbmBenchConfig sbm;
  FastsumBenchConfig fastsum;
};

struct OutputConfig {
  std::string dir = "out";
  bool scores = true;
  bool vectors = false;
  bool masks = true;
};

/// Parsed run configuration. Every key is optional; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  InputConfig input;
  std::vector<GroupConfig> groups;
  ImageConfig image;
  PowerMeanConfig power;
  FastsumParams fastsum;
  Index k = 10;
  LanczosOptions eig;
  AllenCahnParams ac;
  BenchSection bench;
  OutputConfig output;
  int threads = 1;
};

/// Throws ConfigError naming the offending key path.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);

/// Normalized JSON form of a configuration; parse_config(to_json(c)) == c.
Json to_json(const RunConfig& config);

}  // namespace mlac::cli
