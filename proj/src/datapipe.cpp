#include "mlac/datapipe.hpp"

#include "mlac/log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace mlac {

std::string_view to_string(ScalingMode mode) {
  switch (mode) {
    case ScalingMode::FastsumBall: return "fastsum";
    case ScalingMode::UnitBox: return "unit-box";
    case ScalingMode::None: return "none";
  }
  return "none";
}

ScalingMode parse_scaling_mode(std::string_view s) {
  if (s == "fastsum" || s == "fastsum-box" || s == "fastsum-ball") return ScalingMode::FastsumBall;
  if (s == "unit-box") return ScalingMode::UnitBox;
  if (s == "none") return ScalingMode::None;
  throw InvalidArgument("unknown scaling mode '" + std::string(s) + "'");
}

namespace {

VectorXd column_midpoints(const ConstMatrixRef& X) {
  if (!X.allFinite()) throw InvalidArgument("feature matrix contains non-finite values");
  if (X.rows() == 0) return VectorXd::Zero(X.cols());
  return 0.5 * (X.colwise().minCoeff() + X.colwise().maxCoeff()).transpose();
}

}  // namespace

GroupScaling fit_ball_scaling(const ConstMatrixRef& X, double radius) {
  GroupScaling s;
  s.center = column_midpoints(X);
  const double rmax =
      X.rows() == 0 ? 0.0 : (X.rowwise() - s.center.transpose()).rowwise().norm().maxCoeff();
  s.factor = rmax > 0.0 ? radius / rmax : 1.0;
  return s;
}

GroupScaling fit_box_scaling(const ConstMatrixRef& X) {
  GroupScaling s;
  s.center = column_midpoints(X);
  const double half =
      X.rows() == 0 ? 0.0 : (X.rowwise() - s.center.transpose()).cwiseAbs().maxCoeff();
  s.factor = half > 0.0 ? 1.0 / half : 1.0;
  return s;
}

MatrixXd scale_for_fastsum(const ConstMatrixRef& X, double boundary_eps) {
  const GroupScaling s = fit_ball_scaling(X, 0.25 - 0.5 * boundary_eps);
  MatrixXd out = (X.rowwise() - s.center.transpose()) * s.factor;
  // Guard the admissibility test against the last rounding step.
  const double limit = 0.25 - 0.5 * boundary_eps;
  for (Index i = 0; i < out.rows(); ++i) {
    const double r = out.row(i).norm();
    if (r > limit) out.row(i) *= limit / r;
  }
  return out;
}

MultilayerGraph feature_group(const FeatureMatrix& features, const GroupingSpec& spec,
                              std::vector<GroupScaling>* scalings) {
  const MatrixXd& X = features.X;
  if (X.cols() < 1) throw InvalidArgument("feature matrix has no columns");
  if (!X.allFinite()) throw InvalidArgument("feature matrix contains non-finite values");
  if (spec.groups.empty()) throw InvalidArgument("grouping needs at least one group");
  std::set<Index> used;
  std::vector<Layer> layers;
  if (scalings != nullptr) scalings->clear();
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    const std::string where = "feature group " + std::to_string(g);
    if (group.columns.empty()) throw InvalidArgument(where + " is empty");
    for (Index c : group.columns) {
      if (c < 0 || c >= X.cols())
        throw InvalidArgument(where + " refers to column " + std::to_string(c) +
                              " but the data has " + std::to_string(X.cols()) + " columns");
      if (!used.insert(c).second)
        throw InvalidArgument(where + " reuses column " + std::to_string(c));
    }
    const auto d = static_cast<Index>(group.columns.size());
    if (group.scaling == ScalingMode::FastsumBall && d > 3)
      throw InvalidArgument(where + " has " + std::to_string(d) +
                            " columns; fast summation supports at most 3, split the group");
    group.kernel.validate();

    MatrixXd sub(X.rows(), d);
    for (Index j = 0; j < d; ++j) sub.col(j) = X.col(group.columns[static_cast<std::size_t>(j)]);

    GroupScaling s;
    MatrixXd scaled;
    switch (group.scaling) {
      case ScalingMode::FastsumBall:
        s = fit_ball_scaling(sub, 0.25 - 0.5 * spec.fastsum.boundary_eps);
        scaled = scale_for_fastsum(sub, spec.fastsum.boundary_eps);
        break;
      case ScalingMode::UnitBox:
        s = fit_box_scaling(sub);
        scaled = (sub.rowwise() - s.center.transpose()) * s.factor;
        break;
      case ScalingMode::None:
        s.center = VectorXd::Zero(d);
        s.factor = 1.0;
        scaled = sub;
        break;
    }
    s.kernel = group.kernel.rescaled(s.factor);
    const std::vector<Index> offsets = group.per_component ? spec.component_offsets : std::vector<Index>{};
    WeightOperator w = group.scaling == ScalingMode::FastsumBall
                           ? WeightOperator::kernel_fastsum(std::move(scaled), s.kernel, spec.fastsum, offsets)
                           : WeightOperator::kernel(std::move(scaled), s.kernel, offsets);
    log::info(where, ": ", w.describe(), ", scale factor ", s.factor);
    try {
      layers.push_back(build_layer(std::move(w)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
    if (scalings != nullptr) scalings->push_back(std::move(s));
  }
  if (static_cast<Index>(used.size()) < X.cols())
    log::warn(X.cols() - static_cast<Index>(used.size()), " feature columns are not in any group and are ignored");
  return MultilayerGraph(std::move(layers));
}

// ---------------------------------------------------------------------------

void SbmSpec::validate() const {
  if (block_sizes.size() < 2) throw InvalidArgument("SBM needs at least two classes");
  for (int s : block_sizes)
    if (s < 1) throw InvalidArgument("SBM block sizes must be >= 1");
  if (layers.empty()) throw InvalidArgument("SBM needs at least one layer");
  for (std::size_t t = 0; t < layers.size(); ++t) {
    const auto& l = layers[t];
    if (l.block_of_class.size() != block_sizes.size())
      throw InvalidArgument("SBM layer " + std::to_string(t) + " must assign a block to every class");
    if (!(l.p_in >= 0.0 && l.p_in <= 1.0 && l.p_out >= 0.0 && l.p_out <= 1.0))
      throw InvalidArgument("SBM probabilities must lie in [0, 1]");
  }
  if (max_retries < 0) throw InvalidArgument("SBM retry budget must be >= 0");
}

SbmInstance sbm_generate(const SbmSpec& spec) {
  spec.validate();
  const Index n = std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(), Index{0});
  VectorXi truth(n);
  {
    Index i = 0;
    for (std::size_t c = 0; c < spec.block_sizes.size(); ++c)
      for (int r = 0; r < spec.block_sizes[c]; ++r) truth(i++) = static_cast<int>(c) + 1;
  }

  std::vector<SparseMatrix> adjacency;
  std::vector<Layer> layers;
  for (std::size_t t = 0; t < spec.layers.size(); ++t) {
    const auto& ls = spec.layers[t];
    bool ok = false;
    for (int attempt = 0; attempt <= spec.max_retries && !ok; ++attempt) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(attempt)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::vector<Eigen::Triplet<double>> trips;
      VectorXd degree = VectorXd::Zero(n);
      for (Index i = 0; i < n; ++i) {
        const int bi = ls.block_of_class[static_cast<std::size_t>(truth(i) - 1)];
        for (Index j = i + 1; j < n; ++j) {
          const int bj = ls.block_of_class[static_cast<std::size_t>(truth(j) - 1)];
          const double prob = bi == bj ? ls.p_in : ls.p_out;
          if (unif(rng) < prob) {
            trips.emplace_back(i, j, 1.0);
            trips.emplace_back(j, i, 1.0);
            degree(i) += 1.0;
            degree(j) += 1.0;
          }
        }
      }
      if ((degree.array() <= 0.0).any()) {
        log::info("SBM layer ", t, " attempt ", attempt, " has an isolated node, resampling");
        continue;
      }
      SparseMatrix w(n, n);
      w.setFromTriplets(trips.begin(), trips.end());
      w.makeCompressed();
      layers.push_back(build_layer(WeightOperator::sparse(w)));
      adjacency.push_back(std::move(w));
      ok = true;
    }
    if (!ok)
      throw NumericalError("SBM layer " + std::to_string(t) + " still had isolated nodes after " +
                           std::to_string(spec.max_retries + 1) + " attempts");
  }
  return SbmInstance{MultilayerGraph(std::move(layers)), std::move(truth), std::move(adjacency)};
}

SbmSpec sbm_noisy_layer_spec(int cluster_size, double p_in, double p_out) {
  SbmSpec s;
  s.block_sizes = {cluster_size, cluster_size};
  s.layers = {SbmLayerSpec{{0, 1}, p_in, p_out}, SbmLayerSpec{{0, 1}, 0.5, 0.5}};
  return s;
}

SbmSpec sbm_complementary_spec(int cluster_size, double p_in, double p_out) {
  SbmSpec s;
  s.block_sizes = {cluster_size, cluster_size, cluster_size};
  s.layers = {SbmLayerSpec{{0, 1, 1}, p_in, p_out}, SbmLayerSpec{{1, 0, 1}, p_in, p_out},
              SbmLayerSpec{{1, 1, 0}, p_in, p_out}};
  return s;
}

// ---------------------------------------------------------------------------

ImageFeatures image_to_features(const std::vector<Image>& images) {
  if (images.empty()) throw InvalidArgument("no images given");
  Index n = 0;
  for (const auto& img : images) {
    if (img.width <= 0 || img.height <= 0) throw InvalidArgument("empty image");
    if (img.rgb.size() != static_cast<std::size_t>(img.pixels()) * 3)
      throw InvalidArgument("unsupported pixel format: expected 8-bit RGB");
    n += img.pixels();
  }
  ImageFeatures f;
  f.rgb.X.resize(n, 3);
  f.rgb.names = {"r", "g", "b"};
  f.xy.X.resize(n, 2);
  f.xy.names = {"x", "y"};
  f.component.resize(n);
  Index row = 0;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const auto& img = images[k];
    f.shapes.emplace_back(img.width, img.height);
    f.offsets.push_back(row);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) f.rgb.X(row, c) = img.at(x, y, c);
        f.xy.X(row, 0) = x;
        f.xy.X(row, 1) = y;
        f.component(row) = static_cast<int>(k);
        ++row;
      }
    }
  }
  f.offsets.push_back(n);
  return f;
}

// ---------------------------------------------------------------------------

VectorXi sample_label_ids(const VectorXi& truth, int classes, const std::vector<double>& fraction,
                          std::uint64_t seed) {
  if (classes < 1) throw InvalidArgument("need at least one class");
  if (fraction.size() != static_cast<std::size_t>(classes))
    throw InvalidArgument("need one label fraction per class");
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(classes));
  for (Index i = 0; i < truth.size(); ++i) {
    const int c = truth(i);
    if (c < 1 || c > classes)
      throw InvalidArgument("ground-truth class " + std::to_string(c) + " at node " +
                            std::to_string(i) + " is outside 1.." + std::to_string(classes));
    members[static_cast<std::size_t>(c - 1)].push_back(i);
  }
  std::mt19937_64 rng(seed);
  VectorXi out = VectorXi::Zero(truth.size());
  for (int c = 0; c < classes; ++c) {
    auto& idx = members[static_cast<std::size_t>(c)];
    const double f = fraction[static_cast<std::size_t>(c)];
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("label fraction must lie in (0, 1]");
    if (idx.empty()) throw InvalidArgument("class " + std::to_string(c + 1) + " is absent from the ground truth");
    const auto size = static_cast<double>(idx.size());
    const auto count = std::min<std::size_t>(
        idx.size(), std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f * size - 1e-9))));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t r = 0; r < count; ++r) out(idx[r]) = c + 1;
  }
  return out;
}

VectorXi sample_label_ids(const VectorXi& truth, int classes, double fraction, std::uint64_t seed) {
  return sample_label_ids(truth, classes, std::vector<double>(static_cast<std::size_t>(std::max(classes, 0)), fraction), seed);
}

LabelData sample_labels(const VectorXi& truth, int classes, double fraction, std::uint64_t seed,
                        double omega0) {
  return LabelData::from_class_ids(sample_label_ids(truth, classes, fraction, seed), classes, omega0);
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& value) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

FeatureMatrix read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file '" + path + "'");
  FeatureMatrix fm;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line));
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t j = 0; j < cells.size() && numeric; ++j) numeric = parse_double(cells[j], values[j]);
    if (!numeric) {
      if (rows.empty() && fm.names.empty()) {
        fm.names = cells;
        width = cells.size();
        continue;
      }
      throw IoError(path + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                    " columns, found " + std::to_string(values.size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError("feature file '" + path + "' has no data rows");
  fm.X.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) fm.X(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  if (!fm.X.allFinite()) throw IoError("feature file '" + path + "' contains non-finite values");
  return fm;
}

VectorXi read_label_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file '" + path + "'");
  std::vector<int> values;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw IoError(path + ":" + std::to_string(line_no) + ": expected one integer class id");
    }
    header_allowed = false;
    if (v < 0) throw IoError(path + ":" + std::to_string(line_no) + ": negative class id");
    values.push_back(static_cast<int>(v));
  }
  if (values.empty()) throw IoError("label file '" + path + "' has no rows");
  return Eigen::Map<VectorXi>(values.data(), static_cast<Index>(values.size()));
}

void write_predictions_csv(const std::string& path, const VectorXi& class_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "node_id,class_id\n";
  for (Index i = 0; i < class_ids.size(); ++i) out << i << ',' << class_ids(i) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_matrix_csv(const std::string& path, const ConstMatrixRef& M,
                      const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  if (!header.empty()) out << '\n';
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << format_double(M(i, j));
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mlac
