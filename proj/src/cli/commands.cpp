#include "mlac/cli/commands.hpp"

#include "mlac/log.hpp"

#include <chrono>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace mlac::cli {

namespace fs = std::filesystem;

namespace {

// Rethrows with the stage name prepended, keeping the error kind.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  }
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }
  double total() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point last_ = start_;
};

std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

fs::path output_dir(const RunConfig& c) {
  const fs::path dir(c.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void write_report(const fs::path& dir, const Json& report) {
  write_text(dir / "report.json", report.dump(2) + "\n");
}

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::vector<std::string> class_header(int classes) {
  std::vector<std::string> h;
  for (int c = 1; c <= classes; ++c) h.push_back("class_" + std::to_string(c));
  return h;
}

KernelSpec resolve_kernel(const MatrixXd& X, const std::vector<Index>& columns, KernelFamily family,
                          const std::optional<double>& sigma, double sigma_box,
                          const std::string& where) {
  for (Index col : columns)
    if (col < 0 || col >= X.cols())
      throw ConfigError(where + ": column " + std::to_string(col) + " is outside 0.." +
                        std::to_string(X.cols() - 1));
  if (sigma) return {family, *sigma};
  MatrixXd sub(X.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) sub.col(static_cast<Index>(j)) = X.col(columns[j]);
  const double half_extent = 1.0 / fit_box_scaling(sub).factor;
  return {family, sigma_box * half_extent};
}

GroupingSpec grouping_from_config(const RunConfig& c, const MatrixXd& X, Json& info) {
  GroupingSpec spec;
  spec.fastsum = c.fastsum;
  std::vector<GroupConfig> groups = c.groups;
  if (groups.empty()) {
    GroupConfig all;
    for (Index j = 0; j < X.cols(); ++j) all.columns.push_back(j);
    groups.push_back(all);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& gc = groups[g];
    FeatureGroup fg;
    fg.columns = gc.columns;
    fg.kernel = resolve_kernel(X, gc.columns, gc.kernel, gc.sigma, gc.sigma_box,
                               "grouping.groups[" + std::to_string(g) + "]");
    fg.scaling = gc.scaling;
    fg.per_component = gc.per_component;
    spec.groups.push_back(fg);
    info.push_back({{"columns", gc.columns},
                    {"kernel", std::string(to_string(fg.kernel.family))},
                    {"sigma", fg.kernel.sigma},
                    {"scaling", std::string(to_string(fg.scaling))}});
  }
  return spec;
}

MultilayerGraph build_graph(const RunConfig& c, Json& info) {
  const auto& in = c.input;
  if (!in.layers.empty()) {
    if (!in.features.empty()) throw ConfigError("set either input.features or input.layers, not both");
    std::vector<Layer> layers;
    Index n = in.nodes;
    std::vector<SparseMatrix> mats;
    for (const auto& path : in.layers) {
      mats.push_back(load_edge_list(path, in.nodes));
      n = std::max<Index>(n, mats.back().rows());
    }
    for (std::size_t t = 0; t < mats.size(); ++t) {
      SparseMatrix w = mats[t];
      if (w.rows() < n) w.conservativeResize(n, n);
      try {
        layers.push_back(build_layer(WeightOperator::sparse(std::move(w))));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("layer '" + in.layers[t] + "': " + e.what());
      }
      info.push_back({{"edge_list", in.layers[t]}});
    }
    return MultilayerGraph(std::move(layers));
  }
  if (in.features.empty()) throw ConfigError("input.features or input.layers is required");
  const FeatureMatrix features = read_feature_csv(in.features);
  const GroupingSpec spec = grouping_from_config(c, features.X, info);
  return feature_group(features, spec);
}

struct Labels {
  VectorXi known;  // 1-based, 0 unlabeled
  VectorXi truth;  // empty when absent
  int classes = 0;
};

Labels labels_from_config(const RunConfig& c, Index n) {
  Labels l;
  const auto& in = c.input;
  if (!in.truth.empty()) l.truth = read_label_csv(in.truth);
  if (!in.labels.empty()) l.known = read_label_csv(in.labels);
  auto check_size = [&](const VectorXi& v, const std::string& what) {
    if (v.size() != n)
      throw InvalidArgument(what + " has " + std::to_string(v.size()) + " entries for " +
                            std::to_string(n) + " nodes");
  };
  if (l.truth.size()) check_size(l.truth, "input.truth");
  if (l.known.size()) check_size(l.known, "input.labels");
  l.classes = in.classes;
  if (l.classes == 0) {
    if (l.truth.size()) l.classes = std::max(l.classes, l.truth.maxCoeff());
    if (l.known.size()) l.classes = std::max(l.classes, l.known.maxCoeff());
  }
  if (l.known.size() == 0) {
    if (l.truth.size() == 0 || in.label_fraction <= 0.0)
      throw ConfigError("input.labels, or input.truth with input.label_fraction, is required");
    l.known = sample_label_ids(l.truth, l.classes, in.label_fraction, c.seed);
  }
  return l;
}

void add_accuracy(Json& report, const VectorXi& predicted, const Labels& l) {
  if (l.truth.size() == 0) {
    report["accuracy"] = nullptr;
    report["misclassification"] = nullptr;
    report["accuracy_unlabeled"] = nullptr;
    return;
  }
  const Misclassification m = misclassification(predicted, l.truth, l.known);
  report["accuracy"] = 1.0 - m.all;
  report["misclassification"] = m.all;
  report["accuracy_unlabeled"] = 1.0 - m.unlabeled;
}

struct Solved {
  ClassifyResult result;
  double eig_seconds = 0.0;
  double ac_seconds = 0.0;
};

Solved solve(const MultilayerGraph& graph, const Labels& l, const RunConfig& c) {
  Solved s;
  Stopwatch sw;
  const LabelData data = stage("labels", [&] {
    auto d = LabelData::from_class_ids(l.known, l.classes, c.ac.omega0);
    d.validate();
    return d;
  });
  s.result.basis = stage("eigensolver", [&] { return power_mean_eigs(graph, c.power, c.k, c.eig); });
  s.eig_seconds = sw.lap();
  s.result.ac = stage("allen-cahn", [&] { return allen_cahn_solve(s.result.basis, data, c.ac); });
  s.result.predicted = (predict_labels(s.result.ac.U).array() + 1).matrix();
  s.ac_seconds = sw.lap();
  if (!s.result.ac.converged)
    log::warn("allen-cahn stopped after ", s.result.ac.iterations,
              " iterations with relative change ", s.result.ac.relative_change);
  return s;
}

void fill_solution(Json& report, const Solved& s, const Labels& l) {
  report["labeled"] = (l.known.array() > 0).count();
  add_accuracy(report, s.result.predicted, l);
  report["iterations"] = s.result.ac.iterations;
  report["converged"] = s.result.ac.converged;
  report["relative_change"] = s.result.ac.relative_change;
  report["eigenvalues"] = vector_json(s.result.basis.values);
  report["matvecs"] = s.result.basis.matvecs;
}

void write_solution(const fs::path& dir, const RunConfig& c, const Solved& s, int classes,
                    Json& outputs) {
  write_predictions_csv((dir / "predictions.csv").string(), s.result.predicted);
  outputs.push_back("predictions.csv");
  if (c.output.scores) {
    write_matrix_csv((dir / "scores.csv").string(), s.result.ac.U, class_header(classes));
    outputs.push_back("scores.csv");
  }
  if (c.output.vectors) {
    write_matrix_csv((dir / "eigenvectors.csv").string(), s.result.basis.vectors);
    outputs.push_back("eigenvectors.csv");
  }
}

// ---------------------------------------------------------------------------

const std::array<std::array<int, 3>, 8> kPalette{{{230, 25, 75},
                                                   {60, 180, 75},
                                                   {0, 130, 200},
                                                   {255, 225, 25},
                                                   {145, 30, 180},
                                                   {245, 130, 48},
                                                   {70, 240, 240},
                                                   {128, 128, 128}}};

std::array<int, 3> class_color(const RunConfig& c, int cls) {
  const auto i = static_cast<std::size_t>(cls - 1);
  if (i < c.input.label_colors.size()) return c.input.label_colors[i];
  return kPalette[i % kPalette.size()];
}

// Class ids of a label image by exact color match; 0 where no color matches.
VectorXi decode_label_image(const Image& img, const std::vector<std::array<int, 3>>& colors) {
  VectorXi ids = VectorXi::Zero(img.pixels());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < colors.size(); ++c)
        if (img.at(x, y, 0) == colors[c][0] && img.at(x, y, 1) == colors[c][1] &&
            img.at(x, y, 2) == colors[c][2]) {
          ids(static_cast<Index>(y) * img.width + x) = static_cast<int>(c) + 1;
          break;
        }
  return ids;
}

Labels image_labels(const RunConfig& c, const std::vector<Image>& images, const ImageFeatures& f) {
  const auto& in = c.input;
  if (in.label_images.empty()) return labels_from_config(c, f.rgb.X.rows());
  if (in.label_colors.empty())
    throw ConfigError("input.label_colors is required with input.label_images");
  if (in.label_images.size() > images.size())
    throw ConfigError("more label images than images");
  Labels l;
  l.classes = static_cast<int>(in.label_colors.size());
  VectorXi map = VectorXi::Zero(f.rgb.X.rows());
  for (std::size_t i = 0; i < in.label_images.size(); ++i) {
    const Image li = read_png(in.label_images[i]);
    if (li.width != images[i].width || li.height != images[i].height)
      throw InvalidArgument("label image '" + in.label_images[i] + "' is " +
                            std::to_string(li.width) + "x" + std::to_string(li.height) +
                            ", image is " + std::to_string(images[i].width) + "x" +
                            std::to_string(images[i].height));
    map.segment(f.offsets[i], li.pixels()) = decode_label_image(li, in.label_colors);
  }
  if (in.label_fraction > 0.0) {
    // The label images are complete ground truth; labels are sampled from them.
    for (Index i = 0; i < map.size(); ++i)
      if (map(i) == 0)
        throw InvalidArgument("pixel " + std::to_string(i) +
                              " matches no label color; sampling needs a complete label map");
    l.truth = map;
    l.known = sample_label_ids(map, l.classes, in.label_fraction, c.seed);
  } else {
    l.known = map;
    if (!in.truth.empty()) {
      l.truth = read_label_csv(in.truth);
      if (l.truth.size() != map.size()) throw InvalidArgument("input.truth length differs from pixel count");
    }
  }
  return l;
}

void write_segmentation(const fs::path& dir, const RunConfig& c, const std::vector<Image>& images,
                        const ImageFeatures& f, const VectorXi& predicted, int classes,
                        Json& outputs) {
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int w = images[i].width, h = images[i].height;
    const Index off = f.offsets[i];
    const std::string stem = std::to_string(i) + "_" + fs::path(c.input.images[i]).stem().string();
    Image composite{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
    for (Index p = 0; p < images[i].pixels(); ++p) {
      const auto col = class_color(c, predicted(off + p));
      for (int ch = 0; ch < 3; ++ch)
        composite.rgb[static_cast<std::size_t>(p) * 3 + ch] = static_cast<std::uint8_t>(col[ch]);
    }
    const std::string name = "segmentation_" + stem + ".png";
    write_png((dir / name).string(), composite);
    outputs.push_back(name);
    if (!c.output.masks) continue;
    for (int cls = 1; cls <= classes; ++cls) {
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h);
      for (Index p = 0; p < images[i].pixels(); ++p)
        mask[static_cast<std::size_t>(p)] = predicted(off + p) == cls ? 255 : 0;
      const std::string mname = "mask_" + stem + "_class" + std::to_string(cls) + ".png";
      write_png_gray((dir / mname).string(), w, h, mask);
      outputs.push_back(mname);
    }
  }
}

Json header(const char* command, const RunConfig& c) {
  Json r;
  r["command"] = command;
  r["seed"] = c.seed;
  return r;
}

}  // namespace

Json cmd_classify(const RunConfig& c) {
  Stopwatch sw;
  Json report = header("classify", c);
  const fs::path dir = stage("output", [&] { return output_dir(c); });
  Json layers = Json::array();
  const MultilayerGraph graph = stage("graph", [&] { return build_graph(c, layers); });
  const double graph_seconds = sw.lap();
  const Labels labels = stage("labels", [&] { return labels_from_config(c, graph.size()); });
  const Solved s = solve(graph, labels, c);

  Json outputs = Json::array();
  stage("output", [&] { write_solution(dir, c, s, labels.classes, outputs); });
  report["n"] = graph.size();
  report["layers"] = layers;
  report["classes"] = labels.classes;
  fill_solution(report, s, labels);
  report["timings"] = {{"graph", graph_seconds},
                       {"eigensolver", s.eig_seconds},
                       {"allen_cahn", s.ac_seconds},
                       {"total", sw.total()}};
  report["outputs"] = outputs;
  report["config"] = to_json(c);
  stage("output", [&] { write_report(dir, report); });
  return report;
}

Json cmd_segment_image(const RunConfig& c) {
  Stopwatch sw;
  Json report = header("segment-image", c);
  const fs::path dir = stage("output", [&] { return output_dir(c); });
  if (c.input.images.empty()) throw ConfigError("input.images is required");
  const std::vector<Image> images = stage("read images", [&] {
    std::vector<Image> out;
    for (const auto& p : c.input.images) out.push_back(read_png(p));
    return out;
  });
  const ImageFeatures f = image_to_features(images);
  Json layers = Json::array();
  const MultilayerGraph graph = stage("graph", [&] {
    FeatureMatrix all;
    const Index n = f.rgb.X.rows();
    all.X.resize(n, 5);
    all.X << f.rgb.X, f.xy.X;
    all.names = {"r", "g", "b", "x", "y"};
    RunConfig g = c;
    if (g.groups.empty()) {
      GroupConfig rgb;
      rgb.columns = {0, 1, 2};
      rgb.sigma = c.image.sigma_rgb;
      rgb.sigma_box = c.image.sigma_rgb_box;
      GroupConfig xy;
      xy.columns = {3, 4};
      xy.sigma = c.image.sigma_xy;
      xy.sigma_box = c.image.sigma_xy_box;
      xy.per_component = c.image.separate_components;
      g.groups = {rgb, xy};
    }
    GroupingSpec spec = grouping_from_config(g, all.X, layers);
    spec.component_offsets = f.offsets;
    return feature_group(all, spec);
  });
  const double graph_seconds = sw.lap();
  const Labels labels = stage("labels", [&] { return image_labels(c, images, f); });
  const Solved s = solve(graph, labels, c);

  Json outputs = Json::array();
  stage("output", [&] {
    write_solution(dir, c, s, labels.classes, outputs);
    write_segmentation(dir, c, images, f, s.result.predicted, labels.classes, outputs);
  });
  report["n"] = graph.size();
  Json shapes = Json::array();
  for (const auto& img : images) shapes.push_back({{"width", img.width}, {"height", img.height}});
  report["images"] = shapes;
  report["layers"] = layers;
  report["classes"] = labels.classes;
  fill_solution(report, s, labels);
  report["timings"] = {{"graph", graph_seconds},
                       {"eigensolver", s.eig_seconds},
                       {"allen_cahn", s.ac_seconds},
                       {"total", sw.total()}};
  report["outputs"] = outputs;
  report["config"] = to_json(c);
  stage("output", [&] { write_report(dir, report); });
  return report;
}

Json cmd_sbm_bench(const RunConfig& c) {
  Stopwatch sw;
  Json report = header("sbm-bench", c);
  const fs::path dir = stage("output", [&] { return output_dir(c); });
  const auto rows = stage("sbm bench", [&] { return run_sbm_bench(c.bench.sbm); });
  const std::string table = format_sbm_table(rows);

  std::string csv = "variant,p,runs,mean_percent,std_percent,mean_unlabeled_percent,failures\n";
  Json jrows = Json::array();
  for (const auto& r : rows) {
    csv += r.variant + "," + num(r.p) + "," + std::to_string(r.runs) + "," + num(r.mean) + "," +
           num(r.std) + "," + num(r.mean_unlabeled) + "," + std::to_string(r.failures) + "\n";
    jrows.push_back({{"variant", r.variant},
                     {"p", r.p},
                     {"runs", r.runs},
                     {"mean_percent", r.mean},
                     {"std_percent", r.std},
                     {"mean_unlabeled_percent", r.mean_unlabeled},
                     {"failures", r.failures}});
  }
  stage("output", [&] {
    write_text(dir / "sbm_bench.csv", csv);
    write_text(dir / "sbm_bench.txt", table);
  });
  std::cout << table;
  report["rows"] = jrows;
  report["timings"] = {{"total", sw.total()}};
  report["outputs"] = {"sbm_bench.csv", "sbm_bench.txt"};
  report["config"] = to_json(c);
  stage("output", [&] { write_report(dir, report); });
  return report;
}

Json cmd_fastsum_bench(const RunConfig& c) {
  Stopwatch sw;
  Json report = header("fastsum-bench", c);
  const fs::path dir = stage("output", [&] { return output_dir(c); });
  const auto rows = stage("fastsum bench", [&] { return run_fastsum_bench(c.bench.fastsum); });
  const std::string table = format_fastsum_table(rows);

  std::string csv =
      "dim,n,sigma,plan_seconds,fast_seconds,direct_seconds,rel_error,fast_ratio,direct_ratio\n";
  Json jrows = Json::array();
  for (const auto& r : rows) {
    csv += std::to_string(r.dim) + "," + std::to_string(r.n) + "," + num(r.sigma) + "," +
           num(r.plan_seconds) + "," + num(r.fast_seconds) + "," + num(r.direct_seconds) + "," +
           num(r.rel_error) + "," + num(r.fast_ratio) + "," + num(r.direct_ratio) + "\n";
    jrows.push_back({{"dim", r.dim},
                     {"n", r.n},
                     {"sigma", r.sigma},
                     {"plan_seconds", r.plan_seconds},
                     {"fast_seconds", r.fast_seconds},
                     {"direct_seconds", r.direct_seconds},
                     {"rel_error", r.rel_error},
                     {"fast_ratio", r.fast_ratio},
                     {"direct_ratio", r.direct_ratio}});
  }
  stage("output", [&] {
    write_text(dir / "fastsum_bench.csv", csv);
    write_text(dir / "fastsum_bench.txt", table);
  });
  std::cout << table;
  report["rows"] = jrows;
  report["timings"] = {{"total", sw.total()}};
  report["outputs"] = {"fastsum_bench.csv", "fastsum_bench.txt"};
  report["config"] = to_json(c);
  stage("output", [&] { write_report(dir, report); });
  return report;
}

Json cmd_eig(const RunConfig& c) {
  Stopwatch sw;
  Json report = header("eig", c);
  const fs::path dir = stage("output", [&] { return output_dir(c); });
  Json layers = Json::array();
  const MultilayerGraph graph = stage("graph", [&] { return build_graph(c, layers); });
  const double graph_seconds = sw.lap();
  const SpectralBasis basis =
      stage("eigensolver", [&] { return power_mean_eigs(graph, c.power, c.k, c.eig); });
  const double eig_seconds = sw.lap();

  Json outputs = Json::array();
  stage("output", [&] {
    MatrixXd values(basis.values.size(), 2);
    for (Index i = 0; i < basis.values.size(); ++i) values.row(i) << static_cast<double>(i), basis.values(i);
    write_matrix_csv((dir / "eigenvalues.csv").string(), values, {"index", "eigenvalue"});
    outputs.push_back("eigenvalues.csv");
    if (c.output.vectors) {
      write_matrix_csv((dir / "eigenvectors.csv").string(), basis.vectors);
      outputs.push_back("eigenvectors.csv");
    }
  });
  report["n"] = graph.size();
  report["layers"] = layers;
  report["p"] = c.power.p;
  report["delta"] = c.power.shift();
  report["eigenvalues"] = vector_json(basis.values);
  report["matvecs"] = basis.matvecs;
  report["timings"] = {{"graph", graph_seconds}, {"eigensolver", eig_seconds}, {"total", sw.total()}};
  report["outputs"] = outputs;
  report["config"] = to_json(c);
  stage("output", [&] { write_report(dir, report); });
  return report;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  return 1;
}

}  // namespace mlac::cli
