#include "mlac/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace mlac::cli {

namespace {

class Section {
 public:
  Section(const Json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "configuration" : path_, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) fail(where(it.key()), "unknown key");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const char* key) const { return j_.at(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) fail(where(key), "expected a number");
    return v.get<double>();
  }
  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }
  long long integer(const char* key, long long fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) fail(where(key), "expected an integer");
    return v.get<long long>();
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(where(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }
  std::vector<std::string> strings(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const Json& v = j_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) fail(where(key), "expected a string or a list of strings");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) fail(where(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
  template <class T>
  std::vector<T> numbers(const char* key, std::vector<T> fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    std::vector<T> out;
    auto take = [&](const Json& x, const std::string& at) {
      if (std::is_integral_v<T> ? !x.is_number_integer() : !x.is_number())
        fail(at, std::is_integral_v<T> ? "expected an integer" : "expected a number");
      out.push_back(x.get<T>());
    };
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) take(v[i], where(key) + "[" + std::to_string(i) + "]");
    } else {
      take(v, where(key));
    }
    return out;
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config " + where + ": " + what);
  }

 private:
  const Json& j_;
  std::string path_;
};

template <class F>
auto convert(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    Section::fail(where, e.what());
  }
}

const Json& child(const Json& j, const char* key) {
  static const Json empty = Json::object();
  if (j.contains(key) && !j.at(key).is_null()) return j.at(key);
  return empty;
}

void require_positive(double x, const std::string& where) {
  if (!(x > 0.0)) Section::fail(where, "must be positive");
}

SbmExperiment parse_experiment(const std::string& s, const std::string& where) {
  if (s == "noisy-layer") return SbmExperiment::NoisyLayer;
  if (s == "complementary") return SbmExperiment::Complementary;
  Section::fail(where, "expected \"noisy-layer\" or \"complementary\"");
}

}  // namespace

RunConfig parse_config(const Json& j) {
  RunConfig c;
  const Section top(j, "", {"seed", "threads", "input", "grouping", "image", "power", "fastsum",
                            "eig", "pksm", "ac", "bench", "output"});
  const long long seed = top.integer("seed", 1);
  if (seed < 0) Section::fail("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.threads = static_cast<int>(top.integer("threads", 1));
  if (c.threads < 1) Section::fail("threads", "must be >= 1");

  {
    const Section s(child(j, "input"), "input",
                    {"features", "layers", "nodes", "labels", "truth", "label_fraction", "classes",
                     "images", "label_images", "label_colors"});
    c.input.features = s.string("features", "");
    c.input.layers = s.strings("layers");
    c.input.nodes = s.integer("nodes", 0);
    c.input.labels = s.string("labels", "");
    c.input.truth = s.string("truth", "");
    c.input.label_fraction = s.number("label_fraction", 0.0);
    if (c.input.label_fraction < 0.0 || c.input.label_fraction > 1.0)
      Section::fail("input.label_fraction", "must lie in [0, 1]");
    c.input.classes = static_cast<int>(s.integer("classes", 0));
    c.input.images = s.strings("images");
    c.input.label_images = s.strings("label_images");
    if (s.has("label_colors")) {
      const Json& v = s.raw("label_colors");
      if (!v.is_array()) Section::fail("input.label_colors", "expected a list of [r, g, b]");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = "input.label_colors[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != 3) Section::fail(at, "expected [r, g, b]");
        std::array<int, 3> rgb{};
        for (int ch = 0; ch < 3; ++ch) {
          if (!v[i][ch].is_number_integer() || v[i][ch].get<int>() < 0 || v[i][ch].get<int>() > 255)
            Section::fail(at, "channels must be integers in 0..255");
          rgb[ch] = v[i][ch].get<int>();
        }
        c.input.label_colors.push_back(rgb);
      }
    }
  }
  {
    const Section s(child(j, "grouping"), "grouping", {"groups"});
    if (s.has("groups")) {
      const Json& g = s.raw("groups");
      if (!g.is_array()) Section::fail("grouping.groups", "expected a list");
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::string at = "grouping.groups[" + std::to_string(i) + "]";
        const Section gs(g[i], at,
                         {"columns", "kernel", "sigma", "sigma_box", "scaling", "per_component"});
        GroupConfig gc;
        for (long long col : gs.numbers<long long>("columns", {})) gc.columns.push_back(col);
        if (gc.columns.empty()) Section::fail(at + ".columns", "must list at least one column");
        gc.kernel = convert(at + ".kernel",
                            [&] { return parse_kernel_family(gs.string("kernel", "gaussian")); });
        gc.sigma = gs.optional_number("sigma");
        if (gc.sigma) require_positive(*gc.sigma, at + ".sigma");
        gc.sigma_box = gs.number("sigma_box", 1.0);
        require_positive(gc.sigma_box, at + ".sigma_box");
        gc.scaling = convert(at + ".scaling",
                             [&] { return parse_scaling_mode(gs.string("scaling", "fastsum")); });
        gc.per_component = gs.boolean("per_component", false);
        c.groups.push_back(gc);
      }
    }
  }
  {
    const Section s(child(j, "image"), "image",
                    {"sigma_rgb", "sigma_xy", "sigma_rgb_box", "sigma_xy_box", "separate_components"});
    c.image.sigma_rgb = s.optional_number("sigma_rgb");
    c.image.sigma_xy = s.optional_number("sigma_xy");
    if (c.image.sigma_rgb) require_positive(*c.image.sigma_rgb, "image.sigma_rgb");
    if (c.image.sigma_xy) require_positive(*c.image.sigma_xy, "image.sigma_xy");
    c.image.sigma_rgb_box = s.number("sigma_rgb_box", 1.0);
    c.image.sigma_xy_box = s.number("sigma_xy_box", 4.0);
    require_positive(c.image.sigma_rgb_box, "image.sigma_rgb_box");
    require_positive(c.image.sigma_xy_box, "image.sigma_xy_box");
    c.image.separate_components = s.boolean("separate_components", true);
  }
  {
    const Section s(child(j, "power"), "power", {"p", "delta", "dense_limit"});
    c.power.p = s.number("p", 1.0);
    c.power.delta = s.optional_number("delta");
    c.power.dense_limit = s.integer("dense_limit", 5000);
    convert("power", [&] {
      c.power.validate();
      return 0;
    });
  }
  {
    const Section s(child(j, "fastsum"), "fastsum", {"N", "m", "eps_b", "p", "oversampling"});
    c.fastsum.bandwidth = static_cast<int>(s.integer("N", 64));
    c.fastsum.window_cutoff = static_cast<int>(s.integer("m", 5));
    c.fastsum.boundary_eps = s.number("eps_b", 1.0 / 16.0);
    c.fastsum.smoothness = static_cast<int>(s.integer("p", 5));
    c.fastsum.oversampling = static_cast<int>(s.integer("oversampling", 2));
    if (c.fastsum.bandwidth < 8 || c.fastsum.bandwidth % 2 != 0)
      Section::fail("fastsum.N", "must be an even integer >= 8");
    if (c.fastsum.window_cutoff < 2) Section::fail("fastsum.m", "must be >= 2");
    if (!(c.fastsum.boundary_eps > 0.0 && c.fastsum.boundary_eps < 0.5))
      Section::fail("fastsum.eps_b", "must lie in (0, 1/2)");
    if (c.fastsum.smoothness < 1) Section::fail("fastsum.p", "must be >= 1");
    if (c.fastsum.oversampling < 2) Section::fail("fastsum.oversampling", "must be >= 2");
  }
  {
    const Section s(child(j, "eig"), "eig", {"k", "tol", "max_subspace", "max_restarts"});
    c.k = s.integer("k", 10);
    if (c.k < 1) Section::fail("eig.k", "must be >= 1");
    c.eig.tol = s.number("tol", 1e-8);
    require_positive(c.eig.tol, "eig.tol");
    c.eig.max_subspace = static_cast<int>(s.integer("max_subspace", 0));
    c.eig.max_restarts = static_cast<int>(s.integer("max_restarts", 500));
    if (c.eig.max_subspace < 0) Section::fail("eig.max_subspace", "must be >= 0");
    if (c.eig.max_restarts < 0) Section::fail("eig.max_restarts", "must be >= 0");
  }
  {
    const Section s(child(j, "pksm"), "pksm", {"dim", "tol"});
    c.power.pksm.krylov_dim = static_cast<int>(s.integer("dim", 50));
    c.power.pksm.tol = s.number("tol", 1e-8);
    if (c.power.pksm.krylov_dim < 1) Section::fail("pksm.dim", "must be >= 1");
    if (!(c.power.pksm.tol >= 0.0)) Section::fail("pksm.tol", "must be >= 0");
  }
  {
    const Section s(child(j, "ac"), "ac", {"epsilon", "omega0", "c", "dt", "tol", "max_iter"});
    c.ac.epsilon = s.number("epsilon", 5e-3);
    c.ac.omega0 = s.number("omega0", 1000.0);
    c.ac.c = s.optional_number("c");
    c.ac.dt = s.number("dt", 0.01);
    c.ac.tolerance = s.number("tol", 1e-6);
    c.ac.max_iter = static_cast<int>(s.integer("max_iter", 300));
    convert("ac", [&] {
      c.ac.validate();
      return 0;
    });
  }
  {
    const Section s(child(j, "bench"), "bench", {"sbm", "fastsum"});
    const Section sb(child(child(j, "bench"), "sbm"), "bench.sbm",
                     {"experiment", "repetitions", "p", "cluster_size", "p_in", "p_out",
                      "label_fraction", "k", "single_layers", "layer_pairs"});
    auto& b = c.bench.sbm;
    b.experiment = parse_experiment(sb.string("experiment", "noisy-layer"), "bench.sbm.experiment");
    b.repetitions = static_cast<int>(sb.integer("repetitions", 100));
    if (b.repetitions < 1) Section::fail("bench.sbm.repetitions", "must be >= 1");
    b.powers = sb.numbers<double>("p", {});
    for (double p : b.powers)
      if (p == 0.0 || !std::isfinite(p)) Section::fail("bench.sbm.p", "powers must be finite and nonzero");
    b.cluster_size = static_cast<int>(sb.integer("cluster_size", 50));
    if (b.cluster_size < 1) Section::fail("bench.sbm.cluster_size", "must be >= 1");
    b.p_in = sb.number("p_in", 0.7);
    b.p_out = sb.number("p_out", 0.3);
    for (auto [name, v] : {std::pair{"bench.sbm.p_in", b.p_in}, std::pair{"bench.sbm.p_out", b.p_out}})
      if (!(v >= 0.0 && v <= 1.0)) Section::fail(name, "must lie in [0, 1]");
    b.label_fraction = sb.number("label_fraction", 0.04);
    if (!(b.label_fraction > 0.0 && b.label_fraction <= 1.0))
      Section::fail("bench.sbm.label_fraction", "must lie in (0, 1]");
    b.k = sb.integer("k", 0);
    if (b.k < 0) Section::fail("bench.sbm.k", "must be >= 0");
    b.single_layers = sb.boolean("single_layers", true);
    b.layer_pairs = sb.boolean("layer_pairs", true);

    const Section sf(child(child(j, "bench"), "fastsum"), "bench.fastsum",
                     {"sizes", "dims", "sigma", "kernel", "repetitions", "direct_limit"});
    auto& f = c.bench.fastsum;
    const auto sizes = sf.numbers<long long>("sizes", {1000, 2000, 4000, 8000});
    f.sizes.assign(sizes.begin(), sizes.end());
    for (auto n : f.sizes)
      if (n < 1) Section::fail("bench.fastsum.sizes", "sizes must be >= 1");
    f.dims = sf.numbers<int>("dims", {2});
    for (int d : f.dims)
      if (d < 1 || d > 3) Section::fail("bench.fastsum.dims", "dimensions must be 1, 2, or 3");
    f.sigmas = sf.numbers<double>("sigma", {0.3});
    for (double sg : f.sigmas) require_positive(sg, "bench.fastsum.sigma");
    f.kernel = convert("bench.fastsum.kernel",
                       [&] { return parse_kernel_family(sf.string("kernel", "gaussian")); });
    f.repetitions = static_cast<int>(sf.integer("repetitions", 5));
    if (f.repetitions < 1) Section::fail("bench.fastsum.repetitions", "must be >= 1");
    f.direct_limit = sf.integer("direct_limit", 200000);
  }
  {
    const Section s(child(j, "output"), "output", {"dir", "scores", "vectors", "masks"});
    c.output.dir = s.string("dir", "out");
    c.output.scores = s.boolean("scores", true);
    c.output.vectors = s.boolean("vectors", false);
    c.output.masks = s.boolean("masks", true);
  }

  // Sections that feed other modules share the top-level knobs.
  c.bench.sbm.ac = c.ac;
  c.bench.sbm.pksm = c.power.pksm;
  c.bench.sbm.eig = c.eig;
  c.bench.sbm.seed = c.seed;
  c.bench.sbm.threads = c.threads;
  c.bench.fastsum.params = c.fastsum;
  c.bench.fastsum.seed = c.seed;
  c.eig.seed = c.seed;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

namespace {

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

}  // namespace

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  Json colors = Json::array();
  for (const auto& rgb : c.input.label_colors) colors.push_back({rgb[0], rgb[1], rgb[2]});
  j["input"] = {{"features", c.input.features},     {"layers", c.input.layers},
                {"nodes", c.input.nodes},           {"labels", c.input.labels},
                {"truth", c.input.truth},           {"label_fraction", c.input.label_fraction},
                {"classes", c.input.classes},       {"images", c.input.images},
                {"label_images", c.input.label_images}, {"label_colors", colors}};
  Json groups = Json::array();
  for (const auto& g : c.groups)
    groups.push_back({{"columns", g.columns},
                      {"kernel", std::string(to_string(g.kernel))},
                      {"sigma", optional_json(g.sigma)},
                      {"sigma_box", g.sigma_box},
                      {"scaling", std::string(to_string(g.scaling))},
                      {"per_component", g.per_component}});
  j["grouping"] = {{"groups", groups}};
  j["image"] = {{"sigma_rgb", optional_json(c.image.sigma_rgb)},
                {"sigma_xy", optional_json(c.image.sigma_xy)},
                {"sigma_rgb_box", c.image.sigma_rgb_box},
                {"sigma_xy_box", c.image.sigma_xy_box},
                {"separate_components", c.image.separate_components}};
  j["power"] = {{"p", c.power.p}, {"delta", optional_json(c.power.delta)},
                {"dense_limit", c.power.dense_limit}};
  j["fastsum"] = {{"N", c.fastsum.bandwidth},      {"m", c.fastsum.window_cutoff},
                  {"eps_b", c.fastsum.boundary_eps}, {"p", c.fastsum.smoothness},
                  {"oversampling", c.fastsum.oversampling}};
  j["eig"] = {{"k", c.k}, {"tol", c.eig.tol}, {"max_subspace", c.eig.max_subspace},
              {"max_restarts", c.eig.max_restarts}};
  j["pksm"] = {{"dim", c.power.pksm.krylov_dim}, {"tol", c.power.pksm.tol}};
  j["ac"] = {{"epsilon", c.ac.epsilon}, {"omega0", c.ac.omega0}, {"c", optional_json(c.ac.c)},
             {"dt", c.ac.dt},           {"tol", c.ac.tolerance}, {"max_iter", c.ac.max_iter}};
  const auto& b = c.bench.sbm;
  const auto& f = c.bench.fastsum;
  j["bench"] = {
      {"sbm",
       {{"experiment", b.experiment == SbmExperiment::NoisyLayer ? "noisy-layer" : "complementary"},
        {"repetitions", b.repetitions},
        {"p", b.powers},
        {"cluster_size", b.cluster_size},
        {"p_in", b.p_in},
        {"p_out", b.p_out},
        {"label_fraction", b.label_fraction},
        {"k", b.k},
        {"single_layers", b.single_layers},
        {"layer_pairs", b.layer_pairs}}},
      {"fastsum",
       {{"sizes", f.sizes},
        {"dims", f.dims},
        {"sigma", f.sigmas},
        {"kernel", std::string(to_string(f.kernel))},
        {"repetitions", f.repetitions},
        {"direct_limit", f.direct_limit}}}};
  j["output"] = {{"dir", c.output.dir}, {"scores", c.output.scores},
                 {"vectors", c.output.vectors}, {"masks", c.output.masks}};
  return j;
}

}  // namespace mlac::cli
