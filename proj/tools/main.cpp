#include "mlac/cli/commands.hpp"
#include "mlac/log.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using mlac::cli::Json;

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mlac::IoError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw mlac::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer graph classification with power mean Laplacians and Allen-Cahn"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads for benchmarks")->check(CLI::PositiveNumber);

  using Command = Json (*)(const mlac::cli::RunConfig&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands{
      {"classify", "classify nodes of a feature or edge-list graph", mlac::cli::cmd_classify},
      {"segment-image", "segment PNG images from partial labels", mlac::cli::cmd_segment_image},
      {"sbm-bench", "misclassification table over random stochastic block models",
       mlac::cli::cmd_sbm_bench},
      {"fastsum-bench", "accuracy and runtime of the NFFT fast summation",
       mlac::cli::cmd_fastsum_bench},
      {"eig", "smallest eigenpairs of the power mean Laplacian", mlac::cli::cmd_eig},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; malformed command lines are config errors.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Json j = config_path.empty() ? Json::object() : read_json(config_path);
    if (!j.is_object()) throw mlac::ConfigError("config file must hold a JSON object");
    if (seed) j["seed"] = *seed;
    if (threads) j["threads"] = *threads;
    if (out) {
      if (!j.contains("output") || j["output"].is_null()) j["output"] = Json::object();
      j["output"]["dir"] = *out;
    }
    const mlac::cli::RunConfig config = mlac::cli::parse_config(j);
    for (const auto& [name, help, fn] : commands) {
      if (!app.got_subcommand(name)) continue;
      const Json report = fn(config);
      mlac::log::info("wrote ", config.output.dir, "/report.json");
      if (report.contains("accuracy") && !report["accuracy"].is_null())
        std::cout << "accuracy " << report["accuracy"].get<double>() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "mlac: " << e.what() << "\n";
    return mlac::cli::exit_code(e);
  }
  return 0;
}
