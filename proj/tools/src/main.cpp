#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "spdcsim/cavity.hpp"
#include "spdcsim_app/commands.hpp"
#include "spdcsim_app/config.hpp"

namespace {

using namespace spdcsim::app;

using Runner = int (*)(const RunOptions&, std::ostream&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity-enhanced SPDC entangled-photon source simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "json";
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every random stream (overrides the config)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--format", format, "Summary format")->check(CLI::IsMember({"csv", "json"}));

  RunOptions options;
  std::optional<double> duration;
  std::string fit_csv, counts_csv;

  const std::map<std::string, std::pair<std::string, Runner>> commands = {
      {"cavity", {"Mode combs, cluster spacings and single-mode margins", run_cavity}},
      {"biphoton", {"Biphoton linewidth, correlation time and spectral overlap", run_biphoton}},
      {"car", {"CAR model curve and optional fit to measured points", run_car}},
      {"simulate", {"Monte Carlo time tags, coincidence histogram and CAR", run_simulate}},
      {"interference", {"Two-photon interference curves and visibilities", run_interference}},
      {"chsh", {"CHSH S at canonical and optimal settings with bootstrap error", run_chsh}},
      {"tomo", {"Tomography counts, MLE reconstruction and fidelity", run_tomo}},
      {"report", {"Computed values against reference values", run_report}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) subs[name] = app.add_subcommand(name, entry.first);
  subs["simulate"]->add_option("--duration", duration, "Simulated seconds (overrides the config)");
  subs["car"]->add_option("--fit", fit_csv, "CSV of `power_mW,car` points to fit")->check(CLI::ExistingFile);
  subs["tomo"]->add_option("--input", counts_csv, "Tomography counts CSV")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    options.config = config_path.empty() ? default_config() : load_config(config_path);
    if (seed) apply_seed(options.config, *seed);
    options.out_dir = out_dir;
    options.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
    options.duration_s = duration;
    if (!fit_csv.empty()) options.fit_csv = fit_csv;
    if (!counts_csv.empty()) options.counts_csv = counts_csv;

    for (const auto& [name, entry] : commands) {
      if (subs[name]->parsed()) return entry.second(options, std::cout);
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const spdcsim::cavity::DegenerateVernier& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerateVernier;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
