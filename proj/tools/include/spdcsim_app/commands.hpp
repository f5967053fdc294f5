#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdcsim/fitting.hpp"
#include "spdcsim/polarization.hpp"
#include "spdcsim_app/config.hpp"

namespace spdcsim::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitConfig = 2,
  kExitDegenerateVernier = 3,
};

enum class OutputFormat { Csv, Json };

struct RunOptions {
  ExperimentConfig config;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::Json;
  std::optional<double> duration_s;         // simulate
  std::optional<std::filesystem::path> fit_csv;    // car: `power_mW,car` points to fit
  std::optional<std::filesystem::path> counts_csv;  // tomo: measured counts instead of simulated ones
};

/// Overrides every seed in `config` with `seed`.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

/// Network output with its coherences scaled by the configured coherence.
polarization::TwoPhotonState model_state(const ExperimentConfig& config);

struct ReportRow {
  std::string quantity;
  std::string unit;
  double computed = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string relation;
  bool pass = false;
};

/// Tomography counts scaled so the bootstrapped sigma of S lands near the
/// configured target, then (S - 2) / sigma.
struct ChshSignificance {
  double n_per_setting = 0.0;
  double s = 0.0;
  double sigma = 0.0;
  double significance = 0.0;
};

ChshSignificance chsh_significance(const ExperimentConfig& config);

std::vector<ReportRow> build_report(const ExperimentConfig& config);

nlohmann::ordered_json fit_to_json(const fitting::FitResult& fit);

// Each command writes its outputs under options.out_dir and returns an ExitCode.
int run_cavity(const RunOptions& options, std::ostream& log);
int run_biphoton(const RunOptions& options, std::ostream& log);
int run_car(const RunOptions& options, std::ostream& log);
int run_simulate(const RunOptions& options, std::ostream& log);
int run_interference(const RunOptions& options, std::ostream& log);
int run_chsh(const RunOptions& options, std::ostream& log);
int run_tomo(const RunOptions& options, std::ostream& log);
int run_report(const RunOptions& options, std::ostream& log);

}  // namespace spdcsim::app
