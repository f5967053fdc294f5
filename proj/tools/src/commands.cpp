#include "spdcsim_app/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spdcsim/biphoton.hpp"
#include "spdcsim/cavity.hpp"
#include "spdcsim/measurement.hpp"
#include "spdcsim/photostats.hpp"
#include "spdcsim/timetag_io.hpp"
#include "spdcsim/tomography.hpp"

namespace spdcsim::app {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON cannot hold inf or nan; write them as null.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ordered_json seeds_json(const Seeds& s) {
  return {{"simulate", s.simulate}, {"tomography", s.tomography}, {"bootstrap", s.bootstrap}};
}

void flatten(const ordered_json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_string()) {
    out << prefix << ',' << j.get<std::string>() << '\n';
  } else if (j.is_number_float()) {
    out << prefix << ',' << format_double(j.get<double>()) << '\n';
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

// Writes `<command>.json` or `<command>.csv` and lists the data files written alongside.
class Output {
 public:
  Output(std::string command, const RunOptions& options, std::ostream& log)
      : command_(std::move(command)), options_(options), log_(log) {
    fs::create_directories(options_.out_dir);
  }

  fs::path path(const std::string& name) const { return options_.out_dir / name; }

  void file(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    files_.push_back(name);
  }

  void add_file(const std::string& name) { files_.push_back(name); }

  void json_file(const std::string& name, ordered_json body) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    for (auto& [k, v] : body.items()) j[k] = v;
    file(name, j.dump(2) + "\n");
  }

  ordered_json& results() { return results_; }

  /// Replaces the flattened key/value CSV summary.
  void csv_summary(std::string text) { csv_summary_ = std::move(text); }

  int finish() {
    const auto& c = options_.config;
    std::string summary_name;
    if (options_.format == OutputFormat::Json) {
      summary_name = command_ + ".json";
      ordered_json j;
      j["schema_version"] = kSchemaVersion;
      j["command"] = command_;
      j["seeds"] = seeds_json(c.seeds);
      j["results"] = results_;
      j["files"] = files_;
      j["config"] = to_json(c);
      write_text(path(summary_name), j.dump(2) + "\n");
    } else {
      summary_name = command_ + ".csv";
      if (csv_summary_) {
        write_text(path(summary_name), *csv_summary_);
        return report(summary_name);
      }
      std::ostringstream out;
      out << "key,value\n";
      flatten({{"schema_version", kSchemaVersion}, {"command", command_}}, "", out);
      flatten(seeds_json(c.seeds), "seeds", out);
      flatten(results_, "", out);
      write_text(path(summary_name), out.str());
    }
    return report(summary_name);
  }

 private:
  int report(const std::string& summary_name) {
    log_ << "wrote " << path(summary_name).string() << '\n';
    for (const auto& f : files_) log_ << "wrote " << path(f).string() << '\n';
    return kExitOk;
  }

  std::string command_;
  const RunOptions& options_;
  std::ostream& log_;
  ordered_json results_ = ordered_json::object();
  std::vector<std::string> files_;
  std::optional<std::string> csv_summary_;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

biphoton::BiphotonParams params_of(const cavity::CavitySpec& s) { return {s.fwhm_h_mhz, s.fwhm_v_mhz}; }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (auto& x : v) x = std::exp(x);
  return v;
}

double source_power_rate(const photostats::SourceRate& src) {
  return src.brightness_per_s_mw_mhz * src.bandwidth_mhz;  // pairs/s per mW
}

struct SimulationRun {
  photostats::TimeTagStream stream;
  photostats::DelayHistogram histogram;
  photostats::CarMeasurement car;
  double car_model = 0.0;
  fitting::FitResult g2_fit;
  bool g2_fit_ok = false;
  std::string g2_fit_error;
};

SimulationRun simulate(const ExperimentConfig& c, const photostats::SourceRate& src, double duration_s) {
  SimulationRun run;
  run.stream = photostats::simulate_timetags(src, params_of(c.ppktp0), c.detection, duration_s, c.seeds.simulate);
  run.histogram =
      photostats::coincidence_histogram(run.stream, c.simulation.histogram_range_ns, c.detection.bin_ps);
  run.car = photostats::car_from_stream(run.stream, c.detection, c.simulation.accidental_offset_ns,
                                        c.simulation.accidental_windows);
  run.car_model = photostats::car_model(photostats::pair_rate(src), c.detection);
  try {
    run.g2_fit = fitting::fit_exp_g2(run.histogram);
    run.g2_fit_ok = run.g2_fit.converged;
    if (!run.g2_fit_ok) run.g2_fit_error = run.g2_fit.diagnostics;
  } catch (const std::exception& e) {
    run.g2_fit_error = e.what();
  }
  return run;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

ordered_json rho_json(const polarization::DensityMatrix& rho) {
  return {{"basis", {"HH", "HV", "VH", "VV"}},
          {"real", matrix_json(rho.real())},
          {"imag", matrix_json(rho.imag())}};
}

ordered_json settings_json(const measurement::BellSettings& s) {
  return {{"a_deg", s.a}, {"a_prime_deg", s.a_prime}, {"b_deg", s.b}, {"b_prime_deg", s.b_prime}};
}

double chsh_canonical(const polarization::TwoPhotonState& state) {
  return measurement::chsh_S(state, measurement::BellSettings::canonical_phi_minus());
}

std::vector<double> beta_grid(const ExperimentConfig& c) { return linspace(0.0, 180.0, c.interference.points); }

double visibility(const polarization::TwoPhotonState& state, double alpha_deg, const std::vector<double>& grid) {
  return measurement::interference_curve(state, alpha_deg, grid).visibility;
}

// Pairs of (power_mW, CAR) from a two-column CSV with a header line.
void read_car_points(const fs::path& path, std::vector<double>& powers, std::vector<double>& cars) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      powers.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument("trailing text");
      cars.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected `power_mW,car`");
    }
  }
}

}  // namespace

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seeds.simulate = seed;
  config.seeds.tomography = seed;
  config.seeds.bootstrap = seed;
}

polarization::TwoPhotonState model_state(const ExperimentConfig& config) {
  const auto pure = polarization::propagate_network(config.effective_network(), config.pump_phase_rad);
  const double c = config.effective_coherence();
  polarization::DensityMatrix rho = pure.rho();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) rho(i, j) *= c;
    }
  }
  return polarization::TwoPhotonState(rho);
}

ordered_json fit_to_json(const fitting::FitResult& fit) {
  auto params = [](const std::vector<fitting::Parameter>& ps) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : ps) arr.push_back({{"name", p.name}, {"value", num(p.value)}, {"stderr", num(p.stderr_)}});
    return arr;
  };
  return {{"parameters", params(fit.parameters)},
          {"derived", params(fit.derived)},
          {"covariance", matrix_json(fit.covariance)},
          {"residual_norm", num(fit.residual_norm)},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"diagnostics", fit.diagnostics}};
}

ChshSignificance chsh_significance(const ExperimentConfig& config) {
  const auto state = model_state(config);
  const auto& t = config.tomography;

  // Noise-free counts, so S is the model value and only sigma_S carries
  // sampling noise. sigma_S scales as 1/sqrt(n); two rescalings settle n.
  ChshSignificance out;
  out.n_per_setting = t.n_per_setting;
  for (int step = 0; step < 3; ++step) {
    const auto rec = tomography::tomo_expected_counts(state, out.n_per_setting);
    out.sigma = tomography::bootstrap_errors(rec, t.bootstrap_resamples, chsh_canonical, config.seeds.bootstrap).std;
    out.s = chsh_canonical(tomography::tomo_mle(rec));
    if (step < 2) out.n_per_setting = std::round(out.n_per_setting * std::pow(out.sigma / t.chsh_sigma_target, 2));
  }
  out.significance = (out.s - 2.0) / out.sigma;
  return out;
}

std::vector<ReportRow> build_report(const ExperimentConfig& c) {
  const auto& tol = c.tolerances;
  std::vector<ReportRow> rows;
  auto close = [&](std::string q, std::string unit, double computed, double reference, double tolerance) {
    rows.push_back({std::move(q), std::move(unit), computed, reference, tolerance, "|computed - reference| <= tolerance",
                    std::abs(computed - reference) <= tolerance});
  };

  const double cs0 = cavity::cluster_spacing(c.ppktp0.fsr_h_ghz, c.ppktp0.fsr_v_ghz) * 1e-3;
  const double cs1 = cavity::cluster_spacing(c.ppktp1.fsr_h_ghz, c.ppktp1.fsr_v_ghz) * 1e-3;
  close("cluster spacing PPKTP0", "THz", cs0, 1.06, tol.cluster_spacing_rel * 1.06);
  close("cluster spacing PPKTP1", "THz", cs1, 1.26, tol.cluster_spacing_rel * 1.26);

  const auto bp0 = params_of(c.ppktp0);
  const auto bp1 = params_of(c.ppktp1);
  close("biphoton T_FWHM PPKTP0", "ns", biphoton::t_fwhm(bp0), 0.483, tol.t_fwhm_rel * 0.483);
  close("biphoton T_FWHM PPKTP1", "ns", biphoton::t_fwhm(bp1), 0.550, tol.t_fwhm_rel * 0.550);
  close("spectral overlap", "", biphoton::spectral_overlap(bp0, bp1), 0.88, tol.overlap_abs);

  const auto state = model_state(c);
  const auto grid = beta_grid(c);
  close("visibility 0 deg basis", "", visibility(state, 0.0, grid), 0.9997, tol.visibility_0_abs);
  close("visibility 45 deg basis", "", visibility(state, 45.0, grid), 0.8709, tol.visibility_45_abs);

  close("CHSH S canonical settings", "", chsh_canonical(state), 2.639, tol.chsh_abs);
  close("CHSH S optimal settings", "", measurement::chsh_max(state).s, 2.639, tol.chsh_abs);

  const double fid = tomography::fidelity(state, polarization::phi_minus());
  rows.push_back({"fidelity to Phi-minus (model upper bound)", "", fid, 0.907, tol.fidelity_abs,
                  "computed >= reference - tolerance", fid >= 0.907 - tol.fidelity_abs});

  photostats::SourceRate src = c.source;
  const auto car_run = simulate(c, src, c.simulation.duration_s);
  rows.push_back({"simulated CAR at source power", "", car_run.car.car, 6000.0, 0.0, "computed > reference",
                  car_run.car.car > 6000.0});
  const double three_sigma = 3.0 * car_run.car.car_sigma;
  rows.push_back({"simulated CAR vs model", "", car_run.car.car, car_run.car_model, three_sigma,
                  "|computed - reference| <= tolerance (3 sigma)",
                  std::abs(car_run.car.car - car_run.car_model) <= three_sigma});

  src.power_mw = c.simulation.g2_power_mw;
  const auto g2_run = simulate(c, src, c.simulation.g2_duration_s);
  const double g2_fwhm = g2_run.g2_fit_ok ? g2_run.g2_fit.value("t_fwhm_ns") : std::nan("");
  std::ostringstream range;
  range << "computed in [" << format_double(tol.g2_fit_low_ns) << ", " << format_double(tol.g2_fit_high_ns) << "]";
  rows.push_back({"fitted g2 T_FWHM PPKTP0", "ns", g2_fwhm, 0.502, 0.022, range.str(),
                  g2_fwhm >= tol.g2_fit_low_ns && g2_fwhm <= tol.g2_fit_high_ns});

  const auto sig = chsh_significance(c);
  close("CHSH violation (S - 2) / sigma_S", "sigma", sig.significance, 13.0, tol.significance_abs);
  return rows;
}

int run_cavity(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("cavity", options, log);
  ordered_json crystals = ordered_json::array();
  for (const auto* spec : {&c.ppktp0, &c.ppktp1}) {
    const std::string tag = lower(spec->name.empty() ? "crystal" : spec->name);
    // Throws DegenerateVernier for equal FSRs.
    const double spacing = cavity::cluster_spacing(spec->fsr_h_ghz, spec->fsr_v_ghz);

    for (const auto pol : {cavity::Polarization::H, cavity::Polarization::V}) {
      const auto comb = cavity::build_mode_comb(*spec, pol, c.cavity.mode_span_ghz);
      out.file("modes_" + tag + "_" + lower(cavity::to_string(pol)) + ".csv", comb.to_csv());
    }
    const auto clusters = cavity::build_cluster_comb(*spec, c.cavity.cluster_span_ghz);
    out.file("clusters_" + tag + ".csv", clusters.to_csv());
    const auto selected = cavity::dwdm_select(clusters, c.dwdm.center_offset_ghz, c.dwdm.width_ghz);
    out.file("dwdm_" + tag + ".csv", selected.to_csv());

    crystals.push_back({
        {"name", spec->name},
        {"cluster_spacing_ghz", spacing},
        {"single_mode_margin_ghz", cavity::single_mode_margin(*spec)},
        {"finesse_h", spec->fsr_h_ghz * 1e3 / spec->fwhm_h_mhz},
        {"finesse_v", spec->fsr_v_ghz * 1e3 / spec->fwhm_v_mhz},
        {"airy_fwhm_h_mhz", cavity::airy_fwhm_mhz(spec->fsr_h_ghz, spec->fwhm_h_mhz)},
        {"airy_fwhm_v_mhz", cavity::airy_fwhm_mhz(spec->fsr_v_ghz, spec->fwhm_v_mhz)},
        {"effective_index_h", cavity::effective_index(spec->length_mm, spec->fsr_h_ghz)},
        {"effective_index_v", cavity::effective_index(spec->length_mm, spec->fsr_v_ghz)},
        {"dwdm_cluster_count", selected.size()},
        {"resonant_pair_count", cavity::resonant_pairs(*spec, c.cavity.cluster_span_ghz).size()},
    });
  }
  out.results()["crystals"] = crystals;
  return out.finish();
}

int run_biphoton(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("biphoton", options, log);
  const auto bp0 = params_of(c.ppktp0);
  const auto bp1 = params_of(c.ppktp1);

  std::ostringstream csv;
  csv << "t_ns,g2_" << lower(c.ppktp0.name) << ",g2_" << lower(c.ppktp1.name) << '\n';
  for (int i = -200; i <= 200; ++i) {
    const double t = i * 0.01;
    csv << format_double(t) << ',' << format_double(biphoton::g2_model(t, bp0)) << ','
        << format_double(biphoton::g2_model(t, bp1)) << '\n';
  }
  out.file("biphoton_g2.csv", csv.str());

  ordered_json crystals = ordered_json::array();
  for (const auto* spec : {&c.ppktp0, &c.ppktp1}) {
    const auto bp = params_of(*spec);
    crystals.push_back({{"name", spec->name},
                        {"gamma_prime_mhz", biphoton::gamma_prime(bp)},
                        {"t_fwhm_ns", biphoton::t_fwhm(bp)}});
  }
  out.results()["crystals"] = crystals;
  out.results()["spectral_overlap"] = biphoton::spectral_overlap(bp0, bp1);
  out.results()["coherence_used"] = c.effective_coherence();
  return out.finish();
}

int run_car(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("car", options, log);
  const double per_mw = source_power_rate(c.source);

  std::ostringstream csv;
  csv << "power_mW,pair_rate_per_s,car\n";
  for (const double p : logspace(c.car_scan.power_min_mw, c.car_scan.power_max_mw, c.car_scan.points)) {
    csv << format_double(p) << ',' << format_double(per_mw * p) << ','
        << format_double(photostats::car_model(per_mw * p, c.detection)) << '\n';
  }
  out.file("car_curve.csv", csv.str());

  const double rate = photostats::pair_rate(c.source);
  const double r_opt = photostats::car_optimal_rate(c.detection);
  auto& r = out.results();
  r["pair_rate_per_s"] = rate;
  r["car"] = num(photostats::car_model(rate, c.detection));
  r["optimal_pair_rate_per_s"] = r_opt;
  r["optimal_power_mw"] = r_opt / per_mw;
  r["peak_car"] = num(photostats::car_model(r_opt, c.detection));

  if (options.fit_csv) {
    std::vector<double> powers, cars;
    read_car_points(*options.fit_csv, powers, cars);
    const auto fit = fitting::fit_car_curve(powers, cars, c.detection);
    out.json_file("car_fit.json", fit_to_json(fit));
    r["fit_converged"] = fit.converged;
  }
  return out.finish();
}

int run_simulate(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("simulate", options, log);
  const double duration = options.duration_s.value_or(c.simulation.duration_s);
  if (!(duration > 0.0)) throw ConfigError("--duration: must be positive");

  const auto run = simulate(c, c.source, duration);
  photostats::write_timetags(out.path("timetags.ttag"), run.stream);
  out.add_file("timetags.ttag");
  out.file("histogram.csv", run.histogram.to_csv());

  auto& r = out.results();
  r["duration_s"] = duration;
  r["power_mw"] = c.source.power_mw;
  r["events"] = run.stream.events.size();
  r["singles_signal"] = run.stream.count(0);
  r["singles_idler"] = run.stream.count(1);
  r["coincidences"] = run.car.coincidences;
  r["accidentals_per_window"] = run.car.accidentals;
  r["car"] = num(run.car.car);
  r["car_sigma"] = num(run.car.car_sigma);
  r["car_model"] = num(run.car_model);
  r["g2_fit_converged"] = run.g2_fit_ok;
  if (run.g2_fit_ok) {
    r["g2_t_fwhm_ns"] = run.g2_fit.value("t_fwhm_ns");
    r["g2_t_fwhm_stderr_ns"] = run.g2_fit.stderr_of("t_fwhm_ns");
  } else {
    r["g2_fit_error"] = run.g2_fit_error;
  }
  if (!run.g2_fit.parameters.empty()) out.json_file("g2_fit.json", fit_to_json(run.g2_fit));
  return out.finish();
}

int run_interference(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("interference", options, log);
  const auto state = model_state(c);
  const auto grid = beta_grid(c);
  const std::vector<double> alphas = {0.0, 45.0, 90.0, 135.0};

  std::vector<measurement::InterferenceCurve> curves;
  ordered_json vis = ordered_json::array();
  for (const double a : alphas) {
    curves.push_back(measurement::interference_curve(state, a, grid));
    vis.push_back({{"alpha_deg", a}, {"visibility", curves.back().visibility}});
  }

  std::ostringstream csv;
  csv << "beta_deg";
  for (const double a : alphas) csv << ",p_alpha" << format_double(a);
  csv << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv << format_double(grid[i]);
    for (const auto& curve : curves) csv << ',' << format_double(curve.probability[i]);
    csv << '\n';
  }
  out.file("interference.csv", csv.str());
  out.results()["coherence"] = c.effective_coherence();
  out.results()["visibilities"] = vis;
  return out.finish();
}

int run_chsh(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("chsh", options, log);
  const auto state = model_state(c);
  const double coh = c.effective_coherence();
  const auto best = measurement::chsh_max(state);
  const auto sig = chsh_significance(c);

  auto& r = out.results();
  r["coherence"] = coh;
  r["s_canonical"] = chsh_canonical(state);
  r["canonical_settings"] = settings_json(measurement::BellSettings::canonical_phi_minus());
  r["s_max"] = best.s;
  r["optimal_settings"] = settings_json(best.settings);
  r["s_max_analytic"] = 2.0 * std::sqrt(1.0 + coh * coh);
  r["bootstrap"] = {{"n_per_setting", sig.n_per_setting},
                    {"resamples", c.tomography.bootstrap_resamples},
                    {"s", sig.s},
                    {"sigma", sig.sigma},
                    {"significance", sig.significance}};
  return out.finish();
}

int run_tomo(const RunOptions& options, std::ostream& log) {
  const auto& c = options.config;
  Output out("tomo", options, log);
  const auto truth = model_state(c);

  tomography::TomographyRecord rec;
  if (options.counts_csv) {
    try {
      rec = tomography::TomographyRecord::from_csv(read_text(*options.counts_csv));
      rec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(options.counts_csv->string() + ": " + e.what());
    }
  } else {
    rec = tomography::tomo_simulate_counts(truth, c.tomography.n_per_setting, c.seeds.tomography);
  }
  out.file("tomo_counts.csv", rec.to_csv());

  const auto mle = tomography::tomo_mle_detailed(rec);
  const polarization::TwoPhotonState rho(mle.rho, 1e-9);
  out.json_file("rho.json", rho_json(mle.rho));

  const auto target = polarization::phi_minus();
  const auto boot = tomography::bootstrap_errors(
      rec, c.tomography.bootstrap_resamples,
      [&](const polarization::TwoPhotonState& s) { return tomography::fidelity(s, target); }, c.seeds.bootstrap);

  Eigen::SelfAdjointEigenSolver<polarization::DensityMatrix> lin(tomography::tomo_linear(rec));
  auto& r = out.results();
  r["source"] = options.counts_csv ? "input" : "simulated";
  r["total_counts"] = rec.total_counts();
  r["mle_iterations"] = mle.iterations;
  r["linear_min_eigenvalue"] = lin.eigenvalues().minCoeff();
  r["mle_min_eigenvalue"] = rho.min_eigenvalue();
  r["fidelity_phi_minus"] = tomography::fidelity(rho, target);
  r["fidelity_phi_minus_sigma"] = boot.std;
  r["fidelity_model"] = tomography::uhlmann_fidelity(rho, truth);
  r["concurrence"] = polarization::concurrence(rho);
  r["purity"] = rho.purity();
  return out.finish();
}

int run_report(const RunOptions& options, std::ostream& log) {
  Output out("report", options, log);
  const auto rows = build_report(options.config);
  ordered_json table = ordered_json::array();
  bool all = true;
  for (const auto& row : rows) {
    all = all && row.pass;
    table.push_back({{"quantity", row.quantity},
                     {"unit", row.unit},
                     {"computed", num(row.computed)},
                     {"reference", row.reference},
                     {"tolerance", row.tolerance},
                     {"relation", row.relation},
                     {"pass", row.pass}});
    log << (row.pass ? "PASS " : "FAIL ") << row.quantity << ": " << format_double(row.computed) << '\n';
  }
  if (options.format == OutputFormat::Csv) {
    std::ostringstream csv;
    csv << "quantity,unit,computed,reference,tolerance,relation,pass\n";
    for (const auto& row : rows) {
      csv << '"' << row.quantity << "\"," << row.unit << ',' << format_double(row.computed) << ','
          << format_double(row.reference) << ',' << format_double(row.tolerance) << ",\"" << row.relation << "\","
          << (row.pass ? "true" : "false") << '\n';
    }
    out.csv_summary(csv.str());
  }
  out.results()["rows"] = table;
  out.results()["all_pass"] = all;
  return out.finish();
}

}  // namespace spdcsim::app
