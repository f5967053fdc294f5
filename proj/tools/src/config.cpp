#include "spdcsim_app/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spdcsim/biphoton.hpp"

namespace spdcsim::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads one JSON object, remembering which keys the schema knows about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

  const json* find(const std::string& key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(field(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(field(key), "must be finite");
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(field(key), "expected an integer");
      const auto value = v->get<std::int64_t>();
      if (value < INT32_MIN || value > INT32_MAX) fail(field(key), "out of range");
      out = static_cast<int>(value);
    }
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) fail(field(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

void read_cavity(ObjectReader& parent, const std::string& key, cavity::CavitySpec& spec) {
  const json* v = parent.find(key);
  if (!v) return;
  ObjectReader r(*v, parent.field(key));
  r.string("name", spec.name);
  r.number("fsr_h_ghz", spec.fsr_h_ghz);
  r.number("fsr_v_ghz", spec.fsr_v_ghz);
  r.number("fwhm_h_mhz", spec.fwhm_h_mhz);
  r.number("fwhm_v_mhz", spec.fwhm_v_mhz);
  r.number("degenerate_freq_thz", spec.degenerate_freq_thz);
  r.number("pm_fwhm_thz", spec.pm_fwhm_thz);
  r.number("length_mm", spec.length_mm);
  r.number("out_coupler_reflectivity", spec.out_coupler_reflectivity);
  r.number("poling_period_um", spec.poling_period_um);
  std::string envelope = spec.envelope == cavity::EnvelopeShape::Gaussian ? "gaussian" : "sinc2";
  r.string("envelope", envelope);
  if (envelope == "gaussian") {
    spec.envelope = cavity::EnvelopeShape::Gaussian;
  } else if (envelope == "sinc2") {
    spec.envelope = cavity::EnvelopeShape::Sinc2;
  } else {
    ObjectReader::fail(r.field("envelope"), "expected \"gaussian\" or \"sinc2\"");
  }
  r.finish();
}

polarization::Position read_position(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    ObjectReader::fail(where, "expected [x, y] integer grid position");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

polarization::Element read_element(const json& v, const std::string& where) {
  using namespace polarization;
  ObjectReader r(v, where);
  std::string type, label;
  r.string("type", type);
  r.string("label", label);
  auto position = [&](const std::string& key) -> std::optional<Position> {
    if (const json* p = r.find(key)) return read_position(*p, r.field(key));
    return std::nullopt;
  };
  auto required_position = [&](const std::string& key) {
    auto p = position(key);
    if (!p) ObjectReader::fail(r.field(key), "required");
    return *p;
  };

  Element out;
  if (type == "bd") {
    BeamDisplacer bd{label, Axis::X, 1, kBeamDisplacementMm};
    std::string axis = "x";
    r.string("axis", axis);
    if (axis != "x" && axis != "y") ObjectReader::fail(r.field("axis"), "expected \"x\" or \"y\"");
    bd.axis = axis == "x" ? Axis::X : Axis::Y;
    r.integer("direction", bd.direction);
    r.number("displacement_mm", bd.displacement_mm);
    out = bd;
  } else if (type == "hwp" || type == "qwp") {
    double angle = 0.0;
    r.number("angle_deg", angle);
    const auto path = position("path");
    if (type == "hwp") {
      out = HalfWavePlate{label, angle, path};
    } else {
      out = QuarterWavePlate{label, angle, path};
    }
  } else if (type == "mirror") {
    out = Mirror{label, required_position("from"), required_position("to")};
  } else if (type == "crystal") {
    out = CrystalSource{label, required_position("path")};
  } else {
    ObjectReader::fail(r.field("type"), "expected one of bd, hwp, qwp, mirror, crystal");
  }
  r.finish();
  return out;
}

ordered_json position_json(const polarization::Position& p) { return ordered_json::array({p.x, p.y}); }

ordered_json element_json(const polarization::Element& e) {
  using namespace polarization;
  ordered_json j;
  if (const auto* bd = std::get_if<BeamDisplacer>(&e)) {
    j = {{"type", "bd"}, {"label", bd->label}, {"axis", bd->axis == Axis::X ? "x" : "y"},
         {"direction", bd->direction}, {"displacement_mm", bd->displacement_mm}};
  } else if (const auto* h = std::get_if<HalfWavePlate>(&e)) {
    j = {{"type", "hwp"}, {"label", h->label}, {"angle_deg", h->angle_deg}};
    if (h->path) j["path"] = position_json(*h->path);
  } else if (const auto* q = std::get_if<QuarterWavePlate>(&e)) {
    j = {{"type", "qwp"}, {"label", q->label}, {"angle_deg", q->angle_deg}};
    if (q->path) j["path"] = position_json(*q->path);
  } else if (const auto* m = std::get_if<Mirror>(&e)) {
    j = {{"type", "mirror"}, {"label", m->label}, {"from", position_json(m->from)}, {"to", position_json(m->to)}};
  } else if (const auto* c = std::get_if<CrystalSource>(&e)) {
    j = {{"type", "crystal"}, {"label", c->label}, {"path", position_json(c->path)}};
  }
  return j;
}

ordered_json cavity_json(const cavity::CavitySpec& s) {
  return {{"name", s.name},
          {"fsr_h_ghz", s.fsr_h_ghz},
          {"fsr_v_ghz", s.fsr_v_ghz},
          {"fwhm_h_mhz", s.fwhm_h_mhz},
          {"fwhm_v_mhz", s.fwhm_v_mhz},
          {"degenerate_freq_thz", s.degenerate_freq_thz},
          {"pm_fwhm_thz", s.pm_fwhm_thz},
          {"length_mm", s.length_mm},
          {"out_coupler_reflectivity", s.out_coupler_reflectivity},
          {"poling_period_um", s.poling_period_um},
          {"envelope", s.envelope == cavity::EnvelopeShape::Gaussian ? "gaussian" : "sinc2"}};
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

void ExperimentConfig::validate() const {
  auto wrap = [](const std::string& prefix, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(prefix + ": " + e.what());
    }
  };
  wrap("ppktp0", [&] { ppktp0.validate(); });
  wrap("ppktp1", [&] { ppktp1.validate(); });
  wrap("source", [&] { source.validate(); });
  wrap("detection", [&] { detection.validate(); });
  if (coherence) require(*coherence >= 0.0 && *coherence <= 1.0, "coherence", "must lie in [0,1]");
  require(dwdm.width_ghz > 0.0, "dwdm.width_ghz", "must be positive");
  require(cavity.mode_span_ghz > 0.0, "cavity.mode_span_ghz", "must be positive");
  require(cavity.cluster_span_ghz > 0.0, "cavity.cluster_span_ghz", "must be positive");
  require(simulation.duration_s > 0.0, "simulation.duration_s", "must be positive");
  require(simulation.g2_duration_s > 0.0, "simulation.g2_duration_s", "must be positive");
  require(simulation.g2_power_mw >= 0.0, "simulation.g2_power_mw", "must be non-negative");
  require(simulation.histogram_range_ns > 0.0, "simulation.histogram_range_ns", "must be positive");
  require(simulation.accidental_offset_ns > detection.window_ns, "simulation.accidental_offset_ns",
          "must exceed detection.window_ns");
  require(simulation.accidental_windows >= 1, "simulation.accidental_windows", "must be at least 1");
  require(car_scan.power_min_mw > 0.0, "car_scan.power_min_mw", "must be positive");
  require(car_scan.power_max_mw > car_scan.power_min_mw, "car_scan.power_max_mw", "must exceed power_min_mw");
  require(car_scan.points >= 2, "car_scan.points", "must be at least 2");
  require(interference.points >= 8, "interference.points", "must be at least 8");
  require(tomography.n_per_setting > 0.0, "tomography.n_per_setting", "must be positive");
  require(tomography.bootstrap_resamples >= 100, "tomography.bootstrap_resamples", "must be at least 100");
  require(tomography.chsh_sigma_target > 0.0, "tomography.chsh_sigma_target", "must be positive");
  if (network) wrap("network", [&] { network->validate(); });
}

double ExperimentConfig::effective_coherence() const {
  if (coherence) return *coherence;
  return biphoton::spectral_overlap({ppktp0.fwhm_h_mhz, ppktp0.fwhm_v_mhz}, {ppktp1.fwhm_h_mhz, ppktp1.fwhm_v_mhz});
}

polarization::ElementNet ExperimentConfig::effective_network() const {
  return network ? *network : polarization::ElementNet::canonical();
}

ExperimentConfig default_config() { return {}; }

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("syntax: ") + e.what());
  }

  ExperimentConfig c;
  ObjectReader r(root, "");
  int schema = kSchemaVersion;
  r.integer("schema_version", schema);
  require(schema == kSchemaVersion, "schema_version", "unsupported version " + std::to_string(schema));

  read_cavity(r, "ppktp0", c.ppktp0);
  read_cavity(r, "ppktp1", c.ppktp1);

  if (const json* v = r.find("source")) {
    ObjectReader s(*v, "source");
    s.number("brightness_per_s_mw_mhz", c.source.brightness_per_s_mw_mhz);
    s.number("power_mw", c.source.power_mw);
    s.number("bandwidth_mhz", c.source.bandwidth_mhz);
    s.finish();
  }
  if (const json* v = r.find("detection")) {
    ObjectReader d(*v, "detection");
    d.number("eta_s", c.detection.eta_s);
    d.number("eta_i", c.detection.eta_i);
    d.number("dark_s_hz", c.detection.dark_s_hz);
    d.number("dark_i_hz", c.detection.dark_i_hz);
    d.number("window_ns", c.detection.window_ns);
    d.number("jitter_ps", c.detection.jitter_ps);
    d.number("bin_ps", c.detection.bin_ps);
    d.finish();
  }
  r.number("pump_phase_rad", c.pump_phase_rad);
  if (const json* v = r.find("coherence")) {
    if (v->is_null()) {
      c.coherence.reset();
    } else {
      require(v->is_number(), "coherence", "expected a number or null");
      c.coherence = v->get<double>();
    }
  }
  if (const json* v = r.find("dwdm")) {
    ObjectReader d(*v, "dwdm");
    d.number("center_offset_ghz", c.dwdm.center_offset_ghz);
    d.number("width_ghz", c.dwdm.width_ghz);
    d.finish();
  }
  if (const json* v = r.find("cavity")) {
    ObjectReader d(*v, "cavity");
    d.number("mode_span_ghz", c.cavity.mode_span_ghz);
    d.number("cluster_span_ghz", c.cavity.cluster_span_ghz);
    d.finish();
  }
  if (const json* v = r.find("simulation")) {
    ObjectReader d(*v, "simulation");
    d.number("duration_s", c.simulation.duration_s);
    d.number("histogram_range_ns", c.simulation.histogram_range_ns);
    d.number("accidental_offset_ns", c.simulation.accidental_offset_ns);
    d.integer("accidental_windows", c.simulation.accidental_windows);
    d.number("g2_power_mw", c.simulation.g2_power_mw);
    d.number("g2_duration_s", c.simulation.g2_duration_s);
    d.finish();
  }
  if (const json* v = r.find("car_scan")) {
    ObjectReader d(*v, "car_scan");
    d.number("power_min_mw", c.car_scan.power_min_mw);
    d.number("power_max_mw", c.car_scan.power_max_mw);
    d.integer("points", c.car_scan.points);
    d.finish();
  }
  if (const json* v = r.find("interference")) {
    ObjectReader d(*v, "interference");
    d.integer("points", c.interference.points);
    d.finish();
  }
  if (const json* v = r.find("tomography")) {
    ObjectReader d(*v, "tomography");
    d.number("n_per_setting", c.tomography.n_per_setting);
    d.integer("bootstrap_resamples", c.tomography.bootstrap_resamples);
    d.number("chsh_sigma_target", c.tomography.chsh_sigma_target);
    d.finish();
  }
  if (const json* v = r.find("seeds")) {
    ObjectReader d(*v, "seeds");
    d.seed("simulate", c.seeds.simulate);
    d.seed("tomography", c.seeds.tomography);
    d.seed("bootstrap", c.seeds.bootstrap);
    d.finish();
  }
  if (const json* v = r.find("tolerances")) {
    ObjectReader d(*v, "tolerances");
    auto& t = c.tolerances;
    d.number("cluster_spacing_rel", t.cluster_spacing_rel);
    d.number("t_fwhm_rel", t.t_fwhm_rel);
    d.number("overlap_abs", t.overlap_abs);
    d.number("chsh_abs", t.chsh_abs);
    d.number("visibility_0_abs", t.visibility_0_abs);
    d.number("visibility_45_abs", t.visibility_45_abs);
    d.number("fidelity_abs", t.fidelity_abs);
    d.number("significance_abs", t.significance_abs);
    d.number("g2_fit_low_ns", t.g2_fit_low_ns);
    d.number("g2_fit_high_ns", t.g2_fit_high_ns);
    d.finish();
  }
  if (const json* v = r.find("network")) {
    if (!v->is_null()) {
      require(v->is_array(), "network", "expected an array of elements");
      polarization::ElementNet net;
      for (std::size_t i = 0; i < v->size(); ++i) {
        net.elements.push_back(read_element((*v)[i], "network[" + std::to_string(i) + "]"));
      }
      c.network = std::move(net);
    }
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ordered_json to_json(const ExperimentConfig& c) {
  const auto& t = c.tolerances;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["ppktp0"] = cavity_json(c.ppktp0);
  j["ppktp1"] = cavity_json(c.ppktp1);
  j["source"] = {{"brightness_per_s_mw_mhz", c.source.brightness_per_s_mw_mhz},
                 {"power_mw", c.source.power_mw},
                 {"bandwidth_mhz", c.source.bandwidth_mhz}};
  j["detection"] = {{"eta_s", c.detection.eta_s},         {"eta_i", c.detection.eta_i},
                    {"dark_s_hz", c.detection.dark_s_hz}, {"dark_i_hz", c.detection.dark_i_hz},
                    {"window_ns", c.detection.window_ns}, {"jitter_ps", c.detection.jitter_ps},
                    {"bin_ps", c.detection.bin_ps}};
  j["pump_phase_rad"] = c.pump_phase_rad;
  j["coherence"] = c.coherence ? ordered_json(*c.coherence) : ordered_json(nullptr);
  j["dwdm"] = {{"center_offset_ghz", c.dwdm.center_offset_ghz}, {"width_ghz", c.dwdm.width_ghz}};
  j["cavity"] = {{"mode_span_ghz", c.cavity.mode_span_ghz}, {"cluster_span_ghz", c.cavity.cluster_span_ghz}};
  j["simulation"] = {{"duration_s", c.simulation.duration_s},
                     {"histogram_range_ns", c.simulation.histogram_range_ns},
                     {"accidental_offset_ns", c.simulation.accidental_offset_ns},
                     {"accidental_windows", c.simulation.accidental_windows},
                     {"g2_power_mw", c.simulation.g2_power_mw},
                     {"g2_duration_s", c.simulation.g2_duration_s}};
  j["car_scan"] = {{"power_min_mw", c.car_scan.power_min_mw},
                   {"power_max_mw", c.car_scan.power_max_mw},
                   {"points", c.car_scan.points}};
  j["interference"] = {{"points", c.interference.points}};
  j["tomography"] = {{"n_per_setting", c.tomography.n_per_setting},
                     {"bootstrap_resamples", c.tomography.bootstrap_resamples},
                     {"chsh_sigma_target", c.tomography.chsh_sigma_target}};
  j["seeds"] = {{"simulate", c.seeds.simulate}, {"tomography", c.seeds.tomography}, {"bootstrap", c.seeds.bootstrap}};
  j["tolerances"] = {{"cluster_spacing_rel", t.cluster_spacing_rel}, {"t_fwhm_rel", t.t_fwhm_rel},
                     {"overlap_abs", t.overlap_abs},                 {"chsh_abs", t.chsh_abs},
                     {"visibility_0_abs", t.visibility_0_abs},       {"visibility_45_abs", t.visibility_45_abs},
                     {"fidelity_abs", t.fidelity_abs},               {"significance_abs", t.significance_abs},
                     {"g2_fit_low_ns", t.g2_fit_low_ns},             {"g2_fit_high_ns", t.g2_fit_high_ns}};
  if (c.network) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : c.network->elements) arr.push_back(element_json(e));
    j["network"] = arr;
  } else {
    j["network"] = nullptr;
  }
  return j;
}

}  // namespace spdcsim::app
