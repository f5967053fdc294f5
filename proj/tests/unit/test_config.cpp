#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "spdcsim/biphoton.hpp"
#include "spdcsim/polarization.hpp"
#include "spdcsim/tomography.hpp"
#include "spdcsim_app/commands.hpp"
#include "spdcsim_app/config.hpp"

using namespace spdcsim;
using namespace spdcsim::app;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("defaults carry the setup parameters") {
  const auto c = default_config();
  CHECK(c.detection.window_ns == 3.2);
  CHECK(c.detection.jitter_ps == 60.0);
  CHECK(c.detection.bin_ps == 25.0);
  CHECK(c.detection.eta_s == 0.125);
  CHECK(c.detection.eta_i == 0.125);
  CHECK(c.source.brightness_per_s_mw_mhz == 0.7);
  CHECK(c.dwdm.width_ghz == 200.0);
  CHECK(c.ppktp0.fsr_h_ghz == 57.91);
  CHECK(c.ppktp1.fwhm_v_mhz == 384.0);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("empty object keeps defaults") {
  const auto c = parse_config("{}");
  CHECK(to_json(c) == to_json(default_config()));
}

TEST_CASE("round trip through JSON") {
  auto c = default_config();
  c.ppktp0.fsr_h_ghz = 60.0;
  c.detection.dark_s_hz = 250.0;
  c.seeds.simulate = 123456789012345ULL;
  c.coherence.reset();
  c.network = polarization::ElementNet::canonical();
  const auto text = to_json(c).dump();
  const auto back = parse_config(text);
  CHECK(to_json(back) == to_json(c));
  CHECK(back.ppktp0.fsr_h_ghz == 60.0);
  CHECK(back.seeds.simulate == 123456789012345ULL);
  CHECK_FALSE(back.coherence.has_value());
  REQUIRE(back.network.has_value());
  CHECK(back.network->elements.size() == polarization::ElementNet::canonical().elements.size());
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK(contains(error_of(R"({"bogus": 1})"), "bogus: unknown key"));
  CHECK(contains(error_of(R"({"detection": {"window": 3.2}})"), "detection.window: unknown key"));
  CHECK(contains(error_of(R"({"ppktp0": {"fsr_h": 57.0}})"), "ppktp0.fsr_h: unknown key"));
  CHECK(contains(error_of(R"({"network": [{"type": "hwp", "angel_deg": 45}]})"), "network[0].angel_deg: unknown key"));
}

TEST_CASE("type and range errors name the field") {
  CHECK(contains(error_of(R"({"detection": {"window_ns": "3.2"}})"), "detection.window_ns: expected a number"));
  CHECK(contains(error_of(R"({"seeds": {"simulate": -1}})"), "seeds.simulate"));
  CHECK(contains(error_of(R"({"car_scan": {"points": 2.5}})"), "car_scan.points: expected an integer"));
  CHECK(contains(error_of(R"({"detection": {"eta_s": 1.5}})"), "detection"));
  CHECK(contains(error_of(R"({"ppktp1": {"fwhm_h_mhz": -3}})"), "ppktp1"));
  CHECK(contains(error_of(R"({"coherence": 1.2})"), "coherence"));
  CHECK(contains(error_of(R"({"schema_version": 2})"), "schema_version"));
  CHECK(contains(error_of(R"({"ppktp0": {"envelope": "square"}})"), "ppktp0.envelope"));
  CHECK(contains(error_of(R"({"network": [{"type": "prism"}]})"), "network[0].type"));
  CHECK(contains(error_of(R"({"network": [{"type": "mirror", "from": [0, 0]}]})"), "network[0].to: required"));
  CHECK(contains(error_of("[1, 2]"), "expected an object"));
}

TEST_CASE("syntax errors report a location") {
  const auto msg = error_of("{\n  \"source\": {\n    \"power_mw\": 150,\n  }\n}");
  CHECK(contains(msg, "syntax"));
  CHECK(contains(msg, "line 4"));
}

TEST_CASE("load_config reports the file") {
  const auto dir = std::filesystem::temp_directory_path() / "spdcsim_test_config";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bad.json";
  std::ofstream(path) << R"({"dwdm": {"width_ghz": 0}})";
  try {
    load_config(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "bad.json"));
    CHECK(contains(e.what(), "dwdm.width_ghz"));
  }
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("equal FSRs load; the Vernier error comes later") {
  const auto c = parse_config(R"({"ppktp0": {"fsr_h_ghz": 54.91, "fsr_v_ghz": 54.91}})");
  CHECK(c.ppktp0.fsr_h_ghz == c.ppktp0.fsr_v_ghz);
}

TEST_CASE("coherence falls back to the spectral overlap") {
  auto c = default_config();
  CHECK(c.effective_coherence() == 0.8709);
  c.coherence.reset();
  CHECK(c.effective_coherence() == biphoton::spectral_overlap({454.0, 462.0}, {422.0, 384.0}));
}

TEST_CASE("model state is the degraded state of the configured coherence") {
  for (const double c : {0.0, 0.5, 0.8709, 1.0}) {
    for (const double theta : {0.0, 1.0, 3.141592653589793}) {
      auto cfg = default_config();
      cfg.coherence = c;
      cfg.pump_phase_rad = theta;
      const auto got = model_state(cfg).rho();
      const auto want = polarization::degraded_state(theta, c).rho();
      CHECK((got - want).norm() < 1e-10);
    }
  }
}

TEST_CASE("seed override touches every stream") {
  auto c = default_config();
  apply_seed(c, 99);
  CHECK(c.seeds.simulate == 99);
  CHECK(c.seeds.tomography == 99);
  CHECK(c.seeds.bootstrap == 99);
}

TEST_CASE("fit JSON carries parameters and covariance") {
  fitting::FitResult fit;
  fit.parameters = {{"a", 1.0, 0.1}, {"b", 2.0, 0.2}};
  fit.derived = {{"c", 3.0, INFINITY}};
  fit.covariance = Eigen::Matrix2d::Identity();
  fit.converged = true;
  const auto j = fit_to_json(fit);
  CHECK(j["parameters"].size() == 2);
  CHECK(j["parameters"][1]["name"] == "b");
  CHECK(j["derived"][0]["stderr"].is_null());
  CHECK(j["covariance"][1][1] == 1.0);
  CHECK(j["converged"] == true);
}
