#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "vdsa/config.hpp"
#include "vdsa/error.hpp"

using namespace vdsa;
using nlohmann::json;

namespace {

sim::RunInputs altered() {
  sim::RunInputs in;
  in.scenario.duration_s = 60.0;
  in.scenario.platoons[1].initial_gap = 12.5;
  in.scenario.jammer.enabled = false;
  in.radio.tx_power_dbm = 20.0;
  in.radio.tvws_propagation_mhz.reset();
  in.radio.v2v_pathloss.fixed_frequency_mhz = 600.0;
  in.acir.v_to_v = radio::AcirTable(radio::AcirDirection::v_to_v, {0.0, 8.0}, {0.0, -30.0}, std::nullopt, -50.0,
                                    -45.0, radio::AcirInterpolation::linear_db);
  in.policy.mode = allocator::ProtectionMode::worst_case_60m;
  in.policy.margin_sigma = 1.5;
  in.grid = allocator::FrequencyGrid::uniform(498.0, 514.0, 4.0);
  in.sim.allocator_vv_mode = interference::VvMode::all_nodes;
  in.sim.dtt_sir_population = sim::SirPopulation::constrained;
  return in;
}

}  // namespace

TEST_CASE("dump and parse round trip") {
  for (const auto& in : {sim::RunInputs{}, altered()}) {
    const auto text = config::dump_config(in);
    CHECK(config::parse_config(text) == in);
    CHECK(config::dump_config(config::parse_config(text)) == text);
  }
}

TEST_CASE("partial files merge over the base") {
  const auto in = config::parse_config(R"({"protection": {"sir_min_db": 40.0}, "simulation": {"warmup_s": 2.0}})");
  sim::RunInputs expected;
  expected.policy.sir_min_db = 40.0;
  expected.sim.warmup_s = 2.0;
  CHECK(in == expected);
  CHECK(config::parse_config("{}", altered()) == altered());
}

TEST_CASE("bad files are rejected") {
  auto check_code = [](const std::string& text, Errc code) {
    try {
      config::parse_config(text);
      FAIL("accepted: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  check_code(R"({"protection": {"sir_min": 40.0}})", Errc::config);
  check_code(R"({"extras": 1})", Errc::config);
  check_code(R"({"radio": {"tx_power_dbm": "high"}})", Errc::config);
  check_code(R"({"protection": {"mode": "nearest"}})", Errc::config);
  check_code(R"({"scenario": {"background_span_m": [1.0]}})", Errc::config);
  check_code("{ not json", Errc::parse);
  CHECK_THROWS_AS(config::load_config("/nonexistent/vdsa.json"), Error);
}

TEST_CASE("load from file") {
  const auto path = std::filesystem::temp_directory_path() / "vdsa_config_test.json";
  {
    std::ofstream out(path);
    out << config::dump_config(altered());
  }
  CHECK(config::load_config(path) == altered());
  std::filesystem::remove(path);
}
