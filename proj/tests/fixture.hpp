#pragma once

// Hand-built worlds with gains that are easy to evaluate by hand: every
// pathloss model is normalised so that |h|^2 = d^-exponent.

#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "vdsa/cli.hpp"
#include "vdsa/interference.hpp"
#include "vdsa/radio.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/scenario.hpp"
#include "vdsa/units.hpp"

namespace fixture {

using namespace vdsa;

inline radio::PathlossModel power_law(double exponent) {
  radio::PathlossModel m;
  m.kind = radio::PathlossKind::log_distance;
  m.exponent = exponent;
  m.fixed_frequency_mhz = 506.0;
  m.antenna_gain_db = radio::free_space_loss_db(1.0, 506.0);
  return m;
}

/// Flat REM: every channel at `power_dbm` over a wide route span.
inline rem::RemDatabase flat_rem(const std::vector<std::pair<int, double>>& channels, double power_dbm,
                                 std::vector<rem::DttReceiverEntry> receivers = {}) {
  std::map<int, std::vector<rem::RemSegment>> segments;
  std::vector<rem::DttChannel> list;
  for (const auto& [id, mhz] : channels) {
    segments[id] = {rem::RemSegment{id, -1e6, 1e6, 0.0, power_dbm, 0.0}};
    list.push_back({id, mhz});
  }
  return rem::RemDatabase(std::move(segments), std::move(receivers), std::move(list));
}

/// Coupling 1 co-channel and `adjacent` at any offset of at least 1 MHz.
inline radio::AcirTable two_level(radio::AcirDirection d, double adjacent) {
  return radio::AcirTable::from_linear(d, {0.0, 1.0}, {1.0, adjacent}, adjacent);
}

struct World {
  scenario::WorldState world;
  rem::RemDatabase rem = flat_rem({{21, 474.0}}, -200.0);
  radio::RadioConfig radio;
  radio::AcirSet acir{two_level(radio::AcirDirection::dtt_to_v, 0.0), two_level(radio::AcirDirection::v_to_v, 0.0),
                      two_level(radio::AcirDirection::v_to_dtt, 0.0)};

  World() {
    radio.v2v_pathloss = power_law(2.0);
    radio.v2dtt_pathloss = power_law(2.0);
    radio.message_airtime_s = 0.5e-3;
  }

  int add(scenario::Role role, double x, double y = 0.0, std::optional<int> platoon = std::nullopt) {
    scenario::VehicleState v;
    v.id = static_cast<int>(world.vehicles.size());
    v.role = role;
    v.platoon_id = platoon;
    v.x = x;
    v.y = y;
    v.speed = 30.0;
    world.vehicles.push_back(v);
    return v.id;
  }

  /// Leader first; positions are front bumpers.
  int add_platoon(const std::vector<double>& xs, double y = 0.0) {
    const int k = static_cast<int>(world.platoons.size());
    std::vector<int> ids;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ids.push_back(add(i == 0 ? scenario::Role::platoon_leader : scenario::Role::platoon_member, xs[i], y, k));
    }
    world.platoons.push_back(ids);
    return k;
  }

  interference::Environment env() const { return {world, rem, radio, acir, nullptr, 0.1, 0.2}; }
};

/// REM fitted from the shipped drive test, registry at the reference sites.
inline rem::RemDatabase campaign_rem() {
  const auto channels = rem::ingest_file(std::string(VDSA_DATA_DIR) + "/drive_test_ch23_ch27.csv");
  std::map<int, std::vector<rem::RemSegment>> segments;
  std::vector<rem::DttChannel> list;
  for (const auto& [ch, samples] : channels) {
    segments[ch] = rem::fit_segments(rem::interpolate_gaps(samples, 300.0));
    list.push_back({ch, uhf_channel_center_mhz(ch)});
  }
  const scenario::ScenarioConfig cfg = scenario::ScenarioConfig::defaults();
  auto registry = cli::registry_from_sites(segments, cfg.dtt_receivers, cfg.route);
  return rem::RemDatabase(std::move(segments), std::move(registry), std::move(list));
}

inline double dbm(double watts) { return 10.0 * std::log10(watts * 1e3); }
inline double watts(double dbm_value) { return std::pow(10.0, dbm_value / 10.0) * 1e-3; }

}  // namespace fixture
