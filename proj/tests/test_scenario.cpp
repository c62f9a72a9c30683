#include <algorithm>
#include <set>

#include "doctest.h"
#include "vdsa/error.hpp"
#include "vdsa/scenario.hpp"
#include "vdsa/units.hpp"

using namespace vdsa;
using namespace vdsa::scenario;

namespace {

void drive(const ScenarioConfig& cfg, WorldState& world, double seconds, auto&& each_step) {
  const PerfectInfo info(world);
  const int steps = static_cast<int>(seconds / cfg.mobility_dt + 0.5);
  for (int i = 0; i < steps; ++i) {
    update_controls(cfg, world, info);
    step_mobility(world, cfg.mobility_dt);
    each_step(world);
  }
}

}  // namespace

TEST_CASE("reference world") {
  const auto cfg = ScenarioConfig::defaults();
  const auto world = init_world(cfg, 1);
  REQUIRE(world.dtt_receivers.size() == 10);
  std::multiset<int> groups;
  for (const auto& r : world.dtt_receivers) groups.insert(r.group);
  CHECK(groups == std::multiset<int>{1, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  CHECK(world.platoons.size() == 2);
  CHECK(world.jammers.size() == 2);
  for (std::size_t k = 0; k < world.platoons.size(); ++k) {
    const auto& members = world.platoons[k];
    CHECK(world.vehicle(members.front()).role == Role::platoon_leader);
    const int lane = world.vehicle(members.front()).lane;
    CHECK((lane == 0 || lane == cfg.lanes - 1));
    CHECK(world.vehicle(world.jammers[k]).x > world.vehicle(members.front()).x);
    for (std::size_t i = 1; i < members.size(); ++i) {
      const auto& v = world.vehicle(members[i]);
      CHECK(v.role == Role::platoon_member);
      CHECK(v.platoon_id == static_cast<int>(k));
      CHECK(v.x < world.vehicle(members[i - 1]).x - v.length);
      CHECK(world.predecessor(v.id) == members[i - 1]);
      CHECK(world.platoon_position(v.id) == static_cast<int>(i));
    }
  }
  const auto r4 = world.receiver_position(world.dtt_receivers[3]);
  CHECK(r4.x == 320.0);
  CHECK(r4.y == -45.0);
}

TEST_CASE("background placement") {
  auto cfg = ScenarioConfig::defaults();
  CHECK(init_world(cfg, 7) == init_world(cfg, 7));
  CHECK_FALSE(init_world(cfg, 7) == init_world(cfg, 8));

  const auto world = init_world(cfg, 7);
  const double span_km = (cfg.background_span_end - cfg.background_span_start) / 1000.0;
  for (int lane : cfg.background_lanes) {
    std::vector<double> xs;
    for (const auto& v : world.vehicles) {
      if (v.role == Role::background && v.lane == lane) xs.push_back(v.x);
    }
    CHECK(static_cast<double>(xs.size()) == doctest::Approx(cfg.background_density_per_km_lane * span_km));
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] - xs[i - 1] >= cfg.min_spacing - 1e-9);
  }

  cfg.background_density_per_km_lane = 0.0;
  const auto bare = init_world(cfg, 7);
  for (const auto& v : bare.vehicles) CHECK(v.role != Role::background);
  CHECK(bare.vehicles.size() == 22);

  cfg.background_density_per_km_lane = 200.0;
  CHECK_THROWS_AS(init_world(cfg, 7), Error);
}

TEST_CASE("invalid configurations") {
  auto cfg = ScenarioConfig::defaults();
  cfg.platoons[0].size = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ScenarioConfig::defaults();
  cfg.duration_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ScenarioConfig::defaults();
  cfg.platoons[1].lane = 4;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("jammer profile") {
  CHECK(jammer_target_speed(0.0) == doctest::Approx(36.111).epsilon(1e-4));
  CHECK(jammer_target_speed(15.0) == doctest::Approx(27.778).epsilon(1e-4));
  CHECK(jammer_target_speed(7.5) == doctest::Approx(kmh_to_ms(115.0)));
  for (double t = 0.0; t < 120.0; t += 0.37) {
    CHECK(jammer_target_speed(t) == doctest::Approx(jammer_target_speed(t + 30.0)).epsilon(1e-12));
    CHECK(jammer_target_speed(t) >= kmh_to_ms(100.0) - 1e-12);
    CHECK(jammer_target_speed(t) <= kmh_to_ms(130.0) + 1e-12);
  }
  JammerConfig off;
  off.enabled = false;
  CHECK(jammer_target_speed(off, 15.0) == doctest::Approx(kmh_to_ms(130.0)));
}

TEST_CASE("CACC law") {
  const auto cfg = ScenarioConfig::defaults();
  const auto& p = cfg.platoons[0];
  const double v = 30.0;
  VehicleState pred;
  pred.x = 100.0;
  pred.speed = v;
  VehicleState self;
  self.speed = v;
  self.x = pred.x - pred.length - (p.standstill_gap + p.time_gap * v);
  const KinematicInfo pred_info{pred.x, v, 0.0, 0.0};
  const KinematicInfo leader_info{300.0, v, 0.0, 0.0};

  SUBCASE("equilibrium") { CHECK(cacc_accel(cfg, p, self, leader_info, pred_info, pred, 0.0) == doctest::Approx(0.0)); }
  SUBCASE("gap too large") {
    auto far = self;
    far.x -= 5.0;
    CHECK(cacc_accel(cfg, p, far, leader_info, pred_info, pred, 0.0) > 0.0);
  }
  SUBCASE("leader feed-forward") {
    const KinematicInfo accelerating{300.0, v, 1.0, 0.0};
    CHECK(cacc_accel(cfg, p, self, accelerating, pred_info, pred, 0.0) == doctest::Approx(0.5));
  }
  SUBCASE("clipped") {
    auto close = self;
    close.x += 6.0;
    CHECK(cacc_accel(cfg, p, close, leader_info, pred_info, pred, 0.0) >= cfg.accel_min);
    const KinematicInfo braking{pred.x, v, -20.0, 0.0};
    CHECK(cacc_accel(cfg, p, self, leader_info, braking, pred, 0.0) == cfg.accel_min);
  }
  SUBCASE("stale predecessor falls back to own sensing") {
    auto far = self;
    far.x -= 5.0;
    const KinematicInfo old{pred.x - 50.0, v, -3.0, -5.0};
    const double a = cacc_accel(cfg, p, far, leader_info, old, pred, 0.0);
    CHECK(a == doctest::Approx(acc_accel(cfg, far, pred, p.time_gap, p.standstill_gap)));
    CHECK(cacc_accel(cfg, p, far, leader_info, std::nullopt, pred, 0.0) == doctest::Approx(a));
  }
}

TEST_CASE("integration step") {
  WorldState w;
  VehicleState v;
  v.role = Role::platoon_member;
  v.speed = 20.0;
  w.vehicles.push_back(v);
  step_mobility(w, 0.1);
  CHECK(w.vehicles[0].x == doctest::Approx(2.0));

  w.vehicles[0].speed = 0.0;
  w.vehicles[0].accel = -1.0;
  step_mobility(w, 0.1);
  CHECK(w.vehicles[0].speed == 0.0);
  CHECK(w.vehicles[0].x == doctest::Approx(2.0));
  REQUIRE(w.events.size() == 1);
  CHECK(w.events[0].vehicle_id == 0);

  CHECK_THROWS_AS(step_mobility(w, 0.2), Error);
  CHECK_THROWS_AS(step_mobility(w, 0.0), Error);
}

TEST_CASE("steady platoon keeps its gaps") {
  auto cfg = ScenarioConfig::defaults();
  cfg.jammer.enabled = false;
  cfg.background_density_per_km_lane = 0.0;
  auto world = init_world(cfg, 1);
  auto gaps = [&] {
    std::vector<double> out;
    for (const auto& members : world.platoons) {
      for (std::size_t i = 1; i < members.size(); ++i) {
        const auto& a = world.vehicle(members[i - 1]);
        out.push_back(a.x - a.length - world.vehicle(members[i]).x);
      }
    }
    return out;
  };
  const auto before = gaps();
  drive(cfg, world, 10.0, [](const WorldState&) {});
  const auto after = gaps();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-6));
}

TEST_CASE("closed-loop properties over the full run") {
  const auto cfg = ScenarioConfig::defaults();
  auto a = init_world(cfg, 3);
  auto b = init_world(cfg, 3);
  SpacingTracker first_cycle;
  bool ordered = true;
  bool jammer_in_range = true;
  int step = 0;
  drive(cfg, a, cfg.duration_s, [&](const WorldState& w) {
    ++step;
    if (w.t <= cfg.jammer.period_s + 1e-9) first_cycle.observe(cfg, w);
    for (const auto& members : w.platoons) {
      for (std::size_t i = 1; i < members.size(); ++i) {
        const auto& pred = w.vehicle(members[i - 1]);
        if (!(w.vehicle(members[i]).x < pred.x - pred.length)) ordered = false;
      }
    }
    for (int j : w.jammers) {
      const double v = w.vehicle(j).speed;
      if (v < kmh_to_ms(100.0) - 1e-6 || v > kmh_to_ms(130.0) + 1e-6) jammer_in_range = false;
    }
  });
  drive(cfg, b, cfg.duration_s, [](const WorldState&) {});
  CHECK(a == b);
  CHECK(ordered);
  CHECK(jammer_in_range);
  CHECK(a.events.empty());

  for (const auto& row : first_cycle.max_abs_error) {
    const double front = row[1];
    CHECK(front > 0.0);
    CHECK(*std::max_element(row.begin() + 1, row.end()) <= 3.0 * front + 0.5);
  }
}
