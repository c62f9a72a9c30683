#include "vdsa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa::scenario {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::platoon_leader: return "platoon_leader";
    case Role::platoon_member: return "platoon_member";
    case Role::jammer: return "jammer";
    case Role::background: return "background";
  }
  return "background";
}

std::vector<DttReceiverSite> reference_dtt_receivers() {
  return {
      {1, 240.0, 120.0, 1},  {2, 4520.0, 164.0, 3}, {3, 4320.0, 244.0, 3}, {4, 320.0, 45.0, 1},
      {5, 1687.0, 80.0, 2},  {6, 4112.0, 304.0, 3}, {7, 632.0, 140.0, 1},  {8, 485.0, 270.0, 1},
      {9, 1463.0, 154.0, 2}, {10, 2087.0, 127.0, 2},
  };
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig cfg;
  PlatoonConfig p1;
  p1.lane = 0;
  p1.leader_x = 300.0;
  PlatoonConfig p2 = p1;
  p2.lane = 3;
  p2.leader_x = 2300.0;
  cfg.platoons = {p1, p2};
  return cfg;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::config, what); };
  if (platoons.empty()) fail("at least one platoon is required");
  if (lanes < 1) fail("lanes must be >= 1");
  if (!(lane_width > 0.0)) fail("lane_width must be > 0");
  for (const auto& p : platoons) {
    if (p.size < 2) fail("platoon size must be >= 2");
    if (p.lane < 0 || p.lane >= lanes) fail("platoon lane out of range");
    if (!(p.time_gap > 0.0) || !(p.standstill_gap > 0.0)) fail("platoon gaps must be > 0");
    if (p.initial_gap && !(*p.initial_gap > 0.0)) fail("platoon initial_gap must be > 0");
  }
  for (int lane : background_lanes) {
    if (lane < 0 || lane >= lanes) fail("background lane out of range");
  }
  if (background_density_per_km_lane < 0.0) fail("background density must be >= 0");
  if (!(background_span_end > background_span_start)) fail("background span is empty");
  if (!(background_v_min_kmh > 0.0) || background_v_max_kmh < background_v_min_kmh) fail("bad background speed range");
  if (!(vehicle_length > 0.0) || !(min_spacing >= vehicle_length)) fail("min_spacing must be >= vehicle_length > 0");
  if (!(jammer.v_low_kmh > 0.0) || jammer.v_high_kmh < jammer.v_low_kmh) fail("bad jammer speed range");
  if (!(jammer.period_s > 0.0) || !(jammer.time_gap > 0.0)) fail("jammer period and gap must be > 0");
  if (!(duration_s > 0.0)) fail("duration must be > 0");
  if (!(mobility_dt > 0.0) || mobility_dt > 0.1) fail("mobility_dt must lie in (0, 0.1]");
  if (!(accel_min < 0.0) || !(accel_max > 0.0)) fail("acceleration limits must straddle 0");
  if (!(staleness_bound_s > 0.0)) fail("staleness bound must be > 0");
  if (!(route.scale != 0.0)) fail("route scale must be non-zero");
  for (const auto& r : dtt_receivers) {
    if (!(r.distance_to_motorway > 0.0)) fail("DTT receiver distance to motorway must be > 0");
  }
}

double lane_center_y(int lane, double lane_width) { return (lane + 0.5) * lane_width; }

std::optional<int> WorldState::platoon_position(int id) const {
  const auto pid = vehicle(id).platoon_id;
  if (!pid) return std::nullopt;
  const auto& members = platoons.at(static_cast<std::size_t>(*pid));
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k] == id) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::optional<int> WorldState::predecessor(int id) const {
  const auto pos = platoon_position(id);
  if (!pos || *pos == 0) return std::nullopt;
  return platoons[static_cast<std::size_t>(*vehicle(id).platoon_id)][static_cast<std::size_t>(*pos - 1)];
}

Position WorldState::receiver_position(const DttReceiverSite& site) const {
  return {site.longitudinal_position, -site.distance_to_motorway};
}

WorldState init_world(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  WorldState world;
  world.lane_width = cfg.lane_width;
  world.route = cfg.route;
  world.dtt_receivers = cfg.dtt_receivers;

  const double v0 = kmh_to_ms(cfg.jammer.v_high_kmh);
  auto add = [&](Role role, std::optional<int> platoon, int lane, double x, double v) {
    VehicleState s;
    s.id = static_cast<int>(world.vehicles.size());
    s.role = role;
    s.platoon_id = platoon;
    s.lane = lane;
    s.x = x;
    s.y = lane_center_y(lane, cfg.lane_width);
    s.speed = v;
    s.length = cfg.vehicle_length;
    world.vehicles.push_back(s);
    return s.id;
  };

  for (std::size_t k = 0; k < cfg.platoons.size(); ++k) {
    const auto& p = cfg.platoons[k];
    const auto pid = static_cast<int>(k);
    const double jammer_gap = p.standstill_gap + cfg.jammer.time_gap * v0;
    world.jammers.push_back(add(Role::jammer, std::nullopt, p.lane, p.leader_x + jammer_gap + cfg.vehicle_length, v0));
    const double gap = p.initial_gap.value_or(p.standstill_gap + p.time_gap * v0);
    std::vector<int> members;
    for (int i = 0; i < p.size; ++i) {
      const double x = p.leader_x - i * (gap + cfg.vehicle_length);
      members.push_back(add(i == 0 ? Role::platoon_leader : Role::platoon_member, pid, p.lane, x, v0));
    }
    world.platoons.push_back(std::move(members));
  }

  std::mt19937_64 rng(seed);
  const double span = cfg.background_span_end - cfg.background_span_start;
  for (int lane : cfg.background_lanes) {
    const auto count = static_cast<int>(std::lround(cfg.background_density_per_km_lane * span / 1000.0));
    std::uniform_real_distribution<double> speed_dist(kmh_to_ms(cfg.background_v_min_kmh),
                                                      kmh_to_ms(cfg.background_v_max_kmh));
    const double lane_speed = speed_dist(rng);
    if (count == 0) continue;
    const double slot = span / count;
    if (slot < cfg.min_spacing) {
      throw Error(Errc::config, "background density " + std::to_string(cfg.background_density_per_km_lane) +
                                    " veh/km/lane violates the minimum spacing of " +
                                    std::to_string(cfg.min_spacing) + " m");
    }
    std::uniform_real_distribution<double> jitter(0.0, slot - cfg.min_spacing);
    for (int i = 0; i < count; ++i) {
      add(Role::background, std::nullopt, lane, cfg.background_span_start + i * slot + jitter(rng), lane_speed);
    }
  }
  return world;
}

double jammer_target_speed(const JammerConfig& cfg, double t) {
  const double hi = kmh_to_ms(cfg.v_high_kmh);
  if (!cfg.enabled) return hi;
  const double lo = kmh_to_ms(cfg.v_low_kmh);
  const double phase = std::fmod(std::max(t, 0.0), cfg.period_s) / cfg.period_s;
  if (phase < 0.5) return hi - (hi - lo) * (phase / 0.5);
  return lo + (hi - lo) * ((phase - 0.5) / 0.5);
}

double jammer_target_speed(double t) { return jammer_target_speed(JammerConfig{}, t); }

KinematicInfo KinematicInfo::extrapolate(double t) const {
  const double age = std::max(0.0, t - stamp);
  KinematicInfo out = *this;
  // Stop at standstill rather than extrapolating into reverse.
  double tau = age;
  if (accel < 0.0 && speed + accel * age < 0.0) tau = speed / -accel;
  out.x = x + speed * tau + 0.5 * accel * tau * tau;
  out.speed = std::max(0.0, speed + accel * tau);
  out.stamp = t;
  return out;
}

double acc_accel(const ScenarioConfig& cfg, const VehicleState& self, const VehicleState& ahead, double time_gap,
                 double standstill_gap) {
  constexpr double kSpacing = 0.23;
  constexpr double kSpeed = 0.74;
  const double gap = ahead.x - ahead.length - self.x;
  const double err = gap - (standstill_gap + time_gap * self.speed);
  const double a = kSpacing * err + kSpeed * (ahead.speed - self.speed);
  return std::clamp(a, cfg.accel_min, cfg.accel_max);
}

double cacc_accel(const ScenarioConfig& cfg, const PlatoonConfig& platoon, const VehicleState& self,
                  const std::optional<KinematicInfo>& leader, const std::optional<KinematicInfo>& predecessor,
                  const VehicleState& sensed_predecessor, double now) {
  const bool pred_fresh = predecessor && now - predecessor->stamp <= cfg.staleness_bound_s;
  if (!pred_fresh) return acc_accel(cfg, self, sensed_predecessor, platoon.time_gap, platoon.standstill_gap);

  const auto pred = predecessor->extrapolate(now);
  const bool leader_fresh = leader && now - leader->stamp <= cfg.staleness_bound_s;
  const auto& g = platoon.gains;
  const double w = leader_fresh ? g.leader_weight : 0.0;

  const double gap = pred.x - sensed_predecessor.length - self.x;
  const double err = gap - (platoon.standstill_gap + platoon.time_gap * self.speed);
  double a = (1.0 - w) * pred.accel + g.kd * (pred.speed - self.speed) + g.kp * err;
  if (leader_fresh) {
    const auto lead = leader->extrapolate(now);
    a += w * lead.accel - g.kv_leader * (self.speed - lead.speed);
  }
  return std::clamp(a, cfg.accel_min, cfg.accel_max);
}

double cacc_accel(const ScenarioConfig& cfg, const WorldState& world, int vehicle_id,
                  const std::optional<KinematicInfo>& leader, const std::optional<KinematicInfo>& predecessor) {
  const auto& self = world.vehicle(vehicle_id);
  const auto pred_id = world.predecessor(vehicle_id);
  if (!pred_id) throw Error(Errc::invalid_argument, "cacc_accel: vehicle is not a platoon member");
  const auto& platoon = cfg.platoons.at(static_cast<std::size_t>(*self.platoon_id));
  return cacc_accel(cfg, platoon, self, leader, predecessor, world.vehicle(*pred_id), world.t);
}

std::optional<KinematicInfo> PerfectInfo::latest(int /*receiver_id*/, int source_id) const {
  const auto& v = world_.vehicle(source_id);
  return KinematicInfo{v.x, v.speed, v.accel, world_.t};
}

void update_controls(const ScenarioConfig& cfg, WorldState& world, const InfoSource& info) {
  const double dt = cfg.mobility_dt;
  std::vector<double> commanded(world.vehicles.size(), 0.0);
  for (std::size_t k = 0; k < world.platoons.size(); ++k) {
    const auto& p = cfg.platoons.at(k);
    auto& jammer = world.vehicle(world.jammers[k]);
    const double target = jammer_target_speed(cfg.jammer, world.t + dt);
    commanded[static_cast<std::size_t>(jammer.id)] = std::clamp((target - jammer.speed) / dt, cfg.accel_min, cfg.accel_max);

    const auto& members = world.platoons[k];
    const auto& leader = world.vehicle(members.front());
    const double cruise = 0.5 * (kmh_to_ms(cfg.cruise_speed_kmh) - leader.speed);
    const double follow = acc_accel(cfg, leader, jammer, cfg.jammer.time_gap, p.standstill_gap);
    commanded[static_cast<std::size_t>(leader.id)] = std::clamp(std::min(cruise, follow), cfg.accel_min, cfg.accel_max);

    for (std::size_t i = 1; i < members.size(); ++i) {
      const auto& self = world.vehicle(members[i]);
      const auto& pred = world.vehicle(members[i - 1]);
      const auto lead_info = info.latest(self.id, leader.id);
      const auto pred_info = info.latest(self.id, pred.id);
      commanded[static_cast<std::size_t>(self.id)] = cacc_accel(cfg, p, self, lead_info, pred_info, pred, world.t);
    }
  }
  for (auto& v : world.vehicles) {
    if (v.role != Role::background) v.accel = commanded[static_cast<std::size_t>(v.id)];
  }
}

void step_mobility(WorldState& world, double dt) {
  if (!(dt > 0.0) || dt > 0.1) throw Error(Errc::invalid_argument, "mobility step must lie in (0, 0.1] s");
  for (auto& v : world.vehicles) {
    if (v.role == Role::background) {
      v.x += v.speed * dt;
      continue;
    }
    const double next_speed = v.speed + v.accel * dt;
    if (next_speed < 0.0) {
      const double tau = v.accel < 0.0 ? v.speed / -v.accel : 0.0;
      v.x += v.speed * tau + 0.5 * v.accel * tau * tau;
      v.speed = 0.0;
      world.events.push_back({world.t + dt, v.id, "negative speed clamped to 0"});
    } else {
      v.x += v.speed * dt + 0.5 * v.accel * dt * dt;
      v.speed = next_speed;
    }
  }
  world.t += dt;
}

void SpacingTracker::observe(const ScenarioConfig& cfg, const WorldState& world) {
  if (max_abs_error.size() < world.platoons.size()) max_abs_error.resize(world.platoons.size());
  for (std::size_t k = 0; k < world.platoons.size(); ++k) {
    const auto& members = world.platoons[k];
    auto& row = max_abs_error[k];
    row.resize(members.size(), 0.0);
    const auto& p = cfg.platoons.at(k);
    for (std::size_t i = 1; i < members.size(); ++i) {
      const auto& self = world.vehicle(members[i]);
      const auto& pred = world.vehicle(members[i - 1]);
      const double err = (pred.x - pred.length - self.x) - (p.standstill_gap + p.time_gap * self.speed);
      row[i] = std::max(row[i], std::abs(err));
    }
  }
}

}  // namespace vdsa::scenario
