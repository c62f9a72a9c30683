#pragma once

// Motorway world: two CACC platoons on the outer lanes, each behind a jammer
// car running a periodic speed cycle, background traffic on the inner lanes
// and the DTT receiver sites along the road.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdsa/geometry.hpp"

namespace vdsa::scenario {

enum class Role { platoon_leader, platoon_member, jammer, background };

std::string_view to_string(Role role);

struct VehicleState {
  int id = 0;
  Role role = Role::background;
  std::optional<int> platoon_id;
  int lane = 0;
  double x = 0.0;       // front bumper, m
  double y = 0.0;       // lane centre, m
  double speed = 0.0;   // m/s
  double accel = 0.0;   // m/s^2
  double length = 5.0;  // m

  Position position() const { return {x, y}; }
  bool operator==(const VehicleState&) const = default;
};

/// Weights of the constant-time-gap CACC law.
struct CaccGains {
  double leader_weight = 0.5;  // share of leader acceleration feed-forward
  double kp = 0.25;            // spacing error
  double kd = 0.75;            // relative speed to predecessor
  double kv_leader = 0.25;     // speed difference to leader
  bool operator==(const CaccGains&) const = default;
};

struct PlatoonConfig {
  int size = 10;
  int lane = 0;
  double leader_x = 300.0;              // initial front position of the leader
  double time_gap = 0.5;                // s
  double standstill_gap = 2.0;          // m
  std::optional<double> initial_gap;    // bumper-to-bumper at t=0; equilibrium gap when unset
  CaccGains gains{};
  bool operator==(const PlatoonConfig&) const = default;
};

struct JammerConfig {
  bool enabled = true;                 // false: constant v_high
  double v_high_kmh = 130.0;
  double v_low_kmh = 100.0;
  double period_s = 30.0;
  double time_gap = 1.0;               // leader ACC gap behind the jammer
  bool operator==(const JammerConfig&) const = default;
};

struct DttReceiverSite {
  int id = 0;
  double longitudinal_position = 0.0;
  double distance_to_motorway = 0.0;
  int group = 0;
  bool operator==(const DttReceiverSite&) const = default;
};

/// DTT receiver rows of the reference motorway layout.
std::vector<DttReceiverSite> reference_dtt_receivers();

struct ScenarioConfig {
  std::vector<PlatoonConfig> platoons;
  int lanes = 4;
  double lane_width = 3.5;
  std::vector<int> background_lanes{1, 2};
  double background_density_per_km_lane = 20.0;
  double background_span_start = -3000.0;
  double background_span_end = 10000.0;
  double background_v_min_kmh = 100.0;
  double background_v_max_kmh = 130.0;
  double vehicle_length = 5.0;
  double min_spacing = 7.0;            // front-to-front, background placement
  JammerConfig jammer{};
  double duration_s = 140.0;
  double mobility_dt = 0.01;
  double accel_min = -8.0;
  double accel_max = 3.0;
  double staleness_bound_s = 1.0;      // CACC falls back to ACC beyond this age
  double cruise_speed_kmh = 130.0;     // leader speed cap
  RouteMapping route{};
  std::vector<DttReceiverSite> dtt_receivers = reference_dtt_receivers();

  /// Two 10-car platoons, the second one 2000 m ahead on the opposite outer lane.
  static ScenarioConfig defaults();
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

struct MobilityEvent {
  double t = 0.0;
  int vehicle_id = 0;
  std::string what;
  bool operator==(const MobilityEvent&) const = default;
};

struct WorldState {
  double t = 0.0;
  std::vector<VehicleState> vehicles;           // index == id
  std::vector<std::vector<int>> platoons;       // vehicle ids, leader first
  std::vector<int> jammers;                     // one per platoon
  std::vector<DttReceiverSite> dtt_receivers;
  double lane_width = 3.5;
  RouteMapping route{};
  std::vector<MobilityEvent> events;

  const VehicleState& vehicle(int id) const { return vehicles.at(static_cast<std::size_t>(id)); }
  VehicleState& vehicle(int id) { return vehicles.at(static_cast<std::size_t>(id)); }
  std::optional<int> platoon_of(int id) const { return vehicle(id).platoon_id; }
  /// Position in platoon (0 = leader); nullopt for non-platoon vehicles.
  std::optional<int> platoon_position(int id) const;
  std::optional<int> predecessor(int id) const;
  Position receiver_position(const DttReceiverSite& site) const;

  bool operator==(const WorldState&) const = default;
};

double lane_center_y(int lane, double lane_width);

WorldState init_world(const ScenarioConfig& cfg, std::uint64_t seed);

/// Symmetric triangle: v_high at t=0, v_low at half period.
double jammer_target_speed(const JammerConfig& cfg, double t);
double jammer_target_speed(double t);

/// Kinematic snapshot of another vehicle as known to a receiver.
struct KinematicInfo {
  double x = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double stamp = 0.0;  // time the snapshot was taken

  /// Constant-acceleration extrapolation to time t.
  KinematicInfo extrapolate(double t) const;
};

/// Commanded acceleration of a platoon member. `leader` / `predecessor` are
/// the last V2V snapshots; a missing or stale predecessor triggers ACC on own
/// sensing of `sensed_predecessor`. Clipped to [accel_min, accel_max].
double cacc_accel(const ScenarioConfig& cfg, const PlatoonConfig& platoon, const VehicleState& self,
                  const std::optional<KinematicInfo>& leader, const std::optional<KinematicInfo>& predecessor,
                  const VehicleState& sensed_predecessor, double now);

/// Convenience overload resolving platoon/predecessor from the world.
double cacc_accel(const ScenarioConfig& cfg, const WorldState& world, int vehicle_id,
                  const std::optional<KinematicInfo>& leader, const std::optional<KinematicInfo>& predecessor);

/// ACC law used by platoon leaders behind the jammer (own sensing only).
double acc_accel(const ScenarioConfig& cfg, const VehicleState& self, const VehicleState& ahead, double time_gap,
                 double standstill_gap);

/// Source of V2V snapshots for the control update. Returns nullopt when no
/// message has been received yet.
class InfoSource {
 public:
  virtual ~InfoSource() = default;
  virtual std::optional<KinematicInfo> latest(int receiver_id, int source_id) const = 0;
};

/// Perfect, always-fresh information (used for pure mobility runs).
class PerfectInfo final : public InfoSource {
 public:
  explicit PerfectInfo(const WorldState& world) : world_(world) {}
  std::optional<KinematicInfo> latest(int receiver_id, int source_id) const override;

 private:
  const WorldState& world_;
};

/// Sets the accel of every jammer, leader and member for the next step.
void update_controls(const ScenarioConfig& cfg, WorldState& world, const InfoSource& info);

/// Integrates one step: x += v dt + a dt^2 / 2, v += a dt. Negative speeds are
/// clamped to zero and logged.
void step_mobility(WorldState& world, double dt);

/// Largest |spacing error| per platoon position (1..n-1) over a trajectory.
struct SpacingTracker {
  std::vector<std::vector<double>> max_abs_error;  // [platoon][position]
  void observe(const ScenarioConfig& cfg, const WorldState& world);
};

}  // namespace vdsa::scenario
