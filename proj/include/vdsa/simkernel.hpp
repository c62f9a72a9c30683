#pragma once

// Closed-loop simulation: mobility, message scheduling, sampled-interference
// packet reception, periodic frequency reselection and metric collection.
//
// Every vehicle has a 100 ms message tick. Platoon cars send a CAM on CCH at
// every tick while their platoon has no TVWS frequency; with one they
// alternate CAM on CCH and CACC on TVWS (5 Hz each). Only platoon cars are
// simulated as message events. Other vehicles act as interferers whose
// activity is drawn per event from their airtime/period ratio.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vdsa/allocator.hpp"
#include "vdsa/interference.hpp"
#include "vdsa/radio.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/scenario.hpp"

namespace vdsa::sim {

using interference::Band;
using interference::Environment;
using interference::FrequencyAssignment;

enum class MessageKind { cam, cacc };

struct MessageEvent {
  int tx = 0;
  MessageKind kind = MessageKind::cam;
  Band band = Band::cch;
  double t_start = 0.0;
  double airtime = 0.4e-3;
  scenario::KinematicInfo payload{};
};

enum class LossReason { low_sinr, collision_co_located };

std::string_view to_string(LossReason r);

struct Reception {
  bool received = false;
  std::optional<LossReason> reason;
  double sinr_db = 0.0;
};

/// Transmitters active during one event, split by whether the event's
/// transmitter senses them above the carrier-sense threshold.
struct ConcurrentSet {
  std::vector<int> hidden;
  std::vector<int> co_located;
};

/// Draws the concurrent transmitters of `event`. A hidden node is active with
/// probability airtime/period; a node within carrier-sense range only when it
/// starts in the same slot (slot_time/period).
ConcurrentSet sample_concurrent(const Environment& env, const MessageEvent& event,
                                const FrequencyAssignment& assignment, std::mt19937_64& rng);

/// Instantaneous SINR of `event` at `rx` given the sampled concurrent set.
Reception resolve_reception(const Environment& env, const MessageEvent& event, int rx,
                            const FrequencyAssignment& assignment, const ConcurrentSet& concurrent);

Reception attempt_reception(const Environment& env, const MessageEvent& event, int rx,
                            const FrequencyAssignment& assignment, std::mt19937_64& rng);

struct DttSirSample {
  double t = 0.0;
  int receiver_id = 0;
  int channel_id = 0;
  int platoon = 0;
  double sir_db = 0.0;
  bool operator==(const DttSirSample&) const = default;
};

/// Which DTT pairs are sampled: every registry receiver on every channel, or
/// only the pairs whose power exceeds the protection floor.
enum class SirPopulation { registry, constrained };

std::string_view to_string(SirPopulation p);
SirPopulation sir_population_from_string(std::string_view name);

/// SIR at every sampled DTT pair within `radius_m` of `event.tx`, with the
/// interference summed over the event transmitter and the active TVWS set.
/// Empty when the event is not a TVWS transmission. Outside registry mode the
/// registry population falls back to the constrained pairs.
std::vector<DttSirSample> record_dtt_sir(const Environment& env, const allocator::ProtectionPolicy& policy,
                                         const MessageEvent& event, const FrequencyAssignment& assignment,
                                         const ConcurrentSet& concurrent, double radius_m,
                                         SirPopulation population = SirPopulation::constrained);

/// Lognormal shadowing drawn from a counter-based hash of (seed, link, epoch),
/// so that a link keeps its value within an epoch and runs are reproducible.
class HashShadowing final : public interference::Shadowing {
 public:
  HashShadowing(std::uint64_t seed, const scenario::WorldState& world, const rem::RemDatabase& rem,
                double v2v_sigma_db, bool dtt_shadowing);

  void set_epoch(std::int64_t epoch) { epoch_ = epoch; }
  double v2v_db(int a, int b) const override;
  double v2dtt_db(int vehicle, int receiver_id, int channel_id) const override;
  double dtt_power_db(int vehicle, int channel_id) const override;

 private:
  double normal(std::uint64_t kind, std::uint64_t a, std::uint64_t b) const;
  double rem_sigma(int channel_id, double route_distance) const;

  std::uint64_t seed_;
  const scenario::WorldState& world_;
  const rem::RemDatabase& rem_;
  double v2v_sigma_db_;
  bool dtt_shadowing_;
  std::int64_t epoch_ = 0;
};

struct SimConfig {
  double reselection_period_s = 1.0;
  double warmup_s = 5.0;
  double tick_period_s = 0.1;           // CAM period without TVWS
  double dtt_sir_threshold_db = 39.5;   // reporting line for the SIR distribution
  double dtt_sir_radius_m = 400.0;
  SirPopulation dtt_sir_population = SirPopulation::registry;
  interference::VvMode allocator_vv_mode = interference::VvMode::hidden_only;
  bool operator==(const SimConfig&) const = default;
};

/// Everything a run needs besides the REM, the strategy and the seed.
struct RunInputs {
  scenario::ScenarioConfig scenario = scenario::ScenarioConfig::defaults();
  radio::RadioConfig radio{};
  radio::AcirSet acir = radio::default_acir_tables();
  allocator::ProtectionPolicy policy{};
  allocator::FrequencyGrid grid = allocator::FrequencyGrid::defaults();
  SimConfig sim{};

  /// Startup checks; throws Errc::config.
  void validate(const rem::RemDatabase& rem) const;
  bool operator==(const RunInputs&) const = default;
};

/// A strategy name or "cch-only" (no TVWS use).
struct StrategyChoice {
  std::optional<allocator::Strategy> strategy;

  static StrategyChoice parse(std::string_view name);
  std::string name() const;
  bool operator==(const StrategyChoice&) const = default;
};

struct PositionStats {
  int position = 0;
  std::int64_t scheduled = 0;
  std::int64_t received = 0;
  double rate() const { return scheduled ? static_cast<double>(received) / static_cast<double>(scheduled) : 0.0; }
  bool operator==(const PositionStats&) const = default;
};

struct MinSinrPoint {
  double t = 0.0;
  std::optional<double> sinr_db;
  bool operator==(const MinSinrPoint&) const = default;
};

struct FallbackEvent {
  double t = 0.0;
  int platoon = 0;
  bool entered = true;  // false: TVWS frequency regained
  bool operator==(const FallbackEvent&) const = default;
};

struct MessageTotals {
  std::int64_t scheduled = 0;  // receiver-events, warm-up included
  std::int64_t received = 0;
  std::int64_t lost_low_sinr = 0;
  std::int64_t lost_collision = 0;
  std::int64_t tvws_messages = 0;
  std::int64_t cch_platoon_messages = 0;
  bool operator==(const MessageTotals&) const = default;
};

struct MetricsReport {
  std::string strategy;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  double warmup_s = 0.0;
  double sir_threshold_db = 39.5;
  std::vector<PositionStats> leader_reception;  // positions 1..n-1, platoons pooled
  std::vector<DttSirSample> dtt_sir;
  std::vector<int> switch_counts;
  std::vector<double> reselection_times;
  std::vector<FrequencyAssignment> assignments;
  std::vector<MinSinrPoint> min_sinr;
  std::vector<FallbackEvent> fallback_log;
  MessageTotals totals;
  std::int64_t cch_offered_messages = 0;  // all vehicles, whole run
  std::vector<rem::DttChannel> dtt_channels;

  bool operator==(const MetricsReport&) const = default;
};

/// Runs one seeded simulation. Deterministic for fixed inputs.
MetricsReport run(const RunInputs& inputs, const rem::RemDatabase& rem, StrategyChoice strategy, std::uint64_t seed);

struct RunJob {
  StrategyChoice strategy;
  std::uint64_t seed = 0;
};

/// Independent runs on up to `threads` workers; results in job order.
std::vector<MetricsReport> run_batch(const RunInputs& inputs, const rem::RemDatabase& rem,
                                     const std::vector<RunJob>& jobs, unsigned threads);

}  // namespace vdsa::sim
