#pragma once

// DTT protection and dynamic frequency selection for platoons.
//
// A DTT receiver/channel pair is protected when its DTT power exceeds
// Gamma_DTT. A platoon may use a centre frequency only if, for every one of
// its transmitters and every protected pair, the interference it causes at
// the DTT receiver stays strictly below P_DTT / SIR_min. Three selection
// strategies work on the resulting per-platoon feasible sets:
//   - exhaustive: joint assignment maximising the minimum link SINR,
//   - max-sep:    joint assignment maximising the minimum frequency distance,
//   - dtt-only:   each platoon keeps its frequency while it stays feasible.
// A platoon with an empty feasible set leaves TVWS (CCH-only messaging).

#include <optional>
#include <string_view>
#include <vector>

#include "vdsa/interference.hpp"

namespace vdsa::allocator {

using interference::Environment;
using interference::FrequencyAssignment;

enum class ProtectionMode { registry, worst_case_60m };

std::string_view to_string(ProtectionMode mode);
ProtectionMode protection_mode_from_string(std::string_view name);

struct ProtectionPolicy {
  double gamma_dtt_dbm = -80.0;
  double sir_min_db = 39.5;
  ProtectionMode mode = ProtectionMode::registry;
  double margin_sigma = 0.0;            // conservative mode: budget lowered by margin_sigma * sigma
  double worst_case_distance_m = 60.0;
  bool operator==(const ProtectionPolicy&) const = default;
};

struct FrequencyGrid {
  std::vector<double> candidates_mhz;
  std::vector<double> dtt_centers_mhz{490.0, 522.0};

  static FrequencyGrid uniform(double first_mhz, double last_mhz, double step_mhz);
  static FrequencyGrid defaults() { return uniform(499.0, 513.0, 2.0); }
  /// Nonempty, sorted, strictly between the lowest and highest DTT centre.
  void validate() const;
  bool operator==(const FrequencyGrid&) const = default;
};

struct ProtectedPair {
  int receiver_id = 0;     // -1 for the virtual worst-case receiver
  int channel_id = 0;
  double dtt_power_dbm = 0.0;
  double sigma_db = 0.0;   // REM shadowing spread at the receiver
  scenario::DttReceiverSite site{};
  bool operator==(const ProtectedPair&) const = default;
};

std::vector<ProtectedPair> protected_dtt_set(const ProtectionPolicy& policy, const Environment& env, int tx);

/// Interference (W) of transmitter `tx` on frequency `f_mhz` into a protected pair.
double dtt_interference(const ProtectionPolicy& policy, const Environment& env, int tx, const ProtectedPair& pair,
                        double f_mhz);

/// Allowed interference (W) for a pair: P_DTT / SIR_min, lowered by the margin.
double dtt_budget(const ProtectionPolicy& policy, const ProtectedPair& pair);

/// Smallest (budget - interference) in dB over the protected pairs; +inf when none.
double dtt_margin_db(const ProtectionPolicy& policy, const Environment& env, int tx, double f_mhz);

bool dtt_constraint_ok(const ProtectionPolicy& policy, const Environment& env, int tx, double f_mhz);

std::vector<double> feasible_frequencies(const ProtectionPolicy& policy, const FrequencyGrid& grid,
                                         const Environment& env, int platoon);

enum class Strategy { exhaustive, max_separation, dtt_protect_only };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

struct Selection {
  FrequencyAssignment assignment;
  std::vector<std::vector<double>> feasible;   // per platoon
  std::optional<double> min_sinr_db;           // min-SINR objective of the chosen assignment
};

struct SelectorOptions {
  interference::VvMode vv_mode = interference::VvMode::hidden_only;
};

Selection select_exhaustive(const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                            const FrequencyAssignment& current, const SelectorOptions& options = {});
/// Maximizes the smallest pairwise frequency distance among active platoons.
/// A lone platoon instead keeps away from the DTT centres; when other platoons
/// exist but have vacated TVWS the objective is flat and the tie rule decides.
Selection select_max_separation(const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                                const FrequencyAssignment& current, const SelectorOptions& options = {});
Selection select_dtt_protect_only(const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                                  const FrequencyAssignment& current, const SelectorOptions& options = {});

Selection select(Strategy strategy, const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                 const FrequencyAssignment& current, const SelectorOptions& options = {});

/// Same strategies on precomputed feasible sets.
FrequencyAssignment choose_exhaustive(const std::vector<std::vector<double>>& feasible, const Environment& env,
                                      const FrequencyAssignment& current, const SelectorOptions& options = {});
FrequencyAssignment choose_max_separation(const std::vector<std::vector<double>>& feasible, const FrequencyGrid& grid,
                                          const FrequencyAssignment& current);
FrequencyAssignment choose_dtt_protect_only(const std::vector<std::vector<double>>& feasible, const FrequencyGrid& grid,
                                            const FrequencyAssignment& current);

/// Number of reselection instants at which each platoon's frequency changed.
std::vector<int> count_switches(const std::vector<FrequencyAssignment>& history);

}  // namespace vdsa::allocator
