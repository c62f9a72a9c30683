#include "vdsa/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa::allocator {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int changes_vs(const FrequencyAssignment& candidate, const FrequencyAssignment& current) {
  int n = 0;
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    const std::optional<double> cur = k < current.size() ? current.platoon_mhz[k] : std::nullopt;
    if (candidate.platoon_mhz[k] != cur) ++n;
  }
  return n;
}

// Lexicographic "lowest frequency" order; a vacated platoon sorts last.
bool lower_frequencies(const FrequencyAssignment& a, const FrequencyAssignment& b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double fa = a.platoon_mhz[k].value_or(kInf);
    const double fb = b.platoon_mhz[k].value_or(kInf);
    if (fa != fb) return fa < fb;
  }
  return false;
}

// Visits every combination of the nonempty feasible sets; platoons with an
// empty set stay vacated.
template <typename Visit>
void for_each_combination(const std::vector<std::vector<double>>& feasible, Visit&& visit) {
  FrequencyAssignment a;
  a.platoon_mhz.assign(feasible.size(), std::nullopt);
  std::vector<std::size_t> idx(feasible.size(), 0);
  for (std::size_t k = 0; k < feasible.size(); ++k) {
    if (!feasible[k].empty()) a.platoon_mhz[k] = feasible[k].front();
  }
  while (true) {
    visit(a);
    std::size_t k = 0;
    for (; k < feasible.size(); ++k) {
      if (feasible[k].empty()) continue;
      if (++idx[k] < feasible[k].size()) {
        a.platoon_mhz[k] = feasible[k][idx[k]];
        break;
      }
      idx[k] = 0;
      a.platoon_mhz[k] = feasible[k].front();
    }
    if (k == feasible.size()) return;
  }
}

// Keeps the best candidate under (objective desc, changes asc, frequencies asc).
struct Best {
  std::optional<FrequencyAssignment> assignment;
  double objective = -kInf;
  int changes = 0;

  void offer(const FrequencyAssignment& a, double objective_value, const FrequencyAssignment& current) {
    const int ch = changes_vs(a, current);
    if (assignment) {
      if (objective_value < objective) return;
      if (objective_value == objective) {
        if (ch > changes) return;
        if (ch == changes && !lower_frequencies(a, *assignment)) return;
      }
    }
    assignment = a;
    objective = objective_value;
    changes = ch;
  }
};

double sigma_at(const rem::RemDatabase& rem, int channel_id, double route_distance) {
  const auto& segs = rem.segments();
  if (segs.find(channel_id) == segs.end()) return 0.0;
  const auto [lo, hi] = rem.coverage(channel_id);
  return rem.query_power(channel_id, std::clamp(route_distance, lo, hi)).sigma_db;
}

Selection finish(std::vector<std::vector<double>> feasible, FrequencyAssignment chosen, const Environment& env,
                 const SelectorOptions& options) {
  Selection s;
  s.assignment = std::move(chosen);
  s.feasible = std::move(feasible);
  if (auto m = interference::min_pair_sinr(env, s.assignment, options.vv_mode)) s.min_sinr_db = m->sinr_db;
  return s;
}

std::vector<std::vector<double>> all_feasible(const ProtectionPolicy& policy, const FrequencyGrid& grid,
                                              const Environment& env) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < env.world.platoons.size(); ++k) {
    out.push_back(feasible_frequencies(policy, grid, env, static_cast<int>(k)));
  }
  return out;
}

}  // namespace

std::string_view to_string(ProtectionMode mode) {
  return mode == ProtectionMode::registry ? "registry" : "worst_case_60m";
}

ProtectionMode protection_mode_from_string(std::string_view name) {
  if (name == "registry") return ProtectionMode::registry;
  if (name == "worst_case_60m") return ProtectionMode::worst_case_60m;
  throw Error(Errc::config, "unknown protection mode '" + std::string(name) + "'");
}

FrequencyGrid FrequencyGrid::uniform(double first_mhz, double last_mhz, double step_mhz) {
  if (!(step_mhz > 0.0) || !(last_mhz >= first_mhz)) {
    throw Error(Errc::config, "frequency grid needs step > 0 and last >= first");
  }
  FrequencyGrid g;
  const auto n = static_cast<std::size_t>(std::floor((last_mhz - first_mhz) / step_mhz + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) g.candidates_mhz.push_back(first_mhz + static_cast<double>(i) * step_mhz);
  return g;
}

void FrequencyGrid::validate() const {
  if (candidates_mhz.empty()) throw Error(Errc::config, "frequency grid is empty");
  if (dtt_centers_mhz.empty()) throw Error(Errc::config, "frequency grid needs at least one DTT centre");
  if (!std::is_sorted(candidates_mhz.begin(), candidates_mhz.end()) ||
      std::adjacent_find(candidates_mhz.begin(), candidates_mhz.end()) != candidates_mhz.end()) {
    throw Error(Errc::config, "frequency grid must be strictly increasing");
  }
  const auto [lo, hi] = std::minmax_element(dtt_centers_mhz.begin(), dtt_centers_mhz.end());
  if (!(candidates_mhz.front() > *lo) || !(candidates_mhz.back() < *hi)) {
    throw Error(Errc::config, "frequency grid must lie strictly between the DTT centres");
  }
}

std::vector<ProtectedPair> protected_dtt_set(const ProtectionPolicy& policy, const Environment& env, int tx) {
  if (!std::isfinite(policy.gamma_dtt_dbm) || !std::isfinite(policy.sir_min_db)) {
    throw Error(Errc::config, "protection thresholds must be finite");
  }
  std::vector<ProtectedPair> out;
  if (policy.mode == ProtectionMode::registry) {
    if (env.rem.dtt_receivers().empty()) {
      throw Error(Errc::invalid_argument, "DTT receiver registry is empty");
    }
    for (const auto& r : env.rem.dtt_receivers()) {
      const scenario::DttReceiverSite site{r.id, r.longitudinal_position, r.distance_to_motorway, r.group};
      const double d = env.world.route.to_route(r.longitudinal_position);
      for (const auto& [ch, p] : r.power_dbm) {
        if (p > policy.gamma_dtt_dbm) out.push_back({r.id, ch, p, sigma_at(env.rem, ch, d), site});
      }
    }
    return out;
  }
  const auto& v = env.world.vehicle(tx);
  const double d = env.route_distance(tx);
  const scenario::DttReceiverSite site{-1, v.x, policy.worst_case_distance_m - v.y, 0};
  for (const auto& ch : env.rem.dtt_channels()) {
    const auto [lo, hi] = env.rem.coverage(ch.channel_id);
    const auto p = env.rem.query_power(ch.channel_id, std::clamp(d, lo, hi));
    if (p.mean_dbm > policy.gamma_dtt_dbm) out.push_back({-1, ch.channel_id, p.mean_dbm, p.sigma_db, site});
  }
  return out;
}

double dtt_interference(const ProtectionPolicy&, const Environment& env, int tx, const ProtectedPair& pair,
                        double f_mhz) {
  return interference::v_to_dtt_interference(env, tx, pair.site, pair.channel_id, f_mhz, pair.dtt_power_dbm);
}

double dtt_budget(const ProtectionPolicy& policy, const ProtectedPair& pair) {
  return dbm_to_watt(pair.dtt_power_dbm - policy.margin_sigma * pair.sigma_db - policy.sir_min_db);
}

double dtt_margin_db(const ProtectionPolicy& policy, const Environment& env, int tx, double f_mhz) {
  double margin = kInf;
  for (const auto& pair : protected_dtt_set(policy, env, tx)) {
    const double i = dtt_interference(policy, env, tx, pair, f_mhz);
    margin = std::min(margin, linear_to_db(dtt_budget(policy, pair)) - linear_to_db(i));
  }
  return margin;
}

bool dtt_constraint_ok(const ProtectionPolicy& policy, const Environment& env, int tx, double f_mhz) {
  for (const auto& pair : protected_dtt_set(policy, env, tx)) {
    if (!(dtt_interference(policy, env, tx, pair, f_mhz) < dtt_budget(policy, pair))) return false;
  }
  return true;
}

std::vector<double> feasible_frequencies(const ProtectionPolicy& policy, const FrequencyGrid& grid,
                                         const Environment& env, int platoon) {
  grid.validate();
  const auto& members = env.world.platoons.at(static_cast<std::size_t>(platoon));
  std::vector<std::vector<ProtectedPair>> pairs;
  pairs.reserve(members.size());
  for (int tx : members) pairs.push_back(protected_dtt_set(policy, env, tx));

  std::vector<double> out;
  for (double f : grid.candidates_mhz) {
    bool ok = true;
    for (std::size_t m = 0; m < members.size() && ok; ++m) {
      for (const auto& pair : pairs[m]) {
        if (!(dtt_interference(policy, env, members[m], pair, f) < dtt_budget(policy, pair))) {
          ok = false;
          break;
        }
      }
    }
    if (ok) out.push_back(f);
  }
  return out;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::exhaustive: return "exhaustive";
    case Strategy::max_separation: return "max-sep";
    case Strategy::dtt_protect_only: return "dtt-only";
  }
  return "exhaustive";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "exhaustive") return Strategy::exhaustive;
  if (name == "max-sep") return Strategy::max_separation;
  if (name == "dtt-only") return Strategy::dtt_protect_only;
  throw Error(Errc::config, "unknown strategy '" + std::string(name) + "'");
}

FrequencyAssignment choose_exhaustive(const std::vector<std::vector<double>>& feasible, const Environment& env,
                                      const FrequencyAssignment& current, const SelectorOptions& options) {
  Best best;
  for_each_combination(feasible, [&](const FrequencyAssignment& a) {
    const auto m = interference::min_pair_sinr(env, a, options.vv_mode);
    best.offer(a, m ? m->sinr_db : kInf, current);
  });
  return *best.assignment;
}

FrequencyAssignment choose_max_separation(const std::vector<std::vector<double>>& feasible, const FrequencyGrid& grid,
                                          const FrequencyAssignment& current) {
  Best best;
  for_each_combination(feasible, [&](const FrequencyAssignment& a) {
    std::vector<double> active;
    for (const auto& f : a.platoon_mhz) {
      if (f) active.push_back(*f);
    }
    double objective = kInf;
    if (a.platoon_mhz.size() == 1 && active.size() == 1) {
      for (double c : grid.dtt_centers_mhz) objective = std::min(objective, std::abs(active.front() - c));
    } else {
      for (std::size_t i = 0; i < active.size(); ++i) {
        for (std::size_t j = i + 1; j < active.size(); ++j) {
          objective = std::min(objective, std::abs(active[i] - active[j]));
        }
      }
    }
    best.offer(a, objective, current);
  });
  return *best.assignment;
}

FrequencyAssignment choose_dtt_protect_only(const std::vector<std::vector<double>>& feasible, const FrequencyGrid& grid,
                                            const FrequencyAssignment& current) {
  FrequencyAssignment out;
  out.platoon_mhz.assign(feasible.size(), std::nullopt);
  const double midpoint = 0.5 * (grid.candidates_mhz.front() + grid.candidates_mhz.back());
  for (std::size_t k = 0; k < feasible.size(); ++k) {
    const auto& set = feasible[k];
    if (set.empty()) continue;
    const std::optional<double> cur = k < current.size() ? current.platoon_mhz[k] : std::nullopt;
    if (cur && std::find(set.begin(), set.end(), *cur) != set.end()) {
      out.platoon_mhz[k] = cur;
      continue;
    }
    const double target = cur.value_or(midpoint);
    double pick = set.front();
    for (double f : set) {
      const double d = std::abs(f - target);
      const double dp = std::abs(pick - target);
      if (d < dp || (d == dp && f < pick)) pick = f;
    }
    out.platoon_mhz[k] = pick;
  }
  return out;
}

Selection select_exhaustive(const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                            const FrequencyAssignment& current, const SelectorOptions& options) {
  auto feasible = all_feasible(policy, grid, env);
  auto chosen = choose_exhaustive(feasible, env, current, options);
  return finish(std::move(feasible), std::move(chosen), env, options);
}

Selection select_max_separation(const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                                const FrequencyAssignment& current, const SelectorOptions& options) {
  auto feasible = all_feasible(policy, grid, env);
  auto chosen = choose_max_separation(feasible, grid, current);
  return finish(std::move(feasible), std::move(chosen), env, options);
}

Selection select_dtt_protect_only(const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                                  const FrequencyAssignment& current, const SelectorOptions& options) {
  auto feasible = all_feasible(policy, grid, env);
  auto chosen = choose_dtt_protect_only(feasible, grid, current);
  return finish(std::move(feasible), std::move(chosen), env, options);
}

Selection select(Strategy strategy, const FrequencyGrid& grid, const ProtectionPolicy& policy, const Environment& env,
                 const FrequencyAssignment& current, const SelectorOptions& options) {
  switch (strategy) {
    case Strategy::exhaustive: return select_exhaustive(grid, policy, env, current, options);
    case Strategy::max_separation: return select_max_separation(grid, policy, env, current, options);
    case Strategy::dtt_protect_only: return select_dtt_protect_only(grid, policy, env, current, options);
  }
  return select_exhaustive(grid, policy, env, current, options);
}

std::vector<int> count_switches(const std::vector<FrequencyAssignment>& history) {
  if (history.empty()) throw Error(Errc::invalid_argument, "assignment history is empty");
  std::vector<int> counts(history.front().size(), 0);
  for (std::size_t t = 1; t < history.size(); ++t) {
    if (history[t].size() != counts.size()) throw Error(Errc::invalid_argument, "platoon count changed in history");
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (history[t].platoon_mhz[k] != history[t - 1].platoon_mhz[k]) ++counts[k];
    }
  }
  return counts;
}

}  // namespace vdsa::allocator
