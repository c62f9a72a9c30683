#include "vdsa/simkernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <numbers>
#include <queue>
#include <thread>

#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa::sim {

using scenario::KinematicInfo;
using scenario::Role;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_interval(std::uint64_t h) { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }

std::int64_t to_us(double s) { return std::llround(s * 1e6); }

double interferer_power(const Environment& env, int j, int rx, double f_wanted, const FrequencyAssignment& assignment,
                        Band band) {
  const double f_j = *env.frequency(j, assignment, band);
  return env.radio.tx_power_w() * env.v2v_gain(j, rx, f_wanted) * env.acir.v_to_v.coupling(f_j - f_wanted);
}

}  // namespace

std::string_view to_string(LossReason r) {
  return r == LossReason::low_sinr ? "low_sinr" : "collision_co_located";
}

ConcurrentSet sample_concurrent(const Environment& env, const MessageEvent& event,
                                const FrequencyAssignment& assignment, std::mt19937_64& rng) {
  ConcurrentSet out;
  const auto f_tx = env.frequency(event.tx, assignment, event.band);
  if (!f_tx) return out;
  const double gamma_w = dbm_to_watt(env.radio.cs_threshold_dbm);
  const double slot_share = env.radio.slot_time_s / env.radio.message_airtime_s;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  auto consider = [&](int j) {
    if (j == event.tx) return;
    const double p_air = env.tx_probability_of(j, assignment, event.band);
    const double u = uniform(rng);
    if (u >= p_air) return;
    const double f_j = *env.frequency(j, assignment, event.band);
    const double sensed =
        env.radio.tx_power_w() * env.v2v_gain(event.tx, j, *f_tx) * env.acir.v_to_v.coupling(f_j - *f_tx);
    if (sensed < gamma_w) {
      out.hidden.push_back(j);
    } else if (u < p_air * slot_share) {
      out.co_located.push_back(j);
    }
  };

  if (event.band == Band::cch) {
    for (const auto& v : env.world.vehicles) consider(v.id);
  } else {
    for (int j : env.transmitters(assignment, event.band)) consider(j);
  }
  return out;
}

Reception resolve_reception(const Environment& env, const MessageEvent& event, int rx,
                            const FrequencyAssignment& assignment, const ConcurrentSet& concurrent) {
  const auto f = env.frequency(event.tx, assignment, event.band);
  if (!f) throw Error(Errc::invalid_argument, "message transmitter has no frequency on its band");
  interference::SinrTerms terms;
  terms.signal_w = env.radio.tx_power_w() * env.v2v_gain(event.tx, rx, *f);
  terms.noise_w = env.radio.noise_w();
  terms.pu_w = event.band == Band::tvws ? interference::pu_to_v_interference(env, rx, *f) : 0.0;
  bool co_located_active = false;
  for (int j : concurrent.hidden) {
    if (j != rx) terms.vv_w += interferer_power(env, j, rx, *f, assignment, event.band);
  }
  for (int j : concurrent.co_located) {
    if (j == rx) continue;
    terms.vv_w += interferer_power(env, j, rx, *f, assignment, event.band);
    co_located_active = true;
  }
  Reception r;
  r.sinr_db = terms.sinr_db();
  r.received = r.sinr_db >= env.radio.rx_sinr_threshold_db;
  if (!r.received) r.reason = co_located_active ? LossReason::collision_co_located : LossReason::low_sinr;
  return r;
}

Reception attempt_reception(const Environment& env, const MessageEvent& event, int rx,
                            const FrequencyAssignment& assignment, std::mt19937_64& rng) {
  return resolve_reception(env, event, rx, assignment, sample_concurrent(env, event, assignment, rng));
}

std::string_view to_string(SirPopulation p) { return p == SirPopulation::registry ? "registry" : "constrained"; }

SirPopulation sir_population_from_string(std::string_view name) {
  if (name == "registry") return SirPopulation::registry;
  if (name == "constrained") return SirPopulation::constrained;
  throw Error(Errc::config, "unknown DTT SIR population '" + std::string(name) + "'");
}

std::vector<DttSirSample> record_dtt_sir(const Environment& env, const allocator::ProtectionPolicy& policy,
                                         const MessageEvent& event, const FrequencyAssignment& assignment,
                                         const ConcurrentSet& concurrent, double radius_m,
                                         SirPopulation population) {
  std::vector<DttSirSample> out;
  if (event.band != Band::tvws) return out;
  const auto f_tx = env.frequency(event.tx, assignment, Band::tvws);
  if (!f_tx) return out;

  std::vector<int> active{event.tx};
  active.insert(active.end(), concurrent.hidden.begin(), concurrent.hidden.end());
  active.insert(active.end(), concurrent.co_located.begin(), concurrent.co_located.end());

  const auto tx_pos = env.world.vehicle(event.tx).position();
  const int platoon = env.world.vehicle(event.tx).platoon_id.value_or(-1);
  auto sampled = policy;
  if (population == SirPopulation::registry && policy.mode == allocator::ProtectionMode::registry) {
    sampled.gamma_dtt_dbm = std::numeric_limits<double>::lowest();
  }
  for (const auto& pair : allocator::protected_dtt_set(sampled, env, event.tx)) {
    if (distance(tx_pos, env.world.receiver_position(pair.site)) > radius_m) continue;
    double total = 0.0;
    for (int j : active) {
      const auto f_j = env.frequency(j, assignment, Band::tvws);
      if (!f_j) continue;
      total += interference::v_to_dtt_interference(env, j, pair.site, pair.channel_id, *f_j, pair.dtt_power_dbm);
    }
    out.push_back({event.t_start, pair.receiver_id, pair.channel_id, platoon, pair.dtt_power_dbm - watt_to_dbm(total)});
  }
  return out;
}

HashShadowing::HashShadowing(std::uint64_t seed, const scenario::WorldState& world, const rem::RemDatabase& rem,
                             double v2v_sigma_db, bool dtt_shadowing)
    : seed_(seed), world_(world), rem_(rem), v2v_sigma_db_(v2v_sigma_db), dtt_shadowing_(dtt_shadowing) {}

double HashShadowing::normal(std::uint64_t kind, std::uint64_t a, std::uint64_t b) const {
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ kind);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ static_cast<std::uint64_t>(epoch_));
  const double u1 = unit_interval(h);
  const double u2 = unit_interval(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double HashShadowing::rem_sigma(int channel_id, double route_distance) const {
  const auto& segs = rem_.segments();
  if (segs.find(channel_id) == segs.end()) return 0.0;
  const auto [lo, hi] = rem_.coverage(channel_id);
  return rem_.query_power(channel_id, std::clamp(route_distance, lo, hi)).sigma_db;
}

double HashShadowing::v2v_db(int a, int b) const {
  if (v2v_sigma_db_ == 0.0) return 0.0;
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return v2v_sigma_db_ * normal(1, lo, hi);
}

double HashShadowing::v2dtt_db(int vehicle, int receiver_id, int channel_id) const {
  if (!dtt_shadowing_) return 0.0;
  double d = world_.route.to_route(world_.vehicle(vehicle).x);
  if (receiver_id >= 0) d = world_.route.to_route(rem_.receiver(receiver_id).longitudinal_position);
  const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(receiver_id)) << 32) |
                   static_cast<std::uint32_t>(channel_id);
  return rem_sigma(channel_id, d) * normal(2, static_cast<std::uint64_t>(vehicle), key);
}

double HashShadowing::dtt_power_db(int vehicle, int channel_id) const {
  if (!dtt_shadowing_) return 0.0;
  const double d = world_.route.to_route(world_.vehicle(vehicle).x);
  return rem_sigma(channel_id, d) * normal(3, static_cast<std::uint64_t>(vehicle), static_cast<std::uint64_t>(channel_id));
}

void RunInputs::validate(const rem::RemDatabase& rem) const {
  scenario.validate();
  grid.validate();
  if (!std::isfinite(policy.gamma_dtt_dbm) || !std::isfinite(policy.sir_min_db)) {
    throw Error(Errc::config, "protection thresholds must be finite");
  }
  if (policy.margin_sigma < 0.0) throw Error(Errc::config, "protection margin must be >= 0");
  if (policy.mode == allocator::ProtectionMode::registry && rem.dtt_receivers().empty()) {
    throw Error(Errc::config, "registry protection needs DTT receivers in the REM");
  }
  if (!(radio.message_airtime_s > 0.0) || !(radio.slot_time_s > 0.0) ||
      radio.slot_time_s > radio.message_airtime_s) {
    throw Error(Errc::config, "need 0 < slot time <= message airtime");
  }
  if (!(sim.tick_period_s > radio.message_airtime_s)) throw Error(Errc::config, "message period must exceed airtime");
  const auto dt_us = to_us(scenario.mobility_dt);
  if (to_us(sim.reselection_period_s) <= 0 || to_us(sim.reselection_period_s) % dt_us != 0) {
    throw Error(Errc::config, "reselection period must be a positive multiple of the mobility step");
  }
  if (sim.warmup_s < 0.0 || sim.warmup_s >= scenario.duration_s) {
    throw Error(Errc::config, "warm-up must lie in [0, duration)");
  }
  if (!(sim.dtt_sir_radius_m > 0.0)) throw Error(Errc::config, "DTT SIR sampling radius must be positive");

  // Platoon cars must stay inside the REM for the whole run.
  const auto cover = rem.common_coverage();
  if (!cover) throw Error(Errc::config, "REM has no channel coverage");
  const double reach = kmh_to_ms(std::max(scenario.cruise_speed_kmh, scenario.jammer.v_high_kmh)) * scenario.duration_s;
  for (const auto& p : scenario.platoons) {
    const double gap = p.initial_gap.value_or(p.standstill_gap + p.time_gap * kmh_to_ms(scenario.jammer.v_high_kmh));
    const double rear = p.leader_x - (p.size - 1) * (gap + scenario.vehicle_length);
    const double a = scenario.route.to_route(rear);
    const double b = scenario.route.to_route(p.leader_x + reach);
    if (std::min(a, b) < cover->first || std::max(a, b) > cover->second) {
      throw Error(Errc::coverage, "REM coverage [" + std::to_string(cover->first) + ", " +
                                      std::to_string(cover->second) + "] m does not contain the platoon span [" +
                                      std::to_string(std::min(a, b)) + ", " + std::to_string(std::max(a, b)) + "] m");
    }
  }
}

StrategyChoice StrategyChoice::parse(std::string_view name) {
  if (name == "cch-only") return {};
  return {allocator::strategy_from_string(name)};
}

std::string StrategyChoice::name() const {
  return strategy ? std::string(allocator::to_string(*strategy)) : std::string("cch-only");
}

namespace {

class ReceivedInfo final : public scenario::InfoSource {
 public:
  std::optional<KinematicInfo> latest(int receiver_id, int source_id) const override {
    const auto it = table_.find({receiver_id, source_id});
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }
  void store(int receiver_id, int source_id, const KinematicInfo& info) { table_[{receiver_id, source_id}] = info; }

 private:
  std::map<std::pair<int, int>, KinematicInfo> table_;
};

KinematicInfo snapshot(const scenario::WorldState& world, int id) {
  const auto& v = world.vehicle(id);
  return {v.x, v.speed, v.accel, world.t};
}

}  // namespace

MetricsReport run(const RunInputs& inputs, const rem::RemDatabase& rem, StrategyChoice strategy, std::uint64_t seed) {
  inputs.validate(rem);
  const auto& cfg = inputs.scenario;
  auto world = scenario::init_world(cfg, seed);
  HashShadowing shadowing(seed, world, rem, inputs.radio.v2v_shadowing_sigma_db, inputs.radio.dtt_shadowing);
  const Environment env{world, rem, inputs.radio, inputs.acir, &shadowing, inputs.sim.tick_period_s,
                        2.0 * inputs.sim.tick_period_s};
  const Environment planning{world, rem, inputs.radio, inputs.acir, nullptr, inputs.sim.tick_period_s,
                             2.0 * inputs.sim.tick_period_s};
  const std::size_t n_platoons = world.platoons.size();

  MetricsReport report;
  report.strategy = strategy.name();
  report.seed = seed;
  report.duration_s = cfg.duration_s;
  report.warmup_s = inputs.sim.warmup_s;
  report.sir_threshold_db = inputs.sim.dtt_sir_threshold_db;
  report.dtt_channels = rem.dtt_channels();
  std::size_t max_size = 0;
  for (const auto& p : world.platoons) max_size = std::max(max_size, p.size());
  for (std::size_t i = 1; i < max_size; ++i) report.leader_reception.push_back({static_cast<int>(i), 0, 0});

  const std::int64_t dt_us = to_us(cfg.mobility_dt);
  const std::int64_t end_us = to_us(cfg.duration_s);
  const std::int64_t tick_us = to_us(inputs.sim.tick_period_s);
  const std::int64_t resel_us = to_us(inputs.sim.reselection_period_s);
  const std::int64_t warmup_us = to_us(inputs.sim.warmup_s);

  std::mt19937_64 rng(splitmix64(seed ^ 0x6d657373616765ULL));
  std::uniform_int_distribution<std::int64_t> phase_dist(0, tick_us - 1);
  std::vector<std::int64_t> phase(world.vehicles.size());
  for (auto& p : phase) p = phase_dist(rng);

  using Slot = std::pair<std::int64_t, int>;
  std::priority_queue<Slot, std::vector<Slot>, std::greater<>> queue;
  for (const auto& v : world.vehicles) {
    if (v.platoon_id) {
      queue.push({phase[static_cast<std::size_t>(v.id)], v.id});
    } else if (phase[static_cast<std::size_t>(v.id)] < end_us) {
      report.cch_offered_messages += (end_us - phase[static_cast<std::size_t>(v.id)] + tick_us - 1) / tick_us;
    }
  }

  ReceivedInfo info;
  for (const auto& members : world.platoons) {
    for (std::size_t i = 1; i < members.size(); ++i) {
      info.store(members[i], members.front(), snapshot(world, members.front()));
      info.store(members[i], members[i - 1], snapshot(world, members[i - 1]));
    }
  }

  FrequencyAssignment current;
  current.platoon_mhz.assign(n_platoons, std::nullopt);
  std::vector<bool> in_fallback(n_platoons, false);

  for (std::int64_t t_us = 0; t_us < end_us; t_us += dt_us) {
    if (t_us % resel_us == 0) {
      shadowing.set_epoch(t_us / resel_us);
      if (strategy.strategy) {
        const double t = static_cast<double>(t_us) * 1e-6;
        const auto sel = allocator::select(*strategy.strategy, inputs.grid, inputs.policy, planning, current,
                                           {inputs.sim.allocator_vv_mode});
        current = sel.assignment;
        report.reselection_times.push_back(t);
        report.assignments.push_back(current);
        report.min_sinr.push_back({t, sel.min_sinr_db});
        for (std::size_t k = 0; k < n_platoons; ++k) {
          const bool vacated = !current.platoon_mhz[k].has_value();
          if (vacated != in_fallback[k]) {
            report.fallback_log.push_back({t, static_cast<int>(k), vacated});
            in_fallback[k] = vacated;
          }
        }
      }
    }

    scenario::update_controls(cfg, world, info);

    while (!queue.empty() && queue.top().first < std::min(t_us + dt_us, end_us)) {
      const auto [time_us, tx] = queue.top();
      queue.pop();
      queue.push({time_us + tick_us, tx});

      const auto& vehicle = world.vehicle(tx);
      const int k = *vehicle.platoon_id;
      const std::int64_t tick_index = (time_us - phase[static_cast<std::size_t>(tx)]) / tick_us;
      const bool offloaded = current.of_platoon(k).has_value();

      MessageEvent event;
      event.tx = tx;
      event.t_start = static_cast<double>(time_us) * 1e-6;
      event.airtime = inputs.radio.message_airtime_s;
      event.payload = snapshot(world, tx);
      if (offloaded && tick_index % 2 == 1) {
        event.kind = MessageKind::cacc;
        event.band = Band::tvws;
        ++report.totals.tvws_messages;
      } else {
        ++report.totals.cch_platoon_messages;
      }

      const auto& members = world.platoons[static_cast<std::size_t>(k)];
      const auto pos = static_cast<std::size_t>(*world.platoon_position(tx));
      std::vector<int> receivers;
      if (pos == 0) {
        receivers.assign(members.begin() + 1, members.end());
      } else if (pos + 1 < members.size()) {
        receivers.push_back(members[pos + 1]);
      }

      const auto concurrent = sample_concurrent(env, event, current, rng);
      for (int rx : receivers) {
        const auto outcome = resolve_reception(env, event, rx, current, concurrent);
        ++report.totals.scheduled;
        if (outcome.received) {
          ++report.totals.received;
          info.store(rx, tx, event.payload);
        } else if (outcome.reason == LossReason::collision_co_located) {
          ++report.totals.lost_collision;
        } else {
          ++report.totals.lost_low_sinr;
        }
        if (pos == 0 && time_us >= warmup_us) {
          auto& stats = report.leader_reception[static_cast<std::size_t>(*world.platoon_position(rx) - 1)];
          ++stats.scheduled;
          if (outcome.received) ++stats.received;
        }
      }
      if (event.band == Band::tvws) {
        auto samples = record_dtt_sir(env, inputs.policy, event, current, concurrent, inputs.sim.dtt_sir_radius_m,
                                      inputs.sim.dtt_sir_population);
        report.dtt_sir.insert(report.dtt_sir.end(), samples.begin(), samples.end());
      }
    }

    scenario::step_mobility(world, cfg.mobility_dt);
  }

  report.cch_offered_messages += report.totals.cch_platoon_messages;
  report.switch_counts = report.assignments.empty() ? std::vector<int>(n_platoons, 0)
                                                    : allocator::count_switches(report.assignments);
  return report;
}

std::vector<MetricsReport> run_batch(const RunInputs& inputs, const rem::RemDatabase& rem,
                                     const std::vector<RunJob>& jobs, unsigned threads) {
  std::vector<MetricsReport> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = run(inputs, rem, jobs[i].strategy, jobs[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace vdsa::sim
