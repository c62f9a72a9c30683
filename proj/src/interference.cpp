#include "vdsa/interference.hpp"

#include <cmath>
#include <limits>

#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa::interference {

using scenario::Role;

std::string_view to_string(VvMode mode) { return mode == VvMode::all_nodes ? "all_nodes" : "hidden_only"; }

VvMode vv_mode_from_string(std::string_view name) {
  if (name == "all_nodes") return VvMode::all_nodes;
  if (name == "hidden_only") return VvMode::hidden_only;
  throw Error(Errc::config, "unknown V2V interference mode '" + std::string(name) + "'");
}

std::vector<Link> link_set(const scenario::WorldState& world) {
  std::vector<Link> links;
  for (std::size_t k = 0; k < world.platoons.size(); ++k) {
    const auto& members = world.platoons[k];
    for (std::size_t i = 1; i < members.size(); ++i) {
      links.push_back({members[i], members.front(), static_cast<int>(k), true});
      if (i > 1) links.push_back({members[i], members[i - 1], static_cast<int>(k), false});
    }
  }
  return links;
}

double tx_probability(double message_airtime, double message_period) {
  if (!(message_airtime > 0.0) || !(message_airtime < message_period)) {
    throw Error(Errc::invalid_argument, "transmission probability needs 0 < airtime < period");
  }
  return message_airtime / message_period;
}

double Environment::route_distance(int vehicle) const { return world.route.to_route(world.vehicle(vehicle).x); }

double Environment::v2v_gain(int a, int b, double f_mhz) const {
  double g = radio.v2v_pathloss.gain(world.vehicle(a).position(), world.vehicle(b).position(), radio.propagation_mhz(f_mhz));
  if (shadowing) g *= db_to_linear(shadowing->v2v_db(a, b));
  return g;
}

std::vector<int> Environment::transmitters(const FrequencyAssignment& assignment, Band band) const {
  std::vector<int> out;
  if (band == Band::cch) {
    out.reserve(world.vehicles.size());
    for (const auto& v : world.vehicles) out.push_back(v.id);
    return out;
  }
  for (std::size_t k = 0; k < world.platoons.size(); ++k) {
    if (!assignment.of_platoon(static_cast<int>(k))) continue;
    out.insert(out.end(), world.platoons[k].begin(), world.platoons[k].end());
  }
  return out;
}

std::optional<double> Environment::frequency(int vehicle, const FrequencyAssignment& assignment, Band band) const {
  if (band == Band::cch) return radio.cch_center_mhz;
  const auto pid = world.vehicle(vehicle).platoon_id;
  if (!pid) return std::nullopt;
  return assignment.of_platoon(*pid);
}

double Environment::tx_probability_of(int vehicle, const FrequencyAssignment& assignment, Band band) const {
  if (band == Band::tvws) return tx_probability(radio.message_airtime_s, tvws_period_s);
  const auto pid = world.vehicle(vehicle).platoon_id;
  const bool offloaded = pid && assignment.of_platoon(*pid).has_value();
  return tx_probability(radio.message_airtime_s, offloaded ? tvws_period_s : cch_period_s);
}

std::vector<int> hidden_node_set(const Environment& env, int tx, const FrequencyAssignment& assignment, Band band,
                                 double cs_threshold_dbm) {
  std::vector<int> hidden;
  const auto f_tx = env.frequency(tx, assignment, band);
  if (!f_tx) return hidden;
  if (cs_threshold_dbm == -std::numeric_limits<double>::infinity()) return hidden;
  const bool all = cs_threshold_dbm == std::numeric_limits<double>::infinity();
  const double gamma_w = all ? 0.0 : dbm_to_watt(cs_threshold_dbm);
  const double p_tx = env.radio.tx_power_w();
  for (int j : env.transmitters(assignment, band)) {
    if (j == tx) continue;
    if (all) {
      hidden.push_back(j);
      continue;
    }
    const double f_j = *env.frequency(j, assignment, band);
    const double sensed = p_tx * env.v2v_gain(tx, j, *f_tx) * env.acir.v_to_v.coupling(f_j - *f_tx);
    if (sensed < gamma_w) hidden.push_back(j);
  }
  return hidden;
}

double pu_to_v_interference(const rem::RemDatabase& rem, const radio::AcirSet& acir, double route_distance,
                            double f_v_mhz) {
  double total = 0.0;
  for (const auto& ch : rem.dtt_channels()) {
    const auto p = rem.query_power(ch.channel_id, route_distance);
    total += dbm_to_watt(p.mean_dbm) * acir.dtt_to_v.coupling(ch.center_mhz - f_v_mhz);
  }
  return total;
}

double pu_to_v_interference(const Environment& env, int rx, double f_v_mhz) {
  const double d = env.route_distance(rx);
  double total = 0.0;
  for (const auto& ch : env.rem.dtt_channels()) {
    double p_dbm = env.rem.query_power(ch.channel_id, d).mean_dbm;
    if (env.shadowing) p_dbm += env.shadowing->dtt_power_db(rx, ch.channel_id);
    total += dbm_to_watt(p_dbm) * env.acir.dtt_to_v.coupling(ch.center_mhz - f_v_mhz);
  }
  return total;
}

namespace {

double expected_sum(const Environment& env, int rx, const std::vector<int>& interferers, double f_wanted,
                    const FrequencyAssignment& assignment, Band band, int exclude_tx) {
  const double p = env.radio.tx_power_w();
  double total = 0.0;
  for (int j : interferers) {
    if (j == exclude_tx || j == rx) continue;
    const double f_j = *env.frequency(j, assignment, band);
    total += env.tx_probability_of(j, assignment, band) * p * env.v2v_gain(j, rx, f_wanted) *
             env.acir.v_to_v.coupling(f_j - f_wanted);
  }
  return total;
}

SinrTerms terms_with(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment, Band band,
                     const std::vector<int>& interferers) {
  const auto f = env.frequency(tx, assignment, band);
  if (!f) throw Error(Errc::invalid_argument, "transmitter has no frequency on the requested band");
  SinrTerms t;
  t.signal_w = env.radio.tx_power_w() * env.v2v_gain(tx, rx, *f);
  t.noise_w = env.radio.noise_w();
  t.pu_w = band == Band::tvws ? pu_to_v_interference(env, rx, *f) : 0.0;
  t.vv_w = expected_sum(env, rx, interferers, *f, assignment, band, tx);
  return t;
}

std::vector<int> candidate_interferers(const Environment& env, int tx, const FrequencyAssignment& assignment, Band band,
                                       VvMode mode) {
  if (mode == VvMode::hidden_only) return hidden_node_set(env, tx, assignment, band, env.radio.cs_threshold_dbm);
  return env.transmitters(assignment, band);
}

}  // namespace

double v_to_v_expected_interference(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment,
                                    Band band, VvMode mode) {
  const auto f = env.frequency(tx, assignment, band);
  if (!f) return 0.0;
  return expected_sum(env, rx, candidate_interferers(env, tx, assignment, band, mode), *f, assignment, band, tx);
}

double v_to_dtt_interference(const Environment& env, int tx, const scenario::DttReceiverSite& site, int channel_id,
                             double f_mhz, double dtt_power_dbm) {
  const auto rx_pos = env.world.receiver_position(site);
  double g = env.radio.v2dtt_pathloss.gain(env.world.vehicle(tx).position(), rx_pos, env.radio.propagation_mhz(f_mhz));
  if (env.shadowing) g *= db_to_linear(env.shadowing->v2dtt_db(tx, site.id, channel_id));
  const double f_dtt = env.rem.channel_center_mhz(channel_id);
  return env.radio.tx_power_w() * g * env.acir.v_to_dtt.coupling(f_dtt - f_mhz, dtt_power_dbm);
}

double SinrTerms::sinr_db() const { return linear_to_db(sinr_linear()); }

SinrTerms sinr_terms(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment, Band band,
                     VvMode mode) {
  return terms_with(env, rx, tx, assignment, band, candidate_interferers(env, tx, assignment, band, mode));
}

double sinr(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment, Band band, VvMode mode) {
  return sinr_terms(env, rx, tx, assignment, band, mode).sinr_db();
}

std::optional<MinSinr> min_pair_sinr(const Environment& env, const FrequencyAssignment& assignment, VvMode mode) {
  std::optional<MinSinr> best;
  std::vector<std::optional<std::vector<int>>> cache(env.world.vehicles.size());
  for (const auto& link : link_set(env.world)) {
    if (!assignment.of_platoon(link.platoon)) continue;
    auto& interferers = cache[static_cast<std::size_t>(link.tx)];
    if (!interferers) interferers = candidate_interferers(env, link.tx, assignment, Band::tvws, mode);
    const double value = terms_with(env, link.rx, link.tx, assignment, Band::tvws, *interferers).sinr_db();
    if (!best || value < best->sinr_db) best = MinSinr{value, link};
  }
  return best;
}

}  // namespace vdsa::interference
