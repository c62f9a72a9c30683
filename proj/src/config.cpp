#include "vdsa/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vdsa/error.hpp"

namespace vdsa::config {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads the keys of one JSON object into fields, rejecting unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw Error(Errc::config, where_ + ": expected an object");
  }

  template <typename T>
  Reader& get(const char* key, T& field) {
    known_.insert(key);
    if (j_.contains(key)) {
      try {
        field = j_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error(Errc::config, where_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  template <typename T>
  Reader& get_optional(const char* key, std::optional<T>& field) {
    known_.insert(key);
    if (j_.contains(key)) {
      if (j_.at(key).is_null()) {
        field.reset();
      } else {
        T v{};
        get(key, v);
        field = v;
      }
    }
    return *this;
  }

  template <typename F>
  Reader& nested(const char* key, F&& f) {
    known_.insert(key);
    if (j_.contains(key)) f(j_.at(key), where_ + "." + key);
    return *this;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!known_.count(k)) throw Error(Errc::config, where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

ordered_json pathloss_json(const radio::PathlossModel& m) {
  ordered_json j;
  j["kind"] = std::string(radio::to_string(m.kind));
  j["exponent"] = m.exponent;
  j["exponent_far"] = m.exponent_far;
  j["breakpoint_m"] = m.breakpoint_m;
  j["reference_distance_m"] = m.reference_distance_m;
  j["antenna_gain_db"] = m.antenna_gain_db;
  j["fixed_frequency_mhz"] = m.fixed_frequency_mhz ? ordered_json(*m.fixed_frequency_mhz) : ordered_json(nullptr);
  return j;
}

void read_pathloss(const json& j, const std::string& where, radio::PathlossModel& m) {
  std::string kind(radio::to_string(m.kind));
  Reader(j, where)
      .get("kind", kind)
      .get("exponent", m.exponent)
      .get("exponent_far", m.exponent_far)
      .get("breakpoint_m", m.breakpoint_m)
      .get("reference_distance_m", m.reference_distance_m)
      .get("antenna_gain_db", m.antenna_gain_db)
      .get_optional("fixed_frequency_mhz", m.fixed_frequency_mhz)
      .finish();
  m.kind = radio::pathloss_kind_from_string(kind);
}

ordered_json platoon_json(const scenario::PlatoonConfig& p) {
  ordered_json j;
  j["size"] = p.size;
  j["lane"] = p.lane;
  j["leader_x_m"] = p.leader_x;
  j["time_gap_s"] = p.time_gap;
  j["standstill_gap_m"] = p.standstill_gap;
  j["initial_gap_m"] = p.initial_gap ? ordered_json(*p.initial_gap) : ordered_json(nullptr);
  j["gains"] = {{"leader_weight", p.gains.leader_weight},
                {"kp", p.gains.kp},
                {"kd", p.gains.kd},
                {"kv_leader", p.gains.kv_leader}};
  return j;
}

scenario::PlatoonConfig read_platoon(const json& j, const std::string& where) {
  scenario::PlatoonConfig p;
  Reader(j, where)
      .get("size", p.size)
      .get("lane", p.lane)
      .get("leader_x_m", p.leader_x)
      .get("time_gap_s", p.time_gap)
      .get("standstill_gap_m", p.standstill_gap)
      .get_optional("initial_gap_m", p.initial_gap)
      .nested("gains",
              [&](const json& g, const std::string& w) {
                Reader(g, w)
                    .get("leader_weight", p.gains.leader_weight)
                    .get("kp", p.gains.kp)
                    .get("kd", p.gains.kd)
                    .get("kv_leader", p.gains.kv_leader)
                    .finish();
              })
      .finish();
  return p;
}

ordered_json scenario_json(const scenario::ScenarioConfig& s) {
  ordered_json j;
  j["platoons"] = ordered_json::array();
  for (const auto& p : s.platoons) j["platoons"].push_back(platoon_json(p));
  j["lanes"] = s.lanes;
  j["lane_width_m"] = s.lane_width;
  j["background_lanes"] = s.background_lanes;
  j["background_density_per_km_lane"] = s.background_density_per_km_lane;
  j["background_span_m"] = {s.background_span_start, s.background_span_end};
  j["background_speed_kmh"] = {s.background_v_min_kmh, s.background_v_max_kmh};
  j["vehicle_length_m"] = s.vehicle_length;
  j["min_spacing_m"] = s.min_spacing;
  j["jammer"] = {{"enabled", s.jammer.enabled},
                 {"v_high_kmh", s.jammer.v_high_kmh},
                 {"v_low_kmh", s.jammer.v_low_kmh},
                 {"period_s", s.jammer.period_s},
                 {"time_gap_s", s.jammer.time_gap}};
  j["duration_s"] = s.duration_s;
  j["mobility_dt_s"] = s.mobility_dt;
  j["accel_limits_ms2"] = {s.accel_min, s.accel_max};
  j["staleness_bound_s"] = s.staleness_bound_s;
  j["cruise_speed_kmh"] = s.cruise_speed_kmh;
  j["route"] = {{"offset_m", s.route.offset_m}, {"scale", s.route.scale}};
  j["dtt_receivers"] = ordered_json::array();
  for (const auto& r : s.dtt_receivers) {
    j["dtt_receivers"].push_back({{"id", r.id},
                                  {"longitudinal_position_m", r.longitudinal_position},
                                  {"distance_to_motorway_m", r.distance_to_motorway},
                                  {"group", r.group}});
  }
  return j;
}

void read_pair(const json& j, const std::string& where, double& a, double& b) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::config, where + ": expected [low, high]");
  a = j[0].get<double>();
  b = j[1].get<double>();
}

void read_scenario(const json& j, const std::string& where, scenario::ScenarioConfig& s) {
  Reader(j, where)
      .nested("platoons",
              [&](const json& arr, const std::string& w) {
                if (!arr.is_array()) throw Error(Errc::config, w + ": expected an array");
                s.platoons.clear();
                for (std::size_t i = 0; i < arr.size(); ++i) {
                  s.platoons.push_back(read_platoon(arr[i], w + "[" + std::to_string(i) + "]"));
                }
              })
      .get("lanes", s.lanes)
      .get("lane_width_m", s.lane_width)
      .get("background_lanes", s.background_lanes)
      .get("background_density_per_km_lane", s.background_density_per_km_lane)
      .nested("background_span_m",
              [&](const json& v, const std::string& w) { read_pair(v, w, s.background_span_start, s.background_span_end); })
      .nested("background_speed_kmh",
              [&](const json& v, const std::string& w) { read_pair(v, w, s.background_v_min_kmh, s.background_v_max_kmh); })
      .get("vehicle_length_m", s.vehicle_length)
      .get("min_spacing_m", s.min_spacing)
      .nested("jammer",
              [&](const json& v, const std::string& w) {
                Reader(v, w)
                    .get("enabled", s.jammer.enabled)
                    .get("v_high_kmh", s.jammer.v_high_kmh)
                    .get("v_low_kmh", s.jammer.v_low_kmh)
                    .get("period_s", s.jammer.period_s)
                    .get("time_gap_s", s.jammer.time_gap)
                    .finish();
              })
      .get("duration_s", s.duration_s)
      .get("mobility_dt_s", s.mobility_dt)
      .nested("accel_limits_ms2",
              [&](const json& v, const std::string& w) { read_pair(v, w, s.accel_min, s.accel_max); })
      .get("staleness_bound_s", s.staleness_bound_s)
      .get("cruise_speed_kmh", s.cruise_speed_kmh)
      .nested("route",
              [&](const json& v, const std::string& w) {
                Reader(v, w).get("offset_m", s.route.offset_m).get("scale", s.route.scale).finish();
              })
      .nested("dtt_receivers", [&](const json& arr, const std::string& w) {
        if (!arr.is_array()) throw Error(Errc::config, w + ": expected an array");
        s.dtt_receivers.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
          scenario::DttReceiverSite r;
          Reader(arr[i], w + "[" + std::to_string(i) + "]")
              .get("id", r.id)
              .get("longitudinal_position_m", r.longitudinal_position)
              .get("distance_to_motorway_m", r.distance_to_motorway)
              .get("group", r.group)
              .finish();
          s.dtt_receivers.push_back(r);
        }
      })
      .finish();
}

ordered_json radio_json(const radio::RadioConfig& r) {
  ordered_json j;
  j["tx_power_dbm"] = r.tx_power_dbm;
  j["bandwidth_mhz"] = r.bandwidth_mhz;
  j["noise_figure_db"] = r.noise_figure_db;
  j["cs_threshold_dbm"] = r.cs_threshold_dbm;
  j["rx_sinr_threshold_db"] = r.rx_sinr_threshold_db;
  j["cch_center_mhz"] = r.cch_center_mhz;
  j["message_airtime_s"] = r.message_airtime_s;
  j["slot_time_s"] = r.slot_time_s;
  j["v2v_shadowing_sigma_db"] = r.v2v_shadowing_sigma_db;
  j["dtt_shadowing"] = r.dtt_shadowing;
  j["v2v_pathloss"] = pathloss_json(r.v2v_pathloss);
  j["v2dtt_pathloss"] = pathloss_json(r.v2dtt_pathloss);
  j["tvws_propagation_mhz"] = r.tvws_propagation_mhz ? ordered_json(*r.tvws_propagation_mhz) : ordered_json(nullptr);
  return j;
}

void read_radio(const json& j, const std::string& where, radio::RadioConfig& r) {
  Reader(j, where)
      .get("tx_power_dbm", r.tx_power_dbm)
      .get("bandwidth_mhz", r.bandwidth_mhz)
      .get("noise_figure_db", r.noise_figure_db)
      .get("cs_threshold_dbm", r.cs_threshold_dbm)
      .get("rx_sinr_threshold_db", r.rx_sinr_threshold_db)
      .get("cch_center_mhz", r.cch_center_mhz)
      .get("message_airtime_s", r.message_airtime_s)
      .get("slot_time_s", r.slot_time_s)
      .get("v2v_shadowing_sigma_db", r.v2v_shadowing_sigma_db)
      .get("dtt_shadowing", r.dtt_shadowing)
      .nested("v2v_pathloss", [&](const json& v, const std::string& w) { read_pathloss(v, w, r.v2v_pathloss); })
      .nested("v2dtt_pathloss", [&](const json& v, const std::string& w) { read_pathloss(v, w, r.v2dtt_pathloss); })
      .get_optional("tvws_propagation_mhz", r.tvws_propagation_mhz)
      .finish();
}

}  // namespace

std::string dump_config(const sim::RunInputs& in) {
  ordered_json j;
  j["scenario"] = scenario_json(in.scenario);
  j["radio"] = radio_json(in.radio);
  j["acir"] = {{"DTT_to_V", ordered_json::parse(radio::acir_table_to_json(in.acir.dtt_to_v))},
               {"V_to_V", ordered_json::parse(radio::acir_table_to_json(in.acir.v_to_v))},
               {"V_to_DTT", ordered_json::parse(radio::acir_table_to_json(in.acir.v_to_dtt))}};
  j["protection"] = {{"gamma_dtt_dbm", in.policy.gamma_dtt_dbm},
                     {"sir_min_db", in.policy.sir_min_db},
                     {"mode", std::string(allocator::to_string(in.policy.mode))},
                     {"margin_sigma", in.policy.margin_sigma},
                     {"worst_case_distance_m", in.policy.worst_case_distance_m}};
  j["grid"] = {{"candidates_mhz", in.grid.candidates_mhz}, {"dtt_centers_mhz", in.grid.dtt_centers_mhz}};
  j["simulation"] = {{"reselection_period_s", in.sim.reselection_period_s},
                     {"warmup_s", in.sim.warmup_s},
                     {"tick_period_s", in.sim.tick_period_s},
                     {"dtt_sir_threshold_db", in.sim.dtt_sir_threshold_db},
                     {"dtt_sir_radius_m", in.sim.dtt_sir_radius_m},
                     {"dtt_sir_population", std::string(sim::to_string(in.sim.dtt_sir_population))},
                     {"allocator_vv_mode", std::string(interference::to_string(in.sim.allocator_vv_mode))}};
  return j.dump(2);
}

sim::RunInputs parse_config(const std::string& text, const sim::RunInputs& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("config: ") + e.what());
  }
  sim::RunInputs in = base;
  try {
    Reader(j, "config")
        .nested("scenario", [&](const json& v, const std::string& w) { read_scenario(v, w, in.scenario); })
        .nested("radio", [&](const json& v, const std::string& w) { read_radio(v, w, in.radio); })
        .nested("acir",
                [&](const json& v, const std::string& w) {
                  Reader r(v, w);
                  for (const char* key : {"DTT_to_V", "V_to_V", "V_to_DTT"}) {
                    r.nested(key, [&](const json& t, const std::string&) {
                      auto table = radio::acir_table_from_json(t.dump());
                      if (table.direction() != radio::acir_direction_from_string(key)) {
                        throw Error(Errc::config, w + "." + key + ": direction mismatch");
                      }
                      in.acir.table(table.direction()) = std::move(table);
                    });
                  }
                  r.finish();
                })
        .nested("protection",
                [&](const json& v, const std::string& w) {
                  std::string mode(allocator::to_string(in.policy.mode));
                  Reader(v, w)
                      .get("gamma_dtt_dbm", in.policy.gamma_dtt_dbm)
                      .get("sir_min_db", in.policy.sir_min_db)
                      .get("mode", mode)
                      .get("margin_sigma", in.policy.margin_sigma)
                      .get("worst_case_distance_m", in.policy.worst_case_distance_m)
                      .finish();
                  in.policy.mode = allocator::protection_mode_from_string(mode);
                })
        .nested("grid",
                [&](const json& v, const std::string& w) {
                  Reader(v, w)
                      .get("candidates_mhz", in.grid.candidates_mhz)
                      .get("dtt_centers_mhz", in.grid.dtt_centers_mhz)
                      .finish();
                })
        .nested("simulation",
                [&](const json& v, const std::string& w) {
                  std::string mode(interference::to_string(in.sim.allocator_vv_mode));
                  std::string population(sim::to_string(in.sim.dtt_sir_population));
                  Reader(v, w)
                      .get("reselection_period_s", in.sim.reselection_period_s)
                      .get("warmup_s", in.sim.warmup_s)
                      .get("tick_period_s", in.sim.tick_period_s)
                      .get("dtt_sir_threshold_db", in.sim.dtt_sir_threshold_db)
                      .get("dtt_sir_radius_m", in.sim.dtt_sir_radius_m)
                      .get("dtt_sir_population", population)
                      .get("allocator_vv_mode", mode)
                      .finish();
                  in.sim.dtt_sir_population = sim::sir_population_from_string(population);
                  in.sim.allocator_vv_mode = interference::vv_mode_from_string(mode);
                })
        .finish();
  } catch (const json::exception& e) {
    throw Error(Errc::config, std::string("config: ") + e.what());
  }
  return in;
}

sim::RunInputs load_config(const std::filesystem::path& path, const sim::RunInputs& base) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), base);
}

}  // namespace vdsa::config
