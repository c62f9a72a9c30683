#include "vdsa/radio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa::radio {

std::string_view to_string(PathlossKind kind) {
  switch (kind) {
    case PathlossKind::free_space: return "free_space";
    case PathlossKind::log_distance: return "log_distance";
    case PathlossKind::dual_slope: return "dual_slope";
  }
  return "dual_slope";
}

PathlossKind pathloss_kind_from_string(std::string_view name) {
  if (name == "free_space") return PathlossKind::free_space;
  if (name == "log_distance") return PathlossKind::log_distance;
  if (name == "dual_slope") return PathlossKind::dual_slope;
  throw Error(Errc::config, "unknown pathloss model '" + std::string(name) + "'");
}

double free_space_loss_db(double d, double f_mhz) {
  return 20.0 * std::log10(4.0 * std::numbers::pi * d * f_mhz * 1e6 / kSpeedOfLight);
}

double PathlossModel::gain_at(double d, double f_mhz) const {
  const double d0 = reference_distance_m;
  d = std::max(d, d0);
  if (fixed_frequency_mhz) f_mhz = *fixed_frequency_mhz;
  double loss_db = 0.0;
  switch (kind) {
    case PathlossKind::free_space:
      loss_db = free_space_loss_db(d, f_mhz);
      break;
    case PathlossKind::log_distance:
      loss_db = free_space_loss_db(d0, f_mhz) + 10.0 * exponent * std::log10(d / d0);
      break;
    case PathlossKind::dual_slope:
      if (d <= breakpoint_m) {
        loss_db = free_space_loss_db(d0, f_mhz) + 10.0 * exponent * std::log10(d / d0);
      } else {
        loss_db = free_space_loss_db(d0, f_mhz) + 10.0 * exponent * std::log10(breakpoint_m / d0) +
                  10.0 * exponent_far * std::log10(d / breakpoint_m);
      }
      break;
  }
  return std::min(1.0, db_to_linear(antenna_gain_db - loss_db));
}

double pathloss_gain(const PathlossModel& model, const Position& tx, const Position& rx, double f_mhz) {
  return model.gain(tx, rx, f_mhz);
}

double noise_power_w(double bandwidth_mhz, double noise_figure_db) {
  if (!(bandwidth_mhz > 0.0)) throw Error(Errc::invalid_argument, "bandwidth must be positive");
  return kBoltzmann * kReferenceTemperatureK * bandwidth_mhz * 1e6 * db_to_linear(noise_figure_db);
}

std::string_view to_string(AcirDirection d) {
  switch (d) {
    case AcirDirection::dtt_to_v: return "DTT_to_V";
    case AcirDirection::v_to_v: return "V_to_V";
    case AcirDirection::v_to_dtt: return "V_to_DTT";
  }
  return "V_to_V";
}

AcirDirection acir_direction_from_string(std::string_view name) {
  if (name == "DTT_to_V") return AcirDirection::dtt_to_v;
  if (name == "V_to_V") return AcirDirection::v_to_v;
  if (name == "V_to_DTT") return AcirDirection::v_to_dtt;
  throw Error(Errc::config, "unknown ACIR direction '" + std::string(name) + "'");
}

std::string_view to_string(AcirInterpolation m) {
  return m == AcirInterpolation::step ? "step" : "linear_db";
}

AcirInterpolation acir_interpolation_from_string(std::string_view name) {
  if (name == "step") return AcirInterpolation::step;
  if (name == "linear_db") return AcirInterpolation::linear_db;
  throw Error(Errc::config, "unknown ACIR interpolation '" + std::string(name) + "'");
}

double compose_acir_db(double aclr_db, double acs_db) {
  return linear_to_db(db_to_linear(-aclr_db) + db_to_linear(-acs_db));
}

namespace {

void validate_curve(const std::vector<double>& offsets, const std::vector<double>& db, double floor_db,
                    const char* what) {
  if (offsets.empty() || offsets.size() != db.size()) {
    throw Error(Errc::config, std::string(what) + ": offsets and values must be non-empty and equally sized");
  }
  if (offsets.front() != 0.0 || db.front() != 0.0) {
    throw Error(Errc::config, std::string(what) + ": table must start with 0 dB coupling at 0 MHz");
  }
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (!(offsets[i] > offsets[i - 1])) throw Error(Errc::config, std::string(what) + ": offsets must increase");
    if (db[i] > db[i - 1]) throw Error(Errc::config, std::string(what) + ": coupling must not increase with offset");
  }
  for (double v : db) {
    if (std::isnan(v) || v > 0.0) throw Error(Errc::config, std::string(what) + ": coupling must lie in <0,1>");
  }
  if (std::isnan(floor_db) || floor_db > db.back()) {
    throw Error(Errc::config, std::string(what) + ": floor must not exceed the last table value");
  }
}

}  // namespace

AcirTable::AcirTable(AcirDirection direction, std::vector<double> offsets_mhz, std::vector<double> acir_db,
                     std::optional<std::vector<double>> saturated_db, double floor_db, double saturation_threshold_dbm,
                     AcirInterpolation interpolation)
    : direction_(direction),
      offsets_(std::move(offsets_mhz)),
      acir_db_(std::move(acir_db)),
      saturated_db_(std::move(saturated_db)),
      floor_db_(floor_db),
      saturation_threshold_dbm_(saturation_threshold_dbm),
      interpolation_(interpolation) {
  validate_curve(offsets_, acir_db_, floor_db_, "ACIR table");
  if (saturated_db_) {
    if (direction_ != AcirDirection::v_to_dtt) {
      throw Error(Errc::config, "saturated tier is only defined for V_to_DTT tables");
    }
    validate_curve(offsets_, *saturated_db_, floor_db_, "saturated ACIR table");
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      if ((*saturated_db_)[i] < acir_db_[i]) {
        throw Error(Errc::config, "saturated coupling must be >= normal coupling at every offset");
      }
    }
  }
}

AcirTable AcirTable::from_linear(AcirDirection direction, std::vector<double> offsets_mhz,
                                 std::vector<double> coupling, double floor_linear,
                                 AcirInterpolation interpolation) {
  std::vector<double> db;
  db.reserve(coupling.size());
  for (double c : coupling) {
    if (c < 0.0 || c > 1.0) throw Error(Errc::config, "linear coupling outside <0,1>");
    db.push_back(c == 0.0 ? -std::numeric_limits<double>::infinity() : linear_to_db(c));
  }
  const double floor_db = floor_linear == 0.0 ? -std::numeric_limits<double>::infinity() : linear_to_db(floor_linear);
  return AcirTable(direction, std::move(offsets_mhz), std::move(db), std::nullopt, floor_db, -45.0, interpolation);
}

double AcirTable::lookup(const std::vector<double>& db, double df) const {
  const auto& offsets = offsets_;
  if (df > offsets.back()) return db_to_linear(floor_db_);
  auto hi = std::lower_bound(offsets.begin(), offsets.end(), df);
  const auto i = static_cast<std::size_t>(hi - offsets.begin());
  if (*hi == df) return db_to_linear(db[i]);
  if (interpolation_ == AcirInterpolation::step) return db_to_linear(db[i - 1]);
  const double t = (df - offsets[i - 1]) / (offsets[i] - offsets[i - 1]);
  if (std::isinf(db[i])) return 0.0;
  return db_to_linear(db[i - 1] + t * (db[i] - db[i - 1]));
}

double AcirTable::coupling(double delta_f_mhz, std::optional<double> dtt_power_dbm) const {
  const double df = std::abs(delta_f_mhz);
  if (saturated_db_ && dtt_power_dbm && *dtt_power_dbm > saturation_threshold_dbm_) {
    return lookup(*saturated_db_, df);
  }
  return lookup(acir_db_, df);
}

const AcirTable& AcirSet::table(AcirDirection d) const {
  switch (d) {
    case AcirDirection::dtt_to_v: return dtt_to_v;
    case AcirDirection::v_to_v: return v_to_v;
    case AcirDirection::v_to_dtt: return v_to_dtt;
  }
  return v_to_v;
}

AcirTable& AcirSet::table(AcirDirection d) {
  return const_cast<AcirTable&>(static_cast<const AcirSet&>(*this).table(d));
}

double acir(const AcirSet& tables, AcirDirection direction, double delta_f_mhz, std::optional<double> dtt_power_dbm) {
  return tables.table(direction).coupling(delta_f_mhz, dtt_power_dbm);
}

AcirSet default_acir_tables() {
  struct Pair {
    double aclr;
    double acs;
  };
  auto compose = [](const std::vector<Pair>& pairs, double acs_penalty) {
    std::vector<double> out{0.0};
    for (const auto& p : pairs) out.push_back(compose_acir_db(p.aclr, p.acs - acs_penalty));
    return out;
  };

  // DVB-T transmitter mask leaking into a 10 MHz V2V receiver.
  const std::vector<double> dtt_offsets{0.0, 8.0, 16.0, 24.0, 32.0};
  const std::vector<Pair> dtt_to_v_pairs{{50.0, 30.0}, {60.0, 40.0}, {65.0, 45.0}, {70.0, 50.0}};
  // V2V transmitter leaking into a DTT receiver; saturated receivers lose 10 dB of selectivity.
  const std::vector<Pair> v_to_dtt_pairs{{60.0, 59.0}, {75.0, 72.0}, {86.0, 84.0}, {90.0, 88.0}};
  const auto v_to_dtt_db = compose(v_to_dtt_pairs, 0.0);
  const auto v_to_dtt_sat_db = compose(v_to_dtt_pairs, 10.0);

  AcirSet set;
  set.dtt_to_v = AcirTable(AcirDirection::dtt_to_v, dtt_offsets, compose(dtt_to_v_pairs, 0.0), std::nullopt, -60.0);
  set.v_to_dtt = AcirTable(AcirDirection::v_to_dtt, dtt_offsets, v_to_dtt_db, v_to_dtt_sat_db,
                           std::min(v_to_dtt_db.back(), v_to_dtt_sat_db.back()) - 5.0, -45.0);
  set.v_to_v = AcirTable(AcirDirection::v_to_v, {0.0, 5.0, 10.0, 15.0, 20.0, 30.0},
                         {0.0, -10.0, -26.0, -32.0, -38.0, -45.0}, std::nullopt, -50.0);
  return set;
}

std::string acir_table_to_json(const AcirTable& table) {
  nlohmann::ordered_json j;
  j["direction"] = std::string(to_string(table.direction()));
  j["offsets_mhz"] = table.offsets_mhz();
  j["acir_db"] = table.acir_db();
  if (table.saturated_acir_db()) j["saturated_acir_db"] = *table.saturated_acir_db();
  j["floor_db"] = table.floor_db();
  j["saturation_threshold_dbm"] = table.saturation_threshold_dbm();
  j["interpolation"] = std::string(to_string(table.interpolation()));
  return j.dump(2);
}

AcirTable acir_table_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto direction = acir_direction_from_string(j.at("direction").get<std::string>());
    auto offsets = j.at("offsets_mhz").get<std::vector<double>>();
    auto values = j.at("acir_db").get<std::vector<double>>();
    std::optional<std::vector<double>> saturated;
    if (j.contains("saturated_acir_db") && !j["saturated_acir_db"].is_null()) {
      saturated = j["saturated_acir_db"].get<std::vector<double>>();
    }
    const double last = values.empty() ? 0.0 : values.back();
    const double floor_db = j.value("floor_db", last);
    const double threshold = j.value("saturation_threshold_dbm", -45.0);
    const auto mode = acir_interpolation_from_string(j.value("interpolation", std::string("step")));
    return AcirTable(direction, std::move(offsets), std::move(values), std::move(saturated), floor_db, threshold,
                     mode);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("ACIR table: ") + e.what());
  }
}

double RadioConfig::propagation_mhz(double f_mhz) const {
  if (f_mhz == cch_center_mhz || !tvws_propagation_mhz) return f_mhz;
  return *tvws_propagation_mhz;
}

double RadioConfig::tx_power_w() const { return dbm_to_watt(tx_power_dbm); }

double RadioConfig::noise_w() const { return noise_power_w(bandwidth_mhz, noise_figure_db); }

}  // namespace vdsa::radio
