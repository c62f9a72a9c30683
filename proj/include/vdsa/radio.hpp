#pragma once

// Link-level radio primitives: propagation gain, thermal noise and the
// adjacent-channel coupling (ACIR) used in all three interference directions.
// All returned gains and couplings are linear factors.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vdsa/geometry.hpp"

namespace vdsa::radio {

enum class PathlossKind { free_space, log_distance, dual_slope };

std::string_view to_string(PathlossKind kind);
PathlossKind pathloss_kind_from_string(std::string_view name);

struct PathlossModel {
  PathlossKind kind = PathlossKind::dual_slope;
  double exponent = 2.0;            // up to the breakpoint (log_distance: everywhere)
  double exponent_far = 4.0;        // beyond the breakpoint (dual_slope only)
  double breakpoint_m = 200.0;
  double reference_distance_m = 1.0;
  double antenna_gain_db = 0.0;     // sum of TX and RX antenna gains
  std::optional<double> fixed_frequency_mhz;  // narrowband: Friis term at this frequency

  /// Linear gain in (0, 1] at distance `d` (m) and frequency `f_mhz`.
  /// Distances below the reference distance are clamped to it.
  double gain_at(double d, double f_mhz) const;
  double gain(const Position& tx, const Position& rx, double f_mhz) const { return gain_at(distance(tx, rx), f_mhz); }

  bool operator==(const PathlossModel&) const = default;
};

/// Free-space loss in dB at `d` metres.
double free_space_loss_db(double d, double f_mhz);

double pathloss_gain(const PathlossModel& model, const Position& tx, const Position& rx, double f_mhz);

/// k*T0*B scaled by the noise figure, in watts.
double noise_power_w(double bandwidth_mhz, double noise_figure_db);

enum class AcirDirection { dtt_to_v, v_to_v, v_to_dtt };

std::string_view to_string(AcirDirection d);
AcirDirection acir_direction_from_string(std::string_view name);

/// Coupling ACIR in dB (<= 0) from leakage and selectivity ratios (positive dB):
/// 1/ACIR = 1/ACLR + 1/ACS.
double compose_acir_db(double aclr_db, double acs_db);

/// How offsets between listed entries are resolved. `step` holds the value of
/// the nearest listed offset below; `linear_db` interpolates in dB.
enum class AcirInterpolation { step, linear_db };

std::string_view to_string(AcirInterpolation m);
AcirInterpolation acir_interpolation_from_string(std::string_view name);

/// Frequency offset -> coupling table. Beyond the last offset the floor applies.
class AcirTable {
 public:
  AcirTable() = default;

  /// Values in dB; `saturated_db` (V-to-DTT only) is the degraded-selectivity tier.
  AcirTable(AcirDirection direction, std::vector<double> offsets_mhz, std::vector<double> acir_db,
            std::optional<std::vector<double>> saturated_db = std::nullopt, double floor_db = -100.0,
            double saturation_threshold_dbm = -45.0, AcirInterpolation interpolation = AcirInterpolation::step);

  /// Linear construction; allows exact zero coupling.
  static AcirTable from_linear(AcirDirection direction, std::vector<double> offsets_mhz, std::vector<double> coupling,
                               double floor_linear, AcirInterpolation interpolation = AcirInterpolation::step);

  AcirDirection direction() const { return direction_; }
  const std::vector<double>& offsets_mhz() const { return offsets_; }
  const std::vector<double>& acir_db() const { return acir_db_; }
  const std::optional<std::vector<double>>& saturated_acir_db() const { return saturated_db_; }
  double floor_db() const { return floor_db_; }
  double saturation_threshold_dbm() const { return saturation_threshold_dbm_; }
  AcirInterpolation interpolation() const { return interpolation_; }

  /// Linear coupling at frequency offset `delta_f_mhz` (sign ignored).
  double coupling(double delta_f_mhz, std::optional<double> dtt_power_dbm = std::nullopt) const;

  bool operator==(const AcirTable&) const = default;

 private:
  double lookup(const std::vector<double>& db, double df) const;

  AcirDirection direction_ = AcirDirection::v_to_v;
  std::vector<double> offsets_{0.0};
  std::vector<double> acir_db_{0.0};
  std::optional<std::vector<double>> saturated_db_;
  double floor_db_ = -100.0;
  double saturation_threshold_dbm_ = -45.0;
  AcirInterpolation interpolation_ = AcirInterpolation::step;
};

struct AcirSet {
  AcirTable dtt_to_v;
  AcirTable v_to_v;
  AcirTable v_to_dtt;

  const AcirTable& table(AcirDirection d) const;
  AcirTable& table(AcirDirection d);
  bool operator==(const AcirSet&) const = default;
};

double acir(const AcirSet& tables, AcirDirection direction, double delta_f_mhz,
            std::optional<double> dtt_power_dbm = std::nullopt);

/// Shipped defaults, composed per 8 MHz channel offset from (ACLR, ACS) pairs.
AcirSet default_acir_tables();

std::string acir_table_to_json(const AcirTable& table);
AcirTable acir_table_from_json(const std::string& text);

struct RadioConfig {
  double tx_power_dbm = 23.0;
  double bandwidth_mhz = 10.0;
  double noise_figure_db = 7.0;
  double cs_threshold_dbm = -85.0;      // carrier-sense threshold
  double rx_sinr_threshold_db = 8.0;    // reception threshold
  double cch_center_mhz = 5900.0;
  double message_airtime_s = 0.4e-3;
  double slot_time_s = 13e-6;           // same-slot start window for co-located senders
  double v2v_shadowing_sigma_db = 3.0;
  bool dtt_shadowing = true;            // lognormal spread from REM on DTT-related links
  PathlossModel v2v_pathloss{};
  PathlossModel v2dtt_pathloss{};
  // Frequency at which propagation is evaluated for every TVWS channel; unset
  // evaluates each channel at its own centre.
  std::optional<double> tvws_propagation_mhz = 506.0;

  /// Frequency fed to the pathloss model for a link on carrier `f_mhz`.
  double propagation_mhz(double f_mhz) const;
  double tx_power_w() const;
  double noise_w() const;
  bool operator==(const RadioConfig&) const = default;
};

}  // namespace vdsa::radio
