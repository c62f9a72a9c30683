#pragma once

// Power unit conversions. Everything inside the library is linear watts or
// dB/dBm at the interfaces; these helpers are the only place the conversion
// constants live.

#include <cmath>

namespace vdsa {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

inline double kmh_to_ms(double kmh) { return kmh / 3.6; }

/// Centre frequency of a European UHF TV channel (8 MHz raster, ch21 = 474 MHz).
inline double uhf_channel_center_mhz(int channel) { return 306.0 + 8.0 * channel; }

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kBoltzmann = 1.380649e-23;
constexpr double kReferenceTemperatureK = 290.0;

}  // namespace vdsa
