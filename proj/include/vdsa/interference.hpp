#pragma once

// SINR of intra-platoon links: wanted power over noise, DTT-to-vehicle
// interference read from the REM, and expected vehicle-to-vehicle
// interference either from every other transmitter (independent, ALOHA-like
// access) or from the hidden nodes of the wanted transmitter only.

#include <optional>
#include <span>
#include <vector>

#include "vdsa/radio.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/scenario.hpp"

namespace vdsa::interference {

enum class Band { cch, tvws };
enum class VvMode { all_nodes, hidden_only };

std::string_view to_string(VvMode mode);
VvMode vv_mode_from_string(std::string_view name);

/// Per-platoon TVWS centre frequency; nullopt means the platoon is on CCH only.
struct FrequencyAssignment {
  std::vector<std::optional<double>> platoon_mhz;

  std::optional<double> of_platoon(int k) const { return platoon_mhz.at(static_cast<std::size_t>(k)); }
  std::size_t size() const { return platoon_mhz.size(); }
  bool operator==(const FrequencyAssignment&) const = default;
};

/// Receiver listening to a transmitter of its own platoon.
struct Link {
  int rx = 0;
  int tx = 0;
  int platoon = 0;
  bool from_leader = false;
  bool operator==(const Link&) const = default;
};

/// Every non-leader listens to its leader and its predecessor (one link when
/// they coincide). Ordered by (platoon, receiver, leader link first).
std::vector<Link> link_set(const scenario::WorldState& world);

/// Fraction of time a periodic sender occupies the channel.
double tx_probability(double message_airtime, double message_period);

/// Random shadowing terms in dB. The allocator runs without one (mean gains).
class Shadowing {
 public:
  virtual ~Shadowing() = default;
  virtual double v2v_db(int a, int b) const = 0;
  virtual double v2dtt_db(int vehicle, int receiver_id, int channel_id) const = 0;
  virtual double dtt_power_db(int vehicle, int channel_id) const = 0;
};

struct Environment {
  const scenario::WorldState& world;
  const rem::RemDatabase& rem;
  const radio::RadioConfig& radio;
  const radio::AcirSet& acir;
  const Shadowing* shadowing = nullptr;
  double cch_period_s = 0.1;   // CAM period without TVWS offload
  double tvws_period_s = 0.2;  // CACC period on TVWS (and reduced CAM period)

  double route_distance(int vehicle) const;
  double v2v_gain(int a, int b, double f_mhz) const;
  std::vector<int> transmitters(const FrequencyAssignment& assignment, Band band) const;
  std::optional<double> frequency(int vehicle, const FrequencyAssignment& assignment, Band band) const;
  double tx_probability_of(int vehicle, const FrequencyAssignment& assignment, Band band) const;
};

/// Transmitters j != tx whose received power at tx, after ACIR, is below the
/// carrier-sense threshold (`cs_threshold_dbm`; +inf selects all, -inf none).
std::vector<int> hidden_node_set(const Environment& env, int tx, const FrequencyAssignment& assignment, Band band,
                                 double cs_threshold_dbm);

/// Sum over DTT channels of REM power at the route position times ACIR^{DTT-V}.
double pu_to_v_interference(const rem::RemDatabase& rem, const radio::AcirSet& acir, double route_distance,
                            double f_v_mhz);
double pu_to_v_interference(const Environment& env, int rx, double f_v_mhz);

double v_to_v_expected_interference(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment,
                                    Band band, VvMode mode);

/// Interference power (W) a platoon transmitter puts into a DTT receiver.
double v_to_dtt_interference(const Environment& env, int tx, const scenario::DttReceiverSite& site, int channel_id,
                             double f_mhz, double dtt_power_dbm);

struct SinrTerms {
  double signal_w = 0.0;
  double noise_w = 0.0;
  double pu_w = 0.0;
  double vv_w = 0.0;

  double sinr_linear() const { return signal_w / (noise_w + pu_w + vv_w); }
  double sinr_db() const;
};

SinrTerms sinr_terms(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment, Band band,
                     VvMode mode);
double sinr(const Environment& env, int rx, int tx, const FrequencyAssignment& assignment, Band band, VvMode mode);

struct MinSinr {
  double sinr_db = 0.0;
  Link link{};
};

/// Minimum SINR over all links of platoons that hold a TVWS frequency;
/// nullopt when no platoon does.
std::optional<MinSinr> min_pair_sinr(const Environment& env, const FrequencyAssignment& assignment, VvMode mode);

}  // namespace vdsa::interference
