#pragma once

// Command-line front end: build-rem, run and report.
// Failures print one line `error[<code>]: <message>` to the error stream and
// return a nonzero status.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdsa/simkernel.hpp"

namespace vdsa::cli {

/// Environment variable naming the default configuration file.
inline constexpr const char* kConfigEnv = "VDSA_CONFIG";

/// "1..10", "1,4,7" or "5".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// "first:last:step" in MHz.
allocator::FrequencyGrid parse_grid(const std::string& text);

/// "all" expands to the three selection strategies and the CCH-only baseline.
std::vector<sim::StrategyChoice> parse_strategies(const std::string& text);

struct Overrides {
  std::optional<double> gamma_dtt_dbm;
  std::optional<double> sir_min_db;
  std::optional<std::string> grid;
  std::optional<double> tx_power_dbm;
  std::optional<double> rx_sinr_threshold_db;
};

struct RunConfig {
  std::filesystem::path rem_path;
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir = "out";
  std::vector<sim::StrategyChoice> strategies;
  std::vector<std::uint64_t> seeds;
  Overrides overrides;
  unsigned threads = 1;

  /// Referenced files exist and the seed and strategy lists are nonempty.
  void validate() const;
};

/// Base configuration (file or defaults) with the overrides applied.
sim::RunInputs resolve_inputs(const RunConfig& rc);

/// Registry rows for the given sites, powers read from the REM means.
std::vector<rem::DttReceiverEntry> registry_from_sites(const std::map<int, std::vector<rem::RemSegment>>& segments,
                                                       const std::vector<scenario::DttReceiverSite>& sites,
                                                       const RouteMapping& route);

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vdsa::cli
