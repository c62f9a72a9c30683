#pragma once

// Run artefacts. A run directory holds
//   reception_by_position.csv  position,scheduled,received,rate
//   dtt_sir_samples.csv        sir_db,cdf,channel_id,center_mhz,receiver_id,platoon,t (ascending SIR)
//   switch_counts.csv          platoon,switches
//   frequency_trace.csv        t,platoon,center_mhz (empty while on CCH only)
//   summary.json               aggregate numbers, see Summary
// and an output directory holding several runs gets a combined.json with
// the per-strategy means across seeds.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vdsa/simkernel.hpp"

namespace vdsa::report {

constexpr int kSummarySchemaVersion = 1;

struct ChannelSir {
  int channel_id = 0;
  double center_mhz = 0.0;
  std::int64_t samples = 0;
  std::int64_t below = 0;  // SIR strictly below the threshold
  double fraction_below() const;
  bool operator==(const ChannelSir&) const = default;
};

struct Summary {
  int schema_version = kSummarySchemaVersion;
  std::string strategy;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  double warmup_s = 0.0;
  double sir_threshold_db = 39.5;
  std::vector<sim::PositionStats> reception;
  std::vector<int> switch_counts;
  std::vector<ChannelSir> dtt_sir;
  sim::MessageTotals totals;
  std::int64_t cch_offered_messages = 0;
  std::int64_t fallback_events = 0;
  std::optional<double> mean_min_sinr_db;

  bool operator==(const Summary&) const = default;
};

Summary summarize(const sim::MetricsReport& report);

std::string summary_to_json(const Summary& s);
Summary summary_from_json(const std::string& text);
Summary read_summary(const std::filesystem::path& run_dir);

/// Writes the run files into `dir` (created if needed). Overwrites, so
/// exporting twice gives identical files.
void export_report(const sim::MetricsReport& report, const std::filesystem::path& dir);

struct StrategyAggregate {
  std::string strategy;
  std::vector<std::uint64_t> seeds;
  std::vector<double> reception_rate;       // mean over seeds, by position
  std::vector<double> switch_mean;          // by platoon
  std::vector<double> switch_stddev;        // sample standard deviation over seeds
  std::vector<ChannelSir> dtt_sir;          // pooled over seeds
  bool operator==(const StrategyAggregate&) const = default;
};

/// Groups summaries by strategy (sorted by name) and averages over seeds.
std::vector<StrategyAggregate> aggregate(const std::vector<Summary>& summaries);

std::string combined_to_json(const std::vector<StrategyAggregate>& rows);
void write_combined(const std::vector<StrategyAggregate>& rows, const std::filesystem::path& path);

/// Summaries of `dirs`: a directory with summary.json is one run, otherwise
/// its immediate subdirectories holding one are read (sorted by name).
std::vector<Summary> collect_summaries(const std::vector<std::filesystem::path>& dirs);

/// Human-readable comparison tables.
void print_comparison(const std::vector<StrategyAggregate>& rows, std::ostream& out);

/// Same data as CSV: strategy,metric,key,value.
void write_comparison_csv(const std::vector<StrategyAggregate>& rows, std::ostream& out);

}  // namespace vdsa::report
