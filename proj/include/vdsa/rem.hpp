#pragma once

// Radio environment map built from drive-test power measurements.
//
// The map is one-dimensional along the measured route. Each DTT channel is
// described by a chain of first-order least-squares segments; each segment
// carries the standard deviation of its fit residuals, which the simulator
// uses as the shadowing spread at that location. A separate registry holds
// the DTT power observed at known receiver sites.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vdsa::rem {

struct MeasurementSample {
  double route_distance = 0.0;  // m from route origin
  int channel_id = 0;
  double rx_power_dbm = 0.0;
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<double> timestamp_s;

  bool operator==(const MeasurementSample&) const = default;
};

using SampleList = std::vector<MeasurementSample>;
using ChannelSamples = std::map<int, SampleList>;

/// Samples closer than this along the route are treated as duplicates.
constexpr double kDuplicateTolerance = 0.1;

/// Parses the measurement CSV (`route_distance_m,channel_id,rx_power_dbm[,lat,lon,timestamp_s]`).
/// Lines starting with '#' are ignored. Output lists are sorted by distance and
/// duplicates are averaged in linear power.
ChannelSamples ingest_samples(std::istream& in);
ChannelSamples ingest_file(const std::filesystem::path& path);

/// Merges samples of one channel closer than kDuplicateTolerance (mW average).
/// Input must be sorted by route distance.
SampleList merge_duplicates(const SampleList& sorted);

/// Fills spacing larger than `nominal_spacing` with points linearly
/// interpolated in dB. Throws gap_too_large if any gap exceeds `max_gap`.
SampleList interpolate_gaps(const SampleList& samples, double nominal_spacing, double max_gap);

/// Same, with the nominal spacing taken as the median inter-sample spacing.
SampleList interpolate_gaps(const SampleList& samples, double max_gap);

struct LineFit {
  double slope = 0.0;      // dB per m
  double intercept = 0.0;  // dB at x = x0
  double sigma = 0.0;      // RMS residual, dB
};

/// Least-squares first-order fit of y over x, intercept referred to `x0`.
/// sigma is the population standard deviation of the residuals.
LineFit fit_line(std::span<const double> x, std::span<const double> y, double x0);

struct RemSegment {
  int channel_id = 0;
  double d_start = 0.0;
  double d_end = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double sigma = 0.0;

  double evaluate(double d) const { return intercept + slope * (d - d_start); }
  bool operator==(const RemSegment&) const = default;
};

/// Splits the samples into consecutive blocks of `segment_len` locations and
/// fits each one. A trailing block of >= 2 samples is fitted on its own, a
/// single leftover sample is merged into the previous block.
std::vector<RemSegment> fit_segments(const SampleList& samples, std::size_t segment_len = 20);

struct DttChannel {
  int channel_id = 0;
  double center_mhz = 0.0;
  bool operator==(const DttChannel&) const = default;
};

struct DttReceiverEntry {
  int id = 0;
  double longitudinal_position = 0.0;  // m, motorway coordinate
  double distance_to_motorway = 0.0;   // m
  int group = 0;
  std::map<int, double> power_dbm;  // channel id -> received DTT power

  bool operator==(const DttReceiverEntry&) const = default;
};

struct PowerEstimate {
  double mean_dbm = 0.0;
  double sigma_db = 0.0;
};

class RemDatabase {
 public:
  RemDatabase() = default;

  /// Validates tiling of every channel's segments and that receivers carry
  /// power for every listed DTT channel.
  RemDatabase(std::map<int, std::vector<RemSegment>> segments,
              std::vector<DttReceiverEntry> dtt_receivers,
              std::vector<DttChannel> dtt_channels);

  const std::map<int, std::vector<RemSegment>>& segments() const { return segments_; }
  const std::vector<DttReceiverEntry>& dtt_receivers() const { return receivers_; }
  const std::vector<DttChannel>& dtt_channels() const { return channels_; }

  bool empty() const { return segments_.empty() && receivers_.empty() && channels_.empty(); }

  /// Route range [first d_start, last d_end] covered by a channel.
  std::pair<double, double> coverage(int channel_id) const;

  /// Intersection of the coverage of all channels with segments.
  std::optional<std::pair<double, double>> common_coverage() const;

  const RemSegment& segment_at(int channel_id, double route_distance) const;
  PowerEstimate query_power(int channel_id, double route_distance) const;

  const DttReceiverEntry& receiver(int id) const;
  double channel_center_mhz(int channel_id) const;

  bool operator==(const RemDatabase&) const = default;

 private:
  std::map<int, std::vector<RemSegment>> segments_;
  std::vector<DttReceiverEntry> receivers_;
  std::vector<DttChannel> channels_;
};

PowerEstimate query_power(const RemDatabase& db, int channel_id, double route_distance);

constexpr int kRemSchemaVersion = 1;

std::string rem_to_json(const RemDatabase& db);
RemDatabase rem_from_json(const std::string& text);
void save_rem(const RemDatabase& db, const std::filesystem::path& path);
RemDatabase load_rem(const std::filesystem::path& path);

}  // namespace vdsa::rem
