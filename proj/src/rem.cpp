#include "vdsa/rem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa::rem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line, const char* name) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(line, std::string(name) + " is not finite");
  }
  return value;
}

int parse_int(std::string_view field, std::size_t line, const char* name) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

constexpr const char* kColumns[] = {"route_distance_m", "channel_id", "rx_power_dbm", "lat", "lon", "timestamp_s"};

}  // namespace

SampleList merge_duplicates(const SampleList& sorted) {
  SampleList out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j].route_distance - sorted[i].route_distance <= kDuplicateTolerance) ++j;
    if (j == i + 1) {
      out.push_back(sorted[i]);
    } else {
      double mw = 0.0;
      double dist = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        mw += db_to_linear(sorted[k].rx_power_dbm);
        dist += sorted[k].route_distance;
      }
      const auto n = static_cast<double>(j - i);
      MeasurementSample merged = sorted[i];
      merged.route_distance = dist / n;
      merged.rx_power_dbm = linear_to_db(mw / n);
      out.push_back(merged);
    }
    i = j;
  }
  return out;
}

ChannelSamples ingest_samples(std::istream& in) {
  ChannelSamples out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split(view);
    if (columns == 0) {
      if (fields.size() < 3 || fields.size() > 6) throw ParseError(line_no, "bad header");
      for (std::size_t k = 0; k < fields.size(); ++k) {
        if (fields[k] != kColumns[k]) {
          throw ParseError(line_no, "unexpected header column '" + std::string(fields[k]) + "'");
        }
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
    }
    MeasurementSample s;
    s.route_distance = parse_double(fields[0], line_no, "route_distance_m");
    if (s.route_distance < 0.0) throw ParseError(line_no, "negative route_distance_m");
    s.channel_id = parse_int(fields[1], line_no, "channel_id");
    s.rx_power_dbm = parse_double(fields[2], line_no, "rx_power_dbm");
    if (columns > 3 && !fields[3].empty()) s.lat = parse_double(fields[3], line_no, "lat");
    if (columns > 4 && !fields[4].empty()) s.lon = parse_double(fields[4], line_no, "lon");
    if (columns > 5 && !fields[5].empty()) s.timestamp_s = parse_double(fields[5], line_no, "timestamp_s");
    out[s.channel_id].push_back(s);
  }
  if (out.empty()) throw Error(Errc::empty_input, "measurement stream contains no samples");
  for (auto& [channel, list] : out) {
    std::stable_sort(list.begin(), list.end(),
                     [](const auto& a, const auto& b) { return a.route_distance < b.route_distance; });
    list = merge_duplicates(list);
  }
  return out;
}

ChannelSamples ingest_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  return ingest_samples(in);
}

SampleList interpolate_gaps(const SampleList& samples, double nominal_spacing, double max_gap) {
  if (samples.size() < 2) throw Error(Errc::insufficient_data, "interpolation needs at least 2 samples");
  if (!(nominal_spacing > 0.0)) throw Error(Errc::invalid_argument, "nominal spacing must be positive");
  SampleList out;
  out.reserve(samples.size());
  out.push_back(samples.front());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    const double gap = b.route_distance - a.route_distance;
    if (gap > max_gap) {
      throw Error(Errc::gap_too_large, "gap of " + std::to_string(gap) + " m at " + std::to_string(a.route_distance) +
                                           " m exceeds " + std::to_string(max_gap) + " m");
    }
    // Gaps up to 1.5 nominal spacings are left alone.
    for (int k = 1; a.route_distance + k * nominal_spacing < b.route_distance - 0.5 * nominal_spacing; ++k) {
      const double d = a.route_distance + k * nominal_spacing;
      MeasurementSample fill;
      fill.route_distance = d;
      fill.channel_id = a.channel_id;
      fill.rx_power_dbm = a.rx_power_dbm + (b.rx_power_dbm - a.rx_power_dbm) * (d - a.route_distance) / gap;
      out.push_back(fill);
    }
    out.push_back(b);
  }
  return out;
}

SampleList interpolate_gaps(const SampleList& samples, double max_gap) {
  if (samples.size() < 2) throw Error(Errc::insufficient_data, "interpolation needs at least 2 samples");
  std::vector<double> spacing;
  for (std::size_t i = 1; i < samples.size(); ++i) spacing.push_back(samples[i].route_distance - samples[i - 1].route_distance);
  auto mid = spacing.begin() + static_cast<std::ptrdiff_t>(spacing.size() / 2);
  std::nth_element(spacing.begin(), mid, spacing.end());
  return interpolate_gaps(samples, *mid, max_gap);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y, double x0) {
  if (x.size() != y.size()) throw Error(Errc::invalid_argument, "fit_line: size mismatch");
  if (x.size() < 2) throw Error(Errc::insufficient_data, "a line fit needs at least 2 samples");
  const auto n = static_cast<double>(x.size());
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw Error(Errc::insufficient_data, "a line fit needs two distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym + fit.slope * (x0 - xm);
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * (x[i] - x0));
    ssr += r * r;
  }
  fit.sigma = std::sqrt(ssr / n);
  return fit;
}

std::vector<RemSegment> fit_segments(const SampleList& samples, std::size_t segment_len) {
  if (samples.size() < 2) throw Error(Errc::insufficient_data, "segment fitting needs at least 2 samples");
  if (segment_len < 2) throw Error(Errc::invalid_argument, "segment length must be at least 2");

  // Block boundaries as [begin, end) index pairs.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  for (std::size_t b = 0; b < samples.size(); b += segment_len) {
    blocks.emplace_back(b, std::min(b + segment_len, samples.size()));
  }
  if (blocks.size() > 1 && blocks.back().second - blocks.back().first < 2) {
    blocks.pop_back();
    blocks.back().second = samples.size();
  }

  std::vector<RemSegment> out;
  out.reserve(blocks.size());
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto [begin, end] = blocks[k];
    x.clear();
    y.clear();
    for (std::size_t i = begin; i < end; ++i) {
      x.push_back(samples[i].route_distance);
      y.push_back(samples[i].rx_power_dbm);
    }
    const double d_start = samples[begin].route_distance;
    const auto fit = fit_line(x, y, d_start);
    RemSegment seg;
    seg.channel_id = samples[begin].channel_id;
    seg.d_start = d_start;
    seg.d_end = (k + 1 < blocks.size()) ? samples[blocks[k + 1].first].route_distance : samples[end - 1].route_distance;
    seg.slope = fit.slope;
    seg.intercept = fit.intercept;
    seg.sigma = fit.sigma;
    out.push_back(seg);
  }
  return out;
}

RemDatabase::RemDatabase(std::map<int, std::vector<RemSegment>> segments, std::vector<DttReceiverEntry> dtt_receivers,
                         std::vector<DttChannel> dtt_channels)
    : segments_(std::move(segments)), receivers_(std::move(dtt_receivers)), channels_(std::move(dtt_channels)) {
  for (const auto& [channel, list] : segments_) {
    if (list.empty()) throw Error(Errc::invalid_argument, "channel " + std::to_string(channel) + " has no segments");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& s = list[i];
      if (s.channel_id != channel) throw Error(Errc::invalid_argument, "segment channel id mismatch");
      if (!(s.d_start < s.d_end)) throw Error(Errc::invalid_argument, "segment with d_start >= d_end");
      if (!(s.sigma >= 0.0)) throw Error(Errc::invalid_argument, "negative segment sigma");
      if (i > 0 && list[i - 1].d_end != s.d_start) {
        throw Error(Errc::invalid_argument, "segments of channel " + std::to_string(channel) + " do not tile the route");
      }
    }
  }
  for (const auto& r : receivers_) {
    if (!(r.distance_to_motorway > 0.0)) throw Error(Errc::invalid_argument, "receiver distance to motorway must be > 0");
    for (const auto& c : channels_) {
      if (!r.power_dbm.contains(c.channel_id)) {
        throw Error(Errc::invalid_argument, "receiver " + std::to_string(r.id) + " has no power for channel " +
                                                std::to_string(c.channel_id));
      }
    }
  }
}

std::pair<double, double> RemDatabase::coverage(int channel_id) const {
  auto it = segments_.find(channel_id);
  if (it == segments_.end()) throw Error(Errc::unknown_channel, "no REM data for channel " + std::to_string(channel_id));
  return {it->second.front().d_start, it->second.back().d_end};
}

std::optional<std::pair<double, double>> RemDatabase::common_coverage() const {
  if (segments_.empty()) return std::nullopt;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& [channel, list] : segments_) {
    lo = std::max(lo, list.front().d_start);
    hi = std::min(hi, list.back().d_end);
  }
  if (lo > hi) return std::nullopt;
  return std::make_pair(lo, hi);
}

const RemSegment& RemDatabase::segment_at(int channel_id, double route_distance) const {
  auto it = segments_.find(channel_id);
  if (it == segments_.end()) throw Error(Errc::unknown_channel, "no REM data for channel " + std::to_string(channel_id));
  const auto& list = it->second;
  if (!(route_distance >= list.front().d_start && route_distance <= list.back().d_end)) {
    throw Error(Errc::coverage, "route distance " + std::to_string(route_distance) + " m outside REM coverage of channel " +
                                    std::to_string(channel_id));
  }
  // First segment whose d_end is beyond the query; half-open [d_start, d_end).
  auto seg = std::upper_bound(list.begin(), list.end(), route_distance,
                              [](double d, const RemSegment& s) { return d < s.d_end; });
  if (seg == list.end()) return list.back();
  return *seg;
}

PowerEstimate RemDatabase::query_power(int channel_id, double route_distance) const {
  const auto& seg = segment_at(channel_id, route_distance);
  return {seg.evaluate(route_distance), seg.sigma};
}

const DttReceiverEntry& RemDatabase::receiver(int id) const {
  for (const auto& r : receivers_) {
    if (r.id == id) return r;
  }
  throw Error(Errc::invalid_argument, "unknown DTT receiver " + std::to_string(id));
}

double RemDatabase::channel_center_mhz(int channel_id) const {
  for (const auto& c : channels_) {
    if (c.channel_id == channel_id) return c.center_mhz;
  }
  throw Error(Errc::unknown_channel, "unknown DTT channel " + std::to_string(channel_id));
}

PowerEstimate query_power(const RemDatabase& db, int channel_id, double route_distance) {
  return db.query_power(channel_id, route_distance);
}

std::string rem_to_json(const RemDatabase& db) {
  nlohmann::ordered_json j;
  j["version"] = kRemSchemaVersion;
  nlohmann::ordered_json segs = nlohmann::ordered_json::object();
  for (const auto& [channel, list] : db.segments()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : list) {
      arr.push_back({{"d_start", s.d_start},
                     {"d_end", s.d_end},
                     {"slope", s.slope},
                     {"intercept", s.intercept},
                     {"sigma", s.sigma}});
    }
    segs[std::to_string(channel)] = arr;
  }
  j["segments"] = segs;
  auto rx = nlohmann::ordered_json::array();
  for (const auto& r : db.dtt_receivers()) {
    nlohmann::ordered_json power = nlohmann::ordered_json::object();
    for (const auto& [channel, p] : r.power_dbm) power[std::to_string(channel)] = p;
    rx.push_back({{"id", r.id},
                  {"longitudinal_position_m", r.longitudinal_position},
                  {"distance_to_motorway_m", r.distance_to_motorway},
                  {"group", r.group},
                  {"power_dbm", power}});
  }
  j["dtt_receivers"] = rx;
  auto ch = nlohmann::ordered_json::array();
  for (const auto& c : db.dtt_channels()) ch.push_back({{"channel_id", c.channel_id}, {"center_mhz", c.center_mhz}});
  j["dtt_channels"] = ch;
  return j.dump(2);
}

RemDatabase rem_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, std::string("REM file: ") + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kRemSchemaVersion) {
    throw Error(Errc::schema_version, "unsupported REM schema version (expected " + std::to_string(kRemSchemaVersion) + ")");
  }
  try {
    std::map<int, std::vector<RemSegment>> segments;
    for (const auto& [key, arr] : j.at("segments").items()) {
      const int channel = std::stoi(key);
      auto& list = segments[channel];
      for (const auto& s : arr) {
        RemSegment seg;
        seg.channel_id = channel;
        seg.d_start = s.at("d_start").get<double>();
        seg.d_end = s.at("d_end").get<double>();
        seg.slope = s.at("slope").get<double>();
        seg.intercept = s.at("intercept").get<double>();
        seg.sigma = s.at("sigma").get<double>();
        list.push_back(seg);
      }
    }
    std::vector<DttReceiverEntry> receivers;
    for (const auto& r : j.at("dtt_receivers")) {
      DttReceiverEntry e;
      e.id = r.at("id").get<int>();
      e.longitudinal_position = r.at("longitudinal_position_m").get<double>();
      e.distance_to_motorway = r.at("distance_to_motorway_m").get<double>();
      e.group = r.at("group").get<int>();
      for (const auto& [key, p] : r.at("power_dbm").items()) e.power_dbm[std::stoi(key)] = p.get<double>();
      receivers.push_back(std::move(e));
    }
    std::vector<DttChannel> channels;
    for (const auto& c : j.at("dtt_channels")) {
      channels.push_back({c.at("channel_id").get<int>(), c.at("center_mhz").get<double>()});
    }
    return RemDatabase(std::move(segments), std::move(receivers), std::move(channels));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("REM file: ") + e.what());
  }
}

void save_rem(const RemDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << rem_to_json(db) << '\n';
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

RemDatabase load_rem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return rem_from_json(buffer.str());
}

}  // namespace vdsa::rem
