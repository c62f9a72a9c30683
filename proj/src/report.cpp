#include "vdsa/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "vdsa/error.hpp"

namespace vdsa::report {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

double ChannelSir::fraction_below() const {
  return samples ? static_cast<double>(below) / static_cast<double>(samples) : 0.0;
}

Summary summarize(const sim::MetricsReport& report) {
  Summary s;
  s.strategy = report.strategy;
  s.seed = report.seed;
  s.duration_s = report.duration_s;
  s.warmup_s = report.warmup_s;
  s.sir_threshold_db = report.sir_threshold_db;
  s.reception = report.leader_reception;
  s.switch_counts = report.switch_counts;
  for (const auto& ch : report.dtt_channels) {
    ChannelSir c{ch.channel_id, ch.center_mhz, 0, 0};
    for (const auto& sample : report.dtt_sir) {
      if (sample.channel_id != ch.channel_id) continue;
      ++c.samples;
      if (sample.sir_db < report.sir_threshold_db) ++c.below;
    }
    s.dtt_sir.push_back(c);
  }
  s.totals = report.totals;
  s.cch_offered_messages = report.cch_offered_messages;
  s.fallback_events = static_cast<std::int64_t>(report.fallback_log.size());
  double sum = 0.0;
  int n = 0;
  for (const auto& p : report.min_sinr) {
    if (!p.sinr_db) continue;
    sum += *p.sinr_db;
    ++n;
  }
  if (n > 0) s.mean_min_sinr_db = sum / n;
  return s;
}

std::string summary_to_json(const Summary& s) {
  ordered_json j;
  j["schema_version"] = s.schema_version;
  j["strategy"] = s.strategy;
  j["seed"] = s.seed;
  j["duration_s"] = s.duration_s;
  j["warmup_s"] = s.warmup_s;
  j["sir_threshold_db"] = s.sir_threshold_db;
  j["reception_by_position"] = ordered_json::array();
  for (const auto& p : s.reception) {
    j["reception_by_position"].push_back(
        {{"position", p.position}, {"scheduled", p.scheduled}, {"received", p.received}, {"rate", p.rate()}});
  }
  j["switch_counts"] = s.switch_counts;
  j["dtt_sir"] = ordered_json::array();
  for (const auto& c : s.dtt_sir) {
    j["dtt_sir"].push_back({{"channel_id", c.channel_id},
                            {"center_mhz", c.center_mhz},
                            {"samples", c.samples},
                            {"below_threshold", c.below},
                            {"fraction_below", c.fraction_below()}});
  }
  j["messages"] = {{"scheduled_receptions", s.totals.scheduled},
                   {"received", s.totals.received},
                   {"lost_low_sinr", s.totals.lost_low_sinr},
                   {"lost_collision_co_located", s.totals.lost_collision},
                   {"tvws_messages", s.totals.tvws_messages},
                   {"cch_platoon_messages", s.totals.cch_platoon_messages}};
  j["cch_offered_messages"] = s.cch_offered_messages;
  j["fallback_events"] = s.fallback_events;
  j["mean_min_sinr_db"] = optional_number(s.mean_min_sinr_db);
  return j.dump(2);
}

Summary summary_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Summary s;
    s.schema_version = j.at("schema_version").get<int>();
    if (s.schema_version != kSummarySchemaVersion) {
      throw Error(Errc::schema_version, "summary schema version " + std::to_string(s.schema_version) +
                                            " is not supported (expected " +
                                            std::to_string(kSummarySchemaVersion) + ")");
    }
    s.strategy = j.at("strategy").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.duration_s = j.at("duration_s").get<double>();
    s.warmup_s = j.at("warmup_s").get<double>();
    s.sir_threshold_db = j.at("sir_threshold_db").get<double>();
    for (const auto& p : j.at("reception_by_position")) {
      s.reception.push_back({p.at("position").get<int>(), p.at("scheduled").get<std::int64_t>(),
                             p.at("received").get<std::int64_t>()});
    }
    s.switch_counts = j.at("switch_counts").get<std::vector<int>>();
    for (const auto& c : j.at("dtt_sir")) {
      s.dtt_sir.push_back({c.at("channel_id").get<int>(), c.at("center_mhz").get<double>(),
                           c.at("samples").get<std::int64_t>(), c.at("below_threshold").get<std::int64_t>()});
    }
    const auto& m = j.at("messages");
    s.totals.scheduled = m.at("scheduled_receptions").get<std::int64_t>();
    s.totals.received = m.at("received").get<std::int64_t>();
    s.totals.lost_low_sinr = m.at("lost_low_sinr").get<std::int64_t>();
    s.totals.lost_collision = m.at("lost_collision_co_located").get<std::int64_t>();
    s.totals.tvws_messages = m.at("tvws_messages").get<std::int64_t>();
    s.totals.cch_platoon_messages = m.at("cch_platoon_messages").get<std::int64_t>();
    s.cch_offered_messages = j.at("cch_offered_messages").get<std::int64_t>();
    s.fallback_events = j.at("fallback_events").get<std::int64_t>();
    if (!j.at("mean_min_sinr_db").is_null()) s.mean_min_sinr_db = j["mean_min_sinr_db"].get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("summary: ") + e.what());
  }
}

Summary read_summary(const fs::path& run_dir) {
  const auto path = run_dir / "summary.json";
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return summary_from_json(buffer.str());
}

void export_report(const sim::MetricsReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "reception_by_position.csv";
    auto out = open_out(path);
    out << "position,scheduled,received,rate\n";
    for (const auto& p : report.leader_reception) {
      out << p.position << ',' << p.scheduled << ',' << p.received << ',' << num(p.rate()) << '\n';
    }
    close_checked(out, path);
  }
  {
    const auto path = dir / "dtt_sir_samples.csv";
    auto out = open_out(path);
    out << "sir_db,cdf,channel_id,center_mhz,receiver_id,platoon,t\n";
    auto samples = report.dtt_sir;
    std::stable_sort(samples.begin(), samples.end(),
                     [](const auto& a, const auto& b) { return a.sir_db < b.sir_db; });
    std::map<int, std::int64_t> total;
    std::map<int, std::int64_t> seen;
    std::map<int, double> center;
    for (const auto& s : samples) ++total[s.channel_id];
    for (const auto& ch : report.dtt_channels) center[ch.channel_id] = ch.center_mhz;
    for (const auto& s : samples) {
      const double cdf = static_cast<double>(++seen[s.channel_id]) / static_cast<double>(total[s.channel_id]);
      out << num(s.sir_db) << ',' << num(cdf) << ',' << s.channel_id << ',' << num(center[s.channel_id]) << ','
          << s.receiver_id << ',' << s.platoon << ',' << num(s.t) << '\n';
    }
    close_checked(out, path);
  }
  {
    const auto path = dir / "switch_counts.csv";
    auto out = open_out(path);
    out << "platoon,switches\n";
    for (std::size_t k = 0; k < report.switch_counts.size(); ++k) {
      out << k + 1 << ',' << report.switch_counts[k] << '\n';
    }
    close_checked(out, path);
  }
  {
    const auto path = dir / "frequency_trace.csv";
    auto out = open_out(path);
    out << "t,platoon,center_mhz\n";
    for (std::size_t i = 0; i < report.assignments.size(); ++i) {
      const auto& a = report.assignments[i];
      for (std::size_t k = 0; k < a.size(); ++k) {
        out << num(report.reselection_times[i]) << ',' << k + 1 << ',';
        if (a.platoon_mhz[k]) out << num(*a.platoon_mhz[k]);
        out << '\n';
      }
    }
    close_checked(out, path);
  }
  {
    const auto path = dir / "summary.json";
    auto out = open_out(path);
    out << summary_to_json(summarize(report)) << '\n';
    close_checked(out, path);
  }
}

std::vector<StrategyAggregate> aggregate(const std::vector<Summary>& summaries) {
  std::map<std::string, std::vector<const Summary*>> groups;
  for (const auto& s : summaries) groups[s.strategy].push_back(&s);

  std::vector<StrategyAggregate> rows;
  for (const auto& [name, group] : groups) {
    StrategyAggregate row;
    row.strategy = name;
    const auto n = static_cast<double>(group.size());
    std::size_t positions = 0;
    std::size_t platoons = 0;
    for (const auto* s : group) {
      row.seeds.push_back(s->seed);
      positions = std::max(positions, s->reception.size());
      platoons = std::max(platoons, s->switch_counts.size());
    }
    row.reception_rate.assign(positions, 0.0);
    row.switch_mean.assign(platoons, 0.0);
    row.switch_stddev.assign(platoons, 0.0);
    std::map<int, ChannelSir> pooled;
    for (const auto* s : group) {
      for (std::size_t i = 0; i < s->reception.size(); ++i) row.reception_rate[i] += s->reception[i].rate() / n;
      for (std::size_t k = 0; k < s->switch_counts.size(); ++k) row.switch_mean[k] += s->switch_counts[k] / n;
      for (const auto& c : s->dtt_sir) {
        auto& p = pooled.try_emplace(c.channel_id, ChannelSir{c.channel_id, c.center_mhz, 0, 0}).first->second;
        p.samples += c.samples;
        p.below += c.below;
      }
    }
    if (group.size() > 1) {
      for (std::size_t k = 0; k < platoons; ++k) {
        double ss = 0.0;
        for (const auto* s : group) {
          const double v = k < s->switch_counts.size() ? s->switch_counts[k] : 0.0;
          ss += (v - row.switch_mean[k]) * (v - row.switch_mean[k]);
        }
        row.switch_stddev[k] = std::sqrt(ss / (n - 1.0));
      }
    }
    for (const auto& [id, c] : pooled) row.dtt_sir.push_back(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string combined_to_json(const std::vector<StrategyAggregate>& rows) {
  ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["strategies"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json e;
    e["strategy"] = r.strategy;
    e["seeds"] = r.seeds;
    e["reception_rate_by_position"] = r.reception_rate;
    e["switch_count_mean"] = r.switch_mean;
    e["switch_count_stddev"] = r.switch_stddev;
    e["dtt_sir"] = ordered_json::array();
    for (const auto& c : r.dtt_sir) {
      e["dtt_sir"].push_back({{"channel_id", c.channel_id},
                              {"center_mhz", c.center_mhz},
                              {"samples", c.samples},
                              {"below_threshold", c.below},
                              {"fraction_below", c.fraction_below()}});
    }
    j["strategies"].push_back(std::move(e));
  }
  return j.dump(2);
}

void write_combined(const std::vector<StrategyAggregate>& rows, const fs::path& path) {
  auto out = open_out(path);
  out << combined_to_json(rows) << '\n';
  close_checked(out, path);
}

std::vector<Summary> collect_summaries(const std::vector<fs::path>& dirs) {
  if (dirs.empty()) throw Error(Errc::invalid_argument, "no run directories given");
  std::vector<Summary> out;
  for (const auto& dir : dirs) {
    if (!fs::is_directory(dir)) throw Error(Errc::io, "not a directory: " + dir.string());
    if (fs::exists(dir / "summary.json")) {
      out.push_back(read_summary(dir));
      continue;
    }
    std::vector<fs::path> runs;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "summary.json")) runs.push_back(entry.path());
    }
    if (runs.empty()) throw Error(Errc::io, "no summary.json under " + dir.string());
    std::sort(runs.begin(), runs.end());
    for (const auto& r : runs) out.push_back(read_summary(r));
  }
  return out;
}

void print_comparison(const std::vector<StrategyAggregate>& rows, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed;

  out << "Mean frequency switches per platoon\n";
  out << std::left << std::setw(12) << "strategy";
  std::size_t platoons = 0;
  for (const auto& r : rows) platoons = std::max(platoons, r.switch_mean.size());
  for (std::size_t k = 0; k < platoons; ++k) out << std::right << std::setw(12) << ("platoon " + std::to_string(k + 1));
  out << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.strategy << std::right << std::setprecision(2);
    for (double v : r.switch_mean) out << std::setw(12) << v;
    out << '\n';
  }

  out << "\nLeader packet reception rate by position\n";
  out << std::left << std::setw(12) << "strategy";
  std::size_t positions = 0;
  for (const auto& r : rows) positions = std::max(positions, r.reception_rate.size());
  for (std::size_t i = 0; i < positions; ++i) out << std::right << std::setw(8) << i + 1;
  out << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.strategy << std::right << std::setprecision(4);
    for (double v : r.reception_rate) out << std::setw(8) << v;
    out << '\n';
  }

  out << "\nFraction of DTT SIR samples below threshold\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.strategy << std::right;
    for (const auto& c : r.dtt_sir) {
      out << "  " << std::setprecision(0) << c.center_mhz << " MHz: " << std::setprecision(4) << c.fraction_below()
          << " (" << c.samples << " samples)";
    }
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

void write_comparison_csv(const std::vector<StrategyAggregate>& rows, std::ostream& out) {
  out << "strategy,metric,key,value\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.switch_mean.size(); ++k) {
      out << r.strategy << ",switch_count_mean," << k + 1 << ',' << num(r.switch_mean[k]) << '\n';
    }
    for (std::size_t i = 0; i < r.reception_rate.size(); ++i) {
      out << r.strategy << ",reception_rate," << i + 1 << ',' << num(r.reception_rate[i]) << '\n';
    }
    for (const auto& c : r.dtt_sir) {
      out << r.strategy << ",dtt_sir_fraction_below," << num(c.center_mhz) << ',' << num(c.fraction_below()) << '\n';
    }
  }
}

}  // namespace vdsa::report
