#include "vdsa/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "vdsa/config.hpp"
#include "vdsa/error.hpp"
#include "vdsa/report.hpp"
#include "vdsa/units.hpp"

namespace vdsa::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(Errc::invalid_argument, "bad seed '" + std::string(s) + "'");
  }
  return v;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(Errc::invalid_argument, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

void write_rem_atomically(const rem::RemDatabase& db, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  rem::save_rem(db, tmp);
  fs::rename(tmp, path);
}

int cmd_build_rem(const std::string& input, std::size_t segment_len, double max_gap, const fs::path& out_path,
                  const std::optional<fs::path>& config_path, std::ostream& out) {
  const auto base = config_path ? config::load_config(*config_path) : sim::RunInputs{};
  const auto channels = rem::ingest_file(input);

  std::map<int, std::vector<rem::RemSegment>> segments;
  std::vector<rem::DttChannel> dtt_channels;
  for (const auto& [ch, samples] : channels) {
    const auto filled = rem::interpolate_gaps(samples, max_gap);
    segments[ch] = rem::fit_segments(filled, segment_len);
    dtt_channels.push_back({ch, uhf_channel_center_mhz(ch)});
  }
  auto registry = registry_from_sites(segments, base.scenario.dtt_receivers, base.scenario.route);
  const rem::RemDatabase db(segments, std::move(registry), std::move(dtt_channels));
  write_rem_atomically(db, out_path);

  out << "channel,d_start_m,d_end_m,slope_db_per_km,sigma_db\n";
  out << std::fixed;
  for (const auto& [ch, list] : db.segments()) {
    for (const auto& s : list) {
      out << ch << ',' << std::setprecision(1) << s.d_start << ',' << s.d_end << ',' << std::setprecision(3)
          << s.slope * 1000.0 << ',' << s.sigma << '\n';
    }
  }
  out << "wrote " << out_path.string() << " (" << db.segments().size() << " channels, " << db.dtt_receivers().size()
      << " DTT receivers)\n";
  return 0;
}

int cmd_run(const RunConfig& rc, bool print_config, std::ostream& out) {
  const auto inputs = resolve_inputs(rc);
  if (print_config) {
    out << config::dump_config(inputs) << '\n';
    return 0;
  }
  rc.validate();
  const auto db = rem::load_rem(rc.rem_path);
  inputs.validate(db);

  std::vector<sim::RunJob> jobs;
  for (const auto& s : rc.strategies) {
    for (auto seed : rc.seeds) jobs.push_back({s, seed});
  }
  const auto reports = sim::run_batch(inputs, db, jobs, rc.threads);

  std::vector<report::Summary> summaries;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto dir = rc.out_dir / jobs[i].strategy.name() / ("seed_" + std::to_string(jobs[i].seed));
    report::export_report(reports[i], dir);
    summaries.push_back(report::summarize(reports[i]));
  }
  const auto rows = report::aggregate(summaries);
  report::write_combined(rows, rc.out_dir / "combined.json");
  report::print_comparison(rows, out);
  out << "wrote " << jobs.size() << " run directories under " << rc.out_dir.string() << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::optional<fs::path>& csv_path, std::ostream& out) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const auto rows = report::aggregate(report::collect_summaries(paths));
  report::print_comparison(rows, out);
  if (csv_path) {
    std::ofstream csv(*csv_path, std::ios::trunc);
    if (!csv) throw Error(Errc::io, "cannot write " + csv_path->string());
    report::write_comparison_csv(rows, csv);
  }
  return 0;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_u64(std::string_view(text).substr(0, dots));
    const auto hi = parse_u64(std::string_view(text).substr(dots + 2));
    if (hi < lo) throw Error(Errc::invalid_argument, "empty seed range '" + text + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  for (auto part : split(text, ',')) seeds.push_back(parse_u64(part));
  return seeds;
}

allocator::FrequencyGrid parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw Error(Errc::invalid_argument, "grid must be first:last:step, got '" + text + "'");
  auto grid = allocator::FrequencyGrid::uniform(parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2]));
  grid.validate();
  return grid;
}

std::vector<sim::StrategyChoice> parse_strategies(const std::string& text) {
  if (text == "all") {
    return {sim::StrategyChoice{allocator::Strategy::exhaustive}, sim::StrategyChoice{allocator::Strategy::max_separation},
            sim::StrategyChoice{allocator::Strategy::dtt_protect_only}, sim::StrategyChoice{}};
  }
  return {sim::StrategyChoice::parse(text)};
}

void RunConfig::validate() const {
  if (!fs::exists(rem_path)) throw Error(Errc::io, "REM file not found: " + rem_path.string());
  if (config_path && !fs::exists(*config_path)) throw Error(Errc::io, "config file not found: " + config_path->string());
  if (seeds.empty()) throw Error(Errc::invalid_argument, "seed list is empty");
  if (strategies.empty()) throw Error(Errc::invalid_argument, "no strategy selected");
}

sim::RunInputs resolve_inputs(const RunConfig& rc) {
  auto in = rc.config_path ? config::load_config(*rc.config_path) : sim::RunInputs{};
  const auto& o = rc.overrides;
  if (o.gamma_dtt_dbm) in.policy.gamma_dtt_dbm = *o.gamma_dtt_dbm;
  if (o.sir_min_db) in.policy.sir_min_db = *o.sir_min_db;
  if (o.grid) {
    const auto centers = in.grid.dtt_centers_mhz;
    in.grid = parse_grid(*o.grid);
    in.grid.dtt_centers_mhz = centers;
  }
  if (o.tx_power_dbm) in.radio.tx_power_dbm = *o.tx_power_dbm;
  if (o.rx_sinr_threshold_db) in.radio.rx_sinr_threshold_db = *o.rx_sinr_threshold_db;
  return in;
}

std::vector<rem::DttReceiverEntry> registry_from_sites(const std::map<int, std::vector<rem::RemSegment>>& segments,
                                                       const std::vector<scenario::DttReceiverSite>& sites,
                                                       const RouteMapping& route) {
  const rem::RemDatabase lookup(segments, {}, {});
  std::vector<rem::DttReceiverEntry> out;
  for (const auto& site : sites) {
    rem::DttReceiverEntry e{site.id, site.longitudinal_position, site.distance_to_motorway, site.group, {}};
    const double d = route.to_route(site.longitudinal_position);
    for (const auto& [ch, list] : segments) {
      const auto [lo, hi] = lookup.coverage(ch);
      e.power_dbm[ch] = lookup.query_power(ch, std::clamp(d, lo, hi)).mean_dbm;
    }
    out.push_back(std::move(e));
  }
  return out;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Platoon TVWS spectrum access simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_opt;
  app.add_option("--config", config_opt, std::string("Configuration JSON (default: $") + kConfigEnv + ")");

  auto* build = app.add_subcommand("build-rem", "Fit a radio environment map from drive-test CSV");
  std::string input;
  std::size_t segment_len = 20;
  double max_gap = 300.0;
  std::string rem_out = "rem.json";
  build->add_option("measurements", input, "Measurement CSV")->required();
  build->add_option("--segment-len", segment_len, "Samples per fitted segment")->check(CLI::Range(2, 100000));
  build->add_option("--max-gap", max_gap, "Largest gap (m) that may be interpolated");
  build->add_option("--out,-o", rem_out, "Output REM JSON");

  auto* run = app.add_subcommand("run", "Simulate one or more strategies over a seed list");
  RunConfig rc;
  std::string rem_path;
  std::string strategy = "exhaustive";
  std::string seeds = "1";
  std::string out_dir = "out";
  bool print_config = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  run->add_option("--rem", rem_path, "REM JSON from build-rem");
  run->add_option("--strategy", strategy, "exhaustive | max-sep | dtt-only | cch-only | all");
  run->add_option("--seeds,--seed", seeds, "Seed list: 1..10, 1,2,3 or 7");
  run->add_option("--out,-o", out_dir, "Output directory");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--gamma-dtt", rc.overrides.gamma_dtt_dbm, "Minimum protected DTT power (dBm)");
  run->add_option("--sir-min", rc.overrides.sir_min_db, "Minimum DTT SIR (dB)");
  run->add_option("--grid", rc.overrides.grid, "Candidate centre frequencies first:last:step (MHz)");
  run->add_option("--tx-power", rc.overrides.tx_power_dbm, "V2V transmit power (dBm)");
  run->add_option("--rx-threshold", rc.overrides.rx_sinr_threshold_db, "Reception SINR threshold (dB)");
  run->add_flag("--print-config", print_config, "Print the resolved configuration and exit");

  auto* rep = app.add_subcommand("report", "Compare strategies across run directories");
  std::vector<std::string> run_dirs;
  std::optional<std::string> csv_path;
  rep->add_option("run_dirs", run_dirs, "Run or output directories")->required();
  rep->add_option("--csv", csv_path, "Also write the comparison as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << single_line(e.what()) << '\n';
    return 2;
  }

  try {
    std::optional<fs::path> config_path;
    if (config_opt) {
      config_path = *config_opt;
    } else if (const char* env = std::getenv(kConfigEnv); env && *env) {
      config_path = env;
    }
    if (config_path && !fs::exists(*config_path)) throw Error(Errc::io, "config file not found: " + config_path->string());

    if (build->parsed()) return cmd_build_rem(input, segment_len, max_gap, rem_out, config_path, out);
    if (run->parsed()) {
      rc.rem_path = rem_path;
      rc.config_path = config_path;
      rc.out_dir = out_dir;
      rc.strategies = parse_strategies(strategy);
      rc.seeds = parse_seed_list(seeds);
      rc.threads = threads;
      if (!print_config && rem_path.empty()) throw Error(Errc::invalid_argument, "--rem is required");
      return cmd_run(rc, print_config, out);
    }
    if (rep->parsed()) {
      std::optional<fs::path> csv;
      if (csv_path) csv = *csv_path;
      return cmd_report(run_dirs, csv, out);
    }
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << single_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal]: " << single_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace vdsa::cli
