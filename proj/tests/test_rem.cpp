#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "vdsa/error.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/units.hpp"

using namespace vdsa;
using namespace vdsa::rem;

namespace {

ChannelSamples ingest(const std::string& text) {
  std::istringstream in(text);
  return ingest_samples(in);
}

SampleList line_samples(int channel, double d0, double spacing, std::size_t n, double p0, double slope) {
  SampleList out;
  for (std::size_t i = 0; i < n; ++i) {
    MeasurementSample s;
    s.channel_id = channel;
    s.route_distance = d0 + spacing * static_cast<double>(i);
    s.rx_power_dbm = p0 + slope * s.route_distance;
    out.push_back(s);
  }
  return out;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io;
}

RemDatabase three_segment_fixture() {
  std::map<int, std::vector<RemSegment>> segs;
  segs[23] = {{23, 0.0, 100.0, -0.01, -70.0, 2.0},
              {23, 100.0, 250.0, 0.02, -72.5, 3.25},
              {23, 250.0, 400.0, 0.0, -71.0, 1.5}};
  DttReceiverEntry r{1, 240.0, 120.0, 1, {{23, -75.2}}};
  return RemDatabase(segs, {r}, {{23, 490.0}});
}

}  // namespace

TEST_CASE("identical duplicates keep their power") {
  auto s = ingest("route_distance_m,channel_id,rx_power_dbm\n10,23,-70\n10,23,-70\n");
  REQUIRE(s.at(23).size() == 1);
  CHECK(s.at(23)[0].rx_power_dbm == doctest::Approx(-70.0).epsilon(1e-12));
}

TEST_CASE("duplicates are averaged in milliwatts") {
  auto s = ingest("route_distance_m,channel_id,rx_power_dbm\n10,23,-70\n10.05,23,-80\n");
  REQUIRE(s.at(23).size() == 1);
  const double expected = 10.0 * std::log10((1e-7 + 1e-8) / 2.0);  // mW
  CHECK(s.at(23)[0].rx_power_dbm == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.at(23)[0].rx_power_dbm == doctest::Approx(-72.6).epsilon(1e-3));
}

TEST_CASE("samples are sorted per channel and comments skipped") {
  auto s = ingest("# header comment\nroute_distance_m,channel_id,rx_power_dbm,lat,lon,timestamp_s\n"
                  "30,27,-60,52.1,16.9,3\n0,27,-61,,,\n15,23,-75,52.0,16.9,1.5\n");
  REQUIRE(s.size() == 2);
  REQUIRE(s.at(27).size() == 2);
  CHECK(s.at(27)[0].route_distance == 0.0);
  CHECK_FALSE(s.at(27)[0].lat.has_value());
  CHECK(s.at(27)[1].timestamp_s == 3.0);
}

TEST_CASE("malformed records report their line") {
  try {
    ingest("route_distance_m,channel_id,rx_power_dbm\n0,23,-70\n5,23,NaN\n");
    FAIL("NaN accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.code() == Errc::parse);
  }
  CHECK(code_of([] { ingest("route_distance_m,channel_id,rx_power_dbm\n0,23\n"); }) == Errc::parse);
  CHECK(code_of([] { ingest("distance,channel,power\n0,23,-70\n"); }) == Errc::parse);
  CHECK(code_of([] { ingest("route_distance_m,channel_id,rx_power_dbm\n-1,23,-70\n"); }) == Errc::parse);
}

TEST_CASE("empty stream is an error") {
  CHECK(code_of([] { ingest(""); }) == Errc::empty_input);
  CHECK(code_of([] { ingest("# only a comment\nroute_distance_m,channel_id,rx_power_dbm\n"); }) == Errc::empty_input);
}

TEST_CASE("gap filling") {
  SUBCASE("midpoint of a two-point line") {
    SampleList s = {{0.0, 23, -60.0}, {2.0, 23, -64.0}};
    auto out = interpolate_gaps(s, 1.0, 10.0);
    REQUIRE(out.size() == 3);
    CHECK(out[1].route_distance == 1.0);
    CHECK(out[1].rx_power_dbm == doctest::Approx(-62.0));
    CHECK(out[0] == s[0]);
    CHECK(out[2] == s[1]);
  }
  SUBCASE("equally spaced input is unchanged") {
    auto s = line_samples(23, 0.0, 30.0, 12, -70.0, 0.01);
    CHECK(interpolate_gaps(s, 300.0) == s);
  }
  SUBCASE("gap beyond the limit") {
    SampleList s = {{0.0, 23, -60.0}, {700.0, 23, -64.0}};
    CHECK(code_of([&] { interpolate_gaps(s, 1.0, 100.0); }) == Errc::gap_too_large);
  }
  SUBCASE("original samples survive a filled gap") {
    auto s = line_samples(23, 0.0, 30.0, 10, -70.0, 0.0);
    s.erase(s.begin() + 4, s.begin() + 7);
    auto out = interpolate_gaps(s, 300.0);
    CHECK(out.size() == 10);
    for (const auto& orig : s) CHECK(std::find(out.begin(), out.end(), orig) != out.end());
  }
}

TEST_CASE("exact line gives zero sigma") {
  auto s = line_samples(23, 0.0, 30.0, 20, -70.0, -0.01);
  auto segs = fit_segments(s);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].slope == doctest::Approx(-0.01).epsilon(1e-10));
  CHECK(segs[0].sigma == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(query_power(RemDatabase({{23, segs}}, {}, {}), 23, 135.0).mean_dbm == doctest::Approx(-70.0 - 0.01 * 135.0));
}

TEST_CASE("alternating residuals of one dB") {
  // Alternating +-1 on 20 equally spaced points is orthogonal to 1 and to x
  // only approximately; the normal equations give the exact reference.
  auto s = line_samples(23, 0.0, 30.0, 20, -70.0, 0.02);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i].rx_power_dbm += (i % 2 == 0) ? 1.0 : -1.0;
    x.push_back(s[i].route_distance);
    y.push_back(s[i].rx_power_dbm);
  }
  const double n = 20.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) ssr += std::pow(y[i] - icpt - slope * x[i], 2);

  auto seg = fit_segments(s).at(0);
  CHECK(seg.slope == doctest::Approx(slope).epsilon(1e-10));
  CHECK(seg.intercept == doctest::Approx(icpt).epsilon(1e-10));
  CHECK(seg.sigma == doctest::Approx(std::sqrt(ssr / n)).epsilon(1e-10));
  CHECK(seg.sigma == doctest::Approx(1.0).epsilon(0.01));
  CHECK(seg.slope == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("trailing blocks") {
  SUBCASE("two leftover samples get their own segment") {
    auto segs = fit_segments(line_samples(23, 0.0, 10.0, 42, -70.0, 0.0));
    REQUIRE(segs.size() == 3);
    CHECK(segs[2].d_start == 400.0);
    CHECK(segs[2].d_end == 410.0);
  }
  SUBCASE("a single leftover sample joins the previous block") {
    auto segs = fit_segments(line_samples(23, 0.0, 10.0, 41, -70.0, 0.0));
    REQUIRE(segs.size() == 2);
    CHECK(segs[1].d_end == 400.0);
  }
  SUBCASE("segments tile the route") {
    auto segs = fit_segments(line_samples(23, 0.0, 10.0, 65, -70.0, 0.0));
    for (std::size_t i = 1; i < segs.size(); ++i) CHECK(segs[i - 1].d_end == segs[i].d_start);
  }
  CHECK(code_of([] { fit_segments(line_samples(23, 0.0, 10.0, 1, -70.0, 0.0)); }) == Errc::insufficient_data);
}

TEST_CASE("least-squares optimality and order invariance") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 2.5);
  auto s = line_samples(23, 100.0, 30.0, 20, -68.0, -0.004);
  for (auto& m : s) m.rx_power_dbm += noise(rng);
  std::vector<double> x, y;
  for (const auto& m : s) {
    x.push_back(m.route_distance);
    y.push_back(m.rx_power_dbm);
  }
  const auto fit = fit_line(x, y, 100.0);
  auto ssr = [&](double slope, double icpt) {
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::pow(y[i] - icpt - slope * (x[i] - 100.0), 2);
    return acc;
  };
  const double best = ssr(fit.slope, fit.intercept);
  for (double ds : {-1e-3, -1e-5, 0.0, 1e-5, 1e-3}) {
    for (double di : {-0.1, -1e-3, 0.0, 1e-3, 0.1}) {
      if (ds == 0.0 && di == 0.0) continue;
      CHECK(ssr(fit.slope + ds, fit.intercept + di) >= best);
    }
  }

  std::vector<double> xr(x.rbegin(), x.rend()), yr(y.rbegin(), y.rend());
  const auto rev = fit_line(xr, yr, 100.0);
  CHECK(rev.slope == doctest::Approx(fit.slope).epsilon(1e-12));
  CHECK(rev.intercept == doctest::Approx(fit.intercept).epsilon(1e-12));
  CHECK(rev.sigma == doctest::Approx(fit.sigma).epsilon(1e-12));

  std::vector<double> pred;
  for (double xi : x) pred.push_back(fit.intercept + fit.slope * (xi - 100.0));
  CHECK(fit_line(x, pred, 100.0).sigma == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("queries") {
  const auto db = three_segment_fixture();
  SUBCASE("at d_start") {
    auto p = db.query_power(23, 100.0);
    CHECK(p.mean_dbm == -72.5);
    CHECK(p.sigma_db == 3.25);
  }
  SUBCASE("a join belongs to the later segment") {
    const double left = db.segments().at(23)[0].evaluate(250.0);
    const double right = db.segments().at(23)[2].evaluate(250.0);
    REQUIRE(left != right);
    CHECK(db.query_power(23, 250.0).mean_dbm == right);
    CHECK(db.query_power(23, 249.999).mean_dbm != right);
  }
  SUBCASE("the route end belongs to the last segment") { CHECK(db.query_power(23, 400.0).sigma_db == 1.5); }
  SUBCASE("continuous inside a segment") {
    for (double d = 101.0; d < 249.0; d += 7.0) {
      CHECK(std::abs(db.query_power(23, d + 1e-6).mean_dbm - db.query_power(23, d).mean_dbm) < 1e-6);
    }
  }
  CHECK(code_of([&] { db.query_power(23, 400.5); }) == Errc::coverage);
  CHECK(code_of([&] { db.query_power(23, -1.0); }) == Errc::coverage);
  CHECK(code_of([&] { db.query_power(27, 10.0); }) == Errc::unknown_channel);
  CHECK(db.receiver(1).power_dbm.at(23) == -75.2);
}

TEST_CASE("database validation") {
  std::map<int, std::vector<RemSegment>> gap;
  gap[23] = {{23, 0.0, 100.0, 0.0, -70.0, 2.0}, {23, 110.0, 200.0, 0.0, -70.0, 2.0}};
  CHECK(code_of([&] { RemDatabase(gap, {}, {}); }) == Errc::invalid_argument);
  DttReceiverEntry r{1, 240.0, 120.0, 1, {{23, -75.2}}};
  CHECK(code_of([&] { RemDatabase({}, {r}, {{23, 490.0}, {27, 522.0}}); }) == Errc::invalid_argument);
}

TEST_CASE("persistence round trip") {
  SUBCASE("empty database") {
    RemDatabase empty;
    CHECK(rem_from_json(rem_to_json(empty)) == empty);
    CHECK(rem_from_json(rem_to_json(empty)).empty());
  }
  SUBCASE("three segments, bit exact") {
    auto db = three_segment_fixture();
    std::map<int, std::vector<RemSegment>> segs = db.segments();
    segs[23][1].slope = 0.1 + 0.2;
    segs[23][1].intercept = -72.5 / 3.0;
    db = RemDatabase(segs, db.dtt_receivers(), db.dtt_channels());
    const auto path = std::filesystem::temp_directory_path() / "vdsa_test_rem.json";
    save_rem(db, path);
    CHECK(load_rem(path) == db);
    std::filesystem::remove(path);
  }
  SUBCASE("unknown version") {
    auto text = rem_to_json(three_segment_fixture());
    text.replace(text.find("\"version\": 1"), 12, "\"version\": 7");
    CHECK(code_of([&] { rem_from_json(text); }) == Errc::schema_version);
  }
}

TEST_CASE("campaign file sigma lies in the reported shadowing range") {
  const auto samples = ingest_file(std::filesystem::path(VDSA_DATA_DIR) / "drive_test_ch23_ch27.csv");
  REQUIRE(samples.size() == 2);
  for (const auto& [channel, list] : samples) {
    const auto segs = fit_segments(interpolate_gaps(list, 300.0), 20);
    CHECK(segs.size() >= 10);
    for (const auto& s : segs) {
      CHECK(s.sigma >= 1.5);
      CHECK(s.sigma <= 4.5);
    }
  }
}
