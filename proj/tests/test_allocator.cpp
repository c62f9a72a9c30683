#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixture.hpp"
#include "vdsa/allocator.hpp"
#include "vdsa/error.hpp"

using namespace vdsa;
using namespace vdsa::allocator;
using fixture::watts;
using interference::Band;
using interference::VvMode;
using scenario::Role;

namespace {

rem::DttReceiverEntry receiver(int id, double x, double distance, std::map<int, double> power) {
  return {id, x, distance, 1, std::move(power)};
}

// Channel 23 at 490 MHz and 27 at 522 MHz.
const std::vector<std::pair<int, double>> kChannels{{23, 490.0}, {27, 522.0}};

FrequencyAssignment unassigned(std::size_t n) { return FrequencyAssignment{std::vector<std::optional<double>>(n)}; }

}  // namespace

TEST_CASE("protected receivers") {
  fixture::World w;
  w.rem = fixture::flat_rem(kChannels, -200.0,
                            {receiver(1, 0.0, 50.0, {{23, -78.0}, {27, -85.0}}), receiver(2, 100.0, 50.0, {{23, -80.0}, {27, -79.9}})});
  w.add_platoon({0.0, -20.0});
  const ProtectionPolicy policy;
  const auto pairs = protected_dtt_set(policy, w.env(), 0);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].receiver_id == 1);
  CHECK(pairs[0].channel_id == 23);
  CHECK(pairs[1].receiver_id == 2);
  CHECK(pairs[1].channel_id == 27);

  auto bad = policy;
  bad.gamma_dtt_dbm = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(protected_dtt_set(bad, w.env(), 0), Error);

  fixture::World empty;
  empty.add_platoon({0.0, -20.0});
  CHECK_THROWS_AS(protected_dtt_set(policy, empty.env(), 0), Error);
}

TEST_CASE("worst-case receiver sits 60 m from the transmitter") {
  fixture::World w;
  w.rem = fixture::flat_rem(kChannels, -70.0);
  w.add_platoon({1000.0, 980.0}, 3.5);
  ProtectionPolicy policy;
  policy.mode = ProtectionMode::worst_case_60m;
  const auto pairs = protected_dtt_set(policy, w.env(), 1);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].receiver_id == -1);
  const auto pos = w.world.receiver_position(pairs[0].site);
  CHECK(std::hypot(pos.x - 980.0, pos.y - 3.5) == doctest::Approx(60.0));
}

TEST_CASE("protection budget") {
  fixture::World w;
  w.rem = fixture::flat_rem(kChannels, -200.0, {receiver(1, 0.0, 100.0, {{23, -70.0}, {27, -200.0}})});
  w.add_platoon({0.0, -20.0});
  const ProtectionPolicy policy;
  // Gain at 100 m is -40 dB, so 23 - 40 + c = budget + 1 = -70 - 39.5 + 1 gives c = -91.5 dB.
  w.acir.v_to_dtt = fixture::two_level(radio::AcirDirection::v_to_dtt, std::pow(10.0, -9.15));
  CHECK_FALSE(dtt_constraint_ok(policy, w.env(), 0, 498.0));
  CHECK(dtt_margin_db(policy, w.env(), 0, 498.0) == doctest::Approx(-1.0));
  CHECK(dtt_budget(policy, protected_dtt_set(policy, w.env(), 0).front()) == doctest::Approx(watts(-109.5)));

  w.acir.v_to_dtt = fixture::two_level(radio::AcirDirection::v_to_dtt, std::pow(10.0, -9.35));
  CHECK(dtt_constraint_ok(policy, w.env(), 0, 498.0));
  CHECK(dtt_margin_db(policy, w.env(), 0, 498.0) == doctest::Approx(1.0));

  fixture::World quiet;
  quiet.rem = fixture::flat_rem(kChannels, -200.0, {receiver(1, 0.0, 100.0, {{23, -90.0}, {27, -90.0}})});
  quiet.acir.v_to_dtt = fixture::two_level(radio::AcirDirection::v_to_dtt, 1.0);
  quiet.add_platoon({0.0, -20.0});
  CHECK(dtt_constraint_ok(policy, quiet.env(), 0, 498.0));
  CHECK(dtt_margin_db(policy, quiet.env(), 0, 498.0) == std::numeric_limits<double>::infinity());
  CHECK(feasible_frequencies(policy, FrequencyGrid::defaults(), quiet.env(), 0) ==
        FrequencyGrid::defaults().candidates_mhz);
}

TEST_CASE("feasible sets") {
  const auto grid = FrequencyGrid::defaults();
  const ProtectionPolicy policy;

  fixture::World flat;
  flat.radio = radio::RadioConfig{};
  flat.rem = fixture::flat_rem(kChannels, -200.0, {receiver(1, 0.0, 40.0, {{23, -65.0}, {27, -200.0}})});
  flat.acir.v_to_dtt = fixture::two_level(radio::AcirDirection::v_to_dtt, 1.0);
  flat.add_platoon({10.0, -10.0});
  CHECK(feasible_frequencies(policy, grid, flat.env(), 0).empty());

  int proper = 0;
  for (double d = 5.0; d <= 400.0; d += 5.0) {
    fixture::World w;
    w.radio = radio::RadioConfig{};
    w.acir = radio::default_acir_tables();
    w.rem = fixture::flat_rem(kChannels, -200.0, {receiver(1, 0.0, d, {{23, -65.0}, {27, -200.0}})});
    w.add_platoon({10.0, -10.0});
    const auto f = feasible_frequencies(policy, grid, w.env(), 0);
    const std::vector<double> suffix(grid.candidates_mhz.end() - static_cast<std::ptrdiff_t>(f.size()),
                                     grid.candidates_mhz.end());
    CHECK(f == suffix);
    if (!f.empty() && f.size() < grid.candidates_mhz.size()) ++proper;

    for (double a = 499.0; a < 513.0; a += 2.0) {
      if (dtt_constraint_ok(policy, w.env(), 0, a)) CHECK(dtt_constraint_ok(policy, w.env(), 0, a + 2.0));
    }
  }
  CHECK(proper > 0);

  FrequencyGrid bad;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.candidates_mhz = {489.0, 500.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.candidates_mhz = {501.0, 499.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(FrequencyGrid::uniform(499.0, 513.0, 2.0).candidates_mhz.size() == 8);
}

TEST_CASE("stricter protection never enlarges the feasible set") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> power(-79.0, -55.0);
  std::uniform_real_distribution<double> dist(15.0, 300.0);
  const auto grid = FrequencyGrid::defaults();
  for (int trial = 0; trial < 40; ++trial) {
    fixture::World w;
    w.radio = radio::RadioConfig{};
    w.acir = radio::default_acir_tables();
    w.rem = rem::RemDatabase({{23, {rem::RemSegment{23, -1e6, 1e6, 0.0, -60.0, 2.5}}},
                              {27, {rem::RemSegment{27, -1e6, 1e6, 0.0, -60.0, 2.5}}}},
                             {receiver(1, 0.0, dist(rng), {{23, power(rng)}, {27, power(rng)}})},
                             {{23, 490.0}, {27, 522.0}});
    w.add_platoon({40.0, 20.0, 0.0});
    ProtectionPolicy policy;
    auto previous = feasible_frequencies(policy, grid, w.env(), 0);
    for (double sir : {40.0, 45.0, 55.0}) {
      policy.sir_min_db = sir;
      const auto next = feasible_frequencies(policy, grid, w.env(), 0);
      CHECK(std::includes(previous.begin(), previous.end(), next.begin(), next.end()));
      previous = next;
    }
    policy = ProtectionPolicy{};
    previous = feasible_frequencies(policy, grid, w.env(), 0);
    for (double c : {0.5, 1.0, 2.0}) {
      policy.margin_sigma = c;
      const auto next = feasible_frequencies(policy, grid, w.env(), 0);
      CHECK(std::includes(previous.begin(), previous.end(), next.begin(), next.end()));
      previous = next;
    }
  }
}

TEST_CASE("exhaustive tie rule on a flat objective") {
  fixture::World w;
  w.add_platoon({100.0, 80.0, 60.0});
  const auto grid = FrequencyGrid::defaults();
  const std::vector<std::vector<double>> feasible{grid.candidates_mhz};
  CHECK(choose_exhaustive(feasible, w.env(), FrequencyAssignment{{507.0}}) == FrequencyAssignment{{507.0}});
  CHECK(choose_exhaustive(feasible, w.env(), FrequencyAssignment{{506.0}}) == FrequencyAssignment{{499.0}});
  CHECK(choose_exhaustive(feasible, w.env(), unassigned(1)) == FrequencyAssignment{{499.0}});
}

TEST_CASE("exhaustive spreads symmetric platoons to the grid ends") {
  fixture::World w;
  w.acir.v_to_v = radio::AcirTable(radio::AcirDirection::v_to_v, {0.0, 14.0}, {0.0, -60.0}, std::nullopt, -60.0,
                                   -45.0, radio::AcirInterpolation::linear_db);
  w.add_platoon({100.0, 80.0, 60.0});
  w.add_platoon({100.0, 80.0, 60.0}, 3.5);
  const auto grid = FrequencyGrid::defaults();
  const std::vector<std::vector<double>> feasible{grid.candidates_mhz, grid.candidates_mhz};
  const SelectorOptions aloha{VvMode::all_nodes};
  CHECK(choose_exhaustive(feasible, w.env(), unassigned(2), aloha) == FrequencyAssignment{{499.0, 513.0}});
  CHECK(choose_exhaustive(feasible, w.env(), FrequencyAssignment{{513.0, 499.0}}, aloha) ==
        FrequencyAssignment{{513.0, 499.0}});
}

TEST_CASE("exhaustive against brute-force enumeration") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(0.0, 600.0);
  const std::vector<double> toy{499.0, 505.0, 511.0};
  const double adjacent[] = {1.0, 1e-2, 1e-3};  // by |offset| / 6
  for (int trial = 0; trial < 25; ++trial) {
    fixture::World w;
    w.acir.v_to_v = radio::AcirTable::from_linear(radio::AcirDirection::v_to_v, {0.0, 6.0, 12.0},
                                                  {1.0, 1e-2, 1e-3}, 1e-3);
    const double a0 = pos(rng);
    const double a1 = pos(rng);
    w.add_platoon({a0, a0 - 20.0, a0 - 40.0});
    w.add_platoon({a1, a1 - 25.0}, 3.5);
    const auto& vs = w.world.vehicles;
    const double p = watts(23.0);
    const double noise = w.radio.noise_w();

    auto objective = [&](double f0, double f1) {
      const double f[] = {f0, f1};
      double lowest = std::numeric_limits<double>::infinity();
      for (const auto& link : interference::link_set(w.world)) {
        const auto& rx = vs[link.rx];
        const auto& tx = vs[link.tx];
        const double ft = f[*tx.platoon_id];
        double vv = 0.0;
        for (const auto& j : vs) {
          if (j.id == rx.id || j.id == tx.id) continue;
          const double c = adjacent[static_cast<int>(std::abs(f[*j.platoon_id] - ft) / 6.0 + 0.5)];
          vv += 0.0025 * p * std::pow(std::hypot(j.x - rx.x, j.y - rx.y), -2.0) * c;
        }
        const double s = p * std::pow(std::hypot(tx.x - rx.x, tx.y - rx.y), -2.0) / (noise + vv);
        lowest = std::min(lowest, 10.0 * std::log10(s));
      }
      return lowest;
    };
    double best = -std::numeric_limits<double>::infinity();
    FrequencyAssignment best_a;
    for (double f0 : toy) {
      for (double f1 : toy) {
        const double v = objective(f0, f1);
        if (v > best + 1e-9) {
          best = v;
          best_a = FrequencyAssignment{{f0, f1}};
        }
      }
    }
    const auto chosen = choose_exhaustive({toy, toy}, w.env(), unassigned(2), {VvMode::all_nodes});
    CHECK(objective(*chosen.platoon_mhz[0], *chosen.platoon_mhz[1]) == doctest::Approx(best).epsilon(1e-12));
    CHECK(chosen == best_a);
  }
}

TEST_CASE("maximum separation") {
  fixture::World w;
  w.add_platoon({100.0, 80.0});
  const auto grid = FrequencyGrid::defaults();
  const auto& all = grid.candidates_mhz;
  const auto even = FrequencyGrid::uniform(498.0, 514.0, 2.0);
  CHECK(choose_max_separation({even.candidates_mhz}, even, unassigned(1)) == FrequencyAssignment{{506.0}});
  CHECK(choose_max_separation({all}, grid, unassigned(1)) == FrequencyAssignment{{505.0}});
  CHECK(choose_max_separation({all}, grid, FrequencyAssignment{{507.0}}) == FrequencyAssignment{{507.0}});

  CHECK(choose_max_separation({all, all}, grid, unassigned(2)) == FrequencyAssignment{{499.0, 513.0}});
  CHECK(choose_max_separation({{499.0, 501.0}, {511.0, 513.0}}, grid, unassigned(2)) ==
        FrequencyAssignment{{499.0, 513.0}});
  CHECK(choose_max_separation({{505.0}, {505.0}}, grid, unassigned(2)) == FrequencyAssignment{{505.0, 505.0}});

  // The other platoon has vacated TVWS: nothing to separate from.
  CHECK(choose_max_separation({all, {}}, grid, FrequencyAssignment{{509.0, 499.0}}) ==
        FrequencyAssignment{{509.0, std::nullopt}});
  CHECK(choose_max_separation({all, {}}, grid, unassigned(2)) == FrequencyAssignment{{499.0, std::nullopt}});
}

TEST_CASE("DTT protection only") {
  const auto grid = FrequencyGrid::defaults();
  const auto& all = grid.candidates_mhz;
  CHECK(choose_dtt_protect_only({all}, grid, FrequencyAssignment{{511.0}}) == FrequencyAssignment{{511.0}});
  CHECK(choose_dtt_protect_only({{505.0, 507.0}}, grid, FrequencyAssignment{{506.0}}) ==
        FrequencyAssignment{{505.0}});
  CHECK(choose_dtt_protect_only({{505.0, 507.0, 509.0}}, grid, FrequencyAssignment{{511.0}}) ==
        FrequencyAssignment{{509.0}});
  CHECK(choose_dtt_protect_only({all, all}, grid, FrequencyAssignment{{503.0, 503.0}}) ==
        FrequencyAssignment{{503.0, 503.0}});
  CHECK(choose_dtt_protect_only({all, all}, grid, unassigned(2)) == FrequencyAssignment{{505.0, 505.0}});
  CHECK(choose_dtt_protect_only({{}, all}, grid, FrequencyAssignment{{503.0, 503.0}}) ==
        FrequencyAssignment{{std::nullopt, 503.0}});
}

TEST_CASE("switch counting") {
  std::vector<FrequencyAssignment> history(10, FrequencyAssignment{{499.0, 513.0}});
  CHECK(count_switches(history) == std::vector<int>{0, 0});
  for (std::size_t t = 0; t < history.size(); ++t) history[t].platoon_mhz[0] = t % 2 ? 501.0 : 499.0;
  history[4].platoon_mhz[1] = std::nullopt;
  CHECK(count_switches(history) == std::vector<int>{9, 2});
  CHECK_THROWS_AS(count_switches({}), Error);
  CHECK(strategy_from_string("max-sep") == Strategy::max_separation);
  CHECK(to_string(Strategy::dtt_protect_only) == "dtt-only");
  CHECK_THROWS_AS(strategy_from_string("greedy"), Error);
}

TEST_CASE("random snapshots: safety, optimality and determinism") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pos(0.0, 2500.0);
  std::uniform_real_distribution<double> power(-90.0, -50.0);
  std::uniform_real_distribution<double> dist(10.0, 400.0);
  const auto grid = FrequencyGrid::defaults();
  const ProtectionPolicy policy;
  for (int trial = 0; trial < 30; ++trial) {
    fixture::World w;
    w.radio = radio::RadioConfig{};
    w.acir = radio::default_acir_tables();
    std::vector<rem::DttReceiverEntry> receivers;
    for (int r = 0; r < 6; ++r) receivers.push_back(receiver(r + 1, pos(rng), dist(rng), {{23, power(rng)}, {27, power(rng)}}));
    w.rem = fixture::flat_rem(kChannels, -75.0, receivers);
    const double a = pos(rng);
    const double b = pos(rng);
    w.add_platoon({a, a - 15.0, a - 30.0, a - 45.0});
    w.add_platoon({b, b - 15.0, b - 30.0}, 10.5);
    const auto env = w.env();
    const FrequencyAssignment current{{503.0, 509.0}};

    const auto ex = select(Strategy::exhaustive, grid, policy, env, current);
    for (Strategy s : {Strategy::exhaustive, Strategy::max_separation, Strategy::dtt_protect_only}) {
      const auto sel = select(s, grid, policy, env, current);
      CHECK(sel.feasible == ex.feasible);
      for (std::size_t k = 0; k < 2; ++k) {
        const auto f = sel.assignment.platoon_mhz[k];
        CHECK(f.has_value() == !sel.feasible[k].empty());
        if (!f) continue;
        for (int tx : w.world.platoons[k]) CHECK(dtt_constraint_ok(policy, env, tx, *f));
      }
      if (ex.min_sinr_db && sel.min_sinr_db) CHECK(*ex.min_sinr_db >= *sel.min_sinr_db);
      const auto again = select(s, grid, policy, env, current);
      CHECK(again.assignment == sel.assignment);
    }
  }
}
