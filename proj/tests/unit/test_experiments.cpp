#include "doctest.h"

#include <sstream>

#include "fedauction/experiments.hpp"

using namespace fedauction;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

std::string csv(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  write_run_csv(out, rows);
  return out.str();
}

}  // namespace

TEST_CASE("seed and value lists") {
  CHECK(parse_seed_list("1,2,5") == std::vector<std::uint64_t>{1, 2, 5});
  CHECK(parse_seed_list("1..3, 10") == std::vector<std::uint64_t>{1, 2, 3, 10});
  CHECK(parse_seed_list("4..4") == std::vector<std::uint64_t>{4});
  CHECK_THROWS_AS(parse_seed_list("5..1"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("x"), ConfigError);
  CHECK(parse_value_list("50..200:25") ==
        std::vector<double>{50, 75, 100, 125, 150, 175, 200});
  CHECK(parse_value_list("1.5,2") == std::vector<double>{1.5, 2});
  CHECK_THROWS_AS(parse_value_list("1..5"), ConfigError);
  CHECK_THROWS_AS(parse_value_list("1..5:0"), ConfigError);
}

TEST_CASE("scenario parsing") {
  auto c = parse(
      "# budget sweep\n"
      "mechanisms = online, rrafl\n"
      "budget = 80\n"
      "rounds = 12\n"
      "; alternate comment\n"
      "group_order = ascending_reputation\n"
      "seeds = 1..3\n"
      "sweep = budget\n"
      "sweep_values = 50..100:25\n"
      "population = quality\n"
      "quality_counts = 3,2\n"
      "reputation_update = identity\n"
      "tasks = 9\n"
      "warmup_tasks = 1\n");
  CHECK(c.mechanisms == std::vector{MechanismKind::Online, MechanismKind::RRAFL});
  CHECK(c.task.budget == 80.0);
  CHECK(c.task.rounds == 12);
  CHECK(c.task.group_order == GroupOrder::ascending_reputation);
  CHECK(c.seeds.size() == 3);
  REQUIRE(c.sweep.has_value());
  CHECK(c.sweep->values == std::vector<double>{50, 75, 100});
  CHECK(c.population.kind == PopulationKind::quality);
  CHECK(c.population.quality_counts == std::vector<int>{3, 2});
  CHECK(c.sequence.task.budget == 80.0);
  CHECK(c.sequence.num_tasks == 9);
  CHECK(c.sequence.reputation_update.kind == ReputationUpdate::identity);
  c.validate();
}

TEST_CASE("scenario errors") {
  CHECK_THROWS_AS(parse("budgett = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("[section]\nbudget = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("budget = lots\n"), ConfigError);
  CHECK_THROWS_AS(parse("rounds = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("mechanisms = online, magic\n"), ConfigError);
  CHECK_THROWS_AS(parse("group_order = sideways\n"), ConfigError);
  CHECK_THROWS_AS(parse("sweep = rounds\nsweep_values = 1,2\n"), ConfigError);
  CHECK_THROWS_AS(parse("seeds = 1\nbudget = -5\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("seeds = 1\nfirst_round_ratio = 1.0\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("seeds = 1\ntrials = 0\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse("seeds = 1\nsweep = workers\nsweep_values = 10.5\n").validate(),
                  ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.ini"), ConfigError);
}

TEST_CASE("empty seed list is rejected") {
  auto c = parse("budget = 100\n");
  CHECK(c.seeds.empty());
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
}

TEST_CASE("run rows and csv") {
  auto c = parse("mechanisms = online, bid_greedy\nseeds = 3,4\nworkers = 30\n");
  auto rows = run_scenario(c);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].seed == 3);
  CHECK(rows[0].mechanism == MechanismKind::Online);
  CHECK(rows[1].mechanism == MechanismKind::BidGreedy);
  CHECK(rows[2].seed == 4);
  for (const auto& r : rows) {
    CHECK(r.n_workers == 30);
    CHECK(r.total_paid <= r.budget + 1e-9);
    CHECK_FALSE(r.quality_proportion.has_value());
  }
  const std::string text = csv(rows);
  CHECK(text.rfind(
            "seed,mechanism,budget,rounds,n_workers,total_paid,utility,unit_payment_utility,"
            "n_winners,quality_proportion\n",
            0) == 0);
  CHECK(text == csv(run_scenario(c)));
}

TEST_CASE("sweeps") {
  auto c = parse("seeds = 1\nsweep = workers\nsweep_values = 20,40\n");
  auto rows = run_sweep(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_workers == 20);
  CHECK(rows[1].n_workers == 40);
  auto b = parse("seeds = 1,2\nsweep_values = 50..100:50\n");
  auto brows = run_sweep(b);
  REQUIRE(brows.size() == 4);
  CHECK(brows[0].budget == 50.0);
  CHECK(brows[3].budget == 100.0);
  CHECK_THROWS_AS(run_sweep(parse("seeds = 1\n")), ConfigError);
}

TEST_CASE("table1 rows") {
  auto c = parse(
      "mechanisms = online, bid_greedy\npopulation = quality\nbudget = 80\n"
      "tasks = 10\nwarmup_tasks = 2\nseeds = 1,2\n");
  auto rows = run_table1(c);
  REQUIRE(rows.size() == 6);
  CHECK_FALSE(rows[4].seed.has_value());
  CHECK(rows[4].mean_proportion ==
        doctest::Approx((rows[0].mean_proportion + rows[1].mean_proportion) / 2));
  std::ostringstream a, b;
  write_table1_csv(a, rows);
  write_table1_csv(b, run_table1(c));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("mechanism,seed,scored_tasks,mean_proportion\n", 0) == 0);
}

TEST_CASE("property suite") {
  auto c = default_scenario();
  auto reports = run_property_suite(c, 40, MechanismVariant::standard);
  REQUIRE(reports.size() == 5);
  for (const auto& r : reports) CHECK(r.passed());
  CHECK_THROWS_AS(run_property_suite(c, 0, MechanismVariant::standard), ConfigError);
}
