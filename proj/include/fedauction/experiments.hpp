#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedauction/baselines.hpp"
#include "fedauction/properties.hpp"
#include "fedauction/simulation.hpp"

namespace fedauction {

/// Raised for unreadable or semantically invalid scenario files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PopulationKind { uniform, quality };

struct PopulationSpec {
  PopulationKind kind = PopulationKind::uniform;
  int count = 100;
  std::vector<int> quality_counts{15, 5, 5, 5};
  std::vector<double> quality_levels{1.0, 0.7, 0.4, 0.1};
  double initial_reputation = 0.5;
};

enum class SweepParameter { budget, workers };

struct SweepSpec {
  SweepParameter parameter = SweepParameter::budget;
  std::vector<double> values;
};

/// Everything a scenario file can set. The keys are listed in README.md.
struct ScenarioConfig {
  std::vector<MechanismKind> mechanisms;
  TaskConfig task{125.0, 10, 0.35, 1, GroupOrder::descending_reputation, 0.0};
  double fixed_threshold = kDefaultFixedThreshold;
  PopulationSpec population;
  std::vector<std::uint64_t> seeds;
  std::optional<SweepSpec> sweep;
  TaskSequenceSpec sequence;
  int trials = 10000;
  double sufficiency_multiplier = 10.0;
  std::string output;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses the flat `key = value` format ('#' or ';' comments). Unknown keys
/// are rejected. Throws ConfigError.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::string& path);
/// The configuration used when no file is given.
ScenarioConfig default_scenario();

/// "1,2,5" or "1..50" or a mix such as "1..3,10". Throws ConfigError.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
/// "50,75" or "50..200:25". Throws ConfigError.
std::vector<double> parse_value_list(const std::string& text);

struct RunRow {
  std::uint64_t seed = 0;
  MechanismKind mechanism = MechanismKind::Online;
  double budget = 0.0;
  int rounds = 0;
  int n_workers = 0;
  double total_paid = 0.0;
  double utility = 0.0;
  double unit_payment_utility = 0.0;
  int n_winners = 0;
  std::optional<double> quality_proportion;
};

Instance make_population(const PopulationSpec& spec, int rounds, std::uint64_t seed);

/// One row per (seed, mechanism), in that order.
std::vector<RunRow> run_scenario(const ScenarioConfig& config);
/// One block of run_scenario rows per sweep value. Throws ConfigError when
/// the scenario has no sweep.
std::vector<RunRow> run_sweep(const ScenarioConfig& config);

void write_run_csv(std::ostream& out, const std::vector<RunRow>& rows);

struct Table1Row {
  MechanismKind mechanism = MechanismKind::Online;
  std::optional<std::uint64_t> seed;  // nullopt for the across-seed mean
  int scored_tasks = 0;
  double mean_proportion = 0.0;
};

/// Task sequences per (mechanism, seed) followed by one mean row per
/// mechanism.
std::vector<Table1Row> run_table1(const ScenarioConfig& config);
void write_table1_csv(std::ostream& out, const std::vector<Table1Row>& rows);

/// Budget feasibility, individual rationality, cost and time truthfulness
/// and consumer sovereignty over the randomized campaign family. Consumer
/// sovereignty uses max(1, trials / 10) instance-worker pairs.
std::vector<PropertyReport> run_property_suite(const ScenarioConfig& config, int trials,
                                               MechanismVariant variant);

}  // namespace fedauction
