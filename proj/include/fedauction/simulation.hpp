#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedauction/baselines.hpp"
#include "fedauction/core.hpp"
#include "fedauction/random.hpp"

namespace fedauction {

/// A population of workers together with the bids they submit.
struct Instance {
  std::vector<WorkerProfile> workers;
  std::vector<Bid> bids;
};

/// P(t) proportional to 1/t over 1..T.
std::vector<double> harmonic_arrival_law(int rounds);

/// Throws std::invalid_argument if the probabilities are negative or do not
/// sum to 1 within 1e-9.
void validate_arrival_law(std::span<const double> law);

/// Inverse-CDF draw; returns a step in 1..law.size().
Step sample_arrival(std::span<const double> law, Rng& rng);

inline constexpr double kMinReputation = 1e-6;

/// Uniform population: Re ~ U[0,1] clamped to [1e-6, 1],
/// b ~ U[Re/3 + 1/15, Re/3 + 4/15], internal quality
/// ~ U[max(0, Re - 0.1), min(1, Re + 0.1)], c = b, harmonic arrivals.
Instance generate_uniform_population(int count, int rounds, std::uint64_t seed);

inline constexpr std::array<double, 4> kDefaultQualityLevels{1.0, 0.7, 0.4, 0.1};

/// Quality mix: `counts[j]` workers with data accuracy `levels[j]`, bids
/// ~ U[dacc/3 + 1/15, dacc/3 + 4/15], internal quality = dacc, c = b and a
/// common initial reputation.
Instance generate_quality_population(std::span<const int> counts, int rounds,
                                     std::uint64_t seed,
                                     std::span<const double> levels = kDefaultQualityLevels,
                                     double initial_reputation = 0.5);

/// Redraws true and declared arrivals of every worker from `law`.
void redraw_arrivals(Instance& instance, std::span<const double> law, Rng& rng);

enum class ReputationUpdate { identity, ema };

struct ReputationPolicy {
  ReputationUpdate kind = ReputationUpdate::ema;
  double alpha = 0.3;
};

std::string_view to_string(ReputationUpdate kind);
std::optional<ReputationUpdate> parse_reputation_update(std::string_view name);

/// EMA toward internal quality for participants; result clamped to
/// [1e-6, 1]. Non-participants keep their reputation.
double update_reputation(const ReputationPolicy& policy, double reputation,
                         double internal_quality, bool participated);

struct TaskSequenceSpec {
  int num_tasks = 70;
  int warmup_tasks = 5;
  ReputationPolicy reputation_update;
  TaskConfig task{80.0, 10, 0.35, 1, GroupOrder::descending_reputation, 0.0};
  double fixed_threshold = kDefaultFixedThreshold;

  void validate() const;
};

struct TaskSequenceResult {
  /// nullopt for tasks that never started.
  std::vector<std::optional<Outcome>> outcomes;
  /// Share of winners whose internal quality is 1.0, per task; nullopt when
  /// the task is unscored (warm-up, never started or no winners).
  std::vector<std::optional<double>> proportions;
  int scored_tasks = 0;
  double mean_proportion = 0.0;
};

/// Fraction of winners with internal quality 1.0; nullopt without winners.
std::optional<double> quality_proportion(const Outcome& outcome,
                                         std::span<const WorkerProfile> profiles);

/// Runs the task sequence, carrying reputations from task to task. The
/// population is taken by value; its reputations evolve.
TaskSequenceResult run_task_sequence(const TaskSequenceSpec& spec, Instance population,
                                     MechanismKind mechanism, std::uint64_t seed);

/// One line per worker: id,reputation,bid,cost,arrival,quality. Lines that
/// start with '#' are comments. Numbers use shortest round-trip form.
void write_population(std::ostream& out, const Instance& instance);
/// Throws std::runtime_error on a malformed line.
Instance read_population(std::istream& in);

}  // namespace fedauction
