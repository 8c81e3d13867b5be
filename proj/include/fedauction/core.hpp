#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedauction {

using WorkerId = std::uint64_t;
using Step = int;

/// Private truth of a worker plus its public reputation.
///
/// `internal_quality` is interpreted by the scenario: the internal reputation
/// of the uniform population, or the data accuracy of the quality mix.
struct WorkerProfile {
  WorkerId id = 0;
  double true_cost = 0.0;
  Step true_arrival = 1;
  double reputation = 1.0;
  double internal_quality = 0.0;
};

/// What the publisher sees: declared arrival and per-iteration price. The
/// reputation is public and travels with the bid.
struct Bid {
  WorkerId worker_id = 0;
  Step declared_arrival = 1;
  double price = 0.0;
  double reputation = 1.0;
};

struct WinnerRecord {
  WorkerId worker_id = 0;
  Step selected_step = 1;
  double payment = 0.0;
  double max_threshold_seen = 0.0;
  double reputation = 1.0;
};

enum class GroupOrder { ascending_reputation, descending_reputation };

struct TaskConfig {
  double budget = 100.0;
  int rounds = 10;
  double first_round_ratio = 0.35;
  int min_workers_to_start = 1;
  GroupOrder group_order = GroupOrder::descending_reputation;
  double empty_sample_threshold = 0.0;

  double first_round_budget() const { return budget * first_round_ratio; }

  /// Throws std::invalid_argument when B <= 0, T < 2, the ratio is outside
  /// (0, 1) or the minimum worker count is not positive.
  void validate() const;
};

/// Per-step view of one group pass, recorded by the online mechanisms.
struct GroupStepTrace {
  Step step = 0;
  int group = 0;
  double threshold = 0.0;
  double spent_before = 0.0;
  double spent_after = 0.0;
};

struct Outcome {
  bool started = false;
  /// Schedule steps the start was pushed back by (0 when it started on time).
  int start_delay = 0;
  int rounds = 0;
  double budget = 0.0;
  /// True when the mechanism enforces a B/2 cap per id-parity group.
  bool group_capped = false;
  /// Number of times an admission or top-up was blocked or truncated by a
  /// group cap. Zero means the run never touched the budget limit.
  int budget_cap_hits = 0;

  std::vector<WinnerRecord> winners;  // sorted by worker id
  double total_paid = 0.0;
  double publisher_utility = 0.0;
  double unit_payment_utility = 0.0;
  std::map<WorkerId, double> worker_utilities;
  std::vector<GroupStepTrace> trace;

  const WinnerRecord* find(WorkerId id) const;
  double group_spent(int group) const;
};

inline int group_of(WorkerId id) { return static_cast<int>(id % 2); }

/// Bid price per unit reputation. Throws std::domain_error unless
/// reputation > 0.
double cost_density(double bid_price, double reputation);

inline double cost_density(const Bid& bid) {
  return cost_density(bid.price, bid.reputation);
}

double worker_utility(const std::optional<WinnerRecord>& record,
                      double true_cost, int rounds);

double publisher_utility(std::span<const WinnerRecord> winners, int rounds);

/// Fills total_paid, publisher_utility and unit_payment_utility from the
/// winner list.
void finalize_outcome(Outcome& outcome);

/// Computes u_i for every profile; unselected workers get 0.
void attach_worker_utilities(Outcome& outcome,
                             std::span<const WorkerProfile> profiles);

/// Truthful bids for a population (price = true cost, declared = true
/// arrival).
std::vector<Bid> truthful_bids(std::span<const WorkerProfile> profiles);

}  // namespace fedauction
