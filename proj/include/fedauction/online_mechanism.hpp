#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fedauction/core.hpp"

namespace fedauction {

/// Bids indexed by declared arrival step 1..horizon.
class ArrivalSchedule {
 public:
  ArrivalSchedule() = default;
  /// Throws std::invalid_argument for a declared arrival outside
  /// [1, horizon].
  ArrivalSchedule(int horizon, std::span<const Bid> bids);

  int horizon() const { return horizon_; }
  std::span<const Bid> arrivals_at(Step step) const;
  std::vector<Bid> all_bids() const;
  std::size_t size() const;

 private:
  int horizon_ = 0;
  std::vector<std::vector<Bid>> by_step_;  // index 0 is step 1
};

struct ThresholdResult {
  double threshold = 0.0;
  std::size_t selected_count = 0;
  std::vector<WorkerId> sample_winners;  // in density order
};

/// Ascending cost density, ties by ascending id.
void sort_by_density(std::vector<Bid>& bids);

/// Proportional-share threshold learned from a sample set.
///
/// Workers are admitted in density order while
/// `b_i / Re_i <= B' / (Re_i + sum of admitted Re)`. The threshold is
/// `min(B' / sum Re, density of the first rejected worker)`; the second term
/// is dropped when every sample worker was admitted. An empty admitted set
/// yields `empty_sample_threshold`.
ThresholdResult get_payment_density_threshold(double sample_budget,
                                              std::span<const Bid> sample,
                                              double empty_sample_threshold = 0.0);

/// Sample budget at step t: (B1 + (B - B1)(t - 1)/(T - 1)) / T.
/// Throws std::domain_error unless 2 <= t <= T.
double sample_budget_at(double budget, double first_round_budget, int rounds,
                        Step step);

struct FirstStepResult {
  std::vector<WorkerId> winners;  // in density order
  double threshold = 0.0;
  std::vector<double> payments;   // parallel to winners
};

/// Offline proportional share at the start step over every arrived bid,
/// scaled for a T-round commitment. Returns nullopt (start delayed) when
/// fewer than `min_workers` are selected.
std::optional<FirstStepResult> first_step_selection(std::span<const Bid> arrived,
                                                    double first_round_budget,
                                                    int rounds, int min_workers);

enum class PaymentRule {
  threshold,     // the mechanism's rule: (T - t + 1) Re_i rho* plus top-ups
  first_price,   // pays the declared price for every remaining round
  full_horizon,  // pays T Re_i rho* regardless of the selection step
};

/// Knobs for the online loop. Defaults give the standard mechanism; the other
/// settings exist for the fixed-threshold benchmark and for deliberately
/// broken negative controls.
struct OnlineOptions {
  std::optional<double> fixed_threshold;
  PaymentRule payment = PaymentRule::threshold;
  bool later_admissions = true;
  bool enforce_group_caps = true;
};

/// Publisher state during one online auction. Single owner, mutable.
class AuctionState {
 public:
  explicit AuctionState(TaskConfig config);

  const TaskConfig& config() const { return config_; }
  Step current_step() const { return step_; }
  void set_step(Step t) { step_ = t; }

  void add_bid(const Bid& bid);
  const std::vector<Bid>& group(int g) const { return groups_[g]; }

  bool is_winner(WorkerId id) const { return winners_.count(id) != 0; }
  const WinnerRecord* winner(WorkerId id) const;
  const std::map<WorkerId, WinnerRecord>& winners() const { return winners_; }
  /// Payment ledger: p_i for winners, 0 otherwise.
  double payment(WorkerId id) const;
  double group_spent(int g) const { return spent_[g]; }
  double group_remaining(int g) const;

  void admit(const Bid& bid, Step t, double payment, double threshold);
  /// Raises an existing winner's payment. Payments never decrease.
  void raise_payment(WorkerId id, double new_payment, double threshold);

  int budget_cap_hits() const { return cap_hits_; }
  void record_cap_hit() { ++cap_hits_; }
  std::vector<GroupStepTrace>& trace() { return trace_; }

  Outcome to_outcome(int start_delay) const;

 private:
  TaskConfig config_;
  Step step_ = 1;
  std::array<std::vector<Bid>, 2> groups_;
  std::map<WorkerId, WinnerRecord> winners_;
  std::array<double, 2> spent_{0.0, 0.0};
  int cap_hits_ = 0;
  std::vector<GroupStepTrace> trace_;
};

/// One group pass at step t >= 2 against the threshold learned from the other
/// group. New workers are admitted while the group's B/2 cap allows; existing
/// winners get top-ups when the threshold exceeds their running maximum.
void select_workers_from_group(int group, double threshold, AuctionState& state,
                               Step t, const OnlineOptions& options = {});

/// Full online auction across T steps, including the delayed-start loop.
Outcome run_online_auction(const TaskConfig& config,
                           const ArrivalSchedule& schedule,
                           const OnlineOptions& options = {});

}  // namespace fedauction
