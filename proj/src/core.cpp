#include "fedauction/core.hpp"

#include <algorithm>

namespace fedauction {

void TaskConfig::validate() const {
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  if (rounds < 2) throw std::invalid_argument("rounds must be at least 2");
  if (!(first_round_ratio > 0.0 && first_round_ratio < 1.0))
    throw std::invalid_argument("first_round_ratio must lie in (0, 1)");
  if (min_workers_to_start < 1)
    throw std::invalid_argument("min_workers_to_start must be positive");
  if (!(empty_sample_threshold >= 0.0))
    throw std::invalid_argument("empty_sample_threshold must be non-negative");
}

const WinnerRecord* Outcome::find(WorkerId id) const {
  auto it = std::lower_bound(winners.begin(), winners.end(), id,
                             [](const WinnerRecord& w, WorkerId v) {
                               return w.worker_id < v;
                             });
  if (it == winners.end() || it->worker_id != id) return nullptr;
  return &*it;
}

double Outcome::group_spent(int group) const {
  double sum = 0.0;
  for (const auto& w : winners)
    if (group_of(w.worker_id) == group) sum += w.payment;
  return sum;
}

double cost_density(double bid_price, double reputation) {
  if (!(reputation > 0.0))
    throw std::domain_error("cost density needs a positive reputation");
  return bid_price / reputation;
}

double worker_utility(const std::optional<WinnerRecord>& record,
                      double true_cost, int rounds) {
  if (!record) return 0.0;
  return record->payment -
         true_cost * static_cast<double>(rounds - record->selected_step + 1);
}

double publisher_utility(std::span<const WinnerRecord> winners, int rounds) {
  double total = 0.0;
  for (const auto& w : winners)
    total += w.reputation * static_cast<double>(rounds - w.selected_step + 1);
  return total;
}

void finalize_outcome(Outcome& outcome) {
  std::sort(outcome.winners.begin(), outcome.winners.end(),
            [](const WinnerRecord& a, const WinnerRecord& b) {
              return a.worker_id < b.worker_id;
            });
  outcome.total_paid = 0.0;
  for (const auto& w : outcome.winners) outcome.total_paid += w.payment;
  outcome.publisher_utility = publisher_utility(outcome.winners, outcome.rounds);
  outcome.unit_payment_utility = outcome.total_paid > 0.0
                                     ? outcome.publisher_utility / outcome.total_paid
                                     : 0.0;
}

void attach_worker_utilities(Outcome& outcome,
                             std::span<const WorkerProfile> profiles) {
  outcome.worker_utilities.clear();
  for (const auto& p : profiles) {
    const WinnerRecord* w = outcome.find(p.id);
    outcome.worker_utilities[p.id] =
        worker_utility(w ? std::optional<WinnerRecord>(*w) : std::nullopt,
                       p.true_cost, outcome.rounds);
  }
}

std::vector<Bid> truthful_bids(std::span<const WorkerProfile> profiles) {
  std::vector<Bid> bids;
  bids.reserve(profiles.size());
  for (const auto& p : profiles)
    bids.push_back(Bid{p.id, p.true_arrival, p.true_cost, p.reputation});
  return bids;
}

}  // namespace fedauction
