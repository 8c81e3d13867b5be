#include "fedauction/online_mechanism.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedauction {

ArrivalSchedule::ArrivalSchedule(int horizon, std::span<const Bid> bids)
    : horizon_(horizon), by_step_(static_cast<std::size_t>(std::max(horizon, 0))) {
  if (horizon < 1) throw std::invalid_argument("schedule horizon must be positive");
  for (const auto& b : bids) {
    if (b.declared_arrival < 1 || b.declared_arrival > horizon)
      throw std::invalid_argument("declared arrival outside the task horizon");
    by_step_[static_cast<std::size_t>(b.declared_arrival - 1)].push_back(b);
  }
}

std::span<const Bid> ArrivalSchedule::arrivals_at(Step step) const {
  if (step < 1 || step > horizon_) return {};
  return by_step_[static_cast<std::size_t>(step - 1)];
}

std::vector<Bid> ArrivalSchedule::all_bids() const {
  std::vector<Bid> out;
  for (const auto& s : by_step_) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t ArrivalSchedule::size() const {
  std::size_t n = 0;
  for (const auto& s : by_step_) n += s.size();
  return n;
}

void sort_by_density(std::vector<Bid>& bids) {
  std::sort(bids.begin(), bids.end(), [](const Bid& a, const Bid& b) {
    const double da = cost_density(a);
    const double db = cost_density(b);
    if (da != db) return da < db;
    return a.worker_id < b.worker_id;
  });
}

ThresholdResult get_payment_density_threshold(double sample_budget,
                                              std::span<const Bid> sample,
                                              double empty_sample_threshold) {
  if (!(sample_budget >= 0.0))
    throw std::domain_error("sample budget must be non-negative");
  std::vector<Bid> sorted(sample.begin(), sample.end());
  sort_by_density(sorted);

  ThresholdResult result;
  double rep_sum = 0.0;
  std::size_t k = 0;
  while (k < sorted.size() &&
         cost_density(sorted[k]) <= sample_budget / (sorted[k].reputation + rep_sum)) {
    rep_sum += sorted[k].reputation;
    result.sample_winners.push_back(sorted[k].worker_id);
    ++k;
  }
  result.selected_count = k;
  if (k == 0) {
    result.threshold = empty_sample_threshold;
  } else if (k == sorted.size()) {
    result.threshold = sample_budget / rep_sum;
  } else {
    result.threshold = std::min(sample_budget / rep_sum, cost_density(sorted[k]));
  }
  return result;
}

double sample_budget_at(double budget, double first_round_budget, int rounds,
                        Step step) {
  if (step < 2 || step > rounds)
    throw std::domain_error("sample budget is defined for 2 <= t <= T");
  const double grown = (budget - first_round_budget) * static_cast<double>(step - 1) /
                       static_cast<double>(rounds - 1);
  return (first_round_budget + grown) / static_cast<double>(rounds);
}

std::optional<FirstStepResult> first_step_selection(std::span<const Bid> arrived,
                                                    double first_round_budget,
                                                    int rounds, int min_workers) {
  if (!(first_round_budget > 0.0))
    throw std::domain_error("first-round budget must be positive");
  if (arrived.empty()) return std::nullopt;

  std::vector<Bid> sorted(arrived.begin(), arrived.end());
  sort_by_density(sorted);
  const double horizon = static_cast<double>(rounds);

  FirstStepResult result;
  double rep_sum = 0.0;
  std::size_t k = 0;
  while (k < sorted.size() &&
         horizon * cost_density(sorted[k]) <=
             first_round_budget / (sorted[k].reputation + rep_sum)) {
    rep_sum += sorted[k].reputation;
    result.winners.push_back(sorted[k].worker_id);
    ++k;
  }
  if (k == 0 || static_cast<int>(k) < min_workers) return std::nullopt;

  if (k == sorted.size()) {
    result.threshold = first_round_budget / rep_sum / horizon;
  } else {
    result.threshold =
        std::min(first_round_budget / rep_sum, horizon * cost_density(sorted[k])) / horizon;
  }
  for (std::size_t i = 0; i < k; ++i)
    result.payments.push_back(horizon * sorted[i].reputation * result.threshold);
  return result;
}

AuctionState::AuctionState(TaskConfig config) : config_(config) {}

void AuctionState::add_bid(const Bid& bid) {
  groups_[group_of(bid.worker_id)].push_back(bid);
}

const WinnerRecord* AuctionState::winner(WorkerId id) const {
  auto it = winners_.find(id);
  return it == winners_.end() ? nullptr : &it->second;
}

double AuctionState::payment(WorkerId id) const {
  const WinnerRecord* w = winner(id);
  return w ? w->payment : 0.0;
}

double AuctionState::group_remaining(int g) const {
  return config_.budget / 2.0 - spent_[g];
}

void AuctionState::admit(const Bid& bid, Step t, double payment, double threshold) {
  if (is_winner(bid.worker_id)) throw std::logic_error("worker already selected");
  winners_[bid.worker_id] =
      WinnerRecord{bid.worker_id, t, payment, threshold, bid.reputation};
  spent_[group_of(bid.worker_id)] += payment;
}

void AuctionState::raise_payment(WorkerId id, double new_payment, double threshold) {
  auto it = winners_.find(id);
  if (it == winners_.end()) throw std::logic_error("top-up for an unselected worker");
  WinnerRecord& w = it->second;
  if (new_payment > w.payment) {
    spent_[group_of(id)] += new_payment - w.payment;
    w.payment = new_payment;
  }
  w.max_threshold_seen = std::max(w.max_threshold_seen, threshold);
}

Outcome AuctionState::to_outcome(int start_delay) const {
  Outcome out;
  out.started = true;
  out.start_delay = start_delay;
  out.rounds = config_.rounds;
  out.budget = config_.budget;
  out.group_capped = true;
  out.budget_cap_hits = cap_hits_;
  out.trace = trace_;
  for (const auto& [id, rec] : winners_) out.winners.push_back(rec);
  finalize_outcome(out);
  return out;
}

namespace {

void sort_for_group_pass(std::vector<Bid>& bids, GroupOrder order) {
  std::sort(bids.begin(), bids.end(), [order](const Bid& a, const Bid& b) {
    if (a.reputation != b.reputation) {
      return order == GroupOrder::ascending_reputation ? a.reputation < b.reputation
                                                        : a.reputation > b.reputation;
    }
    return a.worker_id < b.worker_id;
  });
}

// Offline admission at the start step for a constant threshold.
std::optional<FirstStepResult> fixed_first_step(std::span<const Bid> arrived,
                                                double first_round_budget, int rounds,
                                                int min_workers, double threshold) {
  std::vector<Bid> sorted(arrived.begin(), arrived.end());
  sort_by_density(sorted);
  FirstStepResult result;
  result.threshold = threshold;
  double spent = 0.0;
  for (const auto& b : sorted) {
    if (cost_density(b) > threshold) break;
    const double pay = static_cast<double>(rounds) * b.reputation * threshold;
    if (pay <= first_round_budget - spent) {
      spent += pay;
      result.winners.push_back(b.worker_id);
      result.payments.push_back(pay);
    }
  }
  if (result.winners.empty() || static_cast<int>(result.winners.size()) < min_workers)
    return std::nullopt;
  return result;
}

}  // namespace

void select_workers_from_group(int group, double threshold, AuctionState& state,
                               Step t, const OnlineOptions& options) {
  const TaskConfig& cfg = state.config();
  if (t < 2 || t > cfg.rounds) throw std::domain_error("group pass needs 2 <= t <= T");
  if (!(threshold >= 0.0)) throw std::domain_error("threshold must be non-negative");

  const double cap = cfg.budget / 2.0;
  const double remaining_rounds = static_cast<double>(cfg.rounds - t + 1);

  std::vector<Bid> order = state.group(group);
  sort_for_group_pass(order, cfg.group_order);

  GroupStepTrace trace{t, group, threshold, state.group_spent(group), 0.0};
  for (const Bid& bid : order) {
    if (cost_density(bid) > threshold) continue;
    const WinnerRecord* rec = state.winner(bid.worker_id);
    if (rec == nullptr) {
      double pay = remaining_rounds * bid.reputation * threshold;
      if (options.payment == PaymentRule::first_price) pay = remaining_rounds * bid.price;
      if (options.payment == PaymentRule::full_horizon)
        pay = static_cast<double>(cfg.rounds) * bid.reputation * threshold;
      if (!options.enforce_group_caps || pay <= cap - state.group_spent(group)) {
        state.admit(bid, t, pay, threshold);
      } else {
        state.record_cap_hit();
      }
    } else {
      if (options.payment == PaymentRule::first_price) continue;
      const double current = rec->payment;
      double topped =
          current + (threshold - rec->max_threshold_seen) * bid.reputation * remaining_rounds;
      if (topped > current) {
        const double limit = cap - state.group_spent(group) + current;
        if (options.enforce_group_caps && topped > limit) {
          topped = limit;
          state.record_cap_hit();
        }
        state.raise_payment(bid.worker_id, topped, threshold);
      }
    }
  }
  trace.spent_after = state.group_spent(group);
  state.trace().push_back(trace);
}

Outcome run_online_auction(const TaskConfig& config, const ArrivalSchedule& schedule,
                           const OnlineOptions& options) {
  config.validate();
  if (schedule.horizon() > config.rounds)
    throw std::invalid_argument("schedule horizon exceeds the number of rounds");
  if (options.fixed_threshold && !(*options.fixed_threshold > 0.0))
    throw std::invalid_argument("fixed threshold must be positive");

  const int rounds = config.rounds;
  const double first_budget = config.first_round_budget();

  auto select_first = [&](std::span<const Bid> pool) -> std::optional<FirstStepResult> {
    if (pool.empty()) return std::nullopt;
    if (options.fixed_threshold)
      return fixed_first_step(pool, first_budget, rounds, config.min_workers_to_start,
                              *options.fixed_threshold);
    return first_step_selection(pool, first_budget, rounds, config.min_workers_to_start);
  };

  // The start is pushed back one schedule step at a time, at most T - 1 times.
  std::vector<Bid> pool;
  auto first_arrivals = schedule.arrivals_at(1);
  pool.insert(pool.end(), first_arrivals.begin(), first_arrivals.end());
  int delay = 0;
  std::optional<FirstStepResult> first = select_first(pool);
  while (!first && delay + 1 < rounds) {
    ++delay;
    auto more = schedule.arrivals_at(1 + delay);
    if (more.empty()) continue;
    pool.insert(pool.end(), more.begin(), more.end());
    first = select_first(pool);
  }

  if (!first) {
    Outcome never;
    never.rounds = rounds;
    never.budget = config.budget;
    never.group_capped = true;
    never.start_delay = delay;
    return never;
  }

  AuctionState state(config);
  std::map<WorkerId, const Bid*> pooled;
  for (const Bid& b : pool) {
    state.add_bid(b);
    pooled[b.worker_id] = &b;
  }
  for (std::size_t i = 0; i < first->winners.size(); ++i) {
    const Bid& b = *pooled.at(first->winners[i]);
    double pay = first->payments[i];
    if (options.payment == PaymentRule::first_price)
      pay = static_cast<double>(rounds) * b.price;
    state.admit(b, 1, pay, first->threshold);
  }
  for (int g = 0; g < 2; ++g)
    state.trace().push_back(
        GroupStepTrace{1, g, first->threshold, 0.0, state.group_spent(g)});

  for (Step t = 2; t <= rounds; ++t) {
    state.set_step(t);
    for (const Bid& b : schedule.arrivals_at(t + delay)) state.add_bid(b);
    if (!options.later_admissions) continue;

    double thresholds[2];
    if (options.fixed_threshold) {
      thresholds[0] = thresholds[1] = *options.fixed_threshold;
    } else {
      const double sample_budget = sample_budget_at(config.budget, first_budget, rounds, t);
      for (int g = 0; g < 2; ++g)
        thresholds[g] = get_payment_density_threshold(sample_budget / 2.0, state.group(g),
                                                      config.empty_sample_threshold)
                            .threshold;
    }
    select_workers_from_group(0, thresholds[1], state, t, options);
    select_workers_from_group(1, thresholds[0], state, t, options);
  }

  Outcome out = state.to_outcome(delay);
  out.group_capped = options.enforce_group_caps;
  return out;
}

}  // namespace fedauction
