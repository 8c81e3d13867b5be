#include "fedauction/baselines.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "fedauction/random.hpp"

namespace fedauction {

namespace {

constexpr std::array<std::pair<MechanismKind, std::string_view>, 7> kNames{{
    {MechanismKind::Online, "online"},
    {MechanismKind::FixedThreshold, "fixed_threshold"},
    {MechanismKind::RRAFL, "rrafl"},
    {MechanismKind::VanillaFL, "vanilla_fl"},
    {MechanismKind::BidGreedy, "bid_greedy"},
    {MechanismKind::ProportionalShare, "proportional_share"},
    {MechanismKind::ApproxOptimal, "approx_optimal"},
}};

void check_offline(const TaskConfig& config) {
  if (config.rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (!(config.budget >= 0.0)) throw std::invalid_argument("budget must be non-negative");
}

Outcome empty_offline(const TaskConfig& config) {
  Outcome out;
  out.started = true;
  out.rounds = config.rounds;
  out.budget = config.budget;
  return out;
}

WinnerRecord offline_winner(WorkerId id, double payment, double density,
                            double reputation) {
  return WinnerRecord{id, 1, payment, density, reputation};
}

}  // namespace

std::string_view to_string(MechanismKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<MechanismKind> parse_mechanism(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

bool is_offline(MechanismKind kind) {
  return kind != MechanismKind::Online && kind != MechanismKind::FixedThreshold;
}

Outcome run_fixed_threshold(const TaskConfig& config, const ArrivalSchedule& schedule,
                            double threshold) {
  OnlineOptions options;
  options.fixed_threshold = threshold;
  return run_online_auction(config, schedule, options);
}

Outcome run_proportional_share(const TaskConfig& config, std::span<const Bid> bids) {
  check_offline(config);
  Outcome out = empty_offline(config);
  std::vector<Bid> sorted(bids.begin(), bids.end());
  sort_by_density(sorted);
  const double horizon = static_cast<double>(config.rounds);

  double rep_sum = 0.0;
  std::size_t k = 0;
  while (k < sorted.size() && horizon * cost_density(sorted[k]) <=
                                  config.budget / (sorted[k].reputation + rep_sum)) {
    rep_sum += sorted[k].reputation;
    ++k;
  }
  if (k > 0) {
    const double threshold =
        k == sorted.size()
            ? config.budget / rep_sum / horizon
            : std::min(config.budget / rep_sum, horizon * cost_density(sorted[k])) / horizon;
    for (std::size_t i = 0; i < k; ++i)
      out.winners.push_back(offline_winner(sorted[i].worker_id,
                                           horizon * sorted[i].reputation * threshold,
                                           threshold, sorted[i].reputation));
  }
  finalize_outcome(out);
  return out;
}

Outcome run_rrafl(const TaskConfig& config, std::span<const Bid> bids) {
  check_offline(config);
  Outcome out = empty_offline(config);
  std::vector<Bid> sorted(bids.begin(), bids.end());
  sort_by_density(sorted);
  const double horizon = static_cast<double>(config.rounds);
  const std::size_t n = sorted.size();

  std::size_t best_k = 0;
  double best_density = 0.0;
  double rep_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    rep_sum += sorted[k - 1].reputation;
    if (k < n) {
      const double next = cost_density(sorted[k]);
      if (next * rep_sum * horizon <= config.budget) {
        best_k = k;
        best_density = next;
      }
    } else if (cost_density(sorted[k - 1]) * rep_sum * horizon <= config.budget) {
      best_k = k;
      best_density = config.budget / (horizon * rep_sum);
    }
  }
  for (std::size_t i = 0; i < best_k; ++i)
    out.winners.push_back(offline_winner(sorted[i].worker_id,
                                         horizon * sorted[i].reputation * best_density,
                                         best_density, sorted[i].reputation));
  finalize_outcome(out);
  return out;
}

Outcome run_vanilla(const TaskConfig& config, std::span<const Bid> bids,
                    std::uint64_t seed) {
  check_offline(config);
  Outcome out = empty_offline(config);
  std::vector<Bid> order(bids.begin(), bids.end());
  std::sort(order.begin(), order.end(),
            [](const Bid& a, const Bid& b) { return a.worker_id < b.worker_id; });
  Rng rng(seed);
  shuffle(order, rng);

  const double horizon = static_cast<double>(config.rounds);
  double remaining = config.budget;
  for (const Bid& b : order) {
    const double pay = horizon * b.price;
    if (pay <= remaining) {
      remaining -= pay;
      out.winners.push_back(
          offline_winner(b.worker_id, pay, cost_density(b), b.reputation));
    }
  }
  finalize_outcome(out);
  return out;
}

Outcome run_bid_greedy(const TaskConfig& config, std::span<const Bid> bids) {
  check_offline(config);
  Outcome out = empty_offline(config);
  std::vector<Bid> order(bids.begin(), bids.end());
  std::sort(order.begin(), order.end(), [](const Bid& a, const Bid& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.worker_id < b.worker_id;
  });

  const double horizon = static_cast<double>(config.rounds);
  double remaining = config.budget;
  for (const Bid& b : order) {
    const double pay = horizon * b.price;
    if (pay > remaining) break;
    remaining -= pay;
    out.winners.push_back(offline_winner(b.worker_id, pay, cost_density(b), b.reputation));
  }
  finalize_outcome(out);
  return out;
}

Outcome run_approx_optimal(const TaskConfig& config,
                           std::span<const WorkerProfile> profiles) {
  check_offline(config);
  Outcome out = empty_offline(config);
  std::vector<WorkerProfile> order(profiles.begin(), profiles.end());
  std::sort(order.begin(), order.end(), [](const WorkerProfile& a, const WorkerProfile& b) {
    const double ea = a.reputation / a.true_cost;
    const double eb = b.reputation / b.true_cost;
    if (ea != eb) return ea > eb;
    return a.id < b.id;
  });

  const double horizon = static_cast<double>(config.rounds);
  double remaining = config.budget;
  for (const auto& p : order) {
    const double pay = horizon * p.true_cost;
    if (pay <= remaining) {
      remaining -= pay;
      out.winners.push_back(
          offline_winner(p.id, pay, p.true_cost / p.reputation, p.reputation));
    }
  }
  finalize_outcome(out);
  return out;
}

Outcome run_mechanism(MechanismKind kind, const TaskConfig& config,
                      std::span<const WorkerProfile> profiles, std::span<const Bid> bids,
                      std::uint64_t seed, double fixed_threshold) {
  Outcome out;
  switch (kind) {
    case MechanismKind::Online:
      out = run_online_auction(config, ArrivalSchedule(config.rounds, bids));
      break;
    case MechanismKind::FixedThreshold:
      out = run_fixed_threshold(config, ArrivalSchedule(config.rounds, bids),
                                fixed_threshold);
      break;
    case MechanismKind::RRAFL:
      out = run_rrafl(config, bids);
      break;
    case MechanismKind::VanillaFL:
      out = run_vanilla(config, bids, seed);
      break;
    case MechanismKind::BidGreedy:
      out = run_bid_greedy(config, bids);
      break;
    case MechanismKind::ProportionalShare:
      out = run_proportional_share(config, bids);
      break;
    case MechanismKind::ApproxOptimal:
      out = run_approx_optimal(config, profiles);
      break;
  }
  attach_worker_utilities(out, profiles);
  return out;
}

}  // namespace fedauction
