#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fedauction/core.hpp"
#include "fedauction/online_mechanism.hpp"

namespace fedauction {

enum class MechanismKind {
  Online,
  FixedThreshold,
  RRAFL,
  VanillaFL,
  BidGreedy,
  ProportionalShare,
  ApproxOptimal,
};

std::string_view to_string(MechanismKind kind);
/// Accepts the canonical snake_case names ("online", "rrafl", "vanilla_fl", ...).
std::optional<MechanismKind> parse_mechanism(std::string_view name);
bool is_offline(MechanismKind kind);

inline constexpr double kDefaultFixedThreshold = 0.75;

Outcome run_fixed_threshold(const TaskConfig& config, const ArrivalSchedule& schedule,
                            double threshold = kDefaultFixedThreshold);

// Offline benchmarks see every bid at t = 1; all winners have t_i = 1.

Outcome run_proportional_share(const TaskConfig& config, std::span<const Bid> bids);

/// Next-density payment: the largest k whose winners, each paid the (k+1)-th
/// density per unit reputation for T rounds, fit the budget. When every
/// worker fits, the density B / (T sum Re) is paid instead.
Outcome run_rrafl(const TaskConfig& config, std::span<const Bid> bids);

Outcome run_vanilla(const TaskConfig& config, std::span<const Bid> bids,
                    std::uint64_t seed);

Outcome run_bid_greedy(const TaskConfig& config, std::span<const Bid> bids);

/// Uses the true costs: greedy by Re/c, pays T c_i.
Outcome run_approx_optimal(const TaskConfig& config,
                           std::span<const WorkerProfile> profiles);

/// Dispatches on kind. `bids` are the declared bids (their declared arrivals
/// drive the online kinds); `profiles` supply true costs and utilities.
Outcome run_mechanism(MechanismKind kind, const TaskConfig& config,
                      std::span<const WorkerProfile> profiles,
                      std::span<const Bid> bids, std::uint64_t seed,
                      double fixed_threshold = kDefaultFixedThreshold);

}  // namespace fedauction
