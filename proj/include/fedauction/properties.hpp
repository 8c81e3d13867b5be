#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedauction/core.hpp"
#include "fedauction/online_mechanism.hpp"
#include "fedauction/simulation.hpp"

namespace fedauction {

inline constexpr double kPropertyTolerance = 1e-9;

struct Violation {
  std::uint64_t seed = 0;
  std::string instance_digest;
  std::string details;
};

struct PropertyReport {
  std::string property;
  int trials = 0;
  /// Trials thrown away: a budget cap fired (truthfulness fuzzers) or the
  /// precondition did not hold (consumer sovereignty).
  int discarded = 0;
  std::vector<Violation> violations;
  /// Set when any examined run hit a group budget cap.
  bool sufficient_budget_flag = false;
  /// Largest observed gain from deviating (truthfulness) or shortfall
  /// (rationality, budget). Zero or negative when nothing was gained.
  double worst_regret = 0.0;

  bool passed() const { return violations.empty(); }
  void merge(const PropertyReport& other);
  std::string summary() const;
};

/// Which online mechanism the checkers exercise. Everything except
/// `standard` is a deliberately broken negative control.
enum class MechanismVariant {
  standard,
  broken_first_price,
  broken_full_horizon,
  broken_first_step_only,
  broken_uncapped,
};

std::string_view to_string(MechanismVariant variant);
/// Names: "online", "broken-first-price", "broken-full-horizon",
/// "broken-first-step-only", "broken-uncapped".
std::optional<MechanismVariant> parse_variant(std::string_view name);
OnlineOptions options_for(MechanismVariant variant);

/// FNV-1a over the bid list, hex encoded.
std::string instance_digest(std::span<const Bid> bids);

PropertyReport check_individual_rationality(const Outcome& outcome,
                                            std::span<const WorkerProfile> profiles);

/// Total payments within B, and each parity group within B/2 when the
/// outcome declares group caps.
PropertyReport check_budget_feasibility(const Outcome& outcome, double budget);

/// Lowers the worker's bid toward zero (halving, up to 2^-40) and re-runs the
/// auction each time. The check is vacuous (counted as discarded) unless the
/// standard mechanism had room to admit the worker at the step it entered.
PropertyReport check_consumer_sovereignty(const TaskConfig& config,
                                          const Instance& instance, WorkerId worker,
                                          MechanismVariant variant = MechanismVariant::standard);

struct FuzzOptions {
  int trials = 1000;  // valid (non-discarded) trials wanted
  double sufficiency_multiplier = 10.0;
  std::uint64_t seed = 1;
  MechanismVariant variant = MechanismVariant::standard;
  /// Attempts stop after this many, even if fewer valid trials were
  /// collected. 0 means 20 x trials.
  int max_attempts = 0;
};

/// Misreports the price of random workers by factors drawn log-uniformly
/// from [0.25, 4] and compares utilities against the truthful bid. Both runs
/// must stay clear of every budget cap or the trial is discarded.
PropertyReport fuzz_cost_truthfulness(const TaskConfig& config, const Instance& instance,
                                      const FuzzOptions& options);

/// Delays the declared arrival of random workers to a uniform step in
/// [a_i, T] and compares utilities against the true arrival.
PropertyReport fuzz_time_truthfulness(const TaskConfig& config, const Instance& instance,
                                      const FuzzOptions& options);

/// Randomized instance family for the campaigns.
struct CampaignSpec {
  std::uint64_t seed = 20240101;
  int min_workers = 10, max_workers = 200;
  double min_budget = 10.0, max_budget = 500.0;
  int min_rounds = 2, max_rounds = 20;
  double first_round_ratio = 0.35;
};

struct RandomInstance {
  TaskConfig config;
  Instance instance;
  std::uint64_t seed = 0;
};

RandomInstance draw_instance(const CampaignSpec& spec, std::uint64_t index);

struct BudgetCampaignResult {
  PropertyReport budget;
  PropertyReport rationality;
};

/// `runs` truthful online runs over the instance family.
BudgetCampaignResult run_budget_campaign(const CampaignSpec& spec, int runs,
                                         MechanismVariant variant = MechanismVariant::standard);

/// Collects `trials` valid misreport trials, a few per random instance.
PropertyReport run_cost_truthfulness_campaign(const CampaignSpec& spec, int trials,
                                              double multiplier,
                                              MechanismVariant variant = MechanismVariant::standard);
PropertyReport run_time_truthfulness_campaign(const CampaignSpec& spec, int trials,
                                              double multiplier,
                                              MechanismVariant variant = MechanismVariant::standard);

/// Keeps drawing (instance, worker) pairs until `pairs` of them meet the
/// ample-budget precondition, checking each.
PropertyReport run_consumer_sovereignty_campaign(
    const CampaignSpec& spec, int pairs,
    MechanismVariant variant = MechanismVariant::standard);

}  // namespace fedauction
