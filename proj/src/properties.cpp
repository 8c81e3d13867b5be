#include "fedauction/properties.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>

#include "fedauction/format.hpp"
#include "fedauction/random.hpp"

namespace fedauction {

void PropertyReport::merge(const PropertyReport& other) {
  if (property.empty()) property = other.property;
  const bool had_trials = trials + discarded > 0 || !violations.empty();
  trials += other.trials;
  discarded += other.discarded;
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  sufficient_budget_flag = sufficient_budget_flag || other.sufficient_budget_flag;
  worst_regret = had_trials ? std::max(worst_regret, other.worst_regret) : other.worst_regret;
}

std::string PropertyReport::summary() const {
  std::ostringstream out;
  out << "property: " << property << '\n'
      << "trials: " << trials << '\n'
      << "discarded: " << discarded << '\n'
      << "violations: " << violations.size() << '\n'
      << "worst_regret: " << format_double(worst_regret) << '\n'
      << "budget_cap_fired: " << (sufficient_budget_flag ? "yes" : "no") << '\n'
      << "status: " << (passed() ? "pass" : "FAIL") << '\n';
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i)
    out << "violation: seed=" << violations[i].seed
        << " digest=" << violations[i].instance_digest << ' ' << violations[i].details
        << '\n';
  return out.str();
}

namespace {

constexpr std::array<std::pair<MechanismVariant, std::string_view>, 5> kVariantNames{{
    {MechanismVariant::standard, "online"},
    {MechanismVariant::broken_first_price, "broken-first-price"},
    {MechanismVariant::broken_full_horizon, "broken-full-horizon"},
    {MechanismVariant::broken_first_step_only, "broken-first-step-only"},
    {MechanismVariant::broken_uncapped, "broken-uncapped"},
}};

Outcome run_variant(const TaskConfig& config, std::span<const Bid> bids,
                    MechanismVariant variant) {
  return run_online_auction(config, ArrivalSchedule(config.rounds, bids),
                            options_for(variant));
}

double utility_of(const Outcome& outcome, const WorkerProfile& worker) {
  const WinnerRecord* w = outcome.find(worker.id);
  return worker_utility(w ? std::optional<WinnerRecord>(*w) : std::nullopt,
                        worker.true_cost, outcome.rounds);
}

std::size_t bid_index(const Instance& instance, WorkerId id) {
  for (std::size_t i = 0; i < instance.bids.size(); ++i)
    if (instance.bids[i].worker_id == id) return i;
  throw std::invalid_argument("worker has no bid in the instance");
}


std::string describe(std::string_view what, WorkerId id, double truthful, double deviated) {
  std::ostringstream s;
  s << what << " worker=" << id << " u_truthful=" << format_double(truthful)
    << " u_deviated=" << format_double(deviated);
  return s.str();
}

enum class Deviation { cost, time };

PropertyReport fuzz(const TaskConfig& config, const Instance& instance,
                    const FuzzOptions& options, Deviation kind) {
  PropertyReport report;
  report.property = kind == Deviation::cost ? "cost_truthfulness" : "time_truthfulness";
  if (instance.workers.empty() || options.trials <= 0) return report;

  TaskConfig scaled = config;
  scaled.budget *= options.sufficiency_multiplier;
  const int max_attempts = options.max_attempts > 0 ? options.max_attempts : 20 * options.trials;
  const std::string digest = instance_digest(instance.bids);
  Rng rng(options.seed);
  std::map<WorkerId, Outcome> truthful_runs;
  std::map<WorkerId, std::vector<Bid>> truthful_bids_for;
  bool any_regret = false;

  for (int attempt = 0; attempt < max_attempts && report.trials < options.trials; ++attempt) {
    const auto& worker = instance.workers[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(instance.workers.size()) - 1))];
    const std::size_t idx = bid_index(instance, worker.id);

    auto cached = truthful_runs.find(worker.id);
    if (cached == truthful_runs.end()) {
      std::vector<Bid> honest = instance.bids;
      honest[idx].price = worker.true_cost;
      honest[idx].declared_arrival = worker.true_arrival;
      cached = truthful_runs.emplace(worker.id, run_variant(scaled, honest, options.variant)).first;
      truthful_bids_for.emplace(worker.id, std::move(honest));
    }
    std::vector<Bid> deviated = truthful_bids_for.at(worker.id);
    if (kind == Deviation::cost) {
      double factor = 1.0;
      while (factor == 1.0) factor = std::exp(uniform(rng, std::log(0.25), std::log(4.0)));
      deviated[idx].price = worker.true_cost * factor;
    } else {
      deviated[idx].declared_arrival =
          static_cast<Step>(uniform_int(rng, worker.true_arrival, scaled.rounds));
    }
    const Outcome lie = run_variant(scaled, deviated, options.variant);

    if (cached->second.budget_cap_hits > 0 || lie.budget_cap_hits > 0) {
      ++report.discarded;
      report.sufficient_budget_flag = true;
      continue;
    }
    ++report.trials;
    const double u_truth = utility_of(cached->second, worker);
    const double u_lie = utility_of(lie, worker);
    const double regret = u_lie - u_truth;
    report.worst_regret = any_regret ? std::max(report.worst_regret, regret) : regret;
    any_regret = true;
    if (regret > kPropertyTolerance) {
      std::ostringstream what;
      if (kind == Deviation::cost)
        what << "declared_price=" << format_double(deviated[idx].price)
             << " true_cost=" << format_double(worker.true_cost);
      else
        what << "declared_arrival=" << deviated[idx].declared_arrival
             << " true_arrival=" << worker.true_arrival;
      report.violations.push_back(
          Violation{options.seed, digest, describe(what.str(), worker.id, u_truth, u_lie)});
    }
  }
  return report;
}

// Task step at which a declared arrival is first considered.
Step entry_step(const Outcome& outcome, Step declared_arrival) {
  if (!outcome.started || declared_arrival <= 1 + outcome.start_delay) return 1;
  return declared_arrival - outcome.start_delay;
}

bool ample_budget_at_entry(const TaskConfig& config, const Instance& instance,
                           const Bid& bid) {
  const Outcome reference =
      run_online_auction(config, ArrivalSchedule(config.rounds, instance.bids));
  if (reference.find(bid.worker_id) != nullptr) return true;
  const Step entry = entry_step(reference, bid.declared_arrival);
  if (entry == 1) return true;
  if (entry > config.rounds) return false;
  const int g = group_of(bid.worker_id);
  for (const auto& tr : reference.trace) {
    if (tr.step != entry || tr.group != g) continue;
    const double admission =
        static_cast<double>(config.rounds - entry + 1) * bid.reputation * tr.threshold;
    return tr.threshold > 0.0 && tr.spent_after + admission <= config.budget / 2.0;
  }
  return false;
}

}  // namespace

std::string_view to_string(MechanismVariant variant) {
  for (const auto& [v, name] : kVariantNames)
    if (v == variant) return name;
  return "unknown";
}

std::optional<MechanismVariant> parse_variant(std::string_view name) {
  for (const auto& [v, n] : kVariantNames)
    if (n == name) return v;
  return std::nullopt;
}

OnlineOptions options_for(MechanismVariant variant) {
  OnlineOptions o;
  switch (variant) {
    case MechanismVariant::standard:
      break;
    case MechanismVariant::broken_first_price:
      o.payment = PaymentRule::first_price;
      break;
    case MechanismVariant::broken_full_horizon:
      o.payment = PaymentRule::full_horizon;
      break;
    case MechanismVariant::broken_first_step_only:
      o.later_admissions = false;
      break;
    case MechanismVariant::broken_uncapped:
      o.enforce_group_caps = false;
      break;
  }
  return o;
}

std::string instance_digest(std::span<const Bid> bids) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& b : bids) {
    mix(b.worker_id);
    mix(static_cast<std::uint64_t>(b.declared_arrival));
    mix(std::bit_cast<std::uint64_t>(b.price));
    mix(std::bit_cast<std::uint64_t>(b.reputation));
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xfu];
  return out;
}

PropertyReport check_individual_rationality(const Outcome& outcome,
                                            std::span<const WorkerProfile> profiles) {
  PropertyReport report;
  report.property = "individual_rationality";
  report.trials = 1;
  report.worst_regret = 0.0;
  for (const auto& p : profiles) {
    const double u = utility_of(outcome, p);
    report.worst_regret = std::max(report.worst_regret, -u);
    if (u < -kPropertyTolerance) {
      std::ostringstream s;
      s << "worker=" << p.id << " utility=" << format_double(u);
      report.violations.push_back(Violation{0, "", s.str()});
    }
  }
  return report;
}

PropertyReport check_budget_feasibility(const Outcome& outcome, double budget) {
  PropertyReport report;
  report.property = "budget_feasibility";
  report.trials = 1;
  report.sufficient_budget_flag = outcome.budget_cap_hits > 0;
  double total = 0.0;
  for (const auto& w : outcome.winners) total += w.payment;
  report.worst_regret = total - budget;
  if (total > budget + kPropertyTolerance) {
    std::ostringstream s;
    s << "total_paid=" << format_double(total) << " budget=" << format_double(budget);
    report.violations.push_back(Violation{0, "", s.str()});
  }
  if (outcome.group_capped) {
    for (int g = 0; g < 2; ++g) {
      const double spent = outcome.group_spent(g);
      report.worst_regret = std::max(report.worst_regret, spent - budget / 2.0);
      if (spent > budget / 2.0 + kPropertyTolerance) {
        std::ostringstream s;
        s << "group=" << g << " spent=" << format_double(spent)
          << " cap=" << format_double(budget / 2.0);
        report.violations.push_back(Violation{0, "", s.str()});
      }
    }
  }
  return report;
}

PropertyReport check_consumer_sovereignty(const TaskConfig& config, const Instance& instance,
                                          WorkerId worker, MechanismVariant variant) {
  PropertyReport report;
  report.property = "consumer_sovereignty";
  const std::size_t idx = bid_index(instance, worker);
  if (!ample_budget_at_entry(config, instance, instance.bids[idx])) {
    report.discarded = 1;
    return report;
  }
  report.trials = 1;
  std::vector<Bid> bids = instance.bids;
  const double original = bids[idx].price;
  for (int k = 0; k <= 40; ++k) {
    bids[idx].price = std::ldexp(original, -k);
    const Outcome out = run_variant(config, bids, variant);
    if (out.budget_cap_hits > 0) report.sufficient_budget_flag = true;
    if (out.find(worker) != nullptr) return report;
  }
  std::ostringstream s;
  s << "worker=" << worker << " never selected down to price "
    << format_double(std::ldexp(original, -40));
  report.violations.push_back(Violation{0, instance_digest(instance.bids), s.str()});
  return report;
}

PropertyReport fuzz_cost_truthfulness(const TaskConfig& config, const Instance& instance,
                                      const FuzzOptions& options) {
  return fuzz(config, instance, options, Deviation::cost);
}

PropertyReport fuzz_time_truthfulness(const TaskConfig& config, const Instance& instance,
                                      const FuzzOptions& options) {
  return fuzz(config, instance, options, Deviation::time);
}

RandomInstance draw_instance(const CampaignSpec& spec, std::uint64_t index) {
  RandomInstance r;
  r.seed = derive_seed(spec.seed, index);
  Rng rng(r.seed);
  const int n = static_cast<int>(uniform_int(rng, spec.min_workers, spec.max_workers));
  r.config.budget = uniform(rng, spec.min_budget, spec.max_budget);
  r.config.rounds = static_cast<int>(uniform_int(rng, spec.min_rounds, spec.max_rounds));
  r.config.first_round_ratio = spec.first_round_ratio;
  r.instance = generate_uniform_population(n, r.config.rounds, rng());
  return r;
}

BudgetCampaignResult run_budget_campaign(const CampaignSpec& spec, int runs,
                                         MechanismVariant variant) {
  BudgetCampaignResult result;
  result.budget.property = "budget_feasibility";
  result.rationality.property = "individual_rationality";
  for (int i = 0; i < runs; ++i) {
    const RandomInstance r = draw_instance(spec, static_cast<std::uint64_t>(i));
    const Outcome out = run_variant(r.config, r.instance.bids, variant);
    PropertyReport b = check_budget_feasibility(out, r.config.budget);
    PropertyReport ir = check_individual_rationality(out, r.instance.workers);
    for (auto& v : b.violations) {
      v.seed = r.seed;
      v.instance_digest = instance_digest(r.instance.bids);
    }
    for (auto& v : ir.violations) {
      v.seed = r.seed;
      v.instance_digest = instance_digest(r.instance.bids);
    }
    result.budget.merge(b);
    result.rationality.merge(ir);
  }
  return result;
}

namespace {

PropertyReport truthfulness_campaign(const CampaignSpec& spec, int trials, double multiplier,
                                     MechanismVariant variant, Deviation kind) {
  PropertyReport total;
  total.property = kind == Deviation::cost ? "cost_truthfulness" : "time_truthfulness";
  constexpr int kPerInstance = 5;
  const std::uint64_t max_instances = 20ull * static_cast<std::uint64_t>(trials) + 100;
  for (std::uint64_t i = 0; i < max_instances && total.trials < trials; ++i) {
    const RandomInstance r = draw_instance(spec, i);
    FuzzOptions opts;
    opts.trials = std::min(kPerInstance, trials - total.trials);
    opts.max_attempts = 2 * kPerInstance;
    opts.sufficiency_multiplier = multiplier;
    opts.seed = r.seed;
    opts.variant = variant;
    total.merge(fuzz(r.config, r.instance, opts, kind));
  }
  return total;
}

}  // namespace

PropertyReport run_cost_truthfulness_campaign(const CampaignSpec& spec, int trials,
                                              double multiplier, MechanismVariant variant) {
  return truthfulness_campaign(spec, trials, multiplier, variant, Deviation::cost);
}

PropertyReport run_time_truthfulness_campaign(const CampaignSpec& spec, int trials,
                                              double multiplier, MechanismVariant variant) {
  return truthfulness_campaign(spec, trials, multiplier, variant, Deviation::time);
}

PropertyReport run_consumer_sovereignty_campaign(const CampaignSpec& spec, int pairs,
                                                 MechanismVariant variant) {
  PropertyReport total;
  total.property = "consumer_sovereignty";
  const std::uint64_t max_draws = 50ull * static_cast<std::uint64_t>(pairs) + 100;
  for (std::uint64_t i = 0; i < max_draws && total.trials < pairs; ++i) {
    const RandomInstance r = draw_instance(spec, i);
    Rng rng(derive_seed(r.seed, 7));
    const auto& w = r.instance.workers[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(r.instance.workers.size()) - 1))];
    PropertyReport one = check_consumer_sovereignty(r.config, r.instance, w.id, variant);
    for (auto& v : one.violations) v.seed = r.seed;
    total.merge(one);
  }
  return total;
}

}  // namespace fedauction
