#include "fedauction/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedauction/format.hpp"

namespace fedauction {

std::vector<double> harmonic_arrival_law(int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  std::vector<double> law(static_cast<std::size_t>(rounds));
  double harmonic = 0.0;
  for (int s = 1; s <= rounds; ++s) harmonic += 1.0 / s;
  for (int s = 1; s <= rounds; ++s) law[static_cast<std::size_t>(s - 1)] = (1.0 / s) / harmonic;
  return law;
}

void validate_arrival_law(std::span<const double> law) {
  if (law.empty()) throw std::invalid_argument("arrival law is empty");
  double sum = 0.0;
  for (double p : law) {
    if (!(p >= 0.0)) throw std::invalid_argument("arrival probability is negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("arrival probabilities do not sum to 1");
}

Step sample_arrival(std::span<const double> law, Rng& rng) {
  const double u = uniform01(rng);
  double cdf = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    cdf += law[i];
    if (u < cdf) return static_cast<Step>(i + 1);
  }
  return static_cast<Step>(law.size());
}

Instance generate_uniform_population(int count, int rounds, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("population size must be positive");
  const auto law = harmonic_arrival_law(rounds);
  Rng rng(seed);
  Instance inst;
  inst.workers.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    WorkerProfile w;
    w.id = static_cast<WorkerId>(i);
    w.reputation = std::max(uniform01(rng), kMinReputation);
    w.true_cost = uniform(rng, w.reputation / 3.0 + 1.0 / 15.0,
                          w.reputation / 3.0 + 4.0 / 15.0);
    w.internal_quality = uniform(rng, std::max(0.0, w.reputation - 0.1),
                                 std::min(1.0, w.reputation + 0.1));
    w.true_arrival = sample_arrival(law, rng);
    inst.workers.push_back(w);
  }
  inst.bids = truthful_bids(inst.workers);
  return inst;
}

Instance generate_quality_population(std::span<const int> counts, int rounds,
                                     std::uint64_t seed, std::span<const double> levels,
                                     double initial_reputation) {
  if (counts.size() > levels.size())
    throw std::invalid_argument("more quality counts than quality levels");
  if (!(initial_reputation > 0.0 && initial_reputation <= 1.0))
    throw std::invalid_argument("initial reputation must lie in (0, 1]");
  const auto law = harmonic_arrival_law(rounds);
  Rng rng(seed);
  Instance inst;
  WorkerId next = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw std::invalid_argument("quality counts must be non-negative");
    const double dacc = levels[j];
    for (int c = 0; c < counts[j]; ++c) {
      WorkerProfile w;
      w.id = next++;
      w.reputation = initial_reputation;
      w.internal_quality = dacc;
      w.true_cost = uniform(rng, dacc / 3.0 + 1.0 / 15.0, dacc / 3.0 + 4.0 / 15.0);
      w.true_arrival = sample_arrival(law, rng);
      inst.workers.push_back(w);
    }
  }
  inst.bids = truthful_bids(inst.workers);
  return inst;
}

void redraw_arrivals(Instance& instance, std::span<const double> law, Rng& rng) {
  for (auto& w : instance.workers) w.true_arrival = sample_arrival(law, rng);
  for (auto& b : instance.bids) {
    auto it = std::find_if(instance.workers.begin(), instance.workers.end(),
                           [&](const WorkerProfile& w) { return w.id == b.worker_id; });
    if (it != instance.workers.end()) b.declared_arrival = it->true_arrival;
  }
}

std::string_view to_string(ReputationUpdate kind) {
  return kind == ReputationUpdate::ema ? "ema" : "identity";
}

std::optional<ReputationUpdate> parse_reputation_update(std::string_view name) {
  if (name == "ema") return ReputationUpdate::ema;
  if (name == "identity") return ReputationUpdate::identity;
  return std::nullopt;
}

double update_reputation(const ReputationPolicy& policy, double reputation,
                         double internal_quality, bool participated) {
  if (!(reputation > 0.0 && reputation <= 1.0))
    throw std::domain_error("reputation must lie in (0, 1]");
  if (!participated || policy.kind == ReputationUpdate::identity) return reputation;
  const double next = (1.0 - policy.alpha) * reputation + policy.alpha * internal_quality;
  return std::clamp(next, kMinReputation, 1.0);
}

void TaskSequenceSpec::validate() const {
  if (num_tasks < 1) throw std::invalid_argument("num_tasks must be positive");
  if (warmup_tasks < 0 || warmup_tasks >= num_tasks)
    throw std::invalid_argument("warmup_tasks must lie in [0, num_tasks)");
  if (!(reputation_update.alpha >= 0.0 && reputation_update.alpha <= 1.0))
    throw std::invalid_argument("ema alpha must lie in [0, 1]");
  task.validate();
}

std::optional<double> quality_proportion(const Outcome& outcome,
                                         std::span<const WorkerProfile> profiles) {
  if (outcome.winners.empty()) return std::nullopt;
  int top = 0;
  for (const auto& w : outcome.winners) {
    auto it = std::find_if(profiles.begin(), profiles.end(),
                           [&](const WorkerProfile& p) { return p.id == w.worker_id; });
    if (it != profiles.end() && it->internal_quality >= 1.0 - 1e-12) ++top;
  }
  return static_cast<double>(top) / static_cast<double>(outcome.winners.size());
}

TaskSequenceResult run_task_sequence(const TaskSequenceSpec& spec, Instance population,
                                     MechanismKind mechanism, std::uint64_t seed) {
  spec.validate();
  const auto law = harmonic_arrival_law(spec.task.rounds);
  TaskSequenceResult result;
  double proportion_sum = 0.0;

  for (int task = 0; task < spec.num_tasks; ++task) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(task)));
    redraw_arrivals(population, law, rng);
    for (auto& b : population.bids) {
      auto it = std::find_if(population.workers.begin(), population.workers.end(),
                             [&](const WorkerProfile& w) { return w.id == b.worker_id; });
      b.reputation = it->reputation;
    }

    Outcome out = run_mechanism(mechanism, spec.task, population.workers, population.bids,
                                derive_seed(seed, 1000003u + static_cast<std::uint64_t>(task)),
                                spec.fixed_threshold);
    std::optional<double> proportion;
    if (out.started) {
      if (task >= spec.warmup_tasks) proportion = quality_proportion(out, population.workers);
      for (auto& w : population.workers)
        w.reputation = update_reputation(spec.reputation_update, w.reputation,
                                         w.internal_quality, out.find(w.id) != nullptr);
      result.outcomes.emplace_back(std::in_place, std::move(out));
    } else {
      result.outcomes.emplace_back();
    }
    if (proportion) {
      ++result.scored_tasks;
      proportion_sum += *proportion;
    }
    result.proportions.push_back(proportion);
  }
  result.mean_proportion =
      result.scored_tasks > 0 ? proportion_sum / result.scored_tasks : 0.0;
  return result;
}

void write_population(std::ostream& out, const Instance& instance) {
  out << "# id,reputation,bid,cost,arrival,quality\n";
  for (const auto& w : instance.workers) {
    auto bid = std::find_if(instance.bids.begin(), instance.bids.end(),
                            [&](const Bid& b) { return b.worker_id == w.id; });
    const double price = bid != instance.bids.end() ? bid->price : w.true_cost;
    out << w.id << ',' << format_double(w.reputation) << ',' << format_double(price) << ','
        << format_double(w.true_cost) << ',' << w.true_arrival << ','
        << format_double(w.internal_quality) << '\n';
  }
}

namespace {

template <class T>
T parse_field(std::string_view text, std::size_t line_no) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error("population line " + std::to_string(line_no) +
                             ": bad field '" + std::string(text) + "'");
  return value;
}

}  // namespace

Instance read_population(std::istream& in) {
  Instance inst;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6)
      throw std::runtime_error("population line " + std::to_string(line_no) +
                               ": expected 6 fields");
    WorkerProfile w;
    w.id = parse_field<WorkerId>(fields[0], line_no);
    w.reputation = parse_field<double>(fields[1], line_no);
    const double price = parse_field<double>(fields[2], line_no);
    w.true_cost = parse_field<double>(fields[3], line_no);
    w.true_arrival = parse_field<int>(fields[4], line_no);
    w.internal_quality = parse_field<double>(fields[5], line_no);
    if (!(w.reputation > 0.0 && w.reputation <= 1.0) || !(w.true_cost > 0.0) ||
        !(price > 0.0) || w.true_arrival < 1)
      throw std::runtime_error("population line " + std::to_string(line_no) +
                               ": value out of range");
    inst.workers.push_back(w);
    inst.bids.push_back(Bid{w.id, w.true_arrival, price, w.reputation});
  }
  return inst;
}

}  // namespace fedauction
