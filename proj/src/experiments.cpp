#include "fedauction/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fedauction/format.hpp"

namespace fedauction {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError("invalid value for '" + key + "': '" + text + "'");
  return value;
}

template <class F>
void parallel_for(std::size_t count, F&& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<RunRow> run_point(const ScenarioConfig& config, const TaskConfig& task,
                              int n_workers) {
  PopulationSpec pop = config.population;
  pop.count = n_workers;
  const std::size_t per_seed = config.mechanisms.size();
  std::vector<RunRow> rows(config.seeds.size() * per_seed);

  parallel_for(config.seeds.size(), [&](std::size_t s) {
    const std::uint64_t seed = config.seeds[s];
    const Instance inst = make_population(pop, task.rounds, seed);
    for (std::size_t m = 0; m < per_seed; ++m) {
      const MechanismKind kind = config.mechanisms[m];
      const Outcome out = run_mechanism(kind, task, inst.workers, inst.bids,
                                        derive_seed(seed, 0x5eed), config.fixed_threshold);
      RunRow& row = rows[s * per_seed + m];
      row.seed = seed;
      row.mechanism = kind;
      row.budget = task.budget;
      row.rounds = task.rounds;
      row.n_workers = static_cast<int>(inst.workers.size());
      row.total_paid = out.total_paid;
      row.utility = out.publisher_utility;
      row.unit_payment_utility = out.unit_payment_utility;
      row.n_winners = static_cast<int>(out.winners.size());
      if (pop.kind == PopulationKind::quality)
        row.quality_proportion = quality_proportion(out, inst.workers);
    }
  });
  return rows;
}

const std::vector<std::string> kKnownKeys{
    "mechanisms", "budget", "rounds", "first_round_ratio", "min_workers", "group_order",
    "empty_sample_threshold", "fixed_threshold", "population", "workers",
    "quality_counts", "quality_levels", "initial_reputation", "seeds", "sweep",
    "sweep_values", "tasks", "warmup_tasks", "reputation_update", "ema_alpha", "trials",
    "sufficiency_multiplier", "output"};

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  if (trim(text).empty()) return seeds;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_number<std::uint64_t>(item, "seeds"));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>(trim(item.substr(0, dots)), "seeds");
    const auto hi = parse_number<std::uint64_t>(trim(item.substr(dots + 2)), "seeds");
    if (hi < lo || hi - lo > 1000000) throw ConfigError("bad seed range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  return seeds;
}

std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> values;
  if (trim(text).empty()) return values;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      values.push_back(parse_number<double>(item, "sweep_values"));
      continue;
    }
    const auto colon = item.find(':', dots);
    if (colon == std::string::npos) throw ConfigError("range needs a step: '" + item + "'");
    const double lo = parse_number<double>(trim(item.substr(0, dots)), "sweep_values");
    const double hi =
        parse_number<double>(trim(item.substr(dots + 2, colon - dots - 2)), "sweep_values");
    const double step = parse_number<double>(trim(item.substr(colon + 1)), "sweep_values");
    if (!(step > 0.0) || hi < lo) throw ConfigError("bad range '" + item + "'");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) values.push_back(lo + step * static_cast<double>(i));
  }
  return values;
}

void ScenarioConfig::validate() const {
  if (mechanisms.empty()) throw ConfigError("at least one mechanism is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (population.count < 1) throw ConfigError("workers must be positive");
  if (population.quality_counts.size() > population.quality_levels.size())
    throw ConfigError("quality_counts has more entries than quality_levels");
  for (int c : population.quality_counts)
    if (c < 0) throw ConfigError("quality_counts must be non-negative");
  if (!(population.initial_reputation > 0.0 && population.initial_reputation <= 1.0))
    throw ConfigError("initial_reputation must lie in (0, 1]");
  if (!(fixed_threshold > 0.0)) throw ConfigError("fixed_threshold must be positive");
  if (trials < 1) throw ConfigError("trials must be positive");
  if (!(sufficiency_multiplier >= 1.0))
    throw ConfigError("sufficiency_multiplier must be at least 1");
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("sweep needs sweep_values");
    for (double v : sweep->values) {
      if (!(v > 0.0)) throw ConfigError("sweep values must be positive");
      if (sweep->parameter == SweepParameter::workers && v != std::floor(v))
        throw ConfigError("worker sweep values must be integers");
    }
  }
  try {
    task.validate();
    TaskSequenceSpec seq = sequence;
    seq.task = task;
    seq.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.mechanisms = {MechanismKind::Online};
  c.seeds = {1};
  return c;
}

ScenarioConfig parse_scenario(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse scenario: ") + e.message());
  }

  ScenarioConfig c;
  c.mechanisms = {MechanismKind::Online};
  c.seeds.clear();
  std::optional<std::string> sweep_param, sweep_values;

  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("sections are not supported: [" + key + "]");
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw ConfigError("unknown key '" + key + "'");
    const std::string value = trim(node.data());

    if (key == "mechanisms") {
      c.mechanisms.clear();
      for (const auto& name : split(value, ',')) {
        auto kind = parse_mechanism(name);
        if (!kind) throw ConfigError("unknown mechanism '" + name + "'");
        c.mechanisms.push_back(*kind);
      }
    } else if (key == "budget") {
      c.task.budget = parse_number<double>(value, key);
    } else if (key == "rounds") {
      c.task.rounds = parse_number<int>(value, key);
    } else if (key == "first_round_ratio") {
      c.task.first_round_ratio = parse_number<double>(value, key);
    } else if (key == "min_workers") {
      c.task.min_workers_to_start = parse_number<int>(value, key);
    } else if (key == "group_order") {
      if (value == "descending_reputation")
        c.task.group_order = GroupOrder::descending_reputation;
      else if (value == "ascending_reputation")
        c.task.group_order = GroupOrder::ascending_reputation;
      else
        throw ConfigError("unknown group_order '" + value + "'");
    } else if (key == "empty_sample_threshold") {
      c.task.empty_sample_threshold = parse_number<double>(value, key);
    } else if (key == "fixed_threshold") {
      c.fixed_threshold = parse_number<double>(value, key);
    } else if (key == "population") {
      if (value == "uniform")
        c.population.kind = PopulationKind::uniform;
      else if (value == "quality")
        c.population.kind = PopulationKind::quality;
      else
        throw ConfigError("unknown population '" + value + "'");
    } else if (key == "workers") {
      c.population.count = parse_number<int>(value, key);
    } else if (key == "quality_counts") {
      c.population.quality_counts.clear();
      for (const auto& v : split(value, ','))
        c.population.quality_counts.push_back(parse_number<int>(v, key));
    } else if (key == "quality_levels") {
      c.population.quality_levels.clear();
      for (const auto& v : split(value, ','))
        c.population.quality_levels.push_back(parse_number<double>(v, key));
    } else if (key == "initial_reputation") {
      c.population.initial_reputation = parse_number<double>(value, key);
    } else if (key == "seeds") {
      c.seeds = parse_seed_list(value);
    } else if (key == "sweep") {
      sweep_param = value;
    } else if (key == "sweep_values") {
      sweep_values = value;
    } else if (key == "tasks") {
      c.sequence.num_tasks = parse_number<int>(value, key);
    } else if (key == "warmup_tasks") {
      c.sequence.warmup_tasks = parse_number<int>(value, key);
    } else if (key == "reputation_update") {
      auto kind = parse_reputation_update(value);
      if (!kind) throw ConfigError("unknown reputation_update '" + value + "'");
      c.sequence.reputation_update.kind = *kind;
    } else if (key == "ema_alpha") {
      c.sequence.reputation_update.alpha = parse_number<double>(value, key);
    } else if (key == "trials") {
      c.trials = parse_number<int>(value, key);
    } else if (key == "sufficiency_multiplier") {
      c.sufficiency_multiplier = parse_number<double>(value, key);
    } else if (key == "output") {
      c.output = value;
    }
  }

  if (sweep_param || sweep_values) {
    SweepSpec s;
    if (!sweep_param || *sweep_param == "budget")
      s.parameter = SweepParameter::budget;
    else if (*sweep_param == "workers")
      s.parameter = SweepParameter::workers;
    else
      throw ConfigError("unknown sweep parameter '" + *sweep_param + "'");
    if (sweep_values) s.values = parse_value_list(*sweep_values);
    c.sweep = s;
  }
  c.sequence.task = c.task;
  c.sequence.fixed_threshold = c.fixed_threshold;
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  return parse_scenario(in);
}

Instance make_population(const PopulationSpec& spec, int rounds, std::uint64_t seed) {
  if (spec.kind == PopulationKind::uniform)
    return generate_uniform_population(spec.count, rounds, seed);
  return generate_quality_population(spec.quality_counts, rounds, seed, spec.quality_levels,
                                     spec.initial_reputation);
}

std::vector<RunRow> run_scenario(const ScenarioConfig& config) {
  config.validate();
  return run_point(config, config.task, config.population.count);
}

std::vector<RunRow> run_sweep(const ScenarioConfig& config) {
  config.validate();
  if (!config.sweep) throw ConfigError("scenario has no sweep");
  std::vector<RunRow> rows;
  for (double v : config.sweep->values) {
    TaskConfig task = config.task;
    int n = config.population.count;
    if (config.sweep->parameter == SweepParameter::budget)
      task.budget = v;
    else
      n = static_cast<int>(v);
    auto block = run_point(config, task, n);
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

void write_run_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "seed,mechanism,budget,rounds,n_workers,total_paid,utility,unit_payment_utility,"
         "n_winners,quality_proportion\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << to_string(r.mechanism) << ',' << format_double(r.budget) << ','
        << r.rounds << ',' << r.n_workers << ',' << format_double(r.total_paid) << ','
        << format_double(r.utility) << ',' << format_double(r.unit_payment_utility) << ','
        << r.n_winners << ',';
    if (r.quality_proportion) out << format_double(*r.quality_proportion);
    out << '\n';
  }
}

std::vector<Table1Row> run_table1(const ScenarioConfig& config) {
  config.validate();
  TaskSequenceSpec spec = config.sequence;
  spec.task = config.task;
  spec.fixed_threshold = config.fixed_threshold;

  const std::size_t per_mech = config.seeds.size();
  std::vector<Table1Row> rows(config.mechanisms.size() * per_mech);
  parallel_for(rows.size(), [&](std::size_t i) {
    const MechanismKind kind = config.mechanisms[i / per_mech];
    const std::uint64_t seed = config.seeds[i % per_mech];
    const Instance pop = make_population(config.population, config.task.rounds, seed);
    const TaskSequenceResult res = run_task_sequence(spec, pop, kind, seed);
    rows[i] = Table1Row{kind, seed, res.scored_tasks, res.mean_proportion};
  });

  for (std::size_t m = 0; m < config.mechanisms.size(); ++m) {
    Table1Row mean{config.mechanisms[m], std::nullopt, 0, 0.0};
    for (std::size_t s = 0; s < per_mech; ++s) {
      mean.scored_tasks += rows[m * per_mech + s].scored_tasks;
      mean.mean_proportion += rows[m * per_mech + s].mean_proportion;
    }
    mean.mean_proportion /= static_cast<double>(per_mech);
    rows.push_back(mean);
  }
  return rows;
}

void write_table1_csv(std::ostream& out, const std::vector<Table1Row>& rows) {
  out << "mechanism,seed,scored_tasks,mean_proportion\n";
  for (const auto& r : rows) {
    out << to_string(r.mechanism) << ',';
    if (r.seed)
      out << *r.seed;
    else
      out << "mean";
    out << ',' << r.scored_tasks << ',' << format_double(r.mean_proportion) << '\n';
  }
}

std::vector<PropertyReport> run_property_suite(const ScenarioConfig& config, int trials,
                                               MechanismVariant variant) {
  config.validate();
  if (trials < 1) throw ConfigError("trials must be positive");
  CampaignSpec spec;
  spec.seed = config.seeds.front();
  spec.first_round_ratio = config.task.first_round_ratio;

  std::vector<PropertyReport> reports(5);
  parallel_for(4, [&](std::size_t job) {
    switch (job) {
      case 0: {
        auto r = run_budget_campaign(spec, trials, variant);
        reports[0] = std::move(r.budget);
        reports[1] = std::move(r.rationality);
        break;
      }
      case 1:
        reports[2] = run_cost_truthfulness_campaign(spec, trials,
                                                    config.sufficiency_multiplier, variant);
        break;
      case 2:
        reports[3] = run_time_truthfulness_campaign(spec, trials,
                                                    config.sufficiency_multiplier, variant);
        break;
      default:
        reports[4] = run_consumer_sovereignty_campaign(spec, std::max(1, trials / 10), variant);
        break;
    }
  });
  return reports;
}

}  // namespace fedauction
