#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fedauction/experiments.hpp"

namespace py = pybind11;
using namespace fedauction;

namespace {

Outcome run_online(const TaskConfig& config, const std::vector<Bid>& bids,
                   std::optional<double> fixed_threshold, const std::string& variant) {
  auto v = parse_variant(variant);
  if (!v) throw py::value_error("unknown variant '" + variant + "'");
  OnlineOptions opts = options_for(*v);
  opts.fixed_threshold = fixed_threshold;
  return run_online_auction(config, ArrivalSchedule(config.rounds, bids), opts);
}

MechanismKind mechanism_of(const std::string& name) {
  auto k = parse_mechanism(name);
  if (!k) throw py::value_error("unknown mechanism '" + name + "'");
  return *k;
}

ScenarioConfig scenario_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

}  // namespace

PYBIND11_MODULE(_fedauction, m) {
  m.doc() = "Online reverse-auction incentive mechanism for budgeted federated learning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<GroupOrder>(m, "GroupOrder")
      .value("ascending_reputation", GroupOrder::ascending_reputation)
      .value("descending_reputation", GroupOrder::descending_reputation);

  py::class_<TaskConfig>(m, "TaskConfig")
      .def(py::init([](double budget, int rounds, double ratio, int min_workers,
                       GroupOrder order, double empty) {
             TaskConfig c{budget, rounds, ratio, min_workers, order, empty};
             c.validate();
             return c;
           }),
           py::arg("budget") = 100.0, py::arg("rounds") = 10,
           py::arg("first_round_ratio") = 0.35, py::arg("min_workers_to_start") = 1,
           py::arg("group_order") = GroupOrder::descending_reputation,
           py::arg("empty_sample_threshold") = 0.0)
      .def_readwrite("budget", &TaskConfig::budget)
      .def_readwrite("rounds", &TaskConfig::rounds)
      .def_readwrite("first_round_ratio", &TaskConfig::first_round_ratio)
      .def_readwrite("min_workers_to_start", &TaskConfig::min_workers_to_start)
      .def_readwrite("group_order", &TaskConfig::group_order)
      .def_readwrite("empty_sample_threshold", &TaskConfig::empty_sample_threshold)
      .def_property_readonly("first_round_budget", &TaskConfig::first_round_budget)
      .def("validate", &TaskConfig::validate);

  py::class_<Bid>(m, "Bid")
      .def(py::init<WorkerId, Step, double, double>(), py::arg("worker_id"),
           py::arg("declared_arrival") = 1, py::arg("price") = 0.0, py::arg("reputation") = 1.0)
      .def_readwrite("worker_id", &Bid::worker_id)
      .def_readwrite("declared_arrival", &Bid::declared_arrival)
      .def_readwrite("price", &Bid::price)
      .def_readwrite("reputation", &Bid::reputation)
      .def("__repr__", [](const Bid& b) {
        std::ostringstream s;
        s << "Bid(worker_id=" << b.worker_id << ", declared_arrival=" << b.declared_arrival
          << ", price=" << b.price << ", reputation=" << b.reputation << ")";
        return s.str();
      });

  py::class_<WorkerProfile>(m, "WorkerProfile")
      .def(py::init<WorkerId, double, Step, double, double>(), py::arg("id"),
           py::arg("true_cost"), py::arg("true_arrival") = 1, py::arg("reputation") = 1.0,
           py::arg("internal_quality") = 0.0)
      .def_readwrite("id", &WorkerProfile::id)
      .def_readwrite("true_cost", &WorkerProfile::true_cost)
      .def_readwrite("true_arrival", &WorkerProfile::true_arrival)
      .def_readwrite("reputation", &WorkerProfile::reputation)
      .def_readwrite("internal_quality", &WorkerProfile::internal_quality);

  py::class_<WinnerRecord>(m, "WinnerRecord")
      .def_readonly("worker_id", &WinnerRecord::worker_id)
      .def_readonly("selected_step", &WinnerRecord::selected_step)
      .def_readonly("payment", &WinnerRecord::payment)
      .def_readonly("max_threshold_seen", &WinnerRecord::max_threshold_seen)
      .def_readonly("reputation", &WinnerRecord::reputation);

  py::class_<GroupStepTrace>(m, "GroupStepTrace")
      .def_readonly("step", &GroupStepTrace::step)
      .def_readonly("group", &GroupStepTrace::group)
      .def_readonly("threshold", &GroupStepTrace::threshold)
      .def_readonly("spent_before", &GroupStepTrace::spent_before)
      .def_readonly("spent_after", &GroupStepTrace::spent_after);

  py::class_<Outcome>(m, "Outcome")
      .def_readonly("started", &Outcome::started)
      .def_readonly("start_delay", &Outcome::start_delay)
      .def_readonly("rounds", &Outcome::rounds)
      .def_readonly("budget", &Outcome::budget)
      .def_readonly("budget_cap_hits", &Outcome::budget_cap_hits)
      .def_readonly("winners", &Outcome::winners)
      .def_readonly("total_paid", &Outcome::total_paid)
      .def_readonly("publisher_utility", &Outcome::publisher_utility)
      .def_readonly("unit_payment_utility", &Outcome::unit_payment_utility)
      .def_readonly("worker_utilities", &Outcome::worker_utilities)
      .def_readonly("trace", &Outcome::trace)
      .def("group_spent", &Outcome::group_spent)
      .def("find", [](const Outcome& o, WorkerId id) -> std::optional<WinnerRecord> {
        const WinnerRecord* w = o.find(id);
        if (!w) return std::nullopt;
        return *w;
      });

  py::class_<ThresholdResult>(m, "ThresholdResult")
      .def_readonly("threshold", &ThresholdResult::threshold)
      .def_readonly("selected_count", &ThresholdResult::selected_count)
      .def_readonly("sample_winners", &ThresholdResult::sample_winners);

  py::class_<FirstStepResult>(m, "FirstStepResult")
      .def_readonly("winners", &FirstStepResult::winners)
      .def_readonly("threshold", &FirstStepResult::threshold)
      .def_readonly("payments", &FirstStepResult::payments);

  py::class_<Instance>(m, "Instance")
      .def_readonly("workers", &Instance::workers)
      .def_readonly("bids", &Instance::bids);

  py::class_<PropertyReport>(m, "PropertyReport")
      .def_readonly("property", &PropertyReport::property)
      .def_readonly("trials", &PropertyReport::trials)
      .def_readonly("discarded", &PropertyReport::discarded)
      .def_readonly("worst_regret", &PropertyReport::worst_regret)
      .def_property_readonly("violations",
                             [](const PropertyReport& r) {
                               std::vector<std::string> out;
                               for (const auto& v : r.violations) out.push_back(v.details);
                               return out;
                             })
      .def_property_readonly("passed", &PropertyReport::passed)
      .def("summary", &PropertyReport::summary);

  m.def("cost_density", py::overload_cast<double, double>(&cost_density), py::arg("price"),
        py::arg("reputation"));
  m.def("get_payment_density_threshold",
        [](double budget, const std::vector<Bid>& sample, double empty) {
          return get_payment_density_threshold(budget, sample, empty);
        },
        py::arg("sample_budget"), py::arg("sample"), py::arg("empty_sample_threshold") = 0.0);
  m.def("sample_budget_at", &sample_budget_at, py::arg("budget"), py::arg("first_round_budget"),
        py::arg("rounds"), py::arg("step"));
  m.def("first_step_selection",
        [](const std::vector<Bid>& arrived, double b1, int rounds, int min_workers) {
          return first_step_selection(arrived, b1, rounds, min_workers);
        },
        py::arg("arrived"), py::arg("first_round_budget"), py::arg("rounds"),
        py::arg("min_workers") = 1);
  m.def("run_online_auction", &run_online, py::arg("config"), py::arg("bids"),
        py::arg("fixed_threshold") = py::none(), py::arg("variant") = "online");
  m.def("run_mechanism",
        [](const std::string& name, const TaskConfig& config,
           const std::vector<WorkerProfile>& profiles, std::optional<std::vector<Bid>> bids,
           std::uint64_t seed, double fixed) {
          const std::vector<Bid> declared = bids ? *bids : truthful_bids(profiles);
          return run_mechanism(mechanism_of(name), config, profiles, declared, seed, fixed);
        },
        py::arg("mechanism"), py::arg("config"), py::arg("profiles"),
        py::arg("bids") = py::none(), py::arg("seed") = 0,
        py::arg("fixed_threshold") = kDefaultFixedThreshold);
  m.def("truthful_bids", [](const std::vector<WorkerProfile>& p) { return truthful_bids(p); });

  m.def("generate_uniform_population", &generate_uniform_population, py::arg("count"),
        py::arg("rounds"), py::arg("seed"));
  m.def("generate_quality_population",
        [](const std::vector<int>& counts, int rounds, std::uint64_t seed,
           const std::vector<double>& levels, double initial) {
          return generate_quality_population(counts, rounds, seed, levels, initial);
        },
        py::arg("counts"), py::arg("rounds"), py::arg("seed"),
        py::arg("levels") = std::vector<double>(kDefaultQualityLevels.begin(),
                                                kDefaultQualityLevels.end()),
        py::arg("initial_reputation") = 0.5);

  m.def("check_budget_feasibility", &check_budget_feasibility, py::arg("outcome"),
        py::arg("budget"));
  m.def("check_individual_rationality",
        [](const Outcome& o, const std::vector<WorkerProfile>& p) {
          return check_individual_rationality(o, p);
        },
        py::arg("outcome"), py::arg("profiles"));

  m.def("run_scenario_csv",
        [](const std::string& text) {
          std::ostringstream out;
          write_run_csv(out, run_scenario(scenario_from_text(text)));
          return out.str();
        },
        py::arg("scenario"), "Runs a scenario given as `key = value` text; returns CSV.");
  m.def("run_table1_csv",
        [](const std::string& text) {
          std::ostringstream out;
          write_table1_csv(out, run_table1(scenario_from_text(text)));
          return out.str();
        },
        py::arg("scenario"));
  m.def("run_property_suite",
        [](int trials, const std::string& variant, std::uint64_t seed) {
          auto v = parse_variant(variant);
          if (!v) throw py::value_error("unknown variant '" + variant + "'");
          ScenarioConfig cfg = default_scenario();
          cfg.seeds = {seed};
          py::gil_scoped_release release;
          return run_property_suite(cfg, trials, *v);
        },
        py::arg("trials"), py::arg("variant") = "online", py::arg("seed") = 1);
}
