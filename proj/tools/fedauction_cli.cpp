// fedauction: run scenarios, sweeps, quality-mix task sequences and the
// property campaign from the command line.
//
// Exit codes: 0 success, 1 property violation, 2 configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fedauction/experiments.hpp"

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr const char* kOutputDirEnv = "FEDAUCTION_OUTPUT_DIR";

struct CommonArgs {
  std::string config;
  std::string out;
  std::string seeds;
  std::string mechanism;
};

fedauction::ScenarioConfig load(const CommonArgs& args) {
  fedauction::ScenarioConfig cfg =
      args.config.empty() ? fedauction::default_scenario() : fedauction::load_scenario(args.config);
  if (!args.seeds.empty()) cfg.seeds = fedauction::parse_seed_list(args.seeds);
  return cfg;
}

void restrict_mechanisms(fedauction::ScenarioConfig& cfg, const std::string& list) {
  if (list.empty()) return;
  cfg.mechanisms.clear();
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto kind = fedauction::parse_mechanism(name);
    if (!kind) throw fedauction::ConfigError("unknown mechanism '" + name + "'");
    cfg.mechanisms.push_back(*kind);
  }
}

// --out wins, then the scenario's `output`, then $FEDAUCTION_OUTPUT_DIR/<name>,
// else stdout (empty path).
std::string resolve_output(const CommonArgs& args, const fedauction::ScenarioConfig& cfg,
                           const std::string& default_name) {
  if (!args.out.empty()) return args.out;
  if (!cfg.output.empty()) return cfg.output;
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir)
    return (std::filesystem::path(dir) / default_name).string();
  return {};
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fedauction::ConfigError("cannot write '" + path + "'");
  write(out);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool mechanism_flag = true) {
  cmd->add_option("--config", args.config, "Scenario file (key = value lines)");
  cmd->add_option("--out", args.out, "Output path (default: scenario `output`, then $" +
                                         std::string(kOutputDirEnv) + ", then stdout)");
  cmd->add_option("--seeds", args.seeds, "Seed list overriding the scenario, e.g. 1..50");
  if (mechanism_flag)
    cmd->add_option("--mechanism", args.mechanism, "Comma-separated mechanism subset");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online reverse-auction incentive mechanism experiments"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, table_args, prop_args;
  int trials = 0;

  auto* run = app.add_subcommand("run", "Run every (seed, mechanism) pair; one CSV row each");
  add_common(run, run_args);
  auto* sweep = app.add_subcommand("sweep", "Run the scenario across its sweep values");
  add_common(sweep, sweep_args);
  auto* table1 = app.add_subcommand("table1", "Quality-mix task sequences per mechanism");
  add_common(table1, table_args);
  auto* props = app.add_subcommand("properties", "Run the economic-property campaign");
  add_common(props, prop_args, false);
  props->add_option("--trials", trials, "Trials per property (default: scenario `trials`)");
  props->add_option("--mechanism", prop_args.mechanism,
                    "online, broken-first-price, broken-full-horizon, "
                    "broken-first-step-only or broken-uncapped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run || *sweep) {
      const CommonArgs& args = *run ? run_args : sweep_args;
      auto cfg = load(args);
      restrict_mechanisms(cfg, args.mechanism);
      const auto rows = *run ? fedauction::run_scenario(cfg) : fedauction::run_sweep(cfg);
      emit(resolve_output(args, cfg, *run ? "run.csv" : "sweep.csv"),
           [&](std::ostream& os) { fedauction::write_run_csv(os, rows); });
      return 0;
    }
    if (*table1) {
      auto cfg = load(table_args);
      restrict_mechanisms(cfg, table_args.mechanism);
      const auto rows = fedauction::run_table1(cfg);
      emit(resolve_output(table_args, cfg, "table1.csv"),
           [&](std::ostream& os) { fedauction::write_table1_csv(os, rows); });
      return 0;
    }

    auto cfg = load(prop_args);
    if (props->count("--trials") && trials < 1)
      throw fedauction::ConfigError("--trials must be positive");
    const int n = props->count("--trials") ? trials : cfg.trials;
    auto variant = fedauction::MechanismVariant::standard;
    if (!prop_args.mechanism.empty()) {
      auto parsed = fedauction::parse_variant(prop_args.mechanism);
      if (!parsed) throw fedauction::ConfigError("unknown mechanism '" + prop_args.mechanism + "'");
      variant = *parsed;
    }
    const auto reports = fedauction::run_property_suite(cfg, n, variant);
    bool ok = true;
    emit(resolve_output(prop_args, cfg, "properties.txt"), [&](std::ostream& os) {
      os << "mechanism: " << fedauction::to_string(variant) << "\n\n";
      for (const auto& r : reports) {
        os << r.summary() << '\n';
        ok = ok && r.passed();
      }
    });
    return ok ? 0 : kExitViolation;
  } catch (const fedauction::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
