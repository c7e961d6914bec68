// scma-sim: experiment runner, config validator and solver-vs-oracle check.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O error.

#include "scma/ee_solver.hpp"
#include "scma/errors.hpp"
#include "scma/experiment.hpp"
#include "scma/oracle.hpp"
#include "scma/scenario.hpp"
#include "scma/se_solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitIo = 2;

// Relative output paths land under $SCMA_OUTPUT_DIR when it is set.
std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("SCMA_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
      return std::filesystem::path(dir) / p;
    }
  }
  return p;
}

std::optional<scma::ExperimentSpec> load(const std::string& path) {
  auto result = scma::validate_config(path);
  for (const auto& e : result.errors) std::cerr << path << ": " << scma::format_error(e) << '\n';
  return result.spec;
}

int cmd_validate(const std::string& config) {
  const auto spec = load(config);
  if (!spec) return kExitInvalid;
  std::cout << config << ": ok (" << spec->sweep_values.size() << " sweep points x "
            << spec->trials_per_point << " trials x " << spec->schemes.size() << " schemes)\n";
  return 0;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed,
            std::optional<std::string> out, std::optional<std::string> json, std::size_t parallel) {
  auto spec = load(config);
  if (!spec) return kExitInvalid;
  if (seed) spec->scenario.seed = *seed;
  if (out) spec->output_path = *out;
  if (json) spec->json_path = *json;

  const auto csv_path = resolve_output(spec->output_path);
  // Open before running so an unwritable destination fails fast.
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) {
    std::cerr << "error: cannot write '" << csv_path.string() << "'\n";
    return kExitIo;
  }
  std::ofstream summary;
  std::filesystem::path json_path;
  if (!spec->json_path.empty()) {
    json_path = resolve_output(spec->json_path);
    summary.open(json_path, std::ios::binary | std::ios::trunc);
    if (!summary) {
      std::cerr << "error: cannot write '" << json_path.string() << "'\n";
      return kExitIo;
    }
  }

  const auto table = scma::run_experiment(*spec, parallel);
  scma::write_csv(table, csv);
  csv.flush();
  if (!csv) {
    std::cerr << "error: write to '" << csv_path.string() << "' failed\n";
    return kExitIo;
  }
  if (summary.is_open()) {
    scma::write_json_summary(*spec, table, summary);
    summary.flush();
    if (!summary) {
      std::cerr << "error: write to '" << json_path.string() << "' failed\n";
      return kExitIo;
    }
  }
  std::cout << "wrote " << table.rows.size() << " trial rows and " << table.aggregates.size()
            << " aggregate rows to " << csv_path.string() << '\n';
  return 0;
}

int cmd_oracle_check(std::size_t k, std::size_t m, std::size_t n, std::uint64_t seed) {
  const scma::FactorGraph graph = scma::small_factor_graph(n, m);
  scma::ScenarioConfig sc;
  sc.n_users = k;
  sc.seed = seed;
  const auto chan = scma::generate(sc, graph);
  const auto params = scma::SystemParams::uniform(k, 1.0, 120e3);
  const double grid = params.p_max / 400.0;

  const auto se = scma::solve_se(graph, chan, params);
  const auto ose = scma::oracle_se(graph, chan, params, grid);
  const auto ee = scma::solve_ee(graph, chan, params);
  const auto oee = scma::oracle_ee(graph, chan, params, grid);

  auto report = [](const char* name, double solver, bool solver_ok, double oracle, bool oracle_ok,
                   std::size_t searched) {
    std::printf("%s solver=%.9g (%s) oracle=%.9g (%s, %zu assignments)", name, solver,
                solver_ok ? "feasible" : "infeasible", oracle, oracle_ok ? "feasible" : "infeasible",
                searched);
    if (oracle_ok && oracle > 0.0) {
      std::printf(" ratio=%.6f gap=%.6g", solver / oracle, oracle - solver);
    }
    std::printf("\n");
  };
  std::printf("K=%zu M=%zu N=%zu seed=%llu\n", k, m, n, static_cast<unsigned long long>(seed));
  report("SE ", se.allocation.objective, se.trace.feasible, ose.best_objective, ose.feasible,
         ose.n_assignments_searched);
  std::printf("SE  dual bound=%.9g duality gap=%.6g\n", se.trace.best_dual_bound,
              se.trace.best_dual_bound - se.allocation.objective);
  report("EE ", ee.allocation.objective, ee.trace.feasible, oee.best_objective, oee.feasible,
         oee.n_assignments_searched);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SCMA power and codebook-layer allocation simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> json;
  std::size_t parallel = 1;
  auto* run = app.add_subcommand("run", "Run a Monte-Carlo sweep and write CSV results");
  run->add_option("--config", config, "INI experiment file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out, "Override the CSV output path");
  run->add_option("--json", json, "Also write a JSON summary");
  run->add_option("--parallel", parallel, "Worker threads per sweep point")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check an experiment file and list every problem");
  validate->add_option("--config", config, "INI experiment file")->required();

  std::size_t k = 3;
  std::size_t m = 3;
  std::size_t n = 2;
  std::uint64_t oracle_seed = 1;
  auto* oracle = app.add_subcommand("oracle-check", "Compare the solvers with brute force on one drop");
  oracle->add_option("--k", k, "Users")->check(CLI::PositiveNumber);
  oracle->add_option("--m", m, "Layers")->check(CLI::PositiveNumber);
  oracle->add_option("--n", n, "Subcarriers")->check(CLI::Range(2, 64));
  oracle->add_option("--seed", oracle_seed, "Scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*run) return cmd_run(config, seed, out, json, parallel);
    if (*validate) return cmd_validate(config);
    return cmd_oracle_check(k, m, n, oracle_seed);
  } catch (const scma::SizeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}
