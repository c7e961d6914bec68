#pragma once

// Monte-Carlo sweeps over the scenario generator and the four allocation
// schemes, with an INI configuration front end and CSV / JSON emitters.

#include "scma/baselines.hpp"
#include "scma/scenario.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scma {

enum class SweepVariable { kNUsers, kPMax, kCellCountProxy };
enum class Scheme { kScmaSe, kScmaEe, kOfdma, kCdma };

std::string_view to_string(SweepVariable v);
std::string_view to_string(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);

// Scalar system settings; the per-user vectors of SystemParams are built from
// them once the user count of a sweep point is known.
struct SystemConfig {
  std::size_t n_subcarriers = 4;
  std::size_t codebook_degree = 2;
  std::size_t replicas = 2;
  double p_max = 100.0;
  double circuit_power = 1.0;
  double amp_factor = 1.0 / 0.37;
  double subcarrier_bw = 156e3;
  double rate_req = 120e3;
  double weight = 1.0;
  std::size_t max_iters = 100;
  double step = 0.1;
  double tolerance = 1e-6;
};

struct ExperimentSpec {
  SweepVariable sweep_variable = SweepVariable::kNUsers;
  std::vector<double> sweep_values{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::size_t trials_per_point = 100;
  std::vector<Scheme> schemes{Scheme::kScmaSe, Scheme::kScmaEe, Scheme::kOfdma, Scheme::kCdma};
  ScenarioConfig scenario;
  SystemConfig system;
  OfdmaOptions ofdma;
  CdmaOptions cdma;
  std::string output_path = "results.csv";
  std::string json_path;  // empty: no summary
};

struct ConfigError {
  std::size_t line = 0;  // 0 when the field was omitted or the file is unreadable
  std::string field;     // "section.key"
  std::string message;
};

struct ConfigResult {
  std::optional<ExperimentSpec> spec;
  std::vector<ConfigError> errors;  // every problem found, in file order
};

ConfigResult validate_config_text(const std::string& text);
ConfigResult validate_config(const std::string& path);

// "section.key: message (line N)".
std::string format_error(const ConfigError& error);

struct TrialRow {
  double sweep_value = 0.0;
  std::size_t trial = 0;
  Scheme scheme = Scheme::kScmaSe;
  double se = 0.0;           // bits/s/Hz over N W
  double ee = 0.0;           // bits/J
  double total_power = 0.0;  // W
  bool feasible = false;
  std::size_t iterations = 0;
};

struct AggregateRow {
  double sweep_value = 0.0;
  Scheme scheme = Scheme::kScmaSe;
  double se_mean = 0.0;
  double se_stddev = 0.0;  // sample standard deviation, 0 for one trial
  double ee_mean = 0.0;
  double ee_stddev = 0.0;
  double total_power_mean = 0.0;
  double feasible_fraction = 0.0;
  double iterations_mean = 0.0;
};

struct ResultTable {
  std::vector<TrialRow> rows;             // (sweep, trial, scheme) order
  std::vector<AggregateRow> aggregates;   // (sweep, scheme) order
};

// Trials within a sweep point run on up to `parallel` threads; the table is
// identical for any thread count.
ResultTable run_experiment(const ExperimentSpec& spec, std::size_t parallel = 1);

// Per-trial rows of each sweep point followed by its aggregates (trial =
// "mean"; feasible_flag holds the feasible fraction and iterations the mean).
void write_csv(const ResultTable& table, std::ostream& out);
void write_json_summary(const ExperimentSpec& spec, const ResultTable& table, std::ostream& out);

// %.9g, the serialization used for every float in the CSV.
std::string format_float(double value);

}  // namespace scma
