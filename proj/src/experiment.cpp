#include "scma/experiment.hpp"

#include "scma/baselines.hpp"
#include "scma/ee_solver.hpp"
#include "scma/ini.hpp"
#include "scma/se_solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace scma {

std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::kNUsers:
      return "n_users";
    case SweepVariable::kPMax:
      return "p_max";
    case SweepVariable::kCellCountProxy:
      return "cell_count_proxy";
  }
  return "?";
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kScmaSe:
      return "SCMA-SE";
    case Scheme::kScmaEe:
      return "SCMA-EE";
    case Scheme::kOfdma:
      return "OFDMA";
    case Scheme::kCdma:
      return "CDMA";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::kScmaSe, Scheme::kScmaEe, Scheme::kOfdma, Scheme::kCdma}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

std::string format_float(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string format_error(const ConfigError& error) {
  std::string out = error.field.empty() ? std::string("config") : error.field;
  out += ": " + error.message;
  if (error.line > 0) out += " (line " + std::to_string(error.line) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

std::optional<double> parse_number(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

// A plain number or a ratio "a/b", so amplifier efficiencies can be written
// as 1/0.37.
std::optional<double> parse_real(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_number(text);
  const auto num = parse_number(trim(std::string_view(text).substr(0, slash)));
  const auto den = parse_number(trim(std::string_view(text).substr(slash + 1)));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

template <typename T>
std::optional<T> parse_unsigned(const std::string& text) {
  T v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string valid_schemes() { return "SCMA-SE, SCMA-EE, OFDMA, CDMA"; }

class Loader {
 public:
  explicit Loader(ExperimentSpec& spec) : spec_(spec) { register_keys(); }

  void load(const ini::Document& doc) {
    for (const auto& issue : doc.issues) errors_.push_back({issue.line, issue.field, issue.message});
    for (const auto& e : doc.entries) {
      const std::string field = e.section + "." + e.key;
      const auto it = setters_.find(field);
      if (it == setters_.end()) {
        errors_.push_back({e.line, field, "unknown field"});
        continue;
      }
      lines_[field] = e.line;
      if (auto msg = it->second(e.value)) errors_.push_back({e.line, field, *msg});
    }
    check_ranges();
  }

  std::vector<ConfigError>& errors() { return errors_; }

 private:
  using Setter = std::function<std::optional<std::string>(const std::string&)>;

  void real(const std::string& field, double& target) {
    setters_[field] = [&target](const std::string& v) -> std::optional<std::string> {
      const auto x = parse_real(v);
      if (!x) return "expected a number, got '" + v + "'";
      target = *x;
      return std::nullopt;
    };
  }

  void count(const std::string& field, std::size_t& target) {
    setters_[field] = [&target](const std::string& v) -> std::optional<std::string> {
      const auto x = parse_unsigned<std::size_t>(v);
      if (!x) return "expected a non-negative integer, got '" + v + "'";
      target = *x;
      return std::nullopt;
    };
  }

  void register_keys() {
    auto& sys = spec_.system;
    auto& sc = spec_.scenario;

    setters_["experiment.sweep_variable"] = [this](const std::string& v) -> std::optional<std::string> {
      for (auto s : {SweepVariable::kNUsers, SweepVariable::kPMax, SweepVariable::kCellCountProxy}) {
        if (v == to_string(s)) {
          spec_.sweep_variable = s;
          return std::nullopt;
        }
      }
      return "unknown sweep variable '" + v + "'; valid: n_users, p_max, cell_count_proxy";
    };
    setters_["experiment.sweep_values"] = [this](const std::string& v) -> std::optional<std::string> {
      std::vector<double> values;
      for (const auto& item : split_list(v)) {
        const auto x = parse_real(item);
        if (!x) return "expected a comma-separated list of numbers, got '" + item + "'";
        values.push_back(*x);
      }
      spec_.sweep_values = std::move(values);
      return std::nullopt;
    };
    count("experiment.trials_per_point", spec_.trials_per_point);
    setters_["experiment.schemes"] = [this](const std::string& v) -> std::optional<std::string> {
      std::vector<Scheme> schemes;
      for (const auto& item : split_list(v)) {
        const auto s = parse_scheme(item);
        if (!s) return "unknown scheme '" + item + "'; valid schemes: " + valid_schemes();
        if (std::find(schemes.begin(), schemes.end(), *s) != schemes.end()) {
          return "scheme '" + item + "' listed twice";
        }
        schemes.push_back(*s);
      }
      spec_.schemes = std::move(schemes);
      return std::nullopt;
    };
    setters_["experiment.output"] = [this](const std::string& v) -> std::optional<std::string> {
      spec_.output_path = v;
      return std::nullopt;
    };
    setters_["experiment.json_summary"] = [this](const std::string& v) -> std::optional<std::string> {
      spec_.json_path = v;
      return std::nullopt;
    };

    count("system.n_subcarriers", sys.n_subcarriers);
    count("system.codebook_degree", sys.codebook_degree);
    count("system.replicas", sys.replicas);
    real("system.p_max", sys.p_max);
    real("system.circuit_power", sys.circuit_power);
    real("system.amp_factor", sys.amp_factor);
    real("system.subcarrier_bw", sys.subcarrier_bw);
    real("system.rate_req", sys.rate_req);
    real("system.weight", sys.weight);
    count("system.iterations", sys.max_iters);
    real("system.step", sys.step);
    real("system.tolerance", sys.tolerance);

    real("scenario.cell_radius", sc.cell_radius);
    real("scenario.bs_height", sc.bs_height);
    real("scenario.noise_dbm", sc.noise_dbm);
    real("scenario.pathloss_intercept_db", sc.pathloss_intercept_db);
    real("scenario.pathloss_exponent", sc.pathloss_exponent);
    real("scenario.min_distance", sc.min_distance);
    count("scenario.n_users", sc.n_users);
    setters_["scenario.seed"] = [&sc](const std::string& v) -> std::optional<std::string> {
      const auto x = parse_unsigned<std::uint64_t>(v);
      if (!x) return "expected an unsigned 64-bit integer, got '" + v + "'";
      sc.seed = *x;
      return std::nullopt;
    };
    setters_["scenario.fading"] = [&sc](const std::string& v) -> std::optional<std::string> {
      if (v == "rayleigh") {
        sc.fading = Fading::kRayleigh;
      } else if (v == "none") {
        sc.fading = Fading::kNone;
      } else {
        return "unknown fading '" + v + "'; valid: rayleigh, none";
      }
      return std::nullopt;
    };

    setters_["baselines.ofdma_assignment"] = [this](const std::string& v) -> std::optional<std::string> {
      if (v == "qos_first") {
        spec_.ofdma.assignment = OfdmaAssignment::kQosFirst;
      } else if (v == "max_gain") {
        spec_.ofdma.assignment = OfdmaAssignment::kMaxGain;
      } else {
        return "unknown assignment rule '" + v + "'; valid: qos_first, max_gain";
      }
      return std::nullopt;
    };
    real("baselines.cdma_spreading_gain", spec_.cdma.spreading_gain);
  }

  void fail(const std::string& field, std::string message) {
    const auto it = lines_.find(field);
    errors_.push_back({it == lines_.end() ? 0 : it->second, field, std::move(message)});
  }

  void check_ranges() {
    const auto& sys = spec_.system;
    const auto& sc = spec_.scenario;

    if (spec_.sweep_values.empty()) {
      fail("experiment.sweep_values", "must not be empty");
    } else if (std::adjacent_find(spec_.sweep_values.begin(), spec_.sweep_values.end(),
                                  std::greater_equal<>()) != spec_.sweep_values.end()) {
      fail("experiment.sweep_values", "must be strictly increasing");
    }
    for (double v : spec_.sweep_values) {
      switch (spec_.sweep_variable) {
        case SweepVariable::kNUsers:
          if (!(v >= 1.0) || v != std::floor(v)) {
            fail("experiment.sweep_values", "user counts must be positive integers, got " + format_float(v));
          }
          break;
        case SweepVariable::kPMax:
          if (!(v > 0.0)) fail("experiment.sweep_values", "p_max values must be positive, got " + format_float(v));
          break;
        case SweepVariable::kCellCountProxy:
          if (!(v > 0.0)) {
            fail("experiment.sweep_values", "cell counts must be positive, got " + format_float(v));
          } else if (!(sc.cell_radius / std::sqrt(v) > sc.min_distance)) {
            fail("experiment.sweep_values",
                 "cell count " + format_float(v) + " shrinks the cell radius below min_distance");
          }
          break;
      }
    }
    if (spec_.trials_per_point < 1) fail("experiment.trials_per_point", "must be at least 1");
    if (spec_.schemes.empty()) fail("experiment.schemes", "must name at least one of " + valid_schemes());
    if (spec_.output_path.empty()) fail("experiment.output", "must not be empty");

    if (sys.n_subcarriers < 2) fail("system.n_subcarriers", "must be at least 2");
    if (sys.codebook_degree < 1 || sys.codebook_degree >= sys.n_subcarriers) {
      fail("system.codebook_degree", "must lie in [1, n_subcarriers)");
    }
    if (sys.replicas < 1) fail("system.replicas", "must be at least 1");
    if (!(sys.p_max > 0.0)) fail("system.p_max", "must be positive");
    if (!(sys.circuit_power > 0.0)) fail("system.circuit_power", "must be positive");
    if (!(sys.amp_factor >= 1.0)) fail("system.amp_factor", "must be at least 1 (inverse amplifier efficiency)");
    if (!(sys.subcarrier_bw > 0.0)) fail("system.subcarrier_bw", "must be positive");
    if (!(sys.rate_req >= 0.0)) fail("system.rate_req", "must be non-negative");
    if (!(sys.weight >= 0.0)) fail("system.weight", "must be non-negative");
    if (sys.max_iters < 1) fail("system.iterations", "must be at least 1");
    if (!(sys.step > 0.0)) fail("system.step", "must be positive");
    if (!(sys.tolerance > 0.0)) fail("system.tolerance", "must be positive");

    if (!(sc.cell_radius > 0.0)) fail("scenario.cell_radius", "must be positive");
    if (!(sc.bs_height >= 0.0)) fail("scenario.bs_height", "must be non-negative");
    if (!(sc.pathloss_exponent > 0.0)) fail("scenario.pathloss_exponent", "must be positive");
    if (!(sc.min_distance >= 0.0) || !(sc.min_distance < sc.cell_radius)) {
      fail("scenario.min_distance", "must lie in [0, cell_radius)");
    }
    if (sc.n_users < 1) fail("scenario.n_users", "must be at least 1");

    if (!(spec_.cdma.spreading_gain >= 0.0)) {
      fail("baselines.cdma_spreading_gain", "must be non-negative (0 selects the subcarrier count)");
    }
  }

  ExperimentSpec& spec_;
  std::map<std::string, Setter> setters_;
  std::map<std::string, std::size_t> lines_;
  std::vector<ConfigError> errors_;
};

}  // namespace

ConfigResult validate_config_text(const std::string& text) {
  ExperimentSpec spec;
  Loader loader(spec);
  loader.load(ini::parse_string(text));
  ConfigResult result;
  result.errors = std::move(loader.errors());
  std::stable_sort(result.errors.begin(), result.errors.end(),
                   [](const ConfigError& a, const ConfigError& b) {
                     // omitted-field errors (line 0) after the located ones
                     const auto la = a.line == 0 ? SIZE_MAX : a.line;
                     const auto lb = b.line == 0 ? SIZE_MAX : b.line;
                     return la < lb;
                   });
  if (result.errors.empty()) result.spec = std::move(spec);
  return result;
}

ConfigResult validate_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ConfigResult result;
    result.errors.push_back({0, "", "cannot open config file '" + path + "'"});
    return result;
  }
  std::ostringstream text;
  text << in.rdbuf();
  return validate_config_text(text.str());
}

// ---------------------------------------------------------------------------
// Running

namespace {

struct PointSetup {
  ScenarioConfig scenario;
  SystemParams params;
};

PointSetup setup_point(const ExperimentSpec& spec, double value) {
  PointSetup out{spec.scenario, {}};
  double p_max = spec.system.p_max;
  switch (spec.sweep_variable) {
    case SweepVariable::kNUsers:
      out.scenario.n_users = static_cast<std::size_t>(value);
      break;
    case SweepVariable::kPMax:
      p_max = value;
      break;
    case SweepVariable::kCellCountProxy:
      // c cells tiling the same area: each cell's radius shrinks by sqrt(c).
      out.scenario.cell_radius = spec.scenario.cell_radius / std::sqrt(value);
      break;
  }
  const auto& sys = spec.system;
  out.params = SystemParams::uniform(out.scenario.n_users, sys.weight, sys.rate_req);
  out.params.p_max = p_max;
  out.params.amp_factor = sys.amp_factor;
  out.params.circuit_power = sys.circuit_power;
  out.params.subcarrier_bw = sys.subcarrier_bw;
  return out;
}

std::vector<TrialRow> run_trial(const ExperimentSpec& spec, const FactorGraph& graph,
                                const PointSetup& point, double value, std::size_t trial) {
  ScenarioConfig sc = point.scenario;
  // Common random numbers: the drop depends on the trial only, so every sweep
  // point sees the same users (extended as K grows).
  sc.seed = derive_seed(spec.scenario.seed, trial);
  const ChannelState chan = generate(sc, graph);
  const SystemParams& params = point.params;
  const double band = static_cast<double>(graph.n_subcarriers()) * params.subcarrier_bw;

  DualState seed = DualState::initial(params.n_users);
  seed.step = spec.system.step;
  seed.tolerance = spec.system.tolerance;
  seed.max_iters = spec.system.max_iters;

  std::vector<TrialRow> rows;
  for (Scheme scheme : spec.schemes) {
    TrialRow row;
    row.sweep_value = value;
    row.trial = trial;
    row.scheme = scheme;
    switch (scheme) {
      case Scheme::kScmaSe: {
        const auto r = solve_se(graph, chan, params, seed);
        row.se = r.allocation.rates.sum() / band;
        row.ee = energy_efficiency(graph, chan, params, r.allocation);
        row.total_power = r.allocation.total_tx_power;
        row.feasible = r.trace.feasible;
        row.iterations = r.trace.iterations;
        break;
      }
      case Scheme::kScmaEe: {
        EeOptions opts;
        opts.tolerance = spec.system.tolerance;
        const auto r = solve_ee(graph, chan, params, seed, opts);
        row.se = r.allocation.rates.sum() / band;
        row.ee = r.allocation.objective;
        row.total_power = r.allocation.total_tx_power;
        row.feasible = r.trace.feasible;
        row.iterations = r.trace.iterations;
        break;
      }
      case Scheme::kOfdma:
      case Scheme::kCdma: {
        const auto r = scheme == Scheme::kOfdma ? ofdma_allocate(chan, params, spec.ofdma)
                                                : cdma_allocate(chan, params, spec.cdma);
        row.se = r.spectral_efficiency;
        row.ee = r.energy_efficiency;
        row.total_power = r.total_tx_power;
        row.feasible = r.feasible;
        break;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

AggregateRow aggregate(const std::vector<const TrialRow*>& rows) {
  AggregateRow a;
  a.sweep_value = rows.front()->sweep_value;
  a.scheme = rows.front()->scheme;
  const auto n = static_cast<double>(rows.size());
  for (const auto* r : rows) {
    a.se_mean += r->se;
    a.ee_mean += r->ee;
    a.total_power_mean += r->total_power;
    a.feasible_fraction += r->feasible ? 1.0 : 0.0;
    a.iterations_mean += static_cast<double>(r->iterations);
  }
  a.se_mean /= n;
  a.ee_mean /= n;
  a.total_power_mean /= n;
  a.feasible_fraction /= n;
  a.iterations_mean /= n;
  if (rows.size() > 1) {
    double se_ss = 0.0;
    double ee_ss = 0.0;
    for (const auto* r : rows) {
      se_ss += (r->se - a.se_mean) * (r->se - a.se_mean);
      ee_ss += (r->ee - a.ee_mean) * (r->ee - a.ee_mean);
    }
    a.se_stddev = std::sqrt(se_ss / (n - 1.0));
    a.ee_stddev = std::sqrt(ee_ss / (n - 1.0));
  }
  return a;
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec, std::size_t parallel) {
  const auto& sys = spec.system;
  const FactorGraph graph = canonical_factor_graph(sys.n_subcarriers, sys.codebook_degree, sys.replicas);
  const std::size_t trials = spec.trials_per_point;
  const std::size_t n_threads = std::clamp<std::size_t>(parallel, 1, trials);

  ResultTable table;
  for (double value : spec.sweep_values) {
    const PointSetup point = setup_point(spec, value);
    point.params.validate();
    point.scenario.validate();

    std::vector<std::vector<TrialRow>> slots(trials);
    if (n_threads == 1) {
      for (std::size_t t = 0; t < trials; ++t) slots[t] = run_trial(spec, graph, point, value, t);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr error;
      std::mutex error_mutex;
      auto worker = [&] {
        for (std::size_t t = next++; t < trials; t = next++) {
          try {
            slots[t] = run_trial(spec, graph, point, value, t);
          } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      };
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
      if (error) std::rethrow_exception(error);
    }

    for (auto& slot : slots) table.rows.insert(table.rows.end(), slot.begin(), slot.end());
    for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
      std::vector<const TrialRow*> group;
      for (const auto& slot : slots) group.push_back(&slot[s]);
      table.aggregates.push_back(aggregate(group));
    }
  }
  return table;
}

void write_csv(const ResultTable& table, std::ostream& out) {
  out << "sweep_value,trial,scheme,se_bps_hz,ee_bits_per_joule,total_power_w,feasible_flag,"
         "iterations,se_stddev,ee_stddev\n";
  std::size_t r = 0;
  std::size_t a = 0;
  while (r < table.rows.size() || a < table.aggregates.size()) {
    const double value = r < table.rows.size() ? table.rows[r].sweep_value
                                               : table.aggregates[a].sweep_value;
    for (; r < table.rows.size() && table.rows[r].sweep_value == value; ++r) {
      const auto& row = table.rows[r];
      out << format_float(row.sweep_value) << ',' << row.trial << ',' << to_string(row.scheme) << ','
          << format_float(row.se) << ',' << format_float(row.ee) << ','
          << format_float(row.total_power) << ',' << (row.feasible ? 1 : 0) << ','
          << row.iterations << ",,\n";
    }
    for (; a < table.aggregates.size() && table.aggregates[a].sweep_value == value; ++a) {
      const auto& agg = table.aggregates[a];
      out << format_float(agg.sweep_value) << ",mean," << to_string(agg.scheme) << ','
          << format_float(agg.se_mean) << ',' << format_float(agg.ee_mean) << ','
          << format_float(agg.total_power_mean) << ',' << format_float(agg.feasible_fraction) << ','
          << format_float(agg.iterations_mean) << ',' << format_float(agg.se_stddev) << ','
          << format_float(agg.ee_stddev) << '\n';
    }
  }
}

void write_json_summary(const ExperimentSpec& spec, const ResultTable& table, std::ostream& out) {
  nlohmann::ordered_json doc;
  doc["sweep_variable"] = std::string(to_string(spec.sweep_variable));
  doc["sweep_values"] = spec.sweep_values;
  doc["trials_per_point"] = spec.trials_per_point;
  doc["seed"] = spec.scenario.seed;
  auto& schemes = doc["schemes"] = nlohmann::ordered_json::array();
  for (Scheme s : spec.schemes) schemes.push_back(std::string(to_string(s)));
  doc["ofdma_assignment"] = std::string(to_string(spec.ofdma.assignment));
  doc["cdma_spreading_gain"] = spec.cdma.spreading_gain;
  auto& points = doc["aggregates"] = nlohmann::ordered_json::array();
  for (const auto& agg : table.aggregates) {
    points.push_back({{"sweep_value", agg.sweep_value},
                      {"scheme", std::string(to_string(agg.scheme))},
                      {"se_mean", agg.se_mean},
                      {"se_stddev", agg.se_stddev},
                      {"ee_mean", agg.ee_mean},
                      {"ee_stddev", agg.ee_stddev},
                      {"total_power_mean", agg.total_power_mean},
                      {"feasible_fraction", agg.feasible_fraction},
                      {"iterations_mean", agg.iterations_mean}});
  }
  out << doc.dump(2) << '\n';
}

}  // namespace scma
