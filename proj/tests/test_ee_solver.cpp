#include "scma/ee_solver.hpp"
#include "scma/errors.hpp"
#include "scma/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace scma;
using scma::testing::kLn2;
using scma::testing::Rng;

namespace {

ChannelState scalar_channel(double g) {
  Matrix h(1, 2);
  h << g, 1.0;
  return ChannelState(h, Vector::Ones(1));
}

SystemParams unit_bw(std::size_t k, double req, double p_max) {
  auto p = SystemParams::uniform(k, 1.0, req);
  p.subcarrier_bw = 1.0;
  p.p_max = p_max;
  return p;
}

void check_dinkelbach_contract(const EeResult& r, const EeOptions& opts, double circuit_power) {
  const auto& h = r.state.q_history;
  REQUIRE(!h.empty());
  CHECK(h.front() == 0.0);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] >= h[i - 1]);
  if (r.trace.feasible) {
    CHECK(std::abs(r.state.final_residual) <= opts.tolerance);
    CHECK(std::abs(h.back() - r.allocation.objective) <= opts.tolerance / circuit_power);
  }
  CHECK(r.state.q == r.allocation.objective);
}

}  // namespace

TEST_CASE("dinkelbach_value examples and sign structure") {
  const auto g = testing::alternating_graph(1);
  const auto chan = scalar_channel(3.0);
  const auto params = unit_bw(1, 0.0, 10.0);
  const auto a = make_allocation(g, chan, params, BinaryMatrix::Ones(1, 1), Matrix::Ones(1, 1));
  const double ee = energy_efficiency(g, chan, params, a);
  CHECK(dinkelbach_value(g, chan, params, a, ee) == doctest::Approx(0.0).scale(1.0));
  CHECK(dinkelbach_value(g, chan, params, a, 0.0) == doctest::Approx(2.0));
  CHECK(dinkelbach_value(g, chan, params, a, ee * 1.01) < 0.0);

  Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    const double q1 = rng.uniform(0.0, 5.0);
    const double q2 = q1 + rng.uniform(1e-3, 1.0);
    CHECK(dinkelbach_value(g, chan, params, a, q2) < dinkelbach_value(g, chan, params, a, q1));
  }
}

TEST_CASE("optimal_power_ee examples") {
  const auto g = testing::alternating_graph(1);
  const auto chan = scalar_channel(2.0);
  // mu + q eps0 = 1/ln2 with eps0 = 1
  CHECK(optimal_power_ee(g, chan, 0, 0, 0.0, 0.5 / kLn2, 0.5 / kLn2, 1.0) == doctest::Approx(0.5));
  CHECK(optimal_power_ee(g, chan, 0, 0, 0.0, 0.0, 1e9, 1.0 / 0.37) == 0.0);
  CHECK_THROWS_AS(optimal_power_ee(g, chan, 0, 0, 0.0, 0.0, 0.0, 1.0), ParameterError);
  const auto dead = scalar_channel(0.0);
  CHECK(optimal_power_ee(g, dead, 0, 0, 1.0, 1e-6, 0.0, 1.0) == 0.0);
}

TEST_CASE("optimal_power_ee matches a fine grid over [0, 10 Pmax]") {
  Rng rng(42);
  const auto g = testing::alternating_graph(1);
  const double p_max = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double c = rng.log_uniform(0.1, 100.0);
    const auto chan = scalar_channel(c);
    const double lambda = rng.uniform(0.0, 2.0);
    const double mu = rng.log_uniform(0.01, 5.0);
    const double q = rng.uniform(0.0, 5.0);
    const double eps0 = 1.0 / 0.37;
    auto f = [&](double p) { return (1 + lambda) * std::log2(1 + c * p) - (mu + q * eps0) * p; };
    const auto [p_grid, best] = testing::grid_argmax(f, 0.0, 10.0 * p_max, 1e-4);
    CHECK(std::abs(optimal_power_ee(g, chan, 0, 0, lambda, mu, q, eps0) - p_grid) <= 1e-3);
    (void)best;
  }
}

TEST_CASE("property: zero energy price reduces to the rate-maximizing power") {
  Rng rng(43);
  const auto g = canonical_factor_graph(4, 2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto chan = testing::random_channel(rng, 3, 8, 1e-3, 1e3);
    const auto k = rng.index(3);
    const auto m = rng.index(12);
    const double lambda = rng.uniform(0.0, 4.0);
    const double mu = rng.log_uniform(1e-3, 10.0);
    CHECK(optimal_power_ee(g, chan, k, m, lambda, mu, 0.0, 2.7) ==
          optimal_power_se(g, chan, k, m, 1.0, lambda, mu));
  }
}

TEST_CASE("layer_metric_ee closed-form values") {
  const auto g = testing::alternating_graph(1);
  const auto chan = scalar_channel(1.0);
  CHECK(layer_metric_ee(g, chan, 0, 0, 0.0, 0.7) == 0.0);
  // SNR = 1: 1 - (1/ln2)(1/2)
  CHECK(layer_metric_ee(g, chan, 0, 0, 1.0, 0.0) == doctest::Approx(0.27865).epsilon(1e-5));
}

TEST_CASE("layer_metric_ee matches finite differences with x held fixed") {
  Rng rng(44);
  const auto g = canonical_factor_graph(4, 2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto chan = testing::random_channel(rng, 2, 8, 1e-2, 1e2);
    const auto k = rng.index(2);
    const auto m = rng.index(12);
    const double lambda = rng.uniform(0.0, 3.0);
    const double mu = rng.log_uniform(1e-3, 0.5);
    const double q = rng.uniform(0.0, 0.5);
    const double eps0 = 1.0 / 0.37;
    const double p_hat = optimal_power_ee(g, chan, k, m, lambda, mu, q, eps0);
    if (p_hat == 0.0) continue;
    const double c = testing::effective_cnr(g, chan, k, m);
    const double x_hat = 0.5 * p_hat;
    auto lagrangian = [&](double s) {
      return (1 + lambda) * s * std::log2(1 + c * x_hat / s) - (mu + q * eps0) * x_hat;
    };
    const double fd = testing::centered_difference(lagrangian, 0.5, 1e-5);
    CHECK(layer_metric_ee(g, chan, k, m, p_hat, lambda) == doctest::Approx(fd).epsilon(1e-4));
    // at the water level the metric equals the priced value
    const double value = (1 + lambda) * std::log2(1 + c * p_hat) - (mu + q * eps0) * p_hat;
    CHECK(layer_metric_ee(g, chan, k, m, p_hat, lambda) == doctest::Approx(value).epsilon(1e-9));
  }
}

TEST_CASE("solve_ee: single user single layer matches a scan of the ratio") {
  for (double gain : {0.5, 3.0, 40.0}) {
    const auto g = testing::alternating_graph(1);
    const auto chan = scalar_channel(gain);
    const auto params = unit_bw(1, 0.0, 10.0);
    const auto r = solve_ee(g, chan, params);
    const auto [p, best] = testing::grid_argmax(
        [&](double x) {
          return std::log2(1 + gain * x) / (params.amp_factor * x + params.circuit_power);
        },
        0.0, params.p_max, 1e-4);
    CHECK(r.allocation.objective == doctest::Approx(best).epsilon(0.01));
    check_dinkelbach_contract(r, EeOptions{}, params.circuit_power);
    (void)p;
  }
}

TEST_CASE("solve_ee: K=3, M=2, N=2 seeded instances within 2% of the oracle") {
  Rng rng(45);
  const auto g = testing::alternating_graph(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto chan = testing::random_channel(rng, 3, 2, 0.5, 50.0);
    auto params = unit_bw(3, 0.0, rng.uniform(1.0, 10.0));
    params.rate_req[rng.index(3)] = rng.uniform(0.1, 1.0);
    const auto r = solve_ee(g, chan, params);
    const auto o = oracle_ee(g, chan, params, params.p_max / 200.0);
    REQUIRE(o.feasible);
    CHECK(r.trace.feasible);
    CHECK(r.allocation.objective >= 0.98 * o.best_objective);
    CHECK(o.best_objective >= r.allocation.objective - 1e-9);
    check_dinkelbach_contract(r, EeOptions{}, params.circuit_power);
  }
}

TEST_CASE("property: returned-feasible EE allocations satisfy every constraint") {
  Rng rng(46);
  const auto g = canonical_factor_graph(4, 2, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + rng.index(5);
    const auto chan = testing::random_channel(rng, k, 4, 0.1, 100.0);
    const auto params = unit_bw(k, rng.uniform(0.0, 1.0), rng.uniform(1.0, 20.0));
    const auto r = solve_ee(g, chan, params);
    const auto report = check_feasibility(g, chan, params, r.allocation);
    if (r.trace.feasible) CHECK(report.all_satisfied());
    check_dinkelbach_contract(r, EeOptions{}, params.circuit_power);
  }
}

TEST_CASE("property: EE solution transmits no more power than the SE solution") {
  Rng rng(47);
  const auto g = canonical_factor_graph(4, 2, 1);
  int violations = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t k = 1 + rng.index(6);
    const auto chan = testing::random_channel(rng, k, 4, 0.1, 100.0);
    const auto params = unit_bw(k, rng.uniform(0.0, 0.5), rng.uniform(1.0, 20.0));
    const auto se = solve_se(g, chan, params);
    const auto ee = solve_ee(g, chan, params);
    if (ee.allocation.total_tx_power > se.allocation.total_tx_power * (1 + 1e-9)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("interleaved variant keeps the Dinkelbach contract") {
  Rng rng(48);
  const auto g = canonical_factor_graph(4, 2, 1);
  EeOptions opts;
  opts.interleaved = true;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t k = 2 + rng.index(4);
    const auto chan = testing::random_channel(rng, k, 4, 0.1, 100.0);
    const auto params = unit_bw(k, 0.2, 10.0);
    const auto nested = solve_ee(g, chan, params);
    const auto inter = solve_ee(g, chan, params, DualState::initial(k), opts);
    const auto& h = inter.state.q_history;
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] >= h[i - 1]);
    CHECK(inter.trace.feasible == nested.trace.feasible);
    CHECK(inter.allocation.objective >= 0.95 * nested.allocation.objective);
  }
}

TEST_CASE("unreachable floors are flagged with a best-effort q") {
  Rng rng(49);
  const auto g = testing::alternating_graph(3);
  const auto chan = testing::random_channel(rng, 2, 2, 0.5, 2.0);
  const auto params = unit_bw(2, 40.0, 1.0);
  const auto r = solve_ee(g, chan, params);
  CHECK_FALSE(r.trace.feasible);
  CHECK(r.state.q >= 0.0);
  CHECK_FALSE(check_feasibility(g, chan, params, r.allocation).rates_ok());
}
