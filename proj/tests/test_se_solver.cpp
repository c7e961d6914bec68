#include "scma/errors.hpp"
#include "scma/oracle.hpp"
#include "scma/se_solver.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace scma;
using scma::testing::kLn2;
using scma::testing::Rng;

namespace {

// One user, one layer on subcarrier 0 with gain g, unit noise.
struct Scalar {
  FactorGraph graph = testing::alternating_graph(1);
  ChannelState chan;
  explicit Scalar(double g) : chan(make(g)) {}
  static ChannelState make(double g) {
    Matrix h(1, 2);
    h << g, 1.0;
    return ChannelState(h, Vector::Ones(1));
  }
};

SystemParams unit_bw(std::size_t k, double req, double p_max) {
  auto p = SystemParams::uniform(k, 1.0, req);
  p.subcarrier_bw = 1.0;
  p.p_max = p_max;
  return p;
}

}  // namespace

TEST_CASE("optimal_power_se examples") {
  const Scalar two(2.0);
  CHECK(optimal_power_se(two.graph, two.chan, 0, 0, 1.0, 0.0, 1.0 / kLn2) == doctest::Approx(0.5));
  const Scalar one(1.0);
  CHECK(optimal_power_se(one.graph, one.chan, 0, 0, 1.0, 0.0, 100.0) == 0.0);
  CHECK_THROWS_AS(optimal_power_se(one.graph, one.chan, 0, 0, 1.0, 0.0, 0.0), ParameterError);
  const Scalar dead(0.0);
  CHECK(optimal_power_se(dead.graph, dead.chan, 0, 0, 1.0, 3.0, 1e-6) == 0.0);
}

TEST_CASE("optimal_power_se matches a fine grid over [0, 10 Pmax]") {
  Rng rng(31);
  const double p_max = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Scalar s(rng.log_uniform(0.1, 100.0));
    const double w = rng.uniform(0.5, 2.0);
    const double lambda = rng.uniform(0.0, 2.0);
    // keep the unconstrained maximizer inside the scanned interval
    const double mu = rng.log_uniform(std::max(0.2, 1.05 * (w + lambda) / (10.0 * p_max * kLn2)), 20.0);
    const double c = testing::effective_cnr(s.graph, s.chan, 0, 0);
    auto f = [&](double p) { return (w + lambda) * std::log2(1.0 + c * p) - mu * p; };
    const auto [p_grid, best] = testing::grid_argmax(f, 0.0, 10.0 * p_max, 1e-4);
    CHECK(std::abs(optimal_power_se(s.graph, s.chan, 0, 0, w, lambda, mu) - p_grid) <= 1e-3);
    (void)best;
  }
}

TEST_CASE("property: power is nonnegative, nonincreasing in mu, nondecreasing in lambda") {
  Rng rng(32);
  const auto g = canonical_factor_graph(4, 2, 2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto chan = testing::random_channel(rng, 3, 8, 1e-3, 1e3);
    const auto k = rng.index(3);
    const auto m = rng.index(12);
    const double lambda = rng.uniform(0.0, 5.0);
    const double mu = rng.log_uniform(1e-3, 10.0);
    const double p = optimal_power_se(g, chan, k, m, 1.0, lambda, mu);
    CHECK(p >= 0.0);
    CHECK(optimal_power_se(g, chan, k, m, 1.0, lambda, mu * 1.3) <= p);
    CHECK(optimal_power_se(g, chan, k, m, 1.0, lambda + 0.4, mu) >= p);
  }
}

TEST_CASE("layer_metric_se examples") {
  const Scalar three(3.0);
  CHECK(layer_metric_se(three.graph, three.chan, 0, 0, 0.0, 1.0, 0.0, 5.0) == 0.0);
  CHECK(layer_metric_se(three.graph, three.chan, 0, 0, 1.0, 1.0, 0.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("layer_metric_se matches finite differences of the relaxed Lagrangian") {
  Rng rng(33);
  const auto g = canonical_factor_graph(4, 2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto chan = testing::random_channel(rng, 2, 8, 1e-2, 1e2);
    const auto k = rng.index(2);
    const auto m = rng.index(12);
    const double w = rng.uniform(0.5, 2.0);
    const double lambda = rng.uniform(0.0, 3.0);
    const double mu = rng.log_uniform(1e-2, 1.0);
    const double p_hat = optimal_power_se(g, chan, k, m, w, lambda, mu);
    const double c = testing::effective_cnr(g, chan, k, m);
    // terms of the Lagrangian that involve s(k, m); everything else is constant in s
    auto lagrangian = [&](double s) {
      return (w + lambda) * s * std::log2(1.0 + c * p_hat) - mu * s * p_hat;
    };
    const double fd = testing::centered_difference(lagrangian, 0.5, 1e-5);
    const double h = layer_metric_se(g, chan, k, m, p_hat, w, lambda, mu);
    CHECK(h == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("assign_layers examples and tie-break") {
  Matrix h(2, 2);
  h << 2, 1, 0, 3;
  BinaryMatrix expected(2, 2);
  expected << 1, 0, 0, 1;
  CHECK(assign_layers(h) == expected);

  Matrix negative(2, 1);
  negative << -1, -0.5;
  CHECK(assign_layers(negative).sum() == 0);

  Matrix tie(2, 1);
  tie << 1, 1;
  CHECK(assign_layers(tie)(0, 0) == 1);
  CHECK(assign_layers(tie)(1, 0) == 0);
}

TEST_CASE("property: assignment is invariant under positive scaling") {
  Rng rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix h(4, 6);
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = rng.uniform(-1.0, 5.0);
    const auto a = assign_layers(h);
    CHECK(a == assign_layers(h * rng.log_uniform(1e-3, 1e3)));
    for (Eigen::Index m = 0; m < 6; ++m) CHECK(a.col(m).sum() <= 1);
  }
}

TEST_CASE("update_multipliers_se examples") {
  DualState s = DualState::initial(1);
  s.lambda(0) = 1.0;
  s.step = 0.1;
  Vector rates(1);
  rates << 5.0;
  const Vector zero = Vector::Zero(1);
  auto next = update_multipliers_se(s, rates, zero, 0.0, 0.0);
  CHECK(next.lambda(0) == doctest::Approx(0.5));
  CHECK(next.iteration == 1);

  s.lambda(0) = 0.1;
  s.step = 1.0;
  CHECK(update_multipliers_se(s, rates, zero, 0.0, 0.0).lambda(0) == 0.0);

  s.mu = 0.2;
  s.step = 0.1;
  CHECK(update_multipliers_se(s, zero, zero, 11.0, 10.0).mu == doctest::Approx(0.3));
  // the floor keeps mu strictly positive
  CHECK(update_multipliers_se(s, zero, zero, 0.0, 100.0).mu == kMuFloor);
}

TEST_CASE("solve_se: single user single layer uses the whole budget") {
  const Scalar s(3.0);
  const auto params = unit_bw(1, 0.0, 7.0);
  const auto r = solve_se(s.graph, s.chan, params);
  const auto [p, best] =
      testing::grid_argmax([&](double x) { return std::log2(1.0 + 3.0 * x); }, 0.0, 7.0, 1e-4);
  CHECK(r.allocation.objective == doctest::Approx(best).epsilon(0.01));
  CHECK(r.allocation.total_tx_power == doctest::Approx(7.0).epsilon(1e-6));
  CHECK(r.trace.feasible);
  (void)p;
}

TEST_CASE("solve_se: symmetric two-user instance splits the layers") {
  Matrix h = Matrix::Constant(2, 2, 4.0);
  const ChannelState chan(h, Vector::Ones(2));
  const auto g = testing::alternating_graph(2);
  const auto params = unit_bw(2, 0.5, 2.0);
  const auto r = solve_se(g, chan, params);
  CHECK(r.allocation.assign.row(0).sum() == 1);
  CHECK(r.allocation.assign.row(1).sum() == 1);
  CHECK(r.allocation.rates(0) == doctest::Approx(r.allocation.rates(1)).epsilon(1e-6));
}

TEST_CASE("solve_se: K=3, M=2, N=2 seeded instances within 2% of the oracle") {
  Rng rng(35);
  const auto g = testing::alternating_graph(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto chan = testing::random_channel(rng, 3, 2, 0.5, 50.0);
    auto params = unit_bw(3, 0.0, rng.uniform(1.0, 10.0));
    params.rate_req[rng.index(3)] = rng.uniform(0.1, 1.0);
    const auto r = solve_se(g, chan, params);
    const auto o = oracle_se(g, chan, params, params.p_max / 200.0);
    REQUIRE(o.feasible);
    CHECK(r.trace.feasible);
    CHECK(r.allocation.objective >= 0.98 * o.best_objective);
    CHECK(o.best_objective >= r.allocation.objective - 1e-9);
  }
}

TEST_CASE("property: trace invariants and returned feasibility") {
  Rng rng(36);
  const auto g = canonical_factor_graph(4, 2, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + rng.index(5);
    const auto chan = testing::random_channel(rng, k, 4, 0.1, 100.0);
    auto params = unit_bw(k, rng.uniform(0.0, 1.0), rng.uniform(1.0, 20.0));
    DualState seed = DualState::initial(k);
    seed.max_iters = 30 + rng.index(70);
    const auto r = solve_se(g, chan, params, seed);
    CHECK(r.trace.records.size() <= seed.max_iters);
    for (const auto& rec : r.trace.records) {
      CHECK(rec.lambda.minCoeff() >= 0.0);
      CHECK(rec.mu > 0.0);
    }
    const auto report = check_feasibility(g, chan, params, r.allocation);
    if (r.trace.feasible) CHECK(report.all_satisfied());
    CHECK(report.exclusive_ok);
    CHECK(report.nonnegative_ok);
  }
}

TEST_CASE("property: without floors the objective is nondecreasing in the budget") {
  Rng rng(37);
  const auto g = canonical_factor_graph(4, 2, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 1 + rng.index(5);
    const auto chan = testing::random_channel(rng, k, 4, 0.1, 100.0);
    double previous = 0.0;
    for (double p_max : {1.0, 5.0, 25.0, 125.0}) {
      const auto r = solve_se(g, chan, unit_bw(k, 0.0, p_max));
      CHECK(r.allocation.objective >= previous * (1 - 1e-9));
      previous = r.allocation.objective;
    }
  }
}

TEST_CASE("unreachable rate floors are flagged, not returned as feasible") {
  Rng rng(38);
  const auto g = testing::alternating_graph(3);
  const auto chan = testing::random_channel(rng, 2, 2, 0.5, 2.0);
  auto params = unit_bw(2, 40.0, 1.0);  // 40 bits/s/Hz from 1 W is impossible
  const auto r = solve_se(g, chan, params);
  CHECK_FALSE(r.trace.feasible);
  CHECK_FALSE(check_feasibility(g, chan, params, r.allocation).rates_ok());
}

TEST_CASE("inconsistent inputs are rejected") {
  const auto g = testing::alternating_graph(2);
  Matrix h = Matrix::Ones(2, 3);
  const ChannelState wrong_n(h, Vector::Ones(2));
  CHECK_THROWS_AS(solve_se(g, wrong_n, unit_bw(2, 0.0, 1.0)), InputError);
  const ChannelState ok(Matrix::Ones(2, 2), Vector::Ones(2));
  CHECK_THROWS_AS(solve_se(g, ok, unit_bw(3, 0.0, 1.0)), InputError);
}
