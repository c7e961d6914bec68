#include "scma/errors.hpp"
#include "scma/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>
#include <vector>

using namespace scma;
using scma::testing::Rng;

namespace {

SystemParams unit_bw(std::size_t k, double req, double p_max) {
  auto p = SystemParams::uniform(k, 1.0, req);
  p.subcarrier_bw = 1.0;
  p.p_max = p_max;
  return p;
}

std::vector<int> flatten(const BinaryMatrix& s) { return {s.data(), s.data() + s.size()}; }

}  // namespace

TEST_CASE("enumeration counts and uniqueness") {
  CHECK(all_assignments(2, 2).size() == 9);
  CHECK(all_assignments(1, 1).size() == 2);
  CHECK(all_assignments(3, 2).size() == 16);
  for (auto [k, m] : {std::pair<std::size_t, std::size_t>{2, 3}, {3, 3}, {4, 2}}) {
    const auto all = all_assignments(k, m);
    std::set<std::vector<int>> seen;
    for (const auto& s : all) {
      CHECK(s.rows() == static_cast<Eigen::Index>(k));
      for (Eigen::Index j = 0; j < s.cols(); ++j) CHECK(s.col(j).sum() <= 1);
      seen.insert(flatten(s));
    }
    CHECK(seen.size() == all.size());
    CHECK(all.size() == assignment_count(k, m));
  }
}

TEST_CASE("enumeration guard") {
  CHECK(assignment_count(9, 7) == 10'000'000);
  CHECK_THROWS_AS(assignment_count(10, 7), SizeError);
  CHECK_THROWS_AS(all_assignments(4, 11), SizeError);
}

TEST_CASE("maximize_concave finds interior and boundary maxima") {
  CHECK(maximize_concave([](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0, 0.1) ==
        doctest::Approx(0.3).epsilon(1e-9));
  CHECK(maximize_concave([](double x) { return x; }, 0.0, 2.0, 0.25) == doctest::Approx(2.0));
  CHECK(maximize_concave([](double x) { return -x; }, 0.0, 2.0, 0.25) == doctest::Approx(0.0).scale(1));
  CHECK_THROWS_AS(maximize_concave([](double x) { return x; }, 0.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("oracle_se: one user one layer spends the whole budget") {
  const auto g = testing::alternating_graph(1);
  Matrix h(1, 2);
  h << 2.0, 1.0;
  const ChannelState chan(h, Vector::Ones(1));
  const auto params = unit_bw(1, 0.0, 5.0);
  const auto o = oracle_se(g, chan, params, 0.01);
  CHECK(o.feasible);
  CHECK(o.n_assignments_searched == 2);
  CHECK(o.best_alloc.total_tx_power == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(o.best_objective == doctest::Approx(std::log2(11.0)).epsilon(1e-9));
}

TEST_CASE("oracle_se: symmetric under a user swap") {
  Rng rng(51);
  const auto g = testing::alternating_graph(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto chan = testing::random_channel(rng, 2, 2, 0.5, 20.0);
    Matrix swapped = chan.gains();
    swapped.row(0).swap(swapped.row(1));
    const ChannelState chan2(swapped, chan.noise());
    const auto params = unit_bw(2, 0.3, 4.0);
    const auto a = oracle_se(g, chan, params, 0.02);
    const auto b = oracle_se(g, chan2, params, 0.02);
    CHECK(a.best_objective == doctest::Approx(b.best_objective).epsilon(1e-9));
  }
}

TEST_CASE("oracle objective table and determinism") {
  Rng rng(52);
  const auto g = testing::alternating_graph(2);
  const auto chan = testing::random_channel(rng, 3, 2, 0.5, 20.0);
  auto params = unit_bw(3, 0.0, 4.0);
  params.rate_req[0] = 1.0;
  const auto a = oracle_se(g, chan, params, 0.02);
  const auto b = oracle_se(g, chan, params, 0.02);
  CHECK(a.n_assignments_searched == 16);
  REQUIRE(a.objectives.size() == 16);
  CHECK(std::isnan(a.objectives[15]));  // nothing assigned: user 0 misses its floor
  CHECK(a.best_objective == b.best_objective);
  for (std::size_t i = 0; i < a.objectives.size(); ++i) {
    CHECK((std::isnan(a.objectives[i]) ? std::isnan(b.objectives[i]) : a.objectives[i] == b.objectives[i]));
  }
}

TEST_CASE("property: halving the grid step never loses more than the refinement slack") {
  Rng rng(53);
  const auto g = testing::alternating_graph(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto chan = testing::random_channel(rng, 2, 2, 0.5, 20.0);
    const auto params = unit_bw(2, 0.2, 3.0);
    const auto coarse = oracle_se(g, chan, params, 0.1);
    const auto fine = oracle_se(g, chan, params, 0.05);
    CHECK(fine.best_objective >= coarse.best_objective - 1e-9);
  }
}

TEST_CASE("oracle_ee: one user one layer matches a direct scan") {
  const auto g = testing::alternating_graph(1);
  for (double gain : {0.5, 4.0, 60.0}) {
    Matrix h(1, 2);
    h << gain, 1.0;
    const ChannelState chan(h, Vector::Ones(1));
    const auto params = unit_bw(1, 0.0, 10.0);
    const auto o = oracle_ee(g, chan, params, 0.01);
    const auto [p, best] = testing::grid_argmax(
        [&](double x) { return std::log2(1 + gain * x) / (params.amp_factor * x + params.circuit_power); },
        0.0, params.p_max, 1e-4);
    CHECK(o.best_objective == doctest::Approx(best).epsilon(1e-6));
    // Dinkelbach root: F(q) = R - q P vanishes at the returned point
    const double f = o.best_alloc.rates.sum() -
                     o.best_objective * consumed_power(params, o.best_alloc.total_tx_power);
    CHECK(std::abs(f) <= 1e-9);
    (void)p;
  }
}

TEST_CASE("infeasible instances produce an infeasibility result") {
  const auto g = testing::alternating_graph(2);
  const ChannelState chan(Matrix::Ones(3, 2), Vector::Ones(3));
  const auto params = unit_bw(3, 1.0, 10.0);  // three floors, two layers
  CHECK_FALSE(oracle_se(g, chan, params, 0.1).feasible);
  CHECK_FALSE(oracle_ee(g, chan, params, 0.1).feasible);
}

TEST_CASE("small_factor_graph cycles the canonical columns") {
  const auto g = small_factor_graph(2, 3);
  CHECK(g.n_layers() == 3);
  CHECK(g.mapping().col(2) == g.mapping().col(0));
  const auto g4 = small_factor_graph(4, 8);
  CHECK(g4.degree() == 2);
  CHECK(g4.mapping().col(6) == g4.mapping().col(0));
}
