#include <doctest.h>

#include <cmath>

#include "cmdp_gas/solve.hpp"
#include "../support/random_cmdp.hpp"
#include "toy.hpp"

using namespace cmdp;
using doctest::Approx;

namespace {
DualPoint<double> pt(double mu, double o, double g) { return {mu, o, g}; }
}

TEST_CASE("intersect_tangents") {
  CHECK(intersect_tangents(pt(0, 4, -3), pt(2, 4, 1)) == Approx(0.5));
  CHECK(intersect_tangents(pt(0, 1, -1), pt(2, 1, 1)) == Approx(1.0));
  // 4 - 3mu = 3 + (mu - 1) gives mu = 0.5.
  CHECK(intersect_tangents(pt(0, 4, -3), pt(1, 3, 1)) == Approx(0.5));
  CHECK_THROWS_AS(intersect_tangents(pt(0, 1, -1), pt(2, 1, -1)), PreconditionError);
  CHECK_THROWS_AS(intersect_tangents(pt(2, 1, -1), pt(0, 1, 1)), PreconditionError);
  CHECK_THROWS_AS(intersect_tangents(pt(0, 0, -1), pt(1, 5, 1)), ConvexityError);
}

TEST_CASE("toy: mu* = 0.5, O = 2.5 after one intersection") {
  const auto m = toy::two_action();
  const auto r = gas_solve(m, 2.0, 1e-13, 1e-10);
  CHECK(std::abs(r.mu_star - 0.5) <= 1e-9);
  CHECK(std::abs(r.objective - 2.5) <= 1e-9);
  CHECK(r.policy[0] == 0);
  CHECK(r.gradient_at_mu_star >= 0);
  CHECK(r.outer_iterations() == 1);
  CHECK(r.trace.records.back().mu == Approx(0.5).epsilon(1e-12));
  CHECK(r.trace.records.front().outer_iter == 0);
  CHECK(r.trace.records.front().mu == 0.0);
  CHECK(r.trace.records[1].mu == 2.0);
}

TEST_CASE("zero costs: mu* = 0 without a search") {
  const auto m = toy::single(1, 0, 0.5, 1);
  const auto r = gas_solve(m);
  CHECK(r.mu_star == 0.0);
  CHECK(r.objective == Approx(2.0));
  CHECK(r.outer_iterations() == 0);
  CHECK(r.trace.records.size() == 1);
}

TEST_CASE("infeasible bound raises infeasible-or-M-too-small") {
  const auto m = toy::two_action(-1.0);
  try {
    gas_solve(m, 100.0, 1e-12, 1e-10);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.kind() == "infeasible-or-M-too-small");
    CHECK(e.trace().records.size() == 2);
  }
}

TEST_CASE("bracket soundness, lower-bound monotonicity and the certificate on random models") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto m = testing_support::random_cmdp(seed, 2 + Index(seed % 9), 2 + Index(seed % 3), 0.5 + 0.016 * seed);
    DualEvaluator<double> ev(m, 1e-13);
    const auto r = gas_solve(ev, 1e4, 1e-10);
    double last_lb = -INFINITY, last_width = INFINITY, o_min = INFINITY;
    for (const auto& rec : r.trace.records) {
      if (rec.outer_iter < 1 || rec.right_probe) continue;
      CHECK(rec.bracket_lo < rec.bracket_hi);
      CHECK(rec.bracket_hi - rec.bracket_lo <= last_width);
      last_width = rec.bracket_hi - rec.bracket_lo;
      CHECK(rec.lower_bound >= last_lb - 1e-9);
      CHECK(rec.lower_bound <= rec.objective + 1e-9);
      last_lb = rec.lower_bound;
      CHECK(rec.objective >= -1e300);
      o_min = std::min(o_min, rec.objective);
    }
    if (r.outer_iterations() == 0) continue;
    CHECK(r.objective <= o_min);
    CHECK(r.gradient_at_mu_star >= 0);
    // mu* may sit a right probe past the certified point.
    CHECK(r.objective_at_mu_star - last_lb <=
          1e-10 + 1e-9 * std::max(1.0, std::abs(last_lb)) + r.gradient_at_mu_star * 1e-6 * std::max(1.0, r.mu_star));
  }
}

TEST_CASE("solve_dispatch routes by name") {
  const auto m = toy::two_action();
  SolveParams p;
  p.mu_max = 2;
  p.eps = 1e-13;
  const auto g = solve_dispatch(m, "gas", p);
  CHECK(g.algorithm == "gas");
  CHECK(g.mu_star == Approx(0.5));
  const auto b = solve_dispatch(m, "bs", p);
  CHECK(b.algorithm == "bs");
  CHECK(b.mu_star == Approx(0.5));
  p.pdo.xi = 0.1;
  p.pdo.seed = 7;
  const auto d = solve_dispatch(m, "pdo", p);
  CHECK(d.algorithm == "pdo");
  CHECK_THROWS_AS(solve_dispatch(m, "lp", p), PreconditionError);
}
