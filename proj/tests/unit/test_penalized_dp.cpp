#include <doctest.h>

#include <random>

#include <Eigen/LU>

#include "cmdp_gas/diagnostics.hpp"
#include "cmdp_gas/penalized_dp.hpp"
#include "../support/random_cmdp.hpp"
#include "toy.hpp"

using namespace cmdp;
using doctest::Approx;

TEST_CASE("single self-loop: geometric series") {
  const auto m = toy::single(1, 1, 0.5, 3);
  auto s0 = value_iteration_penalized(m, 0.0, 1e-13);
  REQUIRE(s0.converged);
  CHECK(s0.values(0) == Approx(2.0).epsilon(1e-11));
  CHECK(s0.cost_values(0) == Approx(2.0).epsilon(1e-11));

  auto s1 = value_iteration_penalized(m, 0.5, 1e-13);
  CHECK(s1.values(0) == Approx(1.0).epsilon(1e-11));
  CHECK(s1.cost_values(0) == Approx(2.0).epsilon(1e-11));
  const auto p = objective_and_gradient(m, s1);
  CHECK(p.mu == 0.5);
  CHECK(p.objective == Approx(2.5).epsilon(1e-11));
  CHECK(p.gradient == Approx(1.0).epsilon(1e-11));
}

TEST_CASE("two actions at mu = 0.25 picks b") {
  const auto m = toy::two_action();
  auto s = value_iteration_penalized(m, 0.25, 1e-13);
  REQUIRE(s.converged);
  CHECK(s.greedy_policy[0] == 1);
  CHECK(s.values(0) == Approx(3.0).epsilon(1e-11));
  CHECK(s.cost_values(0) == Approx(4.0).epsilon(1e-11));
}

TEST_CASE("two actions: objective and gradient at 0 and 1") {
  const auto m = toy::two_action();
  const auto p0 = objective_and_gradient(m, value_iteration_penalized(m, 0.0, 1e-13));
  CHECK(p0.objective == Approx(4.0).epsilon(1e-11));
  CHECK(p0.gradient == Approx(-3.0).epsilon(1e-11));
  const auto s1 = value_iteration_penalized(m, 1.0, 1e-13);
  CHECK(s1.greedy_policy[0] == 0);
  const auto p1 = objective_and_gradient(m, s1);
  CHECK(p1.objective == Approx(3.0).epsilon(1e-11));
  CHECK(p1.gradient == Approx(1.0).epsilon(1e-11));
}

TEST_CASE("cusp reports the right-sided derivative") {
  const auto m = toy::two_action();
  const auto p = objective_and_gradient(m, value_iteration_penalized(m, 0.5, 1e-13));
  CHECK(p.objective == Approx(2.5).epsilon(1e-11));
  CHECK(p.gradient == Approx(1.0).epsilon(1e-11));
}

TEST_CASE("preconditions") {
  const auto m = toy::two_action();
  CHECK_THROWS_AS(value_iteration_penalized(m, -0.1, 1e-10), PreconditionError);
  CHECK_THROWS_AS(value_iteration_penalized(m, 0.0, 0.0), PreconditionError);
  auto s = value_iteration_penalized(m, 0.0, 1e-14, 3);
  CHECK_FALSE(s.converged);
  CHECK(s.inner_iterations == 3);
  CHECK_THROWS_AS(objective_and_gradient(m, s), PreconditionError);
}

TEST_CASE("random models: values monotone in mu, decomposition identity, non-negative cost") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = testing_support::random_cmdp(seed, 2 + Index(seed % 8), 2 + Index(seed % 3), 0.8);
    Cmdpd::Vector prev;
    for (double mu : {0.0, 0.3, 1.1, 4.0}) {
      const auto s = value_iteration_penalized(m, mu, 1e-13);
      REQUIRE(s.converged);
      CHECK((s.cost_values.array() >= 0).all());
      if (prev.size()) CHECK((prev.array() >= s.values.array() - 1e-9).all());
      prev = s.values;

      // Independent evaluation of the greedy policy's discounted reward.
      const Index n = m.n_states();
      Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
      Eigen::VectorXd r(n);
      for (Index i = 0; i < n; ++i) {
        const Index act = s.greedy_policy[std::size_t(i)];
        r(i) = m.rewards()(i, act);
        for (Cmdpd::TransitionMatrix::InnerIterator it(m.transitions(), m.row(i, act)); it; ++it)
          a(i, it.col()) -= m.discount() * it.value();
      }
      const Eigen::VectorXd omega0 = a.lu().solve(r);
      CHECK((s.values - (omega0 - mu * s.cost_values)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("converged values have small Bellman error") {
  const auto m = testing_support::random_cmdp(3, 8, 3, 0.9);
  const auto s = value_iteration_penalized(m, 0.7, 1e-10);
  CHECK(bellman_error(m, s.values, 0.7).max_abs <= 1e-6);
}
