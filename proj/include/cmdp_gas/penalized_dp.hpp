#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cmdp_gas/cmdp.hpp"

namespace cmdp {

/// Deterministic stationary policy: one action index per state.
using Policy = std::vector<Index>;

inline constexpr Index kDefaultMaxSweeps = 100000;

template <typename Scalar>
struct PenalizedSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar mu = 0;
  Vector values;       ///< V(i, mu)
  Vector cost_values;  ///< discounted cost of the greedy policy from each state
  Policy greedy_policy;
  Index inner_iterations = 0;  ///< value-iteration sweeps
  Index cost_sweeps = 0;       ///< extra policy-evaluation sweeps used to settle cost_values
  bool converged = false;
};

/// One evaluated point (mu, O(mu), dO/dmu) of the dual objective.
template <typename Scalar>
struct DualPoint {
  Scalar mu = 0;
  Scalar objective = 0;
  Scalar gradient = 0;
};

namespace detail {

template <typename Scalar>
Scalar relative_change(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& next,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& prev) {
  using std::abs;
  using std::max;
  Scalar total(0);
  for (Index i = 0; i < prev.size(); ++i) total += abs(next(i) - prev(i)) / max(abs(prev(i)), Scalar(1));
  return total / static_cast<Scalar>(prev.size());
}

template <typename Scalar>
Scalar row_dot(const typename Cmdp<Scalar>::TransitionMatrix& p, Index row,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  Scalar s(0);
  for (typename Cmdp<Scalar>::TransitionMatrix::InnerIterator it(p, row); it; ++it) s += it.value() * x(it.col());
  return s;
}

}  // namespace detail

/**
 * Value iteration on the mu-penalized MDP with simultaneous tracking of the
 * discounted cost of the greedy policy.
 *
 * Each sweep computes Q(i,a) = R(i,a) - mu C(i,a) + gamma sum_j P_ij(a) V(j),
 * sets V(i) = max_a Q(i,a), selects the greedy action, and advances the
 * state-action cost table W(i,a) = C(i,a) + gamma sum_j P_ij(a) W(j, greedy(j)).
 * Sweeps stop once the mean relative change of V, with denominators
 * max(|V(i)|, 1), drops below `eps`. The cost column is then settled under
 * the final greedy policy to the same tolerance.
 *
 * Greedy selection: among actions whose Q lies within 1e4 machine epsilons
 * (relative) of the maximum, the one with the smallest tracked cost wins,
 * then the lowest index. Evaluated exactly at a cusp of the dual this yields
 * the right-sided derivative.
 *
 * V starts from zero on every call.
 */
template <typename Scalar>
PenalizedSolution<Scalar> value_iteration_penalized(const Cmdp<Scalar>& m, Scalar mu, Scalar eps,
                                                    Index max_sweeps = kDefaultMaxSweeps) {
  using std::abs;
  using Vector = typename PenalizedSolution<Scalar>::Vector;
  using Matrix = typename Cmdp<Scalar>::Matrix;

  m.require_valid();
  if (!(mu >= Scalar(0))) throw PreconditionError("value_iteration_penalized: mu must be >= 0");
  if (!(eps > Scalar(0))) throw PreconditionError("value_iteration_penalized: eps must be > 0");
  if (max_sweeps <= 0) throw PreconditionError("value_iteration_penalized: max_sweeps must be > 0");

  const Index ns = m.n_states(), na = m.n_actions();
  const Scalar gamma = m.discount();
  const auto& p = m.transitions();
  const Matrix rhat = penalized_rewards(m, mu);
  const Matrix& c = m.costs();
  const Scalar near_tie = Scalar(1e4) * std::numeric_limits<Scalar>::epsilon();

  PenalizedSolution<Scalar> sol;
  sol.mu = mu;
  sol.greedy_policy.assign(static_cast<std::size_t>(ns), 0);

  Vector v = Vector::Zero(ns), v_next(ns);
  Vector w_greedy(ns);
  Matrix w = Matrix::Zero(ns, na);
  Vector pv(ns * na), pw(ns * na);

  Index sweep = 0;
  while (sweep < max_sweeps) {
    pv.noalias() = p * v;
    for (Index i = 0; i < ns; ++i) {
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      for (Index a = 0; a < na; ++a)
        if (m.admissible(i, a)) best = std::max(best, rhat(i, a) + gamma * pv(m.row(i, a)));
      const Scalar band = near_tie * std::max(Scalar(1), abs(best));
      Index arg = -1;
      for (Index a = 0; a < na; ++a) {
        if (!m.admissible(i, a)) continue;
        const Scalar q = rhat(i, a) + gamma * pv(m.row(i, a));
        if (q < best - band) continue;
        if (arg < 0 || w(i, a) < w(i, arg)) arg = a;
      }
      v_next(i) = best;
      sol.greedy_policy[static_cast<std::size_t>(i)] = arg;
      w_greedy(i) = w(i, arg);
    }

    pw.noalias() = p * w_greedy;
    for (Index i = 0; i < ns; ++i)
      for (Index a = 0; a < na; ++a) w(i, a) = m.admissible(i, a) ? c(i, a) + gamma * pw(m.row(i, a)) : Scalar(0);

    const Scalar delta = detail::relative_change(v_next, v);
    v.swap(v_next);
    ++sweep;
    if (delta < eps) {
      sol.converged = true;
      break;
    }
  }
  sol.inner_iterations = sweep;
  sol.values = std::move(v);

  Vector cost(ns), cost_next(ns);
  for (Index i = 0; i < ns; ++i) cost(i) = w(i, sol.greedy_policy[static_cast<std::size_t>(i)]);
  if (sol.converged) {
    Index polish = 0;
    while (polish < max_sweeps) {
      for (Index i = 0; i < ns; ++i) {
        const Index a = sol.greedy_policy[static_cast<std::size_t>(i)];
        cost_next(i) = c(i, a) + gamma * detail::row_dot<Scalar>(p, m.row(i, a), cost);
      }
      const Scalar delta = detail::relative_change(cost_next, cost);
      cost.swap(cost_next);
      ++polish;
      if (delta < eps) break;
    }
    sol.cost_sweeps = polish;
  }
  sol.cost_values = std::move(cost);
  return sol;
}

/// O(mu) = sum_i beta(i) V(i,mu) + mu E and dO/dmu = E - sum_i beta(i) W(i).
template <typename Scalar>
DualPoint<Scalar> objective_and_gradient(const Cmdp<Scalar>& m, const PenalizedSolution<Scalar>& sol) {
  if (!sol.converged) throw PreconditionError("objective_and_gradient: inner loop did not converge");
  const auto& beta = m.initial_dist();
  DualPoint<Scalar> pt;
  pt.mu = sol.mu;
  pt.objective = beta.dot(sol.values) + sol.mu * m.constraint_bound();
  pt.gradient = m.constraint_bound() - beta.dot(sol.cost_values);
  return pt;
}

}  // namespace cmdp
