#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "cmdp_gas/penalized_dp.hpp"

namespace cmdp {

/// One-step look-ahead on the penalized rewards; exact ties go to the lowest
/// action index.
template <typename Scalar>
Policy extract_policy(const Cmdp<Scalar>& m, const typename Cmdp<Scalar>::Vector& values,
                      std::type_identity_t<Scalar> mu) {
  if (values.size() != m.n_states()) throw PreconditionError("extract_policy: value vector has wrong size");
  const auto rhat = penalized_rewards(m, mu);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pv = m.transitions() * values;
  Policy policy(static_cast<std::size_t>(m.n_states()), 0);
  for (Index i = 0; i < m.n_states(); ++i) {
    Index arg = -1;
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (Index a = 0; a < m.n_actions(); ++a) {
      if (!m.admissible(i, a)) continue;
      const Scalar q = rhat(i, a) + m.discount() * pv(m.row(i, a));
      if (arg < 0 || q > best) {
        best = q;
        arg = a;
      }
    }
    policy[static_cast<std::size_t>(i)] = arg;
  }
  return policy;
}

template <typename Scalar>
struct BellmanErrorReport {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> residual;  ///< signed BE(i)
  Scalar min_abs = 0;
  Scalar mean_abs = 0;
  Scalar max_abs = 0;
};

/// BE(i) = V(i) - max_a [R(i,a) - mu C(i,a) + gamma sum_j P_ij(a) V(j)].
template <typename Scalar>
BellmanErrorReport<Scalar> bellman_error(const Cmdp<Scalar>& m, const typename Cmdp<Scalar>::Vector& values,
                                         Scalar mu) {
  if (values.size() != m.n_states()) throw PreconditionError("bellman_error: value vector has wrong size");
  const auto rhat = penalized_rewards(m, mu);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pv = m.transitions() * values;
  BellmanErrorReport<Scalar> rep;
  rep.residual.resize(m.n_states());
  for (Index i = 0; i < m.n_states(); ++i) {
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (Index a = 0; a < m.n_actions(); ++a)
      if (m.admissible(i, a)) best = std::max(best, rhat(i, a) + m.discount() * pv(m.row(i, a)));
    rep.residual(i) = values(i) - best;
  }
  const auto mag = rep.residual.cwiseAbs();
  rep.min_abs = mag.minCoeff();
  rep.max_abs = mag.maxCoeff();
  rep.mean_abs = mag.mean();
  return rep;
}

}  // namespace cmdp
