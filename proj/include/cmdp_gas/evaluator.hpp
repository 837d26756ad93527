#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "cmdp_gas/penalized_dp.hpp"

namespace cmdp {

template <typename Scalar>
struct Evaluation {
  PenalizedSolution<Scalar> solution;
  DualPoint<Scalar> point;
};

/**
 * Evaluates the dual objective at a multiplier by running a converged inner
 * loop. With `memoize` the result for an exact multiplier value is cached, so
 * several searches over the same model (tolerance sweeps, repeated runs) can
 * share inner loops; cached results are identical to recomputed ones.
 *
 * Thread-safe. The model must outlive the evaluator.
 */
template <typename Scalar>
class DualEvaluator {
 public:
  using EvaluationPtr = std::shared_ptr<const Evaluation<Scalar>>;

  DualEvaluator(const Cmdp<Scalar>& m, Scalar eps, Index max_sweeps = kDefaultMaxSweeps, bool memoize = false)
      : m_(&m), eps_(eps), max_sweeps_(max_sweeps), memoize_(memoize) {
    m.require_valid();
  }

  EvaluationPtr operator()(Scalar mu) const {
    if (memoize_) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = cache_.find(mu); it != cache_.end()) return it->second;
    }
    auto ev = std::make_shared<Evaluation<Scalar>>();
    ev->solution = value_iteration_penalized(*m_, mu, eps_, max_sweeps_);
    if (!ev->solution.converged)
      throw StagnationError("inner loop did not converge within " + std::to_string(max_sweeps_) +
                                " sweeps at mu=" + std::to_string(static_cast<double>(mu)),
                            {});
    ev->point = objective_and_gradient(*m_, ev->solution);
    std::lock_guard<std::mutex> lock(mutex_);
    ++runs_;
    if (memoize_) cache_.emplace(mu, ev);
    return ev;
  }

  const Cmdp<Scalar>& cmdp() const { return *m_; }
  Scalar eps() const { return eps_; }

  /// Inner loops actually executed (cache hits excluded).
  std::size_t inner_loop_runs() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return runs_;
  }

 private:
  const Cmdp<Scalar>* m_;
  Scalar eps_;
  Index max_sweeps_;
  bool memoize_;
  mutable std::mutex mutex_;
  mutable std::map<Scalar, EvaluationPtr> cache_;
  mutable std::size_t runs_ = 0;
};

}  // namespace cmdp
