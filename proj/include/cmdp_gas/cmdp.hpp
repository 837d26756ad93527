#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cmdp_gas/errors.hpp"

namespace cmdp {

using Index = Eigen::Index;

/// Row sums and the initial distribution must match 1 to this tolerance.
inline constexpr double kProbabilityTolerance = 1e-9;

struct Violation {
  std::string kind;
  std::vector<Index> index;
  double magnitude = 0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;

  void add(std::string kind, std::vector<Index> index, double magnitude) {
    violations.push_back({std::move(kind), std::move(index), magnitude});
    ok = false;
  }

  std::string summary(std::size_t max_items = 5) const;
};

/**
 * Finite constrained MDP (S, A, P, beta, R, C, gamma) with a single expected
 * discounted-cost bound E.
 *
 * Transitions are one row-major sparse matrix of shape (|S||A|) x |S|; row
 * `i * |A| + a` is the next-state distribution of action a in state i. Rows of
 * inadmissible actions may be empty. The object is immutable after
 * construction; validation runs once in the constructor and never throws, so
 * malformed models can still be built and inspected.
 */
template <typename Scalar_>
class Cmdp {
 public:
  using Scalar = Scalar_;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using TransitionMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>;
  using ActionMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

  Cmdp(TransitionMatrix transitions, Matrix rewards, Matrix costs, Vector initial_dist,
       Scalar discount, Scalar constraint_bound, ActionMask action_mask = {})
      : transitions_(std::move(transitions)),
        rewards_(std::move(rewards)),
        costs_(std::move(costs)),
        initial_dist_(std::move(initial_dist)),
        discount_(discount),
        constraint_bound_(constraint_bound),
        action_mask_(std::move(action_mask)) {
    transitions_.makeCompressed();
    report_ = check();
  }

  Index n_states() const { return rewards_.rows(); }
  Index n_actions() const { return rewards_.cols(); }
  Index row(Index state, Index action) const { return state * n_actions() + action; }

  const TransitionMatrix& transitions() const { return transitions_; }
  const Matrix& rewards() const { return rewards_; }
  const Matrix& costs() const { return costs_; }
  const Vector& initial_dist() const { return initial_dist_; }
  Scalar discount() const { return discount_; }
  Scalar constraint_bound() const { return constraint_bound_; }
  const ActionMask& action_mask() const { return action_mask_; }
  bool has_action_mask() const { return action_mask_.size() != 0; }

  bool admissible(Index state, Index action) const {
    return !has_action_mask() || action_mask_(state, action);
  }

  const ValidationReport& report() const { return report_; }
  bool valid() const { return report_.ok; }

  /// Throws PreconditionError naming the first violations unless valid().
  void require_valid() const {
    if (!valid()) throw PreconditionError("invalid CMDP: " + report_.summary());
  }

 private:
  ValidationReport check() const;

  TransitionMatrix transitions_;
  Matrix rewards_;
  Matrix costs_;
  Vector initial_dist_;
  Scalar discount_;
  Scalar constraint_bound_;
  ActionMask action_mask_;
  ValidationReport report_;
};

using Cmdpd = Cmdp<double>;

/// Every invariant violation of the model. Violations are data, not failures.
template <typename Scalar>
ValidationReport validate(const Cmdp<Scalar>& m) {
  return m.report();
}

/// R(i,a) - mu C(i,a) as an Eigen expression over the model's matrices.
template <typename Scalar>
auto penalized_rewards(const Cmdp<Scalar>& m, Scalar mu) {
  if (!(mu >= Scalar(0))) throw PreconditionError("penalized_rewards: mu must be >= 0");
  return m.rewards() - mu * m.costs();
}

/// Accumulates (state, action, next, prob) entries; duplicates are summed.
template <typename Scalar>
class TransitionBuilder {
 public:
  TransitionBuilder(Index n_states, Index n_actions) : n_states_(n_states), n_actions_(n_actions) {}

  void add(Index state, Index action, Index next, Scalar prob) {
    triplets_.emplace_back(state * n_actions_ + action, next, prob);
  }
  void reserve(std::size_t n) { triplets_.reserve(n); }

  typename Cmdp<Scalar>::TransitionMatrix build() const {
    typename Cmdp<Scalar>::TransitionMatrix p(n_states_ * n_actions_, n_states_);
    p.setFromTriplets(triplets_.begin(), triplets_.end());
    p.makeCompressed();
    return p;
  }

 private:
  Index n_states_, n_actions_;
  std::vector<Eigen::Triplet<Scalar, Index>> triplets_;
};

// ---------------------------------------------------------------------------

inline std::string ValidationReport::summary(std::size_t max_items) const {
  if (ok) return "ok";
  std::string out;
  for (std::size_t k = 0; k < violations.size() && k < max_items; ++k) {
    const auto& v = violations[k];
    if (!out.empty()) out += "; ";
    out += v.kind + "(";
    for (std::size_t j = 0; j < v.index.size(); ++j) out += (j ? "," : "") + std::to_string(v.index[j]);
    out += ") magnitude=" + std::to_string(v.magnitude);
  }
  if (violations.size() > max_items)
    out += "; ... " + std::to_string(violations.size() - max_items) + " more";
  return out;
}

template <typename Scalar>
ValidationReport Cmdp<Scalar>::check() const {
  using std::abs;
  ValidationReport rep;
  const Index ns = rewards_.rows(), na = rewards_.cols();

  if (ns <= 0 || na <= 0) {
    rep.add("shape", {ns, na}, 0);
    return rep;
  }
  if (costs_.rows() != ns || costs_.cols() != na) rep.add("shape", {costs_.rows(), costs_.cols()}, 0);
  if (transitions_.rows() != ns * na || transitions_.cols() != ns)
    rep.add("shape", {transitions_.rows(), transitions_.cols()}, 0);
  if (initial_dist_.size() != ns) rep.add("shape", {initial_dist_.size()}, 0);
  if (has_action_mask() && (action_mask_.rows() != ns || action_mask_.cols() != na))
    rep.add("shape", {action_mask_.rows(), action_mask_.cols()}, 0);
  if (!rep.ok) return rep;

  if (!(discount_ > Scalar(0) && discount_ < Scalar(1)))
    rep.add("discount", {}, static_cast<double>(discount_));
  if (!std::isfinite(static_cast<double>(constraint_bound_)))
    rep.add("non-finite", {}, static_cast<double>(constraint_bound_));

  for (Index i = 0; i < ns; ++i) {
    bool any = false;
    for (Index a = 0; a < na; ++a) {
      if (!admissible(i, a)) continue;
      any = true;
      if (!std::isfinite(static_cast<double>(rewards_(i, a))) ||
          !std::isfinite(static_cast<double>(costs_(i, a))))
        rep.add("non-finite", {i, a}, 0);
      Scalar sum(0);
      for (typename TransitionMatrix::InnerIterator it(transitions_, row(i, a)); it; ++it) {
        if (!(it.value() >= Scalar(0))) rep.add("negative-probability", {i, a, it.col()}, static_cast<double>(-it.value()));
        sum += it.value();
      }
      const double defect = static_cast<double>(abs(Scalar(1) - sum));
      if (!(defect <= kProbabilityTolerance)) rep.add("row-sum", {i, a}, defect);
    }
    if (!any) rep.add("no-admissible-action", {i}, 0);
  }

  Scalar total(0);
  for (Index i = 0; i < ns; ++i) {
    if (!(initial_dist_(i) >= Scalar(0))) rep.add("negative-initial", {i}, static_cast<double>(-initial_dist_(i)));
    total += initial_dist_(i);
  }
  const double defect = static_cast<double>(abs(Scalar(1) - total));
  if (!(defect <= kProbabilityTolerance)) rep.add("initial-sum", {}, defect);
  return rep;
}

}  // namespace cmdp
