#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>

#include "cmdp_gas/errors.hpp"
#include "cmdp_gas/evaluator.hpp"
#include "cmdp_gas/trace.hpp"

namespace cmdp {

inline constexpr double kDefaultMuMax = 1e5;
inline constexpr double kDefaultEps = 1e-10;
inline constexpr double kDefaultEpsPrime = 1e-10;

/// Retained multipliers {mu-, mu+} with gradient(lo) < 0 <= gradient(hi).
template <typename Scalar>
struct Bracket {
  DualPoint<Scalar> lo;
  DualPoint<Scalar> hi;

  Scalar width() const { return hi.mu - lo.mu; }
  bool sound() const { return lo.mu < hi.mu && lo.gradient < Scalar(0) && Scalar(0) <= hi.gradient; }
};

template <typename Scalar>
struct SolveResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::string algorithm;
  Scalar mu_star = 0;
  Vector values;       ///< V(., mu*)
  Vector cost_values;  ///< discounted cost of `policy` per state
  Policy policy;       ///< greedy policy at mu*
  Scalar objective = 0;            ///< smallest O evaluated by the search
  Scalar objective_at_mu_star = 0;
  Scalar gradient_at_mu_star = 0;
  SolveTrace trace;
  double wall_time_ms = 0;

  std::int64_t outer_iterations() const { return trace.outer_iterations(); }
  std::int64_t cumulative_inner_iterations() const { return trace.cumulative_inner_iterations(); }
};

struct SearchOptions {
  Index max_outer = 10000;
};

namespace detail {

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <typename Scalar>
TraceRecord& append(SolveTrace& trace, std::int64_t outer_iter, const Evaluation<Scalar>& ev,
                    const Stopwatch& clock) {
  TraceRecord r;
  r.outer_iter = outer_iter;
  r.mu = static_cast<double>(ev.point.mu);
  r.objective = static_cast<double>(ev.point.objective);
  r.gradient = static_cast<double>(ev.point.gradient);
  r.inner_iterations = ev.solution.inner_iterations;
  r.cumulative_inner_iterations = trace.cumulative_inner_iterations() + ev.solution.inner_iterations;
  r.wall_time_ms = clock.elapsed_ms();
  trace.records.push_back(r);
  return trace.records.back();
}

template <typename Scalar>
SolveResult<Scalar> finish(std::string algorithm, const Evaluation<Scalar>& at_star, Scalar best_objective,
                           SolveTrace trace, const Stopwatch& clock) {
  SolveResult<Scalar> res;
  res.algorithm = std::move(algorithm);
  res.mu_star = at_star.point.mu;
  res.values = at_star.solution.values;
  res.cost_values = at_star.solution.cost_values;
  res.policy = at_star.solution.greedy_policy;
  res.objective = best_objective;
  res.objective_at_mu_star = at_star.point.objective;
  res.gradient_at_mu_star = at_star.point.gradient;
  trace.values_from_final_evaluation = trace.final_mu_evaluated == static_cast<double>(res.mu_star);
  res.trace = std::move(trace);
  res.wall_time_ms = clock.elapsed_ms();
  return res;
}

template <typename Scalar>
std::string describe(const DualPoint<Scalar>& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(mu=" << static_cast<double>(p.mu) << ", O=" << static_cast<double>(p.objective)
     << ", g=" << static_cast<double>(p.gradient) << ")";
  return os.str();
}

}  // namespace detail

/**
 * Multiplier where the tangent lines at `lo` and `hi` cross.
 *
 * The lines are lo.objective + lo.gradient (mu - lo.mu) and the same for hi.
 * For a convex dual the crossing lies inside [lo.mu, hi.mu]. A crossing
 * outside by more than max(1e-12 max(1, |hi.mu|), objective_noise /
 * |lo.gradient - hi.gradient|) raises ConvexityError; smaller excursions are
 * clamped. `objective_noise` is the absolute accuracy of the two objectives.
 */
template <typename Scalar>
Scalar intersect_tangents(const DualPoint<Scalar>& lo, const DualPoint<Scalar>& hi,
                          std::type_identity_t<Scalar> objective_noise = Scalar(0)) {
  using std::abs;
  using std::max;
  if (!(lo.mu < hi.mu)) throw PreconditionError("intersect_tangents: requires lo.mu < hi.mu");
  if (lo.gradient == hi.gradient) throw PreconditionError("intersect_tangents: parallel tangent lines");

  const Scalar mu = (hi.objective - lo.objective + lo.gradient * lo.mu - hi.gradient * hi.mu) /
                    (lo.gradient - hi.gradient);
  const Scalar slack =
      max(Scalar(1e-12) * max(Scalar(1), abs(hi.mu)), objective_noise / abs(lo.gradient - hi.gradient));
  if (!(mu >= lo.mu - slack && mu <= hi.mu + slack)) {
    auto as_point = [](const DualPoint<Scalar>& p) {
      return ConvexityError::Point{static_cast<double>(p.mu), static_cast<double>(p.objective),
                                   static_cast<double>(p.gradient)};
    };
    throw ConvexityError("tangent intersection " + std::to_string(static_cast<double>(mu)) +
                             " outside bracket " + detail::describe(lo) + " .. " + detail::describe(hi),
                         as_point(lo), as_point(hi));
  }
  return std::clamp(mu, lo.mu, hi.mu);
}

/// Relative accuracy assumed for inner-loop objectives when auditing convexity.
inline constexpr double kObjectiveNoise = 1e-9;
/// Right-side probes after a cusp is located from the left: offsets
/// 1e-12 max(1, mu) times 10^k for k < kMaxRightProbes.
inline constexpr int kMaxRightProbes = 7;

/**
 * Gradient-Aware Search over the Lagrange multiplier.
 *
 * Bootstraps the bracket with inner loops at 0 and `mu_max`, then repeatedly
 * evaluates the dual at the tangent intersection mu_x of the bracket ends. A
 * point with gradient in [0, g(hi)] replaces hi, one with gradient in
 * [g(lo), 0) replaces lo. The search stops when O(mu_x) is within
 * `eps_prime` of the best objective seen so far, or within `eps_prime` of
 * the tangent lower bound at mu_x (mu_x is then a certified minimizer). mu*
 * is the final upper end; values and policy are those computed at mu*.
 *
 * The intersection is only as accurate as the bracket objectives, so a cusp
 * can be hit from the left and report the left slope. When the search stops
 * on such a point, and the point lies on the tangent at hi to within
 * objective noise, it probes a few multipliers just to its right until one
 * reports a non-negative gradient; each probe is one more outer iteration.
 *
 * Degenerate inputs: a non-negative gradient at 0 returns mu* = 0 at once; a
 * negative gradient at mu_max raises InfeasibleError. An iteration that
 * leaves the bracket unchanged repeats the same intersection, and if that
 * repeat still misses the tolerance StagnationError is raised.
 */
template <typename Scalar>
SolveResult<Scalar> gas_solve(const DualEvaluator<Scalar>& evaluate, Scalar mu_max, Scalar eps_prime,
                              SearchOptions options = {}) {
  using std::abs;
  using std::max;
  if (!(mu_max > Scalar(0))) throw PreconditionError("gas_solve: mu_max must be > 0");
  if (!(eps_prime > Scalar(0))) throw PreconditionError("gas_solve: eps_prime must be > 0");

  detail::Stopwatch clock;
  SolveTrace trace;
  trace.algorithm = "gas";

  auto at_lo = evaluate(Scalar(0));
  detail::append(trace, 0, *at_lo, clock);
  trace.final_mu_evaluated = 0;
  if (at_lo->point.gradient >= Scalar(0))
    return detail::finish<Scalar>("gas", *at_lo, at_lo->point.objective, std::move(trace), clock);

  auto at_hi = evaluate(mu_max);
  detail::append(trace, 0, *at_hi, clock);
  trace.final_mu_evaluated = static_cast<double>(mu_max);
  if (at_hi->point.gradient < Scalar(0))
    throw InfeasibleError("gradient at mu_max=" + std::to_string(static_cast<double>(mu_max)) +
                              " is negative; the problem is infeasible or mu_max is too small",
                          std::move(trace));

  Scalar best = std::numeric_limits<Scalar>::infinity();
  bool bracket_changed = true;
  Index iter = 1;
  for (; iter <= options.max_outer; ++iter) {
    const DualPoint<Scalar> lo = at_lo->point, hi = at_hi->point;
    const Scalar noise = Scalar(kObjectiveNoise) * max({Scalar(1), abs(lo.objective), abs(hi.objective)});
    const Scalar mu_x = intersect_tangents(lo, hi, noise);
    auto at_x = evaluate(mu_x);
    const DualPoint<Scalar>& x = at_x->point;
    const Scalar lower = lo.objective + lo.gradient * (mu_x - lo.mu);

    TraceRecord& rec = detail::append(trace, iter, *at_x, clock);
    rec.bracket_lo = static_cast<double>(lo.mu);
    rec.bracket_hi = static_cast<double>(hi.mu);
    rec.lower_bound = static_cast<double>(lower);
    trace.final_mu_evaluated = static_cast<double>(mu_x);

    const bool settled = abs(best - x.objective) <= eps_prime || x.objective - lower <= eps_prime;
    if (!settled && !bracket_changed)
      throw StagnationError("bracket unchanged and |O_min - O(mu_x)| > eps_prime at mu_x=" +
                                std::to_string(static_cast<double>(mu_x)),
                            std::move(trace));
    best = std::min(best, x.objective);

    // Gradients of points on one linear piece agree only to rounding.
    const Scalar slack = Scalar(1e-12) * max({Scalar(1), abs(lo.gradient), abs(hi.gradient)});
    bracket_changed = false;
    if (Scalar(0) <= x.gradient && x.gradient <= hi.gradient + slack && mu_x != hi.mu) {
      at_hi = at_x;
      bracket_changed = true;
    } else if (lo.gradient - slack <= x.gradient && x.gradient < Scalar(0) && mu_x != lo.mu) {
      at_lo = at_x;
      bracket_changed = true;
    }
    if (settled) break;
  }
  if (iter > options.max_outer) throw StagnationError("outer iteration limit reached", std::move(trace));

  // Stopped on the left face of a cusp: step right until the gradient turns.
  const auto on_hi_line = [&](const DualPoint<Scalar>& p) {
    const DualPoint<Scalar>& h = at_hi->point;
    const Scalar noise = Scalar(kObjectiveNoise) * max({Scalar(1), abs(p.objective), abs(h.objective)});
    return abs(h.objective + h.gradient * (p.mu - h.mu) - p.objective) <= noise;
  };
  if (at_lo->point.mu == static_cast<Scalar>(trace.final_mu_evaluated) && on_hi_line(at_lo->point)) {
    const Scalar base = at_lo->point.mu;
    Scalar offset = Scalar(1e-12) * max(Scalar(1), base);
    for (int k = 0; k < kMaxRightProbes && base + offset < at_hi->point.mu; ++k, offset *= Scalar(10)) {
      auto at_p = evaluate(base + offset);
      TraceRecord& rec = detail::append(trace, ++iter, *at_p, clock);
      rec.bracket_lo = static_cast<double>(base);
      rec.bracket_hi = static_cast<double>(at_hi->point.mu);
      rec.right_probe = true;
      trace.final_mu_evaluated = static_cast<double>(base + offset);
      best = std::min(best, at_p->point.objective);
      if (at_p->point.gradient >= Scalar(0)) {
        at_hi = at_p;
        break;
      }
    }
  }
  return detail::finish<Scalar>("gas", *at_hi, best, std::move(trace), clock);
}

template <typename Scalar>
SolveResult<Scalar> gas_solve(const Cmdp<Scalar>& m, Scalar mu_max = Scalar(kDefaultMuMax),
                              Scalar eps = Scalar(kDefaultEps), Scalar eps_prime = Scalar(kDefaultEpsPrime),
                              SearchOptions options = {}) {
  if (!(eps > Scalar(0))) throw PreconditionError("gas_solve: eps must be > 0");
  DualEvaluator<Scalar> evaluate(m, eps);
  return gas_solve(evaluate, mu_max, eps_prime, options);
}

}  // namespace cmdp
