#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "cmdp_gas/gas.hpp"
#include "cmdp_gas/parallel.hpp"

namespace cmdp {

/**
 * Bisection on the sign of the dual gradient over [0, mu_max].
 *
 * Same bootstrap, degenerate cases and stopping rule as gas_solve; only the
 * query point differs (window midpoint instead of tangent intersection).
 */
template <typename Scalar>
SolveResult<Scalar> binary_search_solve(const DualEvaluator<Scalar>& evaluate, Scalar mu_max, Scalar eps_prime,
                                        SearchOptions options = {}) {
  using std::abs;
  if (!(mu_max > Scalar(0))) throw PreconditionError("binary_search_solve: mu_max must be > 0");
  if (!(eps_prime > Scalar(0))) throw PreconditionError("binary_search_solve: eps_prime must be > 0");

  detail::Stopwatch clock;
  SolveTrace trace;
  trace.algorithm = "bs";

  auto at_lo = evaluate(Scalar(0));
  detail::append(trace, 0, *at_lo, clock);
  trace.final_mu_evaluated = 0;
  if (at_lo->point.gradient >= Scalar(0))
    return detail::finish<Scalar>("bs", *at_lo, at_lo->point.objective, std::move(trace), clock);

  auto at_hi = evaluate(mu_max);
  detail::append(trace, 0, *at_hi, clock);
  trace.final_mu_evaluated = static_cast<double>(mu_max);
  if (at_hi->point.gradient < Scalar(0))
    throw InfeasibleError("gradient at mu_max=" + std::to_string(static_cast<double>(mu_max)) +
                              " is negative; the problem is infeasible or mu_max is too small",
                          std::move(trace));

  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Index iter = 1; iter <= options.max_outer; ++iter) {
    const Scalar lo = at_lo->point.mu, hi = at_hi->point.mu;
    const Scalar mid = (lo + hi) / Scalar(2);
    if (!(lo < mid && mid < hi))
      throw StagnationError("bisection window collapsed to machine precision", std::move(trace));
    auto at_mid = evaluate(mid);

    TraceRecord& rec = detail::append(trace, iter, *at_mid, clock);
    rec.bracket_lo = static_cast<double>(lo);
    rec.bracket_hi = static_cast<double>(hi);
    trace.final_mu_evaluated = static_cast<double>(mid);

    const Scalar o = at_mid->point.objective;
    if (abs(best - o) <= eps_prime) {
      best = std::min(best, o);
      return detail::finish<Scalar>("bs", *at_hi, best, std::move(trace), clock);
    }
    if (best > o) best = o;
    if (at_mid->point.gradient < Scalar(0))
      at_lo = at_mid;
    else
      at_hi = at_mid;
  }
  throw StagnationError("outer iteration limit reached", std::move(trace));
}

template <typename Scalar>
SolveResult<Scalar> binary_search_solve(const Cmdp<Scalar>& m, Scalar mu_max = Scalar(kDefaultMuMax),
                                        Scalar eps = Scalar(kDefaultEps),
                                        Scalar eps_prime = Scalar(kDefaultEpsPrime), SearchOptions options = {}) {
  DualEvaluator<Scalar> evaluate(m, eps);
  return binary_search_solve(evaluate, mu_max, eps_prime, options);
}

/// Lagrangian primal-dual descent settings.
struct PdoParams {
  double mu0 = 0;      ///< initial multiplier
  double kappa0 = 1;   ///< initial step size
  double xi = 0.01;    ///< step decay per gradient sign flip
  std::uint64_t seed = 0;  ///< drives randomized mu0 in sweeps; unused by a single run
  Index max_outer = 10000;

  void check() const {
    if (!(mu0 >= 0)) throw PreconditionError("PdoParams: mu0 must be >= 0");
    if (!(kappa0 > 0)) throw PreconditionError("PdoParams: kappa0 must be > 0");
    if (!(xi > 0)) throw PreconditionError("PdoParams: xi must be > 0");
    if (max_outer <= 0) throw PreconditionError("PdoParams: max_outer must be > 0");
  }
};

/// Starting multiplier for run `seed` of a randomized sweep: uniform on
/// [0, mu_max] from mt19937_64 seeded with the two 32-bit halves of `seed`.
inline double pdo_initial_multiplier(std::uint64_t seed, double mu_max) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  return static_cast<double>(rng() >> 11) * 0x1.0p-53 * mu_max;
}

inline constexpr double kPdoMoveTolerance = 1e-12;
inline constexpr double kPdoDivergence = 1e12;

/**
 * Projected subgradient descent on the multiplier with a full inner loop per
 * step: mu <- max(0, mu - kappa g). The step is kappa0 exp(-xi T), where T
 * counts the sign flips of the gradient seen so far (negative vs
 * non-negative); a flip observed at step k shrinks the step used from k + 1
 * on. Stops once the multiplier moves by at most 1e-12 or after max_outer
 * evaluations. Values are those of the last evaluation.
 */
template <typename Scalar>
SolveResult<Scalar> pdo_solve(const DualEvaluator<Scalar>& evaluate, const PdoParams& params) {
  using std::abs;
  params.check();
  detail::Stopwatch clock;
  SolveTrace trace;
  trace.algorithm = "pdo";

  Scalar mu = Scalar(params.mu0);
  Scalar kappa = Scalar(params.kappa0);
  std::int64_t flips = 0;
  bool have_prev = false, prev_negative = false;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  typename DualEvaluator<Scalar>::EvaluationPtr last;

  for (Index iter = 1; iter <= params.max_outer; ++iter) {
    last = evaluate(mu);
    detail::append(trace, iter, *last, clock);
    trace.final_mu_evaluated = static_cast<double>(mu);
    const Scalar g = last->point.gradient;
    best = std::min(best, last->point.objective);

    const bool negative = g < Scalar(0);
    const Scalar step = kappa;
    if (have_prev && negative != prev_negative) {
      ++flips;
      kappa = Scalar(params.kappa0) * std::exp(-Scalar(params.xi) * Scalar(flips));
    }
    have_prev = true;
    prev_negative = negative;

    const Scalar next = std::max(Scalar(0), mu - step * g);
    if (!(next <= Scalar(kPdoDivergence)))
      throw DivergenceError("multiplier diverged to " + std::to_string(static_cast<double>(next)),
                            std::move(trace));
    const bool settled = abs(next - mu) <= Scalar(kPdoMoveTolerance);
    if (settled) break;
    mu = next;
  }
  auto res = detail::finish<Scalar>("pdo", *last, best, std::move(trace), clock);
  res.objective = last->point.objective;
  return res;
}

template <typename Scalar>
SolveResult<Scalar> pdo_solve(const Cmdp<Scalar>& m, const PdoParams& params, Scalar eps = Scalar(kDefaultEps)) {
  DualEvaluator<Scalar> evaluate(m, eps);
  return pdo_solve(evaluate, params);
}

template <typename Scalar>
struct ScanResult {
  std::vector<DualPoint<Scalar>> points;
  std::vector<Policy> policies;  ///< greedy policy per point; empty unless requested
  Index argmin = 0;

  const DualPoint<Scalar>& minimum() const { return points[static_cast<std::size_t>(argmin)]; }
  Scalar step() const { return points.size() > 1 ? points[1].mu - points[0].mu : Scalar(0); }
};

template <typename Scalar>
struct ConvexityAudit {
  Scalar min_second_difference = 0;  ///< over interior points; 0 with fewer than 3 points
  Index worst = 0;                   ///< index of the interior point attaining it
  bool convex = true;
};

/// Second differences O(k-1) - 2 O(k) + O(k+1) of a uniform scan, checked
/// against -tol.
template <typename Scalar>
ConvexityAudit<Scalar> convexity_audit(const ScanResult<Scalar>& scan, Scalar tol = Scalar(1e-6)) {
  ConvexityAudit<Scalar> audit;
  const auto& p = scan.points;
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    const Scalar d = p[k - 1].objective - Scalar(2) * p[k].objective + p[k + 1].objective;
    if (k == 1 || d < audit.min_second_difference) {
      audit.min_second_difference = d;
      audit.worst = Index(k);
    }
  }
  audit.convex = audit.min_second_difference >= -tol;
  return audit;
}

/**
 * Evaluates O(mu) with a converged inner loop on the uniform grid of
 * `n_points` values over [mu_min, mu_max] and returns every point plus the
 * grid argmin (first on ties). Points are computed in parallel.
 */
template <typename Scalar>
ScanResult<Scalar> grid_scan_oracle(const Cmdp<Scalar>& m, Scalar mu_max, Index n_points, Scalar eps,
                                    Scalar mu_min = Scalar(0), bool keep_policies = false) {
  if (n_points < 2) throw PreconditionError("grid_scan_oracle: n_points must be >= 2");
  if (!(mu_min >= Scalar(0) && mu_min < mu_max)) throw PreconditionError("grid_scan_oracle: need 0 <= mu_min < mu_max");
  m.require_valid();

  ScanResult<Scalar> out;
  out.points.resize(static_cast<std::size_t>(n_points));
  if (keep_policies) out.policies.resize(static_cast<std::size_t>(n_points));
  const Scalar step = (mu_max - mu_min) / Scalar(n_points - 1);
  parallel_for(n_points, [&](Index k) {
    const Scalar mu = k + 1 == n_points ? mu_max : mu_min + step * Scalar(k);
    auto sol = value_iteration_penalized(m, mu, eps);
    if (!sol.converged)
      throw StagnationError("inner loop did not converge at mu=" + std::to_string(static_cast<double>(mu)), {});
    out.points[static_cast<std::size_t>(k)] = objective_and_gradient(m, sol);
    if (keep_policies) out.policies[static_cast<std::size_t>(k)] = std::move(sol.greedy_policy);
  });
  for (Index k = 1; k < n_points; ++k)
    if (out.points[static_cast<std::size_t>(k)].objective < out.minimum().objective) out.argmin = k;
  return out;
}

/**
 * Zooming grid oracle for convex duals: scans [mu_min, mu_max] on
 * `points_per_level` points, then rescans the two grid cells around the
 * argmin, until the grid step is at most `resolution`. Returns the finest
 * level's scan; its argmin is within one final step of the true minimizer.
 */
template <typename Scalar>
ScanResult<Scalar> refined_scan_oracle(const Cmdp<Scalar>& m, Scalar mu_max, Index points_per_level, Scalar eps,
                                       Scalar resolution, Scalar mu_min = Scalar(0)) {
  if (!(resolution > Scalar(0))) throw PreconditionError("refined_scan_oracle: resolution must be > 0");
  ScanResult<Scalar> scan = grid_scan_oracle(m, mu_max, points_per_level, eps, mu_min);
  while (scan.step() > resolution) {
    const Scalar step = scan.step();
    const Scalar centre = scan.minimum().mu;
    const Scalar lo = std::max(mu_min, centre - step);
    const Scalar hi = std::min(mu_max, centre + step);
    scan = grid_scan_oracle(m, hi, points_per_level, eps, lo);
  }
  return scan;
}

}  // namespace cmdp
