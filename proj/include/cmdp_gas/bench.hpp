#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdp_gas/baselines.hpp"

namespace cmdp::bench {

/// Per-run figures shared by every suite.
struct RunSummary {
  std::int64_t outer_iterations = 0;
  std::int64_t cumulative_inner_iterations = 0;
  double mu_star = 0;
  double objective = 0;
  double wall_time_ms = 0;
};

RunSummary summarize(const SolveResult<double>& r);

struct BsCompareRow {
  double mu_max = 0;
  double eps_prime = 0;
  RunSummary gas, bs;
};

/// GAS and BS for every (mu_max, eps_prime) pair. Runs that share mu_max share
/// a memoized evaluator, so sweeping eps_prime costs little beyond the
/// tightest tolerance.
std::vector<BsCompareRow> bs_compare(const Cmdpd& m, const std::vector<double>& mu_maxes,
                                     const std::vector<double>& eps_primes, double eps = kDefaultEps);

struct PdoSweepSpec {
  std::vector<double> xis;
  Index n_seeds = 100;
  std::uint64_t base_seed = 0;  ///< run k starts at pdo_initial_multiplier(base_seed + k, mu_max)
  double mu_max = 1e3;
  double kappa0 = 1;
  Index max_outer = 10000;
  double eps = kDefaultEps;
};

struct PdoRun {
  double mu0 = 0;
  bool diverged = false;
  RunSummary summary;
};

struct PdoSweepRow {
  double xi = 0;
  std::vector<PdoRun> runs;  ///< in seed order

  double mean_cumulative_inner_iterations() const;
  double mean_outer_iterations() const;
  Index n_diverged() const;
};

struct PdoSweep {
  RunSummary gas;  ///< reference GAS run on [0, mu_max]
  std::vector<PdoSweepRow> rows;
};

/// PDO from `n_seeds` uniform random starts for every xi (the same starts for
/// each xi). Independent runs execute in parallel; results do not depend on
/// the worker count.
PdoSweep pdo_sweep(const Cmdpd& m, const PdoSweepSpec& spec);

std::string bs_compare_csv(const std::vector<BsCompareRow>& rows);
std::string pdo_sweep_csv(const PdoSweep& sweep);
nlohmann::ordered_json bs_compare_json(const std::vector<BsCompareRow>& rows, bool with_wall_time = false);
nlohmann::ordered_json pdo_sweep_json(const PdoSweep& sweep, bool with_wall_time = false);

}  // namespace cmdp::bench
