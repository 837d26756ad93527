#include "cmdp_gas/bench.hpp"

#include <memory>
#include <sstream>

#include "cmdp_gas/io.hpp"
#include "cmdp_gas/parallel.hpp"

namespace cmdp::bench {

using io::format_double;
using json = nlohmann::ordered_json;

namespace {

json summary_json(const RunSummary& s, bool with_wall_time) {
  return json{{"outer_iterations", s.outer_iterations},
              {"cumulative_inner_iterations", s.cumulative_inner_iterations},
              {"mu_star", s.mu_star},
              {"objective", s.objective},
              {"wall_time_ms", with_wall_time ? s.wall_time_ms : 0.0}};
}

}  // namespace

RunSummary summarize(const SolveResult<double>& r) {
  return RunSummary{r.outer_iterations(), r.cumulative_inner_iterations(), r.mu_star, r.objective, r.wall_time_ms};
}

std::vector<BsCompareRow> bs_compare(const Cmdpd& m, const std::vector<double>& mu_maxes,
                                     const std::vector<double>& eps_primes, double eps) {
  std::vector<std::unique_ptr<DualEvaluator<double>>> evaluators;
  for (std::size_t k = 0; k < mu_maxes.size(); ++k)
    evaluators.push_back(std::make_unique<DualEvaluator<double>>(m, eps, kDefaultMaxSweeps, true));

  std::vector<BsCompareRow> rows(mu_maxes.size() * eps_primes.size());
  parallel_for(Index(mu_maxes.size()), [&](Index i) {
    const auto& evaluate = *evaluators[static_cast<std::size_t>(i)];
    const double mu_max = mu_maxes[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < eps_primes.size(); ++j) {
      auto& row = rows[static_cast<std::size_t>(i) * eps_primes.size() + j];
      row.mu_max = mu_max;
      row.eps_prime = eps_primes[j];
      row.gas = summarize(gas_solve(evaluate, mu_max, eps_primes[j]));
      row.bs = summarize(binary_search_solve(evaluate, mu_max, eps_primes[j]));
    }
  });
  return rows;
}

double PdoSweepRow::mean_cumulative_inner_iterations() const {
  double total = 0;
  for (const auto& r : runs) total += double(r.summary.cumulative_inner_iterations);
  return runs.empty() ? 0.0 : total / double(runs.size());
}

double PdoSweepRow::mean_outer_iterations() const {
  double total = 0;
  for (const auto& r : runs) total += double(r.summary.outer_iterations);
  return runs.empty() ? 0.0 : total / double(runs.size());
}

Index PdoSweepRow::n_diverged() const {
  Index n = 0;
  for (const auto& r : runs) n += r.diverged ? 1 : 0;
  return n;
}

PdoSweep pdo_sweep(const Cmdpd& m, const PdoSweepSpec& spec) {
  if (spec.n_seeds <= 0) throw PreconditionError("pdo_sweep: n_seeds must be positive");
  DualEvaluator<double> evaluate(m, spec.eps);
  PdoSweep out;
  out.gas = summarize(gas_solve(evaluate, spec.mu_max, kDefaultEpsPrime));

  const Index n_xi = Index(spec.xis.size()), n = spec.n_seeds;
  out.rows.resize(spec.xis.size());
  for (Index x = 0; x < n_xi; ++x) {
    out.rows[static_cast<std::size_t>(x)].xi = spec.xis[static_cast<std::size_t>(x)];
    out.rows[static_cast<std::size_t>(x)].runs.resize(static_cast<std::size_t>(n));
  }
  parallel_for(n_xi * n, [&](Index job) {
    auto& row = out.rows[static_cast<std::size_t>(job / n)];
    auto& run = row.runs[static_cast<std::size_t>(job % n)];
    PdoParams p;
    p.seed = spec.base_seed + std::uint64_t(job % n);
    p.mu0 = pdo_initial_multiplier(p.seed, spec.mu_max);
    p.kappa0 = spec.kappa0;
    p.xi = row.xi;
    p.max_outer = spec.max_outer;
    run.mu0 = p.mu0;
    try {
      run.summary = summarize(pdo_solve(evaluate, p));
    } catch (const DivergenceError& e) {
      run.diverged = true;
      run.summary.outer_iterations = e.trace().outer_iterations();
      run.summary.cumulative_inner_iterations = e.trace().cumulative_inner_iterations();
    }
  });
  return out;
}

std::string bs_compare_csv(const std::vector<BsCompareRow>& rows) {
  std::ostringstream os;
  os << "mu_max,eps_prime,gas_outer_iterations,bs_outer_iterations,gas_cumulative_inner_iterations,"
        "bs_cumulative_inner_iterations,gas_mu_star,bs_mu_star,gas_objective,bs_objective\n";
  for (const auto& r : rows)
    os << format_double(r.mu_max) << ',' << format_double(r.eps_prime) << ',' << r.gas.outer_iterations << ','
       << r.bs.outer_iterations << ',' << r.gas.cumulative_inner_iterations << ','
       << r.bs.cumulative_inner_iterations << ',' << format_double(r.gas.mu_star) << ','
       << format_double(r.bs.mu_star) << ',' << format_double(r.gas.objective) << ','
       << format_double(r.bs.objective) << '\n';
  return os.str();
}

std::string pdo_sweep_csv(const PdoSweep& sweep) {
  std::ostringstream os;
  os << "xi,n_seeds,mean_cumulative_inner_iterations,mean_outer_iterations,n_diverged,"
        "gas_cumulative_inner_iterations\n";
  for (const auto& r : sweep.rows)
    os << format_double(r.xi) << ',' << r.runs.size() << ',' << format_double(r.mean_cumulative_inner_iterations())
       << ',' << format_double(r.mean_outer_iterations()) << ',' << r.n_diverged() << ','
       << sweep.gas.cumulative_inner_iterations << '\n';
  return os.str();
}

json bs_compare_json(const std::vector<BsCompareRow>& rows, bool with_wall_time) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back(json{{"mu_max", r.mu_max},
                       {"eps_prime", r.eps_prime},
                       {"gas", summary_json(r.gas, with_wall_time)},
                       {"bs", summary_json(r.bs, with_wall_time)}});
  return json{{"suite", "bs-compare"}, {"runs", std::move(out)}};
}

json pdo_sweep_json(const PdoSweep& sweep, bool with_wall_time) {
  json rows = json::array();
  for (const auto& r : sweep.rows) {
    json runs = json::array();
    for (const auto& run : r.runs) {
      json j = summary_json(run.summary, with_wall_time);
      j["mu0"] = run.mu0;
      j["diverged"] = run.diverged;
      runs.push_back(std::move(j));
    }
    rows.push_back(json{{"xi", r.xi},
                        {"n_seeds", r.runs.size()},
                        {"mean_cumulative_inner_iterations", r.mean_cumulative_inner_iterations()},
                        {"runs", std::move(runs)}});
  }
  return json{{"suite", "pdo-sweep"}, {"gas", summary_json(sweep.gas, with_wall_time)}, {"pdo", std::move(rows)}};
}

}  // namespace cmdp::bench
