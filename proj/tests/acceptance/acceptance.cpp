// Acceptance suite. `acceptance --criterion N` runs one criterion (1-8),
// `acceptance` runs all. Each prints one PASS/FAIL line; the exit code is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cmdp_gas/bench.hpp"
#include "cmdp_gas/diagnostics.hpp"
#include "cmdp_gas/env/gridworld.hpp"
#include "cmdp_gas/env/uav.hpp"
#include "cmdp_gas/io.hpp"
#include "cmdp_gas/rollout.hpp"
#include "cmdp_gas/solve.hpp"
#include "support/random_cmdp.hpp"
#include "unit/toy.hpp"

namespace fs = std::filesystem;
using namespace cmdp;

namespace {

constexpr int kInstances = 50;
constexpr double kRandomGamma = 0.9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Instance k: |S| in 2..10, |A| in 2..4.
Cmdpd instance(int k) {
  return testing_support::random_cmdp(1000 + std::uint64_t(k), 2 + k % 9, 2 + (k / 9) % 3, kRandomGamma);
}

// Smallest of a fixed ladder of upper bounds with a non-negative gradient.
double feasible_mu_max(const Cmdpd& m) {
  for (double M : {50.0, 1e2, 1e3, 1e4, 1e5}) {
    const auto sol = value_iteration_penalized(m, M, kDefaultEps);
    if (objective_and_gradient(m, sol).gradient >= 0) return M;
  }
  return 1e6;
}

Outcome criterion_1() {
  Clock clock;
  double worst = 0;
  int worst_instance = -1;
  for (int k = 0; k < kInstances; ++k) {
    const auto scan = grid_scan_oracle(instance(k), 50.0, 101, kDefaultEps);
    const auto audit = convexity_audit(scan, 1e-6);
    if (audit.min_second_difference < worst) {
      worst = audit.min_second_difference;
      worst_instance = k;
    }
  }
  const double t = clock.seconds();
  Outcome o;
  o.pass = worst >= -1e-6 && t < 30;
  o.detail = fmt("50 instances x 101 points on [0,50]; min second difference %.3g (instance %d); %.1f s", worst,
                 worst_instance, t);
  return o;
}

// |O_GAS - min over grid| against max|g| * step + eps'.
bool oracle_agrees(const Cmdpd& m, double mu_max, double* gap, double* bound) {
  const auto gas = gas_solve(m, mu_max, kDefaultEpsPrime);
  const auto scan = grid_scan_oracle(m, mu_max, 20000, kDefaultEps);
  double max_g = 0;
  for (const auto& p : scan.points) max_g = std::max(max_g, std::abs(p.gradient));
  *gap = std::abs(gas.objective - scan.minimum().objective);
  *bound = max_g * scan.step() + kDefaultEpsPrime;
  return *gap <= *bound;
}

Outcome criterion_2() {
  Clock clock;
  Outcome o;
  int failures = 0;
  double worst_ratio = 0;
  for (int k = 0; k < kInstances; ++k) {
    const Cmdpd m = instance(k);
    double gap = 0, bound = 0;
    if (!oracle_agrees(m, feasible_mu_max(m), &gap, &bound)) ++failures;
    worst_ratio = std::max(worst_ratio, gap / bound);
  }
  const Cmdpd toy_m = toy::two_action();
  double gap = 0, bound = 0;
  if (!oracle_agrees(toy_m, 2.0, &gap, &bound)) ++failures;
  const auto toy_res = gas_solve(toy_m, 2.0, kDefaultEpsPrime);
  const bool toy_ok = std::abs(toy_res.mu_star - 0.5) <= 1e-9 && std::abs(toy_res.objective - 2.5) <= 1e-9;
  const double t = clock.seconds();
  o.pass = failures == 0 && toy_ok && t < 120;
  o.detail = fmt("%d/51 outside bound (worst gap/bound %.3g); toy mu*=%.12g O=%.12g; %.1f s", failures, worst_ratio,
                 toy_res.mu_star, toy_res.objective, t);
  return o;
}

Outcome criterion_3() {
  constexpr double kTightEps = 1e-13, kProbe = 1e-5;
  Clock clock;
  Outcome o;
  int checked = 0, failures = 0;
  double worst = 0;
  for (int k = 0; k < kInstances; ++k) {
    const Cmdpd m = instance(k);
    const auto gas = gas_solve(m, feasible_mu_max(m), kDefaultEpsPrime);
    const double range = 2 * gas.mu_star + 1;
    std::seed_seq seq{std::uint32_t(k), 0x9a7du};
    std::mt19937_64 rng(seq);
    int found = 0;
    for (int attempt = 0; found < 20 && attempt < 400; ++attempt) {
      const double mu = kProbe + testing_support::uniform(rng) * range;
      const auto mid = value_iteration_penalized(m, mu, kTightEps);
      const auto lo = value_iteration_penalized(m, mu - kProbe, kTightEps);
      const auto hi = value_iteration_penalized(m, mu + kProbe, kTightEps);
      if (lo.greedy_policy != mid.greedy_policy || hi.greedy_policy != mid.greedy_policy) continue;
      ++found;
      const double g = objective_and_gradient(m, mid).gradient;
      const double fd =
          (objective_and_gradient(m, hi).objective - objective_and_gradient(m, lo).objective) / (2 * kProbe);
      const double tol = std::max(1e-6, 1e-4 * std::abs(g));
      worst = std::max(worst, std::abs(fd - g) / tol);
      if (std::abs(fd - g) > tol) ++failures;
    }
    checked += found;
    if (found < 20) ++failures;
  }
  o.pass = failures == 0;
  o.detail = fmt("%d non-cusp points checked, %d failures, worst |fd-g|/tol %.3g; %.1f s", checked, failures, worst,
                 clock.seconds());
  return o;
}

Outcome criterion_4() {
  Clock clock;
  const std::vector<double> mu_maxes = {1e3, 1e5}, eps_primes = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
  Outcome o;
  std::string rows;
  auto check = [&](const char* name, const Cmdpd& m) {
    for (const auto& r : bench::bs_compare(m, mu_maxes, eps_primes)) {
      const bool ok = r.gas.outer_iterations <= r.bs.outer_iterations;
      o.pass = o.pass && ok;
      std::printf("  %s M=%g eps'=%g GAS %lld BS %lld%s\n", name, r.mu_max, r.eps_prime,
                  static_cast<long long>(r.gas.outer_iterations), static_cast<long long>(r.bs.outer_iterations),
                  ok ? "" : "  <-- GAS > BS");
    }
  };
  check("gridworld", env::build_gridworld(env::GridConfig{}));
  check("uav", env::build_uav_cmdp(env::UavConfig{}));
  const double t = clock.seconds();
  o.pass = o.pass && t < 600;
  o.detail = fmt("GAS outer iterations <= BS for all 20 (instance, M, eps') cases: %s; %.1f s", o.pass ? "yes" : "no", t);
  return o;
}

Outcome criterion_5() {
  Clock clock;
  const Cmdpd m = env::build_gridworld(env::GridConfig{});
  constexpr double kM = 1e3;
  const auto gas = gas_solve(m, kM, kDefaultEpsPrime);
  const auto bs = binary_search_solve(m, kM, kDefaultEpsPrime);
  const auto oracle = refined_scan_oracle(m, kM, Index(101), kDefaultEps, 1e-7);
  const double d_bs = std::abs(gas.objective - bs.objective);
  const double d_oracle = std::abs(gas.objective - oracle.minimum().objective);

  bench::PdoSweepSpec spec;
  spec.xis = {0.01};
  spec.n_seeds = 20;
  spec.mu_max = kM;
  const auto sweep = bench::pdo_sweep(m, spec);
  int close = 0;
  double worst = 0;
  for (const auto& run : sweep.rows[0].runs) {
    const double d = run.diverged ? INFINITY : std::abs(run.summary.objective - gas.objective);
    worst = std::max(worst, d);
    close += d <= 1e-2 ? 1 : 0;
  }
  Outcome o;
  o.pass = d_bs <= 1e-3 && d_oracle <= 1e-3 && close >= 15;
  o.detail = fmt("O_GAS=%.10g |GAS-BS|=%.3g |GAS-oracle|=%.3g; PDO xi=0.01 within 1e-2 for %d/20 seeds "
                 "(worst %.3g); %.1f s",
                 gas.objective, d_bs, d_oracle, close, worst, clock.seconds());
  return o;
}

Outcome criterion_6() {
  Clock clock;
  const auto uav = env::make_uav(env::UavConfig{});
  const Cmdpd& m = uav.cmdp;
  double worst_row = 0;
  const auto& p = m.transitions();
  for (Index r = 0; r < p.outerSize(); ++r) worst_row = std::max(worst_row, std::abs(p.row(r).sum() - 1.0));
  const bool shape = m.n_states() == 3025 && m.n_actions() == 12;

  const auto res = gas_solve(m, 1e3, kDefaultEpsPrime);
  const auto be = bellman_error(m, res.values, res.mu_star);
  Outcome o;
  o.pass = shape && worst_row <= 1e-12 && res.gradient_at_mu_star >= 0 && be.max_abs <= 1e-6;
  o.detail = fmt("|S|=%lld |A|=%lld; max row-sum error %.3g; mu*=%.8g O=%.8g g(mu*)=%.4g; max|BE|=%.3g; %.1f s",
                 static_cast<long long>(m.n_states()), static_cast<long long>(m.n_actions()), worst_row, res.mu_star,
                 res.objective, res.gradient_at_mu_star, be.max_abs, clock.seconds());

  constexpr double kPaperMu = 0.030786, kPaperObjective = 93.92830;
  const double rel_mu = std::abs(res.mu_star - kPaperMu) / kPaperMu;
  const double rel_o = std::abs(res.objective - kPaperObjective) / kPaperObjective;
  if (rel_mu > 0.1 || rel_o > 0.1)
    std::printf("  WARNING published-value regression outside 10%%: mu* off by %.1f%%, O off by %.1f%%\n",
                100 * rel_mu, 100 * rel_o);
  else
    std::printf("  published-value regression within 10%%\n");
  return o;
}

Outcome criterion_7() {
  Clock clock;
  Outcome o;
  double clean[2] = {0, 0};
  const double bounds[2] = {5, 160};
  for (int k = 0; k < 2; ++k) {
    env::GridConfig c;
    c.constraint_bound = bounds[k];
    const auto g = env::make_gridworld(c);
    const auto res = gas_solve(g.cmdp, 1e3, kDefaultEpsPrime);
    const auto st = rollout(g.cmdp, res.policy, 2000, default_horizon(c.discount), 1, g.rollout_hooks());
    const double predicted = g.cmdp.initial_dist().dot(res.cost_values);
    const double z = std::abs(st.mean_disc_cost - predicted) / st.stderr_disc_cost;
    clean[k] = st.rate("goal_no_obstacle");
    std::printf("  E=%g mu*=%.6g goal %.4f goal_no_obstacle %.4f; disc cost %.5g +- %.3g vs %.5g (%.2f SE)\n",
                bounds[k], res.mu_star, st.rate("goal"), clean[k], st.mean_disc_cost, st.stderr_disc_cost, predicted,
                z);
    o.pass = o.pass && z <= 3;
  }
  o.pass = o.pass && clean[0] > clean[1];
  o.detail = fmt("success without obstacle hit: E=5 %.4f vs E=160 %.4f; costs within 3 SE: %s; %.1f s", clean[0],
                 clean[1], o.pass ? "yes" : "no", clock.seconds());
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args, const char* threads) {
  ::setenv("CMDP_GAS_THREADS", threads, 1);
  const std::string cmd = std::string(CMDP_GAS_CLI) + " " + args + " > /dev/null";
  return std::system(cmd.c_str());
}

Outcome criterion_8() {
  Clock clock;
  const fs::path root = fs::temp_directory_path() / ("cmdp_gas_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  struct Job {
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Job> jobs = {
      {"solve --env gridworld --algo gas", {"trace.csv", "result.json"}},
      {"solve --env gridworld --algo bs", {"trace.csv", "result.json"}},
      {"solve --env gridworld --algo pdo --mu0 5 --max-outer 300", {"trace.csv", "result.json"}},
      {"bench --env gridworld --suite bs-compare", {"bs-compare.csv", "summary.json"}},
      {"bench --env gridworld --suite pdo-sweep --xi 0.1,1 --seeds 3 --seed 7 --max-outer 200",
       {"pdo-sweep.csv", "summary.json"}},
      {"rollout --env gridworld --episodes 500 --seed 3", {"rollout.json", "path.csv"}},
  };
  Outcome o;
  int compared = 0;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const fs::path a = root / ("a" + std::to_string(j)), b = root / ("b" + std::to_string(j));
    // Second run with a different worker count.
    const int ra = run_cli(jobs[j].args + " --out " + a.string(), "1");
    const int rb = run_cli(jobs[j].args + " --out " + b.string(), "3");
    if (ra != 0 || rb != 0) {
      o.pass = false;
      std::printf("  '%s' exited with %d / %d\n", jobs[j].args.c_str(), ra, rb);
      continue;
    }
    for (const auto& f : jobs[j].files) {
      const std::string x = slurp(a / f), y = slurp(b / f);
      ++compared;
      if (x.empty() || x != y) {
        o.pass = false;
        std::printf("  '%s': %s differs between runs\n", jobs[j].args.c_str(), f.c_str());
      }
    }
  }
  fs::remove_all(root);
  o.detail = fmt("%d output files compared across %zu repeated CLI invocations; %.1f s", compared, jobs.size(),
                 clock.seconds());
  return o;
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"PWLC convexity suite", criterion_1},   {"oracle equivalence", criterion_2},
    {"gradient check", criterion_3},         {"GAS vs BS iteration dominance", criterion_4},
    {"solver agreement", criterion_5},       {"UAV model shape", criterion_6},
    {"rollout consistency", criterion_7},    {"determinism", criterion_8},
};

bool run(int n) {
  const auto& [name, fn] = kCriteria[static_cast<std::size_t>(n - 1)];
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 64;
    }
  }
  if (which.empty())
    for (int n = 1; n <= int(kCriteria.size()); ++n) which.push_back(n);
  int failed = 0;
  for (int n : which) {
    if (n < 1 || n > int(kCriteria.size())) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 64;
    }
    failed += run(n) ? 0 : 1;
  }
  return failed;
}
