// cmdp-gas: solve, scan, benchmark and roll out finite CMDPs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmdp_gas/bench.hpp"
#include "cmdp_gas/diagnostics.hpp"
#include "cmdp_gas/env/gridworld.hpp"
#include "cmdp_gas/env/uav.hpp"
#include "cmdp_gas/io.hpp"
#include "cmdp_gas/rollout.hpp"
#include "cmdp_gas/solve.hpp"

namespace fs = std::filesystem;
using namespace cmdp;
using io::json;

namespace {

enum Exit : int {
  kOk = 0,
  kOther = 1,
  kInfeasible = 2,
  kStagnation = 3,
  kConfig = 4,
  kDivergence = 5,
  kConvexity = 6,
  kPrecondition = 7,
};

int exit_code(const std::string& kind) {
  if (kind == "infeasible-or-M-too-small") return kInfeasible;
  if (kind == "stagnation") return kStagnation;
  if (kind == "io-config") return kConfig;
  if (kind == "divergence") return kDivergence;
  if (kind == "convexity-violation") return kConvexity;
  return kOther;
}

struct ProblemSource {
  std::string problem;
  std::string env;
  std::string env_config;

  void add_to(CLI::App* app) {
    auto* p = app->add_option("--problem", problem, "problem file");
    auto* e = app->add_option("--env", env, "built-in environment")->check(CLI::IsMember({"gridworld", "uav"}));
    app->add_option("--env-config", env_config, "environment config file (defaults when absent)")->needs(e);
    p->excludes(e);
  }
};

struct Loaded {
  Cmdpd cmdp;
  std::optional<env::GridWorld> grid;
  std::optional<env::UavModel> uav;

  RolloutHooks hooks() const {
    if (grid) return grid->rollout_hooks();
    if (uav) return uav->rollout_hooks();
    return {};
  }
};

Loaded load(const ProblemSource& src) {
  if (src.problem.empty() == src.env.empty()) throw ConfigError("give exactly one of --problem or --env");
  if (!src.problem.empty()) return Loaded{io::load_problem(src.problem), {}, {}};
  if (src.env == "gridworld") {
    env::GridConfig c = src.env_config.empty() ? env::GridConfig{} : io::grid_config_from_json(io::read_json(src.env_config));
    auto g = env::make_gridworld(c);
    Cmdpd m = g.cmdp;
    return Loaded{std::move(m), std::move(g), {}};
  }
  env::UavConfig c = src.env_config.empty() ? env::UavConfig{} : io::uav_config_from_json(io::read_json(src.env_config));
  auto u = env::make_uav(c);
  Cmdpd m = u.cmdp;
  return Loaded{std::move(m), {}, std::move(u)};
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir);
  return fs::path(dir);
}

void write_json(const fs::path& path, const json& doc) { io::write_atomic(path, doc.dump(2) + "\n"); }

struct SolveOptions {
  std::string algo = "gas";
  double mu_max = kDefaultMuMax;
  double eps = kDefaultEps;
  double eps_prime = kDefaultEpsPrime;
  Index max_sweeps = kDefaultMaxSweeps;
  Index max_outer = 10000;
  double mu0 = 0;
  double kappa0 = 1;
  double xi = 0.01;

  void add_to(CLI::App* app) {
    app->add_option("--algo", algo, "gas | bs | pdo")->check(CLI::IsMember({"gas", "bs", "pdo"}))->capture_default_str();
    app->add_option("--mu-max", mu_max, "upper multiplier bound M")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--eps", eps, "inner-loop tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--eps-prime", eps_prime, "outer-loop tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--max-sweeps", max_sweeps, "inner-loop sweep cap")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--max-outer", max_outer, "outer iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--mu0", mu0, "pdo: initial multiplier")->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--kappa0", kappa0, "pdo: initial step")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--xi", xi, "pdo: step decay per gradient sign flip")->check(CLI::PositiveNumber)->capture_default_str();
  }

  SolveParams params() const {
    SolveParams p;
    p.mu_max = mu_max;
    p.eps = eps;
    p.eps_prime = eps_prime;
    p.max_sweeps = max_sweeps;
    p.search.max_outer = max_outer;
    p.pdo.mu0 = mu0;
    p.pdo.kappa0 = kappa0;
    p.pdo.xi = xi;
    p.pdo.max_outer = max_outer;
    return p;
  }
};

int run_solve(const ProblemSource& src, const SolveOptions& opt, const std::string& out_dir, bool wall_time) {
  const Loaded problem = load(src);
  const fs::path out = prepare_out(out_dir);
  try {
    const auto res = solve_dispatch(problem.cmdp, opt.algo, opt.params());
    io::write_atomic(out / "trace.csv", io::trace_csv(res.trace, wall_time));
    json doc = io::result_to_json(res, wall_time);
    const auto be = bellman_error(problem.cmdp, res.values, res.mu_star);
    doc["bellman_error"] = json{{"min_abs", be.min_abs}, {"mean_abs", be.mean_abs}, {"max_abs", be.max_abs}};
    write_json(out / "result.json", doc);
    std::printf("%s: mu*=%s O=%s outer=%lld inner=%lld\n", res.algorithm.c_str(), io::format_double(res.mu_star).c_str(),
                io::format_double(res.objective).c_str(), static_cast<long long>(res.outer_iterations()),
                static_cast<long long>(res.cumulative_inner_iterations()));
  } catch (const SolverError& e) {
    // Keep whatever the search saw before it gave up.
    if (!e.trace().records.empty()) io::write_atomic(out / "trace.csv", io::trace_csv(e.trace(), wall_time));
    throw;
  }
  return kOk;
}

int run_scan(const ProblemSource& src, double mu_min, double mu_max, Index points, double eps, double tol,
             const std::string& out_dir) {
  const Loaded problem = load(src);
  const fs::path out = prepare_out(out_dir);
  const auto scan = grid_scan_oracle(problem.cmdp, mu_max, points, eps, mu_min);
  const auto audit = convexity_audit(scan, tol);
  io::write_atomic(out / "scan.csv", io::scan_csv(scan));
  write_json(out / "scan.json", json{{"n_points", points},
                                     {"mu_min", mu_min},
                                     {"mu_max", mu_max},
                                     {"argmin_mu", scan.minimum().mu},
                                     {"min_objective", scan.minimum().objective},
                                     {"convex", audit.convex},
                                     {"convexity_tolerance", tol},
                                     {"min_second_difference", audit.min_second_difference}});
  std::printf("scan: argmin mu=%s O=%s convex=%s\n", io::format_double(scan.minimum().mu).c_str(),
              io::format_double(scan.minimum().objective).c_str(), audit.convex ? "yes" : "no");
  return kOk;
}

struct BenchOptions {
  std::string suite;
  std::vector<double> mu_maxes = {1e3, 1e5};
  std::vector<double> eps_primes = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
  std::vector<double> xis = {1e-4, 1e-3, 1e-2, 1e-1, 1};
  Index seeds = 100;
  std::uint64_t seed = 0;
  double pdo_mu_max = 1e3;
  double kappa0 = 1;
  Index max_outer = 10000;
  double eps = kDefaultEps;
};

int run_bench(const ProblemSource& src, const BenchOptions& b, const std::string& out_dir, bool wall_time) {
  const Loaded problem = load(src);
  const fs::path out = prepare_out(out_dir);
  if (b.suite == "bs-compare") {
    const auto rows = bench::bs_compare(problem.cmdp, b.mu_maxes, b.eps_primes, b.eps);
    io::write_atomic(out / "bs-compare.csv", bench::bs_compare_csv(rows));
    write_json(out / "summary.json", bench::bs_compare_json(rows, wall_time));
    for (const auto& r : rows)
      std::printf("M=%s eps'=%s gas=%lld bs=%lld\n", io::format_double(r.mu_max).c_str(),
                  io::format_double(r.eps_prime).c_str(), static_cast<long long>(r.gas.outer_iterations),
                  static_cast<long long>(r.bs.outer_iterations));
    return kOk;
  }
  bench::PdoSweepSpec spec;
  spec.xis = b.xis;
  spec.n_seeds = b.seeds;
  spec.base_seed = b.seed;
  spec.mu_max = b.pdo_mu_max;
  spec.kappa0 = b.kappa0;
  spec.max_outer = b.max_outer;
  spec.eps = b.eps;
  const auto sweep = bench::pdo_sweep(problem.cmdp, spec);
  io::write_atomic(out / "pdo-sweep.csv", bench::pdo_sweep_csv(sweep));
  write_json(out / "summary.json", bench::pdo_sweep_json(sweep, wall_time));
  for (const auto& r : sweep.rows)
    std::printf("xi=%s mean inner=%s (gas %lld)\n", io::format_double(r.xi).c_str(),
                io::format_double(r.mean_cumulative_inner_iterations()).c_str(),
                static_cast<long long>(sweep.gas.cumulative_inner_iterations));
  return kOk;
}

std::string path_csv(const Loaded& problem, const std::vector<Index>& path) {
  std::ostringstream os;
  if (problem.grid) {
    os << "step,state,col,row\n";
    for (std::size_t t = 0; t < path.size(); ++t) {
      os << t << ',' << path[t] << ',';
      if (path[t] < problem.grid->n_cells()) {
        const auto c = problem.grid->cell_of(path[t]);
        os << c.col << ',' << c.row;
      } else {
        os << ',';
      }
      os << '\n';
    }
  } else if (problem.uav) {
    os << "step,state,battery_level,altitude_m\n";
    for (std::size_t t = 0; t < path.size(); ++t)
      os << t << ',' << path[t] << ',' << problem.uav->battery_of(path[t]) << ','
         << io::format_double(problem.uav->config.altitude(problem.uav->altitude_of(path[t]))) << '\n';
  } else {
    os << "step,state\n";
    for (std::size_t t = 0; t < path.size(); ++t) os << t << ',' << path[t] << '\n';
  }
  return os.str();
}

Policy policy_from_result(const std::string& file, Index n_states) {
  const json doc = io::read_json(file);
  Policy policy;
  try {
    policy = doc.at("policy").get<Policy>();
  } catch (const json::exception& e) {
    throw ConfigError(file + ": " + e.what());
  }
  if (static_cast<Index>(policy.size()) != n_states)
    throw ConfigError(file + ": policy has " + std::to_string(policy.size()) + " entries, problem has " +
                      std::to_string(n_states) + " states");
  return policy;
}

int run_rollout(const ProblemSource& src, const SolveOptions& opt, const std::string& policy_file, Index episodes,
                std::uint64_t seed, Index horizon, const std::string& out_dir) {
  const Loaded problem = load(src);
  const fs::path out = prepare_out(out_dir);
  json doc;
  Policy policy;
  if (!policy_file.empty()) {
    policy = policy_from_result(policy_file, problem.cmdp.n_states());
  } else {
    const auto res = solve_dispatch(problem.cmdp, opt.algo, opt.params());
    policy = res.policy;
    doc["algorithm"] = res.algorithm;
    doc["mu_star"] = res.mu_star;
    doc["predicted_disc_cost"] = problem.cmdp.initial_dist().dot(res.cost_values);
  }
  if (horizon <= 0) horizon = default_horizon(problem.cmdp.discount());
  const auto st = rollout(problem.cmdp, policy, episodes, horizon, seed, problem.hooks());
  const json summary = io::rollout_to_json(st);
  for (auto it = summary.begin(); it != summary.end(); ++it) doc[it.key()] = it.value();
  write_json(out / "rollout.json", doc);
  io::write_atomic(out / "path.csv", path_csv(problem, st.sample_path));
  std::printf("rollout: %lld episodes, success rate %s, disc cost %s +- %s\n", static_cast<long long>(st.n_episodes),
              io::format_double(st.success_rate()).c_str(), io::format_double(st.mean_disc_cost).c_str(),
              io::format_double(st.stderr_disc_cost).c_str());
  return kOk;
}

int run_build_env(const std::string& which, const std::string& config, const std::string& out_file,
                  const std::string& config_out) {
  if (which == "gridworld") {
    const env::GridConfig c = config.empty() ? env::GridConfig{} : io::grid_config_from_json(io::read_json(config));
    io::save_problem(out_file, env::build_gridworld(c));
    if (!config_out.empty()) write_json(config_out, io::to_json(c));
  } else {
    const env::UavConfig c = config.empty() ? env::UavConfig{} : io::uav_config_from_json(io::read_json(config));
    io::save_problem(out_file, env::build_uav_cmdp(c));
    if (!config_out.empty()) write_json(config_out, io::to_json(c));
  }
  return kOk;
}

void fail(const std::string& kind, const std::string& what) {
  std::fprintf(stderr, "cmdp-gas: error [%s]: %s\n", kind.c_str(), what.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained MDP solver: gradient-aware search, binary search and primal-dual baselines"};
  app.require_subcommand(1);
  bool wall_time = false;
  app.add_flag("--with-wall-time", wall_time, "write measured wall times instead of 0");

  ProblemSource solve_src, scan_src, bench_src, rollout_src;
  SolveOptions solve_opt, rollout_opt;
  std::string solve_out, scan_out, bench_out, rollout_out, build_out, build_config, build_config_out;

  auto* solve = app.add_subcommand("solve", "minimize the dual; writes trace.csv and result.json");
  solve_src.add_to(solve);
  solve_opt.add_to(solve);
  solve->add_option("--out", solve_out, "output directory")->required();

  double scan_min = 0, scan_max = 200, scan_eps = kDefaultEps, scan_tol = 1e-6;
  Index scan_points = 201;
  auto* scan = app.add_subcommand("scan", "evaluate O(mu) on a uniform grid; writes scan.csv and scan.json");
  scan_src.add_to(scan);
  scan->add_option("--mu-min", scan_min)->check(CLI::NonNegativeNumber)->capture_default_str();
  scan->add_option("--mu-max", scan_max)->check(CLI::PositiveNumber)->capture_default_str();
  scan->add_option("--points", scan_points)->check(CLI::Range(Index(2), Index(100000000)))->capture_default_str();
  scan->add_option("--eps", scan_eps)->check(CLI::PositiveNumber)->capture_default_str();
  scan->add_option("--convexity-tol", scan_tol, "allowed negative second difference")->capture_default_str();
  scan->add_option("--out", scan_out, "output directory")->required();

  BenchOptions bench_opt;
  auto* bench = app.add_subcommand("bench", "benchmark suites; writes <suite>.csv and summary.json");
  bench_src.add_to(bench);
  bench->add_option("--suite", bench_opt.suite)->check(CLI::IsMember({"bs-compare", "pdo-sweep"}))->required();
  bench->add_option("--mu-max", bench_opt.mu_maxes, "bs-compare: window bounds")->delimiter(',')->capture_default_str();
  bench->add_option("--eps-prime", bench_opt.eps_primes, "bs-compare: outer tolerances")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--xi", bench_opt.xis, "pdo-sweep: decay parameters")->delimiter(',')->capture_default_str();
  bench->add_option("--seeds", bench_opt.seeds, "pdo-sweep: random starts per xi")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", bench_opt.seed, "pdo-sweep: first seed")->capture_default_str();
  bench->add_option("--pdo-mu-max", bench_opt.pdo_mu_max, "pdo-sweep: starts drawn from [0, M]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--kappa0", bench_opt.kappa0)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--max-outer", bench_opt.max_outer)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--eps", bench_opt.eps)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--out", bench_out, "output directory")->required();

  std::string policy_file;
  Index episodes = 2000, horizon = 0;
  std::uint64_t seed = 1;
  auto* roll = app.add_subcommand("rollout", "Monte Carlo evaluation; writes rollout.json and path.csv");
  rollout_src.add_to(roll);
  rollout_opt.add_to(roll);
  roll->add_option("--policy-from-solve", policy_file, "result.json from solve (otherwise solve first)");
  roll->add_option("--episodes", episodes)->check(CLI::PositiveNumber)->capture_default_str();
  roll->add_option("--seed", seed)->capture_default_str();
  roll->add_option("--horizon", horizon, "steps per episode (0: smallest H with gamma^H < 1e-6)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  roll->add_option("--out", rollout_out, "output directory")->required();

  std::string build_which;
  auto* build = app.add_subcommand("build-env", "write a built-in environment as a problem file");
  build->add_option("env", build_which)->check(CLI::IsMember({"gridworld", "uav"}))->required();
  build->add_option("--config", build_config, "environment config file");
  build->add_option("--out", build_out, "problem file to write")->required();
  build->add_option("--config-out", build_config_out, "also write the resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return kConfig;
  }

  try {
    if (*solve) return run_solve(solve_src, solve_opt, solve_out, wall_time);
    if (*scan) return run_scan(scan_src, scan_min, scan_max, scan_points, scan_eps, scan_tol, scan_out);
    if (*bench) return run_bench(bench_src, bench_opt, bench_out, wall_time);
    if (*roll) return run_rollout(rollout_src, rollout_opt, policy_file, episodes, seed, horizon, rollout_out);
    if (*build) return run_build_env(build_which, build_config, build_out, build_config_out);
  } catch (const SolverError& e) {
    fail(e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const PreconditionError& e) {
    fail("precondition", e.what());
    return kPrecondition;
  } catch (const std::exception& e) {
    fail("internal", e.what());
    return kOther;
  }
  return kOther;
}
