#pragma once

#include <string>
#include <string_view>

#include "cmdp_gas/baselines.hpp"
#include "cmdp_gas/gas.hpp"

namespace cmdp {

enum class Algorithm { Gas, BinarySearch, PrimalDual };

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "gas") return Algorithm::Gas;
  if (name == "bs") return Algorithm::BinarySearch;
  if (name == "pdo") return Algorithm::PrimalDual;
  throw PreconditionError("unknown algorithm '" + std::string(name) + "' (expected gas|bs|pdo)");
}

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Gas: return "gas";
    case Algorithm::BinarySearch: return "bs";
    case Algorithm::PrimalDual: return "pdo";
  }
  return "?";
}

struct SolveParams {
  double mu_max = kDefaultMuMax;
  double eps = kDefaultEps;
  double eps_prime = kDefaultEpsPrime;
  Index max_sweeps = kDefaultMaxSweeps;
  SearchOptions search;
  PdoParams pdo;
};

/// Routes to gas_solve, binary_search_solve or pdo_solve.
template <typename Scalar>
SolveResult<Scalar> solve_dispatch(const DualEvaluator<Scalar>& evaluate, Algorithm algo, const SolveParams& p) {
  switch (algo) {
    case Algorithm::Gas: return gas_solve(evaluate, Scalar(p.mu_max), Scalar(p.eps_prime), p.search);
    case Algorithm::BinarySearch:
      return binary_search_solve(evaluate, Scalar(p.mu_max), Scalar(p.eps_prime), p.search);
    case Algorithm::PrimalDual: return pdo_solve(evaluate, p.pdo);
  }
  throw PreconditionError("unknown algorithm");
}

template <typename Scalar>
SolveResult<Scalar> solve_dispatch(const Cmdp<Scalar>& m, Algorithm algo, const SolveParams& p) {
  DualEvaluator<Scalar> evaluate(m, Scalar(p.eps), p.max_sweeps);
  return solve_dispatch(evaluate, algo, p);
}

template <typename Scalar>
SolveResult<Scalar> solve_dispatch(const Cmdp<Scalar>& m, std::string_view algo, const SolveParams& p) {
  return solve_dispatch(m, parse_algorithm(algo), p);
}

}  // namespace cmdp
