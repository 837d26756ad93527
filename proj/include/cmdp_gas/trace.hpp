#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace cmdp {

/// One inner-loop evaluation as seen by an outer search.
///
/// `outer_iter` is 0 for bootstrap evaluations (the initial bracket ends) and
/// counts from 1 for search iterations. The bracket and tangent lower-bound
/// columns are kept in memory for diagnostics only; the CSV form carries the
/// fixed seven-column header.
struct TraceRecord {
  std::int64_t outer_iter = 0;
  double mu = 0;
  double objective = 0;
  double gradient = 0;
  std::int64_t inner_iterations = 0;
  std::int64_t cumulative_inner_iterations = 0;
  double wall_time_ms = 0;

  double bracket_lo = std::numeric_limits<double>::quiet_NaN();
  double bracket_hi = std::numeric_limits<double>::quiet_NaN();
  double lower_bound = std::numeric_limits<double>::quiet_NaN();
  bool right_probe = false;  ///< GAS evaluation just right of a cusp found from the left
};

struct SolveTrace {
  std::string algorithm;
  std::vector<TraceRecord> records;

  /// Multiplier of the last evaluation. Differs from the reported mu* when the
  /// search stopped on a lower-side point; values are then taken from mu*.
  double final_mu_evaluated = std::numeric_limits<double>::quiet_NaN();
  bool values_from_final_evaluation = true;

  /// Number of search iterations (records with outer_iter >= 1).
  std::int64_t outer_iterations() const {
    std::int64_t n = 0;
    for (const auto& r : records) n += r.outer_iter >= 1 ? 1 : 0;
    return n;
  }

  std::int64_t cumulative_inner_iterations() const {
    return records.empty() ? 0 : records.back().cumulative_inner_iterations;
  }
};

}  // namespace cmdp
