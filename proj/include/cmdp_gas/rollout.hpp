#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmdp_gas/parallel.hpp"
#include "cmdp_gas/penalized_dp.hpp"

namespace cmdp {

/// Named success test evaluated on the visited state sequence of an episode.
struct SuccessPredicate {
  std::string name;
  std::function<bool(std::span<const Index>)> test;
};

/// Environment hooks for the rollout engine.
struct RolloutHooks {
  /// Zero-reward, zero-cost absorbing states; episodes stop on entry.
  std::function<bool(Index)> absorbing;
  /// The first predicate is the primary success criterion.
  std::vector<SuccessPredicate> success;
};

struct SuccessCount {
  std::string name;
  Index count = 0;
};

struct RolloutStats {
  Index n_episodes = 0;
  Index horizon = 0;
  std::uint64_t seed = 0;
  Index success_count = 0;
  std::vector<SuccessCount> success_counts;
  double mean_disc_reward = 0;
  double mean_disc_cost = 0;
  double stderr_disc_reward = 0;
  double stderr_disc_cost = 0;
  /// One sampled state sequence (episode 0), for plotting a realization.
  std::vector<Index> sample_path;

  double success_rate() const { return n_episodes ? double(success_count) / double(n_episodes) : 0.0; }
  double rate(const std::string& name) const {
    for (const auto& s : success_counts)
      if (s.name == name) return n_episodes ? double(s.count) / double(n_episodes) : 0.0;
    return 0.0;
  }
};

/// Smallest H with gamma^H < tail, so truncating after H steps drops at most
/// `tail` of the discount mass.
inline Index default_horizon(double gamma, double tail = 1e-6) {
  Index h = 1;
  double w = gamma;
  while (!(w < tail)) {
    w *= gamma;
    ++h;
  }
  return h;
}

/**
 * Per-episode random stream: mt19937_64 seeded through std::seed_seq with
 * (seed, episode) split into 32-bit words. Uniform doubles take the top 53
 * bits, so streams are reproducible across standard libraries and
 * independent of the order in which episodes run.
 */
class EpisodeRng {
 public:
  EpisodeRng(std::uint64_t seed, std::uint64_t episode) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
    engine_.seed(seq);
  }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

template <typename Scalar>
Index sample_row(const typename Cmdp<Scalar>::TransitionMatrix& p, Index row, double u) {
  double acc = 0;
  Index last = -1;
  for (typename Cmdp<Scalar>::TransitionMatrix::InnerIterator it(p, row); it; ++it) {
    if (it.value() <= Scalar(0)) continue;
    acc += static_cast<double>(it.value());
    last = it.col();
    if (u < acc) return last;
  }
  return last;
}

template <typename Scalar>
Index sample_initial(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& beta, double u) {
  double acc = 0;
  Index last = 0;
  for (Index i = 0; i < beta.size(); ++i) {
    if (beta(i) <= Scalar(0)) continue;
    acc += static_cast<double>(beta(i));
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace detail

/**
 * Monte Carlo evaluation of a deterministic policy: `n_episodes` trajectories
 * of at most `horizon` steps from the initial distribution, reporting success
 * counts per hook predicate and discounted reward/cost means with standard
 * errors. Deterministic in `seed`; episodes may run in parallel.
 */
template <typename Scalar>
RolloutStats rollout(const Cmdp<Scalar>& m, const Policy& policy, Index n_episodes, Index horizon,
                     std::uint64_t seed, const RolloutHooks& hooks = {}) {
  if (horizon <= 0) throw PreconditionError("rollout: horizon must be positive");
  if (n_episodes <= 0) throw PreconditionError("rollout: n_episodes must be positive");
  if (static_cast<Index>(policy.size()) != m.n_states()) throw PreconditionError("rollout: policy has wrong size");
  for (Index i = 0; i < m.n_states(); ++i)
    if (!m.admissible(i, policy[static_cast<std::size_t>(i)]))
      throw PreconditionError("rollout: policy picks an inadmissible action at state " + std::to_string(i));
  m.require_valid();

  const std::size_t n = static_cast<std::size_t>(n_episodes);
  const std::size_t n_pred = hooks.success.size();
  std::vector<double> rewards(n), costs(n);
  std::vector<char> passed(n * n_pred, 0);
  std::vector<Index> first_path;

  parallel_for(n_episodes, [&](Index e) {
    EpisodeRng rng(seed, static_cast<std::uint64_t>(e));
    std::vector<Index> path;
    path.reserve(static_cast<std::size_t>(std::min<Index>(horizon + 1, 4096)));
    Index s = detail::sample_initial(m.initial_dist(), rng.uniform());
    path.push_back(s);
    double disc = 1, r = 0, c = 0;
    for (Index t = 0; t < horizon; ++t) {
      if (hooks.absorbing && hooks.absorbing(s)) break;
      const Index a = policy[static_cast<std::size_t>(s)];
      r += disc * static_cast<double>(m.rewards()(s, a));
      c += disc * static_cast<double>(m.costs()(s, a));
      s = detail::sample_row<Scalar>(m.transitions(), m.row(s, a), rng.uniform());
      path.push_back(s);
      disc *= static_cast<double>(m.discount());
    }
    const std::size_t k = static_cast<std::size_t>(e);
    rewards[k] = r;
    costs[k] = c;
    for (std::size_t j = 0; j < n_pred; ++j) passed[k * n_pred + j] = hooks.success[j].test(path) ? 1 : 0;
    if (e == 0) first_path = std::move(path);
  });

  RolloutStats st;
  st.n_episodes = n_episodes;
  st.horizon = horizon;
  st.seed = seed;
  st.sample_path = std::move(first_path);
  for (std::size_t j = 0; j < n_pred; ++j) {
    SuccessCount sc{hooks.success[j].name, 0};
    for (std::size_t k = 0; k < n; ++k) sc.count += passed[k * n_pred + j];
    st.success_counts.push_back(sc);
  }
  if (n_pred) st.success_count = st.success_counts.front().count;

  auto mean_and_stderr = [n](const std::vector<double>& x, double& mean, double& se) {
    double sum = 0;
    for (double v : x) sum += v;
    mean = sum / double(n);
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    se = n > 1 ? std::sqrt(ss / double(n - 1) / double(n)) : 0.0;
  };
  mean_and_stderr(rewards, st.mean_disc_reward, st.stderr_disc_reward);
  mean_and_stderr(costs, st.mean_disc_cost, st.stderr_disc_cost);
  return st;
}

}  // namespace cmdp
