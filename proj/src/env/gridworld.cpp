#include "cmdp_gas/env/gridworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>
#include <string>

#include "cmdp_gas/errors.hpp"

namespace cmdp::env {

namespace {

constexpr std::array<std::array<int, 2>, 4> kSteps{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};  // (dcol, drow)
constexpr int kMaxLayoutAttempts = 256;

bool in_bounds(Cell c, int width, int height) {
  return c.col >= 1 && c.col <= width && c.row >= 1 && c.row <= height;
}

Cell step(Cell c, int move, int width, int height) {
  Cell n{c.col + kSteps[move][0], c.row + kSteps[move][1]};
  return in_bounds(n, width, height) ? n : c;
}

std::string show(Cell c) { return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")"; }

double segment_distance(double px, double py, Cell a, Cell b) {
  const double dx = b.col - a.col, dy = b.row - a.row;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - a.col) * dx + (py - a.row) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.col + t * dx), py - (a.row + t * dy));
}

bool connected(int width, int height, Cell start, Cell goal, const std::vector<char>& blocked) {
  auto id = [width](Cell c) { return std::size_t(c.row - 1) * width + std::size_t(c.col - 1); };
  std::vector<char> seen(blocked.size(), 0);
  std::deque<Cell> queue{start};
  seen[id(start)] = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (c == goal) return true;
    for (int m = 0; m < 4; ++m) {
      const Cell n{c.col + kSteps[m][0], c.row + kSteps[m][1]};
      if (!in_bounds(n, width, height) || blocked[id(n)] || seen[id(n)]) continue;
      seen[id(n)] = 1;
      queue.push_back(n);
    }
  }
  return false;
}

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.col - b.col), std::abs(a.row - b.row)); }

}  // namespace

void GridConfig::check() const {
  if (width <= 0 || height <= 0) throw PreconditionError("grid: width and height must be positive");
  if (!in_bounds(start, width, height)) throw PreconditionError("grid: start " + show(start) + " out of bounds");
  if (!in_bounds(goal, width, height)) throw PreconditionError("grid: goal " + show(goal) + " out of bounds");
  if (start == goal) throw PreconditionError("grid: start and goal coincide");
  if (!(slip >= 0 && slip <= 1)) throw PreconditionError("grid: slip must lie in [0, 1]");
  if (!(discount >= 0 && discount < 1)) throw PreconditionError("grid: discount must lie in [0, 1)");
  if (!std::isfinite(step_reward) || !std::isfinite(constraint_bound))
    throw PreconditionError("grid: rewards and bound must be finite");
  if (goal_reward && !std::isfinite(*goal_reward)) throw PreconditionError("grid: goal_reward must be finite");
  if (obstacle_cost && !std::isfinite(*obstacle_cost)) throw PreconditionError("grid: obstacle_cost must be finite");
  if (generate) {
    if (generate->count < 0 || generate->count >= width * height - 2)
      throw PreconditionError("grid: obstacle count must lie in [0, width*height - 2)");
    if (!(generate->spread > 0)) throw PreconditionError("grid: obstacle spread must be positive");
    if (generate->safe_radius < 0) throw PreconditionError("grid: obstacle safe_radius must be >= 0");
  } else {
    for (const Cell& c : obstacles) {
      if (!in_bounds(c, width, height)) throw PreconditionError("grid: obstacle " + show(c) + " out of bounds");
      if (c == start || c == goal) throw PreconditionError("grid: obstacle on start or goal");
    }
  }
}

double GridConfig::resolved_goal_reward() const { return goal_reward ? *goal_reward : 2.0 / (1.0 - discount); }
double GridConfig::resolved_obstacle_cost() const { return obstacle_cost ? *obstacle_cost : resolved_goal_reward(); }

bool GridWorld::is_obstacle(Index s) const {
  if (s >= n_cells()) return false;
  const Cell c = cell_of(s);
  return std::find(obstacles.begin(), obstacles.end(), c) != obstacles.end();
}

RolloutHooks GridWorld::rollout_hooks() const {
  std::vector<char> obstacle(static_cast<std::size_t>(n_cells() + 1), 0);
  for (const Cell& c : obstacles) obstacle[static_cast<std::size_t>(state_of(c))] = 1;
  const Index goal = state_of(config.goal), term = terminal();

  RolloutHooks hooks;
  hooks.absorbing = [term](Index s) { return s == term; };
  hooks.success.push_back({"goal", [goal](std::span<const Index> path) {
                             return std::find(path.begin(), path.end(), goal) != path.end();
                           }});
  hooks.success.push_back({"goal_no_obstacle", [goal, obstacle](std::span<const Index> path) {
                             for (Index s : path) {
                               if (s == goal) return true;
                               if (obstacle[static_cast<std::size_t>(s)]) return false;
                             }
                             return false;
                           }});
  return hooks;
}

std::vector<Cell> generate_obstacles(int width, int height, Cell start, Cell goal, const ObstacleGeneration& gen) {
  if (width <= 0 || height <= 0) throw PreconditionError("generate_obstacles: empty grid");
  if (gen.count < 0 || gen.count >= width * height - 2)
    throw PreconditionError("generate_obstacles: count must lie in [0, width*height - 2)");
  if (gen.count == 0) return {};

  std::vector<Cell> candidates;
  std::vector<double> weights;
  for (int row = 1; row <= height; ++row)
    for (int col = 1; col <= width; ++col) {
      const Cell c{col, row};
      if (c == start || c == goal) continue;
      if (chebyshev(c, start) <= gen.safe_radius || chebyshev(c, goal) <= gen.safe_radius) continue;
      const double d = segment_distance(col, row, start, goal);
      if (d < 0.5) continue;  // keep the direct corridor open
      candidates.push_back(c);
      weights.push_back(std::exp(-d / gen.spread));
    }
  if (static_cast<int>(candidates.size()) < gen.count)
    throw ConfigError("generate_obstacles: not enough cells off the start-goal corridor for " +
                      std::to_string(gen.count) + " obstacles");

  for (int attempt = 0; attempt < kMaxLayoutAttempts; ++attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(gen.seed), static_cast<std::uint32_t>(gen.seed >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    std::vector<double> w = weights;
    std::vector<Cell> layout;
    std::vector<char> blocked(std::size_t(width) * height, 0);
    for (int k = 0; k < gen.count; ++k) {
      double total = 0;
      for (double x : w) total += x;
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
      std::size_t pick = 0;
      double acc = 0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (w[j] <= 0) continue;
        pick = j;
        acc += w[j];
        if (u < acc) break;
      }
      w[pick] = 0;
      layout.push_back(candidates[pick]);
      blocked[std::size_t(candidates[pick].row - 1) * width + std::size_t(candidates[pick].col - 1)] = 1;
    }
    if (connected(width, height, start, goal, blocked)) {
      std::sort(layout.begin(), layout.end(),
                [](Cell a, Cell b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
      return layout;
    }
  }
  throw ConfigError("generate_obstacles: no connected layout after " + std::to_string(kMaxLayoutAttempts) +
                    " attempts");
}

GridWorld make_gridworld(const GridConfig& config) {
  config.check();
  GridWorld g{config,
              config.generate ? generate_obstacles(config.width, config.height, config.start, config.goal,
                                                   *config.generate)
                              : config.obstacles,
              Cmdpd({}, {}, {}, {}, 0.0, 0.0)};

  const int W = config.width, H = config.height;
  const Index cells = g.n_cells(), n_states = cells + 1, term = g.terminal();
  const Index goal = g.state_of(config.goal);
  std::vector<char> obstacle(static_cast<std::size_t>(n_states), 0);
  for (const Cell& c : g.obstacles) obstacle[static_cast<std::size_t>(g.state_of(c))] = 1;

  const double slip = config.slip;
  const double m_goal = config.resolved_goal_reward();
  const double m_obs = config.resolved_obstacle_cost();

  TransitionBuilder<double> builder(n_states, kGridActions);
  builder.reserve(static_cast<std::size_t>(cells * kGridActions * 4 + kGridActions * 2));
  Cmdpd::Matrix rewards = Cmdpd::Matrix::Zero(n_states, kGridActions);
  Cmdpd::Matrix costs = Cmdpd::Matrix::Zero(n_states, kGridActions);

  for (Index s = 0; s < cells; ++s) {
    const Cell here = g.cell_of(s);
    for (int a = 0; a < kGridActions; ++a) {
      if (s == goal) {
        builder.add(s, a, term, 1.0);
        continue;
      }
      double p_goal = 0, p_obs = 0;
      for (int m = 0; m < 4; ++m) {
        const double p = (m == a ? 1.0 - slip : 0.0) + slip / 4.0;
        if (p == 0.0) continue;
        const Index next = g.state_of(step(here, m, W, H));
        builder.add(s, a, next, p);
        if (next == goal) p_goal += p;
        if (obstacle[static_cast<std::size_t>(next)]) p_obs += p;
      }
      rewards(s, a) = config.step_reward + m_goal * p_goal;
      costs(s, a) = m_obs * p_obs;
    }
  }
  for (int a = 0; a < kGridActions; ++a) builder.add(term, a, term, 1.0);

  Cmdpd::Vector beta = Cmdpd::Vector::Zero(n_states);
  beta(g.state_of(config.start)) = 1.0;
  g.cmdp = Cmdpd(builder.build(), std::move(rewards), std::move(costs), std::move(beta), config.discount,
                 config.constraint_bound);
  g.cmdp.require_valid();
  return g;
}

Cmdpd build_gridworld(const GridConfig& config) { return make_gridworld(config).cmdp; }

}  // namespace cmdp::env
