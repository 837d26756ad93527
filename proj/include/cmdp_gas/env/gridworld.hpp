#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cmdp_gas/cmdp.hpp"
#include "cmdp_gas/rollout.hpp"

namespace cmdp::env {

/// Grid cell, 1-based, (1, 1) is the bottom-left corner.
struct Cell {
  int col = 1;
  int row = 1;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Moves, in action-index order.
enum class Move : int { Up = 0, Right = 1, Down = 2, Left = 3 };
inline constexpr Index kGridActions = 4;

struct ObstacleGeneration {
  int count = 30;
  std::uint64_t seed = 1;
  double spread = 1.5;  ///< decay length of the placement weight around the start-goal segment
  int safe_radius = 1;  ///< cells within this Chebyshev distance of start or goal stay free
};

struct GridConfig {
  int width = 20;
  int height = 20;
  Cell start{18, 2};
  Cell goal{18, 19};
  std::vector<Cell> obstacles;              ///< used as-is when `generate` is empty
  std::optional<ObstacleGeneration> generate = ObstacleGeneration{};
  double slip = 0.05;                        ///< delta
  double discount = 0.99;
  double step_reward = -1;
  std::optional<double> goal_reward;         ///< M-hat; 2 / (1 - gamma) when unset
  std::optional<double> obstacle_cost;       ///< defaults to the goal reward
  double constraint_bound = 20;              ///< E

  void check() const;
  double resolved_goal_reward() const;
  double resolved_obstacle_cost() const;
};

/// Built grid world: the CMDP plus the coordinates needed to interpret it.
struct GridWorld {
  GridConfig config;
  std::vector<Cell> obstacles;
  Cmdpd cmdp;

  Index n_cells() const { return Index(config.width) * config.height; }
  Index terminal() const { return n_cells(); }
  Index state_of(Cell c) const { return Index(c.row - 1) * config.width + (c.col - 1); }
  Cell cell_of(Index s) const { return Cell{int(s % config.width) + 1, int(s / config.width) + 1}; }
  bool is_obstacle(Index s) const;
  bool is_goal(Index s) const { return s == state_of(config.goal); }

  /// Stops at the terminal state. Predicates: "goal" (goal cell visited) and
  /// "goal_no_obstacle" (goal visited before any obstacle cell).
  RolloutHooks rollout_hooks() const;
};

/**
 * Weighted draw of `gen.count` distinct obstacle cells concentrated around
 * the start-goal segment (weight exp(-d / spread), d the distance from the
 * cell centre to the segment). Cells crossed by the segment, the start and
 * the goal are never chosen. Draws are redone until the goal is reachable
 * from the start by 4-neighbour moves avoiding obstacles.
 */
std::vector<Cell> generate_obstacles(int width, int height, Cell start, Cell goal, const ObstacleGeneration& gen);

GridWorld make_gridworld(const GridConfig& config);

/**
 * |S| = width * height + 1 (the extra state is an absorbing terminal),
 * |A| = 4. The chosen move happens with probability 1 - slip + slip / 4 and
 * each other move with slip / 4; moves off the grid leave the agent in place.
 * R(s, a) = step_reward + M * P(next is goal), C(s, a) = M_c * P(next is an
 * obstacle). The goal moves to the terminal with zero reward and cost.
 */
Cmdpd build_gridworld(const GridConfig& config);

}  // namespace cmdp::env
