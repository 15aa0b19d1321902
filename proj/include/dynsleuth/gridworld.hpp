#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dynsleuth/rng.hpp"

namespace dynsleuth::grid {

/// Occupancy grid with a single goal cell. The surrounding boundary wall is
/// implicit and never stored; `cells` covers only the interior, row-major,
/// 0 = free and 1 = obstacle.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;
  int goal = 0;

  int cell_count() const { return width * height; }
  int index(int row, int col) const { return row * width + col; }
  int row_of(int cell) const { return cell / width; }
  int col_of(int cell) const { return cell % width; }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
  bool is_obstacle(int cell) const { return cells[static_cast<std::size_t>(cell)] != 0; }
  bool operator==(const GridMap&) const = default;
};

struct MdpSpec {
  double gamma = 0.95;
  int step_limit = 100;
  double reward_goal = 1.0;
  double reward_penalty = -0.1;
  double reward_default = 0.0;
};

/// Action indices are a file-format and network-head contract; never reorder.
enum class Action : int { MoveLeft = 0, MoveRight = 1, MoveUp = 2, MoveDown = 3, Stay = 4 };
inline constexpr int kActionCount = 5;

/// Ray distances in fixed order N, NE, E, SE, S, SW, W, NW. Every step along
/// a ray (cardinal or diagonal) counts 1; the blocking step is included, so
/// an adjacent obstacle reads 1.
struct LidarObservation {
  std::array<double, 8> distances{};
};

struct ConstraintReport {
  bool connected = false;
  bool unique_goal_free = false;
  bool no_2x2_block = false;
  bool pass() const { return connected && unique_goal_free && no_2x2_block; }
};

/// Optimal state-action values over the map's free cells. Rows follow
/// `free_cells` order; the goal row is identically zero (absorbing state).
struct QTable {
  std::vector<int> free_cells;      // ascending cell indices
  std::vector<int> cell_to_free;    // -1 for obstacles
  std::vector<double> values;       // free_cells.size() x kActionCount
  int goal_free_index = -1;

  int free_count() const { return static_cast<int>(free_cells.size()); }
  double at(int free_index, int action) const {
    return values[static_cast<std::size_t>(free_index) * kActionCount + action];
  }
  /// Argmax over the row; ties resolve to the lowest action index.
  int greedy_action(int free_index) const;
};

struct StepResult {
  int next_cell = 0;
  double reward = 0.0;
  bool done = false;
};

/// Parses the '.'/'#'/'G' text form. Throws std::invalid_argument naming the
/// offending line/column. Structural constraints are NOT checked here.
GridMap parse_map(const std::string& text);

/// Inverse of parse_map: rows joined by '\n', no trailing newline.
std::string render_map(const GridMap& map);

/// Checks the floor-plan constraints: free space 4-connected, goal free,
/// no 2x2 all-obstacle block. Violations are report entries, not errors.
ConstraintReport validate_constraints(const GridMap& map);

/// Rejection-samples maps (each non-goal cell is an obstacle with probability
/// `density`) until one passes validate_constraints. Throws std::runtime_error
/// once max_tries is exhausted.
GridMap random_map(int width, int height, int goal, double density, RngStream& rng,
                   int max_tries = 1000);

/// 8-direction ray march from a free cell. Throws on an obstacle cell.
LidarObservation lidar(const GridMap& map, int cell);

/// Deterministic transition. Moving into an obstacle or the boundary leaves
/// the agent in place at reward_penalty, as does Stay; reaching the goal ends
/// the episode at reward_goal; any other move earns reward_default.
StepResult step(const GridMap& map, const MdpSpec& spec, int cell, Action action);

/// Jacobi value iteration until the max-norm value change drops below
/// vi_tolerance; the returned table's Bellman residual is below vi_tolerance
/// at every state-action pair.
QTable value_iteration(const GridMap& map, const MdpSpec& spec, double vi_tolerance = 1e-8);

/// Softmax over each Q row at the given temperature; rows sum to 1.
std::vector<std::array<double, kActionCount>> boltzmann_policy(const QTable& q,
                                                               double temperature);

/// Map text file helpers (the ".map" interchange format: render_map output
/// plus a final newline; parse accepts either).
void save_map(const GridMap& map, const std::string& path);
GridMap load_map(const std::string& path);

}  // namespace dynsleuth::grid
