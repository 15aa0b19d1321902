#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <queue>
#include <set>

#include "dynsleuth/gridworld.hpp"

using namespace dynsleuth;
using namespace dynsleuth::grid;

namespace {

// ---- Independent oracles (deliberately written with different structure
// ---- from the library code).

// Naive per-direction ray march, counting cells one at a time.
double ray_oracle(const GridMap& m, int row, int col, int dr, int dc) {
  int dist = 0;
  int r = row, c = col;
  while (true) {
    r += dr;
    c += dc;
    ++dist;
    if (r < 0 || r >= m.height || c < 0 || c >= m.width) return dist;
    if (m.cells[m.index(r, c)]) return dist;
  }
}

const int kOracleDirs[8][2] = {{-1, 0}, {-1, 1}, {0, 1},  {1, 1},
                               {1, 0},  {1, -1}, {0, -1}, {-1, -1}};

// Recursive flood fill (library uses an explicit stack).
void flood(const GridMap& m, int r, int c, std::set<int>& seen) {
  if (r < 0 || r >= m.height || c < 0 || c >= m.width) return;
  const int idx = m.index(r, c);
  if (m.cells[idx] || seen.count(idx)) return;
  seen.insert(idx);
  flood(m, r - 1, c, seen);
  flood(m, r + 1, c, seen);
  flood(m, r, c - 1, seen);
  flood(m, r, c + 1, seen);
}

ConstraintReport brute_force_validate(const GridMap& m) {
  ConstraintReport report;
  report.unique_goal_free = !m.cells[m.goal];
  int free_count = 0;
  int first_free = -1;
  for (int i = 0; i < m.cell_count(); ++i) {
    if (!m.cells[i]) {
      ++free_count;
      if (first_free < 0) first_free = i;
    }
  }
  if (free_count > 0) {
    std::set<int> seen;
    flood(m, m.row_of(first_free), m.col_of(first_free), seen);
    report.connected = static_cast<int>(seen.size()) == free_count;
  }
  report.no_2x2_block = true;
  for (int r = 0; r + 1 < m.height; ++r) {
    for (int c = 0; c + 1 < m.width; ++c) {
      int filled = 0;
      for (int dr = 0; dr < 2; ++dr)
        for (int dc = 0; dc < 2; ++dc) filled += m.cells[m.index(r + dr, c + dc)] ? 1 : 0;
      if (filled == 4) report.no_2x2_block = false;
    }
  }
  return report;
}

// Breadth-first shortest-path distances to the goal over free cells.
std::vector<int> bfs_distances(const GridMap& m) {
  std::vector<int> dist(m.cell_count(), -1);
  std::queue<int> frontier;
  dist[m.goal] = 0;
  frontier.push(m.goal);
  while (!frontier.empty()) {
    const int cell = frontier.front();
    frontier.pop();
    const int r = m.row_of(cell), c = m.col_of(cell);
    const int neighbors[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& nb : neighbors) {
      if (nb[0] < 0 || nb[0] >= m.height || nb[1] < 0 || nb[1] >= m.width) continue;
      const int ni = m.index(nb[0], nb[1]);
      if (m.cells[ni] || dist[ni] >= 0) continue;
      dist[ni] = dist[cell] + 1;
      frontier.push(ni);
    }
  }
  return dist;
}

}  // namespace

TEST_CASE("parse_map handles the basic forms") {
  const GridMap m = parse_map("..G\n...\n...");
  CHECK(m.width == 3);
  CHECK(m.height == 3);
  CHECK(m.goal == 2);
  CHECK(std::count(m.cells.begin(), m.cells.end(), 1) == 0);

  const GridMap with_wall = parse_map("G..\n.#.\n...");
  CHECK(with_wall.cells[4] == 1);
  CHECK(render_map(with_wall) == "G..\n.#.\n...");
}

TEST_CASE("render_map of an all-free map puts G first") {
  GridMap m;
  m.width = 3;
  m.height = 3;
  m.cells.assign(9, 0);
  m.goal = 0;
  CHECK(render_map(m) == "G..\n...\n...");
}

TEST_CASE("parse_map rejects malformed input") {
  CHECK_THROWS_WITH_AS(parse_map("G.\n.G"), doctest::Contains("duplicate goal"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_map("..\n..."), doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_map("G.\n.x"), doctest::Contains("invalid character"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_map("..\n.."), std::invalid_argument);  // no goal
  CHECK_THROWS_AS(parse_map(""), std::invalid_argument);
}

TEST_CASE("parse and render round-trip on random maps") {
  RngStream rng(99);
  for (int i = 0; i < 25; ++i) {
    const GridMap m = random_map(7, 7, rng.uniform_int(0, 48), 0.3, rng);
    CHECK(parse_map(render_map(m)) == m);
  }
}

TEST_CASE("validate_constraints catches the named violations") {
  CHECK(validate_constraints(parse_map("G......\n.......\n.......\n.......\n.......\n.......\n.......")).pass());

  // Full-width wall disconnects the two halves.
  const GridMap split = parse_map("G......\n#######\n.......\n.......\n.......\n.......\n.......");
  const ConstraintReport split_report = validate_constraints(split);
  CHECK_FALSE(split_report.connected);
  CHECK(split_report.unique_goal_free);
  CHECK(split_report.no_2x2_block);

  const GridMap block = parse_map("G......\n.##....\n.##....\n.......\n.......\n.......\n.......");
  CHECK_FALSE(validate_constraints(block).no_2x2_block);
}

TEST_CASE("validate_constraints agrees with a brute-force checker on random grids") {
  RngStream rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    GridMap m;
    m.width = rng.uniform_int(2, 8);
    m.height = rng.uniform_int(2, 8);
    m.cells.resize(static_cast<std::size_t>(m.width) * m.height);
    for (auto& cell : m.cells) cell = rng.bernoulli(rng.next_double()) ? 1 : 0;
    m.goal = rng.uniform_int(0, m.cell_count() - 1);
    const ConstraintReport ours = validate_constraints(m);
    const ConstraintReport oracle = brute_force_validate(m);
    CHECK(ours.connected == oracle.connected);
    CHECK(ours.unique_goal_free == oracle.unique_goal_free);
    CHECK(ours.no_2x2_block == oracle.no_2x2_block);
    CHECK(ours.pass() == (oracle.connected && oracle.unique_goal_free && oracle.no_2x2_block));
  }
}

TEST_CASE("random_map edge behavior") {
  RngStream rng(5);
  const GridMap empty = random_map(7, 7, 24, 0.0, rng);
  CHECK(std::count(empty.cells.begin(), empty.cells.end(), 1) == 0);

  RngStream rng_full(5);
  CHECK_THROWS_AS(random_map(7, 7, 24, 1.0, rng_full, 50), std::runtime_error);

  RngStream a(77), b(77);
  CHECK(random_map(7, 7, 10, 0.3, a) == random_map(7, 7, 10, 0.3, b));
}

TEST_CASE("lidar on the empty 7x7 map") {
  GridMap m;
  m.width = 7;
  m.height = 7;
  m.cells.assign(49, 0);
  m.goal = 48;

  const LidarObservation center = lidar(m, m.index(3, 3));
  for (double d : center.distances) CHECK(d == doctest::Approx(4.0));

  // Corner (0,0): order N, NE, E, SE, S, SW, W, NW.
  const LidarObservation corner = lidar(m, 0);
  CHECK(corner.distances[0] == 1);  // N
  CHECK(corner.distances[1] == 1);  // NE
  CHECK(corner.distances[2] == 7);  // E
  CHECK(corner.distances[3] == 7);  // SE
  CHECK(corner.distances[4] == 7);  // S
  CHECK(corner.distances[5] == 1);  // SW
  CHECK(corner.distances[6] == 1);  // W
  CHECK(corner.distances[7] == 1);  // NW
}

TEST_CASE("adjacent obstacle reads distance 1") {
  const GridMap m = parse_map("G..\n.#.\n...");
  const LidarObservation obs = lidar(m, m.index(1, 0));
  CHECK(obs.distances[2] == 1);  // E points straight at the obstacle
  CHECK_THROWS_AS(lidar(m, m.index(1, 1)), std::invalid_argument);
}

TEST_CASE("lidar agrees with the ray-march oracle on random maps") {
  RngStream rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const GridMap m = random_map(7, 7, rng.uniform_int(0, 48), 0.3, rng);
    for (int cell = 0; cell < m.cell_count(); ++cell) {
      if (m.is_obstacle(cell)) continue;
      const LidarObservation obs = lidar(m, cell);
      for (int d = 0; d < 8; ++d) {
        CHECK(obs.distances[d] ==
              ray_oracle(m, m.row_of(cell), m.col_of(cell), kOracleDirs[d][0], kOracleDirs[d][1]));
        CHECK(obs.distances[d] >= 1.0);
        CHECK(obs.distances[d] <= std::max(m.width, m.height) + 1);
      }
    }
  }
}

TEST_CASE("step follows the reward design") {
  const MdpSpec spec;
  const GridMap m = parse_map(".G.\n...\n...");

  const StepResult reach = step(m, spec, 0, Action::MoveRight);
  CHECK(reach.next_cell == m.goal);
  CHECK(reach.reward == doctest::Approx(1.0));
  CHECK(reach.done);

  const StepResult wall = step(m, spec, 0, Action::MoveLeft);
  CHECK(wall.next_cell == 0);
  CHECK(wall.reward == doctest::Approx(-0.1));
  CHECK_FALSE(wall.done);

  const StepResult stay = step(m, spec, 0, Action::Stay);
  CHECK(stay.next_cell == 0);
  CHECK(stay.reward == doctest::Approx(-0.1));
  CHECK_FALSE(stay.done);

  CHECK_THROWS_AS(step(parse_map("G#.\n...\n..."), spec, 1, Action::Stay), std::invalid_argument);
}

TEST_CASE("step never lands on an obstacle and rewards come from the fixed set") {
  RngStream rng(31);
  const MdpSpec spec;
  for (int trial = 0; trial < 10; ++trial) {
    const GridMap m = random_map(7, 7, rng.uniform_int(0, 48), 0.3, rng);
    for (int cell = 0; cell < m.cell_count(); ++cell) {
      if (m.is_obstacle(cell)) continue;
      for (int a = 0; a < kActionCount; ++a) {
        const StepResult r = step(m, spec, cell, static_cast<Action>(a));
        CHECK_FALSE(m.is_obstacle(r.next_cell));
        const bool known = r.reward == spec.reward_goal || r.reward == spec.reward_penalty ||
                           r.reward == spec.reward_default;
        CHECK(known);
      }
    }
  }
}

TEST_CASE("value iteration on the 1x2 map matches the hand Bellman backup") {
  const GridMap m = parse_map(".G");
  const MdpSpec spec;
  const QTable q = value_iteration(m, spec, 1e-10);
  const int left = q.cell_to_free[0];
  CHECK(q.at(left, static_cast<int>(Action::MoveRight)) == doctest::Approx(1.0));
  CHECK(q.at(left, static_cast<int>(Action::Stay)) ==
        doctest::Approx(-0.1 + spec.gamma * 1.0));
  // Goal row is absorbing.
  for (int a = 0; a < kActionCount; ++a) CHECK(q.at(q.goal_free_index, a) == 0.0);
}

TEST_CASE("value iteration satisfies its Bellman residual bound") {
  RngStream rng(8);
  const MdpSpec spec;
  const double tol = 1e-8;
  const GridMap m = random_map(7, 7, 30, 0.3, rng);
  const QTable q = value_iteration(m, spec, tol);
  for (int s = 0; s < q.free_count(); ++s) {
    for (int a = 0; a < kActionCount; ++a) {
      double target;
      if (s == q.goal_free_index) {
        target = 0.0;
      } else {
        const StepResult sr = step(m, spec, q.free_cells[s], static_cast<Action>(a));
        double next_value = 0.0;
        if (!sr.done) {
          const int nf = q.cell_to_free[sr.next_cell];
          next_value = q.at(nf, q.greedy_action(nf));
        }
        target = sr.reward + spec.gamma * next_value;
      }
      CHECK(std::abs(q.at(s, a) - target) < tol);
    }
  }
}

TEST_CASE("greedy policy walks BFS-shortest paths to the goal") {
  RngStream rng(123);
  const MdpSpec spec;
  for (int trial = 0; trial < 5; ++trial) {
    const GridMap m = random_map(7, 7, rng.uniform_int(0, 48), 0.3, rng);
    const QTable q = value_iteration(m, spec, 1e-8);
    const std::vector<int> dist = bfs_distances(m);
    int free_count = 0;
    for (int cell = 0; cell < m.cell_count(); ++cell)
      if (!m.is_obstacle(cell)) ++free_count;
    for (int cell = 0; cell < m.cell_count(); ++cell) {
      if (m.is_obstacle(cell) || cell == m.goal) continue;
      int at = cell;
      int steps = 0;
      while (at != m.goal && steps <= free_count) {
        const StepResult sr = step(m, spec, at, static_cast<Action>(q.greedy_action(q.cell_to_free[at])));
        at = sr.next_cell;
        ++steps;
      }
      CHECK(at == m.goal);
      CHECK(steps == dist[cell]);  // greedy path length equals BFS distance
      CHECK(steps <= free_count);
    }
  }
}

TEST_CASE("boltzmann_policy limits and row sums") {
  const GridMap m = parse_map(".G.\n...\n...");
  const MdpSpec spec;
  const QTable q = value_iteration(m, spec, 1e-10);

  const auto broad = boltzmann_policy(q, 1e6);
  const auto sharp = boltzmann_policy(q, 1e-4);
  for (int s = 0; s < q.free_count(); ++s) {
    double sum_broad = 0.0, sum_sharp = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
      sum_broad += broad[s][a];
      sum_sharp += sharp[s][a];
      CHECK(std::abs(broad[s][a] - 0.2) < 1e-3);
    }
    CHECK(std::abs(sum_broad - 1.0) < 1e-9);
    CHECK(std::abs(sum_sharp - 1.0) < 1e-9);

    // With a unique maximum, low temperature concentrates on the argmax.
    const int best = q.greedy_action(s);
    bool unique = true;
    for (int a = 0; a < kActionCount; ++a) {
      if (a != best && q.at(s, a) == q.at(s, best)) unique = false;
    }
    if (unique && s != q.goal_free_index) CHECK(sharp[s][best] >= 0.999);
  }

  // A uniform Q row gives exactly the uniform distribution.
  QTable flat;
  flat.free_cells = {0};
  flat.cell_to_free = {0};
  flat.values.assign(kActionCount, 0.7);
  flat.goal_free_index = -1;
  const auto uniform = boltzmann_policy(flat, 0.5);
  for (int a = 0; a < kActionCount; ++a) CHECK(uniform[0][a] == doctest::Approx(0.2));

  CHECK_THROWS_AS(boltzmann_policy(q, 0.0), std::invalid_argument);
}
