#include "dynsleuth/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dynsleuth::grid {
namespace {

// Row/col deltas per Action, indexed by the Action contract order.
constexpr int kActionDr[kActionCount] = {0, 0, -1, 1, 0};
constexpr int kActionDc[kActionCount] = {-1, 1, 0, 0, 0};

// Lidar ray order: N, NE, E, SE, S, SW, W, NW.
constexpr int kRayDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kRayDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};

[[noreturn]] void parse_fail(const std::string& what) {
  throw std::invalid_argument("map parse error: " + what);
}

}  // namespace

int QTable::greedy_action(int free_index) const {
  const double* row = values.data() + static_cast<std::size_t>(free_index) * kActionCount;
  int best = 0;
  for (int a = 1; a < kActionCount; ++a) {
    if (row[a] > row[best]) best = a;
  }
  return best;
}

GridMap parse_map(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.empty()) parse_fail("empty input");

  GridMap map;
  map.height = static_cast<int>(lines.size());
  map.width = static_cast<int>(lines[0].size());
  if (map.width == 0) parse_fail("line 1 is empty");
  map.cells.assign(static_cast<std::size_t>(map.width) * map.height, 0);

  int goal = -1;
  for (int r = 0; r < map.height; ++r) {
    if (static_cast<int>(lines[r].size()) != map.width) {
      parse_fail("line " + std::to_string(r + 1) + " has length " +
                 std::to_string(lines[r].size()) + ", expected " + std::to_string(map.width));
    }
    for (int c = 0; c < map.width; ++c) {
      const char ch = lines[r][c];
      const int idx = map.index(r, c);
      switch (ch) {
        case '.':
          break;
        case '#':
          map.cells[idx] = 1;
          break;
        case 'G':
          if (goal >= 0) {
            parse_fail("line " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                       ": duplicate goal 'G'");
          }
          goal = idx;
          break;
        default:
          parse_fail("line " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                     ": invalid character '" + std::string(1, ch) + "'");
      }
    }
  }
  if (goal < 0) parse_fail("no goal cell 'G'");
  map.goal = goal;
  return map;
}

std::string render_map(const GridMap& map) {
  std::string out;
  out.reserve(static_cast<std::size_t>(map.cell_count()) + map.height);
  for (int r = 0; r < map.height; ++r) {
    if (r > 0) out.push_back('\n');
    for (int c = 0; c < map.width; ++c) {
      const int idx = map.index(r, c);
      out.push_back(idx == map.goal ? 'G' : (map.cells[idx] ? '#' : '.'));
    }
  }
  return out;
}

ConstraintReport validate_constraints(const GridMap& map) {
  ConstraintReport report;
  const int n = map.cell_count();
  report.unique_goal_free = map.goal >= 0 && map.goal < n && !map.is_obstacle(map.goal);

  // Flood fill over 4-neighbors from the first free cell.
  int free_total = 0;
  int start = -1;
  for (int i = 0; i < n; ++i) {
    if (!map.is_obstacle(i)) {
      ++free_total;
      if (start < 0) start = i;
    }
  }
  if (free_total > 0) {
    std::vector<std::uint8_t> seen(n, 0);
    std::vector<int> queue{start};
    seen[start] = 1;
    int reached = 0;
    while (!queue.empty()) {
      const int cell = queue.back();
      queue.pop_back();
      ++reached;
      const int r = map.row_of(cell), c = map.col_of(cell);
      for (int a = 0; a < 4; ++a) {
        const int nr = r + kActionDr[a], nc = c + kActionDc[a];
        if (!map.in_bounds(nr, nc)) continue;
        const int ni = map.index(nr, nc);
        if (!seen[ni] && !map.is_obstacle(ni)) {
          seen[ni] = 1;
          queue.push_back(ni);
        }
      }
    }
    report.connected = reached == free_total;
  }

  report.no_2x2_block = true;
  for (int r = 0; r + 1 < map.height && report.no_2x2_block; ++r) {
    for (int c = 0; c + 1 < map.width; ++c) {
      if (map.is_obstacle(map.index(r, c)) && map.is_obstacle(map.index(r, c + 1)) &&
          map.is_obstacle(map.index(r + 1, c)) && map.is_obstacle(map.index(r + 1, c + 1))) {
        report.no_2x2_block = false;
        break;
      }
    }
  }
  return report;
}

GridMap random_map(int width, int height, int goal, double density, RngStream& rng,
                   int max_tries) {
  if (width < 1 || height < 1) throw std::invalid_argument("random_map: empty grid");
  if (goal < 0 || goal >= width * height) throw std::invalid_argument("random_map: goal out of bounds");
  if (density < 0.0 || density > 1.0) throw std::invalid_argument("random_map: density outside [0,1]");
  if (max_tries < 1) throw std::invalid_argument("random_map: max_tries must be >= 1");

  GridMap map;
  map.width = width;
  map.height = height;
  map.goal = goal;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    map.cells.assign(static_cast<std::size_t>(width) * height, 0);
    for (int i = 0; i < width * height; ++i) {
      if (i == goal) continue;
      if (rng.next_double() < density) map.cells[i] = 1;
    }
    if (validate_constraints(map).pass()) return map;
  }
  throw std::runtime_error("random_map: no constraint-valid map in " + std::to_string(max_tries) +
                           " tries (density " + std::to_string(density) + " too high?)");
}

LidarObservation lidar(const GridMap& map, int cell) {
  if (map.is_obstacle(cell)) throw std::invalid_argument("lidar: cell is an obstacle");
  LidarObservation obs;
  const int r0 = map.row_of(cell), c0 = map.col_of(cell);
  for (int d = 0; d < 8; ++d) {
    int steps = 1;
    int r = r0 + kRayDr[d], c = c0 + kRayDc[d];
    while (map.in_bounds(r, c) && !map.is_obstacle(map.index(r, c))) {
      ++steps;
      r += kRayDr[d];
      c += kRayDc[d];
    }
    obs.distances[d] = static_cast<double>(steps);
  }
  return obs;
}

StepResult step(const GridMap& map, const MdpSpec& spec, int cell, Action action) {
  if (map.is_obstacle(cell)) throw std::invalid_argument("step: cell is an obstacle");
  const int a = static_cast<int>(action);
  if (action == Action::Stay) return {cell, spec.reward_penalty, false};
  const int nr = map.row_of(cell) + kActionDr[a];
  const int nc = map.col_of(cell) + kActionDc[a];
  if (!map.in_bounds(nr, nc)) return {cell, spec.reward_penalty, false};
  const int next = map.index(nr, nc);
  if (map.is_obstacle(next)) return {cell, spec.reward_penalty, false};
  if (next == map.goal) return {next, spec.reward_goal, true};
  return {next, spec.reward_default, false};
}

QTable value_iteration(const GridMap& map, const MdpSpec& spec, double vi_tolerance) {
  if (map.is_obstacle(map.goal)) throw std::invalid_argument("value_iteration: goal is an obstacle");
  if (spec.gamma < 0.0 || spec.gamma >= 1.0) throw std::invalid_argument("value_iteration: gamma must be in [0,1)");
  if (vi_tolerance <= 0.0) throw std::invalid_argument("value_iteration: tolerance must be positive");

  QTable table;
  const int n = map.cell_count();
  table.cell_to_free.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!map.is_obstacle(i)) {
      table.cell_to_free[i] = static_cast<int>(table.free_cells.size());
      table.free_cells.push_back(i);
    }
  }
  const int nf = table.free_count();
  table.goal_free_index = table.cell_to_free[map.goal];

  // Per (state, action): successor free index, immediate reward, terminal flag.
  std::vector<int> next(static_cast<std::size_t>(nf) * kActionCount);
  std::vector<double> reward(static_cast<std::size_t>(nf) * kActionCount);
  std::vector<std::uint8_t> terminal(static_cast<std::size_t>(nf) * kActionCount);
  for (int s = 0; s < nf; ++s) {
    for (int a = 0; a < kActionCount; ++a) {
      const std::size_t k = static_cast<std::size_t>(s) * kActionCount + a;
      if (s == table.goal_free_index) {
        next[k] = s;
        reward[k] = 0.0;
        terminal[k] = 1;
        continue;
      }
      const StepResult sr = step(map, spec, table.free_cells[s], static_cast<Action>(a));
      next[k] = table.cell_to_free[sr.next_cell];
      reward[k] = sr.reward;
      terminal[k] = sr.done ? 1 : 0;
    }
  }

  std::vector<double> value(nf, 0.0), fresh(nf, 0.0);
  const double gamma = spec.gamma;
  while (true) {
    double delta = 0.0;
    for (int s = 0; s < nf; ++s) {
      if (s == table.goal_free_index) {
        fresh[s] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      const std::size_t base = static_cast<std::size_t>(s) * kActionCount;
      for (int a = 0; a < kActionCount; ++a) {
        const double q = reward[base + a] + (terminal[base + a] ? 0.0 : gamma * value[next[base + a]]);
        if (q > best) best = q;
      }
      fresh[s] = best;
      delta = std::max(delta, std::abs(best - value[s]));
    }
    value.swap(fresh);
    if (delta < vi_tolerance) break;
  }

  table.values.assign(static_cast<std::size_t>(nf) * kActionCount, 0.0);
  for (int s = 0; s < nf; ++s) {
    if (s == table.goal_free_index) continue;
    const std::size_t base = static_cast<std::size_t>(s) * kActionCount;
    for (int a = 0; a < kActionCount; ++a) {
      table.values[base + a] =
          reward[base + a] + (terminal[base + a] ? 0.0 : gamma * value[next[base + a]]);
    }
  }
  return table;
}

std::vector<std::array<double, kActionCount>> boltzmann_policy(const QTable& q,
                                                               double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("boltzmann_policy: temperature must be > 0");
  std::vector<std::array<double, kActionCount>> rows(q.free_count());
  for (int s = 0; s < q.free_count(); ++s) {
    double hi = q.at(s, 0);
    for (int a = 1; a < kActionCount; ++a) hi = std::max(hi, q.at(s, a));
    double total = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
      rows[s][a] = std::exp((q.at(s, a) - hi) / temperature);
      total += rows[s][a];
    }
    for (int a = 0; a < kActionCount; ++a) rows[s][a] /= total;
  }
  return rows;
}

void save_map(const GridMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_map: cannot open " + path);
  out << render_map(map) << '\n';
  if (!out) throw std::runtime_error("save_map: write failed for " + path);
}

GridMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_map: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_map(buffer.str());
}

}  // namespace dynsleuth::grid
