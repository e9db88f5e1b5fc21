#pragma once

#include <optional>
#include <queue>
#include <vector>

#include "socnav/cost_map.hpp"
#include "socnav/scenario.hpp"
#include "socnav/scene_graph.hpp"

namespace socnav {

struct FuseWeights {
  double cost_floor = 0.05;
  double lambda = 1.0;
  double lethal_threshold = 0.05;
  double robot_radius = 0.25;
  // Extra lethal inflation beyond the physical radius, absorbing cell
  // discretization and path-tracking error.
  double inflation_margin = 0.2;
};

// Planning grid over the same area as the cost map. Traversable cells carry
// cost >= cost_floor so the octile heuristic stays admissible.
struct NavGrid {
  int n = 0;
  double w = 0.0;
  double cost_floor = 0.05;
  Pose2D robot_world;              // registration of the robot-centred grid
  std::vector<double> cost;        // row-major
  std::vector<uint8_t> lethal;

  double resolution() const { return w / (n - 1); }
  int index(int i, int j) const { return i * n + j; }
  bool traversable(int i, int j) const { return !lethal[index(i, j)]; }

  Vec2 cell_local(int i, int j) const { return grid_coords(i, j, n, w); }
  Vec2 cell_world(int i, int j) const { return robot_world.transform(cell_local(i, j)); }

  // Nearest lattice cell to a robot-frame point, clamped into the grid.
  std::pair<int, int> local_to_cell(Vec2 p) const {
    const int c = (n - 1) / 2;
    const double step = w / (n - 1);
    int i = c - static_cast<int>(std::lround(p.x / step));
    int j = c + static_cast<int>(std::lround(p.y / step));
    i = std::clamp(i, 0, n - 1);
    j = std::clamp(j, 0, n - 1);
    return {i, j};
  }
};

// Combines a social map with scenario obstacles: cell cost = floor +
// lambda * (1 - score); walls, object footprints and near-zero-score cells
// become lethal. The scenario must be in the robot frame used by `map`.
inline NavGrid fuse_cost(const CostMap& map, const Scenario& s,
                         const Pose2D& robot_world, const FuseWeights& wts) {
  NavGrid grid;
  grid.n = map.n;
  grid.w = map.w;
  grid.cost_floor = wts.cost_floor;
  grid.robot_world = robot_world;
  grid.cost.assign(static_cast<size_t>(map.n) * map.n, wts.cost_floor);
  grid.lethal.assign(static_cast<size_t>(map.n) * map.n, 0);

  const double inflate = wts.robot_radius + wts.inflation_margin;
  for (int i = 0; i < map.n; ++i) {
    for (int j = 0; j < map.n; ++j) {
      const Vec2 p = grid.cell_local(i, j);
      const double v = map.at(i, j);
      bool lethal = v < wts.lethal_threshold;
      if (!lethal && (!point_in_polygon(p, s.room) ||
                      polygon_boundary_distance(p, s.room) < inflate)) {
        lethal = true;
      }
      if (!lethal) {
        for (const auto& o : s.objects) {
          if (point_in_oriented_box(p, o.pose, o.width, o.depth, inflate)) {
            lethal = true;
            break;
          }
        }
      }
      const int idx = grid.index(i, j);
      grid.lethal[idx] = lethal ? 1 : 0;
      grid.cost[idx] = wts.cost_floor + wts.lambda * (1.0 - v);
    }
  }
  return grid;
}

struct PathResult {
  bool found = false;
  std::vector<std::pair<int, int>> cells;
  double cost = 0.0;
};

struct AStarOptions {
  // When set (test mode), every expansion asserts h(node) <= remaining[node].
  const std::vector<double>* true_remaining = nullptr;
  std::vector<int>* expansions = nullptr;
};

namespace detail {

inline constexpr double kSqrt2 = 1.41421356237309514547;

struct AStarEntry {
  double f, h;
  int idx;
  bool operator>(const AStarEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return idx > o.idx;
  }
};

inline double octile(int i0, int j0, int i1, int j1) {
  const double dx = std::abs(i0 - i1);
  const double dy = std::abs(j0 - j1);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

}  // namespace detail

// Minimum-cost 8-connected path; entering cell c costs step_length * cost(c).
// The heuristic is octile distance scaled by cost_floor. Deterministic
// tie-breaking by (f, h, cell index).
inline PathResult astar(const NavGrid& grid, std::pair<int, int> start,
                        std::pair<int, int> goal, const AStarOptions& opts = {}) {
  PathResult result;
  const int n = grid.n;
  const int s = grid.index(start.first, start.second);
  const int t = grid.index(goal.first, goal.second);
  if (!grid.traversable(start.first, start.second) ||
      !grid.traversable(goal.first, goal.second)) {
    return result;
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<size_t>(n) * n, inf);
  std::vector<int> parent(static_cast<size_t>(n) * n, -1);
  std::vector<uint8_t> closed(static_cast<size_t>(n) * n, 0);

  auto heuristic = [&](int idx) {
    return detail::octile(idx / n, idx % n, goal.first, goal.second) * grid.cost_floor;
  };

  std::priority_queue<detail::AStarEntry, std::vector<detail::AStarEntry>,
                      std::greater<detail::AStarEntry>>
      open;
  g[s] = 0.0;
  open.push({heuristic(s), heuristic(s), s});

  static constexpr int di[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dj[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

  while (!open.empty()) {
    const auto cur = open.top();
    open.pop();
    if (closed[cur.idx]) continue;
    closed[cur.idx] = 1;
    if (opts.expansions) opts.expansions->push_back(cur.idx);
    if (opts.true_remaining) {
      if (cur.h > (*opts.true_remaining)[cur.idx] + 1e-9) {
        throw std::logic_error("astar: heuristic exceeded true remaining cost");
      }
    }
    if (cur.idx == t) break;
    const int ci = cur.idx / n;
    const int cj = cur.idx % n;
    for (int d = 0; d < 8; ++d) {
      const int ni = ci + di[d];
      const int nj = cj + dj[d];
      if (ni < 0 || ni >= n || nj < 0 || nj >= n) continue;
      if (!grid.traversable(ni, nj)) continue;
      const int nidx = grid.index(ni, nj);
      if (closed[nidx]) continue;
      const double step = (di[d] != 0 && dj[d] != 0) ? detail::kSqrt2 : 1.0;
      const double ng = g[cur.idx] + step * grid.cost[nidx];
      if (ng < g[nidx]) {
        g[nidx] = ng;
        parent[nidx] = cur.idx;
        const double h = heuristic(nidx);
        open.push({ng + h, h, nidx});
      }
    }
  }

  if (g[t] == inf) return result;
  result.found = true;
  result.cost = g[t];
  for (int idx = t; idx != -1; idx = parent[idx]) {
    result.cells.push_back({idx / n, idx % n});
  }
  std::reverse(result.cells.begin(), result.cells.end());
  return result;
}

// Full cost-to-come field from `start`; used to pick a reachable fallback
// goal when the requested one is closed off.
inline std::vector<double> dijkstra_costs(const NavGrid& grid, std::pair<int, int> start,
                                          std::vector<int>* parent_out = nullptr) {
  const int n = grid.n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<size_t>(n) * n, inf);
  std::vector<int> parent(static_cast<size_t>(n) * n, -1);
  std::vector<uint8_t> closed(static_cast<size_t>(n) * n, 0);
  if (!grid.traversable(start.first, start.second)) {
    if (parent_out) *parent_out = parent;
    return g;
  }
  std::priority_queue<detail::AStarEntry, std::vector<detail::AStarEntry>,
                      std::greater<detail::AStarEntry>>
      open;
  const int s = grid.index(start.first, start.second);
  g[s] = 0.0;
  open.push({0.0, 0.0, s});
  static constexpr int di[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dj[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  while (!open.empty()) {
    const auto cur = open.top();
    open.pop();
    if (closed[cur.idx]) continue;
    closed[cur.idx] = 1;
    const int ci = cur.idx / n;
    const int cj = cur.idx % n;
    for (int d = 0; d < 8; ++d) {
      const int ni = ci + di[d];
      const int nj = cj + dj[d];
      if (ni < 0 || ni >= n || nj < 0 || nj >= n) continue;
      if (!grid.traversable(ni, nj)) continue;
      const int nidx = grid.index(ni, nj);
      if (closed[nidx]) continue;
      const double step = (di[d] != 0 && dj[d] != 0) ? detail::kSqrt2 : 1.0;
      const double ng = g[cur.idx] + step * grid.cost[nidx];
      if (ng < g[nidx]) {
        g[nidx] = ng;
        parent[nidx] = cur.idx;
        open.push({ng, 0.0, nidx});
      }
    }
  }
  if (parent_out) *parent_out = parent;
  return g;
}

}  // namespace socnav
