#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socnav/scenario.hpp"

namespace socnav {

// One-hot order is fixed: human, object, room, wall, grid.
enum class NodeKind : int { human = 0, object = 1, room = 2, wall = 3, grid = 4 };

inline constexpr int kNodeKinds = 5;
inline constexpr int kFeatureDim = 21;  // [t(5) | p(4) | o(4) | r(2) | w(4) | g(2)]

// Closed relation set; every edge carries exactly one label.
enum class EdgeRelation : int {
  room_to_human = 0,
  human_to_room = 1,
  room_to_object = 2,
  object_to_room = 3,
  room_to_wall = 4,
  wall_to_room = 5,
  room_to_grid = 6,
  grid_to_room = 7,
  human_human_interaction = 8,
  human_object_interaction = 9,
  object_human_interaction = 10,
  wall_adjacent = 11,
  grid_up = 12,
  grid_down = 13,
  grid_left = 14,
  grid_right = 15,
  entity_grounding = 16,  // entity -> grid
  grid_grounding = 17,    // grid -> entity
  self_loop = 18,
};

inline constexpr int kRelationCount = 19;

inline const char* to_string(EdgeRelation r) {
  static const char* names[kRelationCount] = {
      "room_to_human",       "human_to_room",
      "room_to_object",      "object_to_room",
      "room_to_wall",        "wall_to_room",
      "room_to_grid",        "grid_to_room",
      "human_human_interaction", "human_object_interaction",
      "object_human_interaction", "wall_adjacent",
      "grid_up",             "grid_down",
      "grid_left",           "grid_right",
      "entity_grounding",    "grid_grounding",
      "self_loop"};
  return names[static_cast<int>(r)];
}

inline const char* to_string(NodeKind k) {
  static const char* names[kNodeKinds] = {"human", "object", "room", "wall",
                                          "grid"};
  return names[static_cast<int>(k)];
}

struct GraphConfig {
  int n = 18;                    // grid side node count
  double w = 10.0;               // side of the covered square area, meters
  double max_wall_segment = 2.0; // meters

  void check() const {
    if (n < 2) throw std::invalid_argument("GraphConfig: n must be >= 2");
    if (w <= 0.0) throw std::invalid_argument("GraphConfig: w must be > 0");
    if (max_wall_segment <= 0.0) {
      throw std::invalid_argument("GraphConfig: max_wall_segment must be > 0");
    }
  }
};

// Metric coordinates of lattice node (i, j); the lattice is robot-centric
// with row 0 ahead of the robot.
inline Vec2 grid_coords(int i, int j, int n, double w) {
  if (i < 0 || i >= n || j < 0 || j >= n) {
    throw std::invalid_argument("grid_coords: index out of range");
  }
  const int c = (n - 1) / 2;
  const double x = w * static_cast<double>(c - i) / (n - 1);
  const double y = w * static_cast<double>(j - c) / (n - 1);
  return {x, y};
}

struct WallSegment {
  Vec2 p1, p2;
  Vec2 midpoint;
  double theta = 0.0;  // inward normal direction of the owning edge
};

// Splits each polygon edge into ceil(len / max_len) equal pieces, in polygon
// order. The polygon is normalized to CCW so the inward normal is the left
// normal of each edge.
inline std::vector<WallSegment> segment_walls(const Polygon& room,
                                              double max_len) {
  if (max_len <= 0.0) throw std::invalid_argument("segment_walls: max_len <= 0");
  Polygon poly = room;
  if (!polygon_is_ccw(poly)) std::reverse(poly.begin(), poly.end());
  std::vector<WallSegment> out;
  const size_t n = poly.size();
  for (size_t e = 0; e < n; ++e) {
    const Vec2 a = poly[e];
    const Vec2 b = poly[(e + 1) % n];
    const double len = (b - a).norm();
    if (len < 1e-12) throw std::runtime_error("segment_walls: zero-length edge");
    const int pieces = static_cast<int>(std::ceil(len / max_len));
    const Vec2 dir = (b - a) * (1.0 / len);
    const Vec2 inward{-dir.y, dir.x};
    for (int k = 0; k < pieces; ++k) {
      WallSegment seg;
      seg.p1 = a + (b - a) * (static_cast<double>(k) / pieces);
      seg.p2 = a + (b - a) * (static_cast<double>(k + 1) / pieces);
      seg.midpoint = (seg.p1 + seg.p2) * 0.5;
      seg.theta = inward.angle();
      out.push_back(seg);
    }
  }
  return out;
}

using Feature = std::array<double, kFeatureDim>;

namespace detail {

inline Feature zero_feature() {
  Feature f{};
  return f;
}

}  // namespace detail

// Feature layout: one-hot kind, then the metric sub-vector matching the kind;
// sub-vectors for other kinds stay zero.
//   human: p = (x, y, cos th, sin th) at [5..8]
//   object: o = same shape at [9..12]
//   room: r = (human count, count / 10) at [13..14]
//   wall: w = segment (x, y, cos th, sin th) at [15..18]
//   grid: g = (x, y) at [19..20]
inline Feature make_human_feature(const Pose2D& pose) {
  Feature f = detail::zero_feature();
  f[static_cast<int>(NodeKind::human)] = 1.0;
  f[5] = pose.x;
  f[6] = pose.y;
  f[7] = std::cos(pose.theta);
  f[8] = std::sin(pose.theta);
  return f;
}

inline Feature make_object_feature(const Pose2D& pose) {
  Feature f = detail::zero_feature();
  f[static_cast<int>(NodeKind::object)] = 1.0;
  f[9] = pose.x;
  f[10] = pose.y;
  f[11] = std::cos(pose.theta);
  f[12] = std::sin(pose.theta);
  return f;
}

inline Feature make_room_feature(int human_count) {
  Feature f = detail::zero_feature();
  f[static_cast<int>(NodeKind::room)] = 1.0;
  f[13] = static_cast<double>(human_count);
  f[14] = static_cast<double>(human_count) / 10.0;
  return f;
}

inline Feature make_wall_feature(const WallSegment& seg) {
  Feature f = detail::zero_feature();
  f[static_cast<int>(NodeKind::wall)] = 1.0;
  f[15] = seg.midpoint.x;
  f[16] = seg.midpoint.y;
  f[17] = std::cos(seg.theta);
  f[18] = std::sin(seg.theta);
  return f;
}

inline Feature make_grid_feature(Vec2 coords) {
  Feature f = detail::zero_feature();
  f[static_cast<int>(NodeKind::grid)] = 1.0;
  f[19] = coords.x;
  f[20] = coords.y;
  return f;
}

struct GraphNode {
  int id = 0;
  NodeKind kind = NodeKind::grid;
  Feature feature{};
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  EdgeRelation relation = EdgeRelation::self_loop;
};

struct SceneGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<int> grid_index;  // (i * n + j) -> node id
  int grid_n = 0;
  double grid_w = 0.0;
  std::vector<std::string> warnings;

  int grid_node(int i, int j) const { return grid_index[i * grid_n + j]; }
};

inline nlohmann::json to_json(const SceneGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"feature", n.feature}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", to_string(e.relation)}});
  }
  return {{"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"grid_n", g.grid_n},
          {"grid_w", g.grid_w}};
}

// Builds the full heterogeneous graph: one room node, a node per human,
// object and wall segment, and an n x n lattice of grid nodes. Entities are
// grounded to their nearest grid node; the room node links to everything;
// every node carries a self-loop.
inline SceneGraph build_scene_graph(const Scenario& s, const GraphConfig& cfg) {
  cfg.check();
  if (s.frame != Frame::robot) {
    throw std::invalid_argument("build_scene_graph: scenario must be in robot frame");
  }

  SceneGraph g;
  g.grid_n = cfg.n;
  g.grid_w = cfg.w;

  const int human_count = static_cast<int>(s.humans.size());
  g.nodes.push_back({0, NodeKind::room, make_room_feature(human_count)});

  std::vector<int> human_node(s.humans.size());
  for (size_t k = 0; k < s.humans.size(); ++k) {
    human_node[k] = static_cast<int>(g.nodes.size());
    g.nodes.push_back({human_node[k], NodeKind::human,
                       make_human_feature(s.humans[k].pose)});
  }
  std::vector<int> object_node(s.objects.size());
  for (size_t k = 0; k < s.objects.size(); ++k) {
    object_node[k] = static_cast<int>(g.nodes.size());
    g.nodes.push_back({object_node[k], NodeKind::object,
                       make_object_feature(s.objects[k].pose)});
  }

  const auto walls = segment_walls(s.room, cfg.max_wall_segment);
  std::vector<int> wall_node(walls.size());
  for (size_t k = 0; k < walls.size(); ++k) {
    wall_node[k] = static_cast<int>(g.nodes.size());
    g.nodes.push_back({wall_node[k], NodeKind::wall, make_wall_feature(walls[k])});
  }

  const int grid_base = static_cast<int>(g.nodes.size());
  g.grid_index.assign(static_cast<size_t>(cfg.n) * cfg.n, -1);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.n; ++j) {
      const int id = grid_base + i * cfg.n + j;
      g.grid_index[i * cfg.n + j] = id;
      g.nodes.push_back({id, NodeKind::grid,
                         make_grid_feature(grid_coords(i, j, cfg.n, cfg.w))});
    }
  }

  auto add_edge = [&](int src, int dst, EdgeRelation r) {
    g.edges.push_back({src, dst, r});
  };

  // Room <-> every other node.
  for (size_t k = 0; k < human_node.size(); ++k) {
    add_edge(0, human_node[k], EdgeRelation::room_to_human);
    add_edge(human_node[k], 0, EdgeRelation::human_to_room);
  }
  for (size_t k = 0; k < object_node.size(); ++k) {
    add_edge(0, object_node[k], EdgeRelation::room_to_object);
    add_edge(object_node[k], 0, EdgeRelation::object_to_room);
  }
  for (size_t k = 0; k < wall_node.size(); ++k) {
    add_edge(0, wall_node[k], EdgeRelation::room_to_wall);
    add_edge(wall_node[k], 0, EdgeRelation::wall_to_room);
  }
  for (int idx = 0; idx < cfg.n * cfg.n; ++idx) {
    add_edge(0, grid_base + idx, EdgeRelation::room_to_grid);
    add_edge(grid_base + idx, 0, EdgeRelation::grid_to_room);
  }

  // Interactions. Human-human pairs are symmetric; human-object links get a
  // distinct relation per direction.
  auto node_of_entity = [&](int entity_id) -> int {
    for (size_t k = 0; k < s.humans.size(); ++k) {
      if (s.humans[k].id == entity_id) return human_node[k];
    }
    for (size_t k = 0; k < s.objects.size(); ++k) {
      if (s.objects[k].id == entity_id) return object_node[k];
    }
    throw std::invalid_argument("build_scene_graph: interaction references unknown id " +
                                std::to_string(entity_id));
  };
  for (const auto& it : s.interactions) {
    const int a = node_of_entity(it.a);
    const int b = node_of_entity(it.b);
    if (it.kind == InteractionKind::human_human) {
      add_edge(a, b, EdgeRelation::human_human_interaction);
      add_edge(b, a, EdgeRelation::human_human_interaction);
    } else {
      add_edge(a, b, EdgeRelation::human_object_interaction);
      add_edge(b, a, EdgeRelation::object_human_interaction);
    }
  }

  // Consecutive wall segments around the outline.
  for (size_t k = 0; k < wall_node.size(); ++k) {
    const size_t m = (k + 1) % wall_node.size();
    add_edge(wall_node[k], wall_node[m], EdgeRelation::wall_adjacent);
    add_edge(wall_node[m], wall_node[k], EdgeRelation::wall_adjacent);
  }

  // Grid lattice, direction-labelled (row 0 is ahead of the robot).
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.n; ++j) {
      const int here = grid_base + i * cfg.n + j;
      if (i > 0) add_edge(here, grid_base + (i - 1) * cfg.n + j, EdgeRelation::grid_up);
      if (i < cfg.n - 1)
        add_edge(here, grid_base + (i + 1) * cfg.n + j, EdgeRelation::grid_down);
      if (j > 0) add_edge(here, grid_base + i * cfg.n + (j - 1), EdgeRelation::grid_left);
      if (j < cfg.n - 1)
        add_edge(here, grid_base + i * cfg.n + (j + 1), EdgeRelation::grid_right);
    }
  }

  // Grounding: each entity links bidirectionally with its nearest grid node
  // (ties broken by lowest (i, j) row-major). Positions beyond the covered
  // area clamp to the lattice boundary.
  const double half_span =
      cfg.w * static_cast<double>((cfg.n - 1) / 2) / (cfg.n - 1);
  auto ground = [&](int node_id, Vec2 p) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.n; ++i) {
      for (int j = 0; j < cfg.n; ++j) {
        const Vec2 c = grid_coords(i, j, cfg.n, cfg.w);
        const double d = (c - p).squared_norm();
        if (d < best_d) {
          best_d = d;
          best = grid_base + i * cfg.n + j;
        }
      }
    }
    if (std::abs(p.x) > half_span + 1e-9 || std::abs(p.y) > half_span + 1e-9) {
      g.warnings.push_back("entity node " + std::to_string(node_id) +
                           " outside grid area; grounded to boundary");
    }
    add_edge(node_id, best, EdgeRelation::entity_grounding);
    add_edge(best, node_id, EdgeRelation::grid_grounding);
  };
  for (size_t k = 0; k < s.humans.size(); ++k) {
    ground(human_node[k], s.humans[k].pose.position());
  }
  for (size_t k = 0; k < s.objects.size(); ++k) {
    ground(object_node[k], s.objects[k].pose.position());
  }
  for (size_t k = 0; k < walls.size(); ++k) {
    ground(wall_node[k], walls[k].midpoint);
  }

  for (const auto& n : g.nodes) add_edge(n.id, n.id, EdgeRelation::self_loop);

  return g;
}

}  // namespace socnav
