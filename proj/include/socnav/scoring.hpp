#pragma once

#include <algorithm>
#include <cmath>

#include "socnav/cost_map.hpp"
#include "socnav/scene_graph.hpp"
#include "socnav/scenario.hpp"

namespace socnav {

// Kernel widths for the analytic disruption model: an asymmetric Gaussian
// personal space per human, a capsule kernel along interaction segments and
// a hard exclusion band along walls.
struct SocialParams {
  double sigma_front = 1.0;
  double sigma_side = 0.6;
  double sigma_back = 0.5;
  double interaction_halfwidth = 0.5;
  double wall_margin = 0.35;
  double intimate_floor = 0.0;  // lower bound on emitted scores

  void check() const {
    if (sigma_front <= 0 || sigma_side <= 0 || sigma_back <= 0 ||
        interaction_halfwidth <= 0 || wall_margin <= 0) {
      throw std::invalid_argument("SocialParams: lengths must be > 0");
    }
    if (intimate_floor < 0.0 || intimate_floor >= 1.0) {
      throw std::invalid_argument("SocialParams: intimate_floor must be in [0, 1)");
    }
  }
};

// Discomfort caused at position `rel` expressed in the human's frame (human
// at origin facing +x). 1 at the human, decaying with distance; the front
// lobe is wider than the back one.
inline double human_discomfort(Vec2 rel, const SocialParams& p) {
  const double sx = rel.x >= 0.0 ? p.sigma_front : p.sigma_back;
  const double q = rel.x * rel.x / (2.0 * sx * sx) +
                   rel.y * rel.y / (2.0 * p.sigma_side * p.sigma_side);
  return std::exp(-q);
}

// Worst-offender disruption at query point `q`, in the scenario's own frame:
// max over personal spaces, interaction capsules and the wall band.
inline double disruption_at(const Scenario& s, Vec2 q, const SocialParams& p) {
  double d = 0.0;
  for (const auto& h : s.humans) {
    const Vec2 rel = h.pose.inverse_transform(q);
    d = std::max(d, human_discomfort(rel, p));
  }
  for (const auto& it : s.interactions) {
    const auto pa = s.entity_position(it.a);
    const auto pb = s.entity_position(it.b);
    if (!pa || !pb) continue;
    const double dist = dist_point_segment(q, *pa, *pb);
    d = std::max(d, std::exp(-dist * dist /
                             (2.0 * p.interaction_halfwidth * p.interaction_halfwidth)));
  }
  if (!point_in_polygon(q, s.room) ||
      polygon_boundary_distance(q, s.room) < p.wall_margin) {
    d = 1.0;
  }
  return d;
}

// Scalar comfort score for the robot's current position: 1 = no disruption,
// 0 = maximal disruption. This is the bootstrapping teacher.
inline double reference_score(const Scenario& s, const SocialParams& p) {
  if (s.frame != Frame::robot) {
    throw std::invalid_argument("reference_score: scenario must be in robot frame");
  }
  const double v = 1.0 - disruption_at(s, {0.0, 0.0}, p);
  return std::clamp(v, p.intimate_floor, 1.0);
}

// Gaussian-mixture baseline map: the same kernels evaluated directly at each
// cell position instead of at a shifted robot.
inline CostMap gmm_costmap(const Scenario& s, const SocialParams& p, int out_n,
                           double out_w) {
  if (s.frame != Frame::robot) {
    throw std::invalid_argument("gmm_costmap: scenario must be in robot frame");
  }
  if (out_n < 2) throw std::invalid_argument("gmm_costmap: out_n must be >= 2");
  CostMap map(out_n, out_w);
  for (int i = 0; i < out_n; ++i) {
    for (int j = 0; j < out_n; ++j) {
      const Vec2 c = grid_coords(i, j, out_n, out_w);
      map.at(i, j) = std::clamp(1.0 - disruption_at(s, c, p), p.intimate_floor, 1.0);
    }
  }
  return map;
}

}  // namespace socnav
