#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "socnav/dataset.hpp"
#include "socnav/model.hpp"
#include "socnav/nav.hpp"
#include "socnav/scoring.hpp"

namespace socnav {

// ---------------------------------------------------------------------------
// Map providers
// ---------------------------------------------------------------------------

class MapProvider {
 public:
  virtual ~MapProvider() = default;
  virtual std::string name() const = 0;
  // `scene` is in robot frame; returns a robot-centred map.
  virtual CostMap generate(const Scenario& scene) = 0;
  int64_t map_queries() const { return map_queries_; }
  virtual int64_t scorer_queries() const { return 0; }

 protected:
  int64_t map_queries_ = 0;
};

class GmmProvider : public MapProvider {
 public:
  GmmProvider(SocialParams p, int out_n, double out_w)
      : params_(p), out_n_(out_n), out_w_(out_w) {}
  std::string name() const override { return "gmm"; }
  CostMap generate(const Scenario& scene) override {
    ++map_queries_;
    return gmm_costmap(scene, params_, out_n_, out_w_);
  }

 private:
  SocialParams params_;
  int out_n_;
  double out_w_;
};

// Produces maps the slow way: one scalar teacher query per cell.
class TeacherProvider : public MapProvider {
 public:
  TeacherProvider(SocialParams p, int out_n, double out_w)
      : params_(p), out_n_(out_n), out_w_(out_w) {}
  std::string name() const override { return "teacher"; }
  CostMap generate(const Scenario& scene) override {
    ++map_queries_;
    return sample_map(
        scene,
        [this](const Scenario& q) {
          ++scorer_queries_;
          return reference_score(q, params_);
        },
        out_n_, out_w_);
  }
  int64_t scorer_queries() const override { return scorer_queries_; }

 private:
  SocialParams params_;
  int out_n_;
  double out_w_;
  int64_t scorer_queries_ = 0;
};

class ModelProvider : public MapProvider {
 public:
  ModelProvider(const Model& model, GraphConfig graph_cfg, double out_w)
      : model_(model), graph_cfg_(graph_cfg), out_w_(out_w) {}
  std::string name() const override { return "sngnn2d"; }
  CostMap generate(const Scenario& scene) override {
    ++map_queries_;
    return model_.forward(build_scene_graph(scene, graph_cfg_), out_w_);
  }

 private:
  const Model& model_;
  GraphConfig graph_cfg_;
  double out_w_;
};

// ---------------------------------------------------------------------------
// Episode simulation
// ---------------------------------------------------------------------------

struct ControllerConfig {
  double dt = 0.1;
  double v_max = 0.55;
  double w_max = 1.0;
  double replan_interval = 0.5;
  double timeout = 60.0;
  double goal_radius = 0.3;
  double lookahead = 0.5;
  double human_collision_dist = 0.3;
  FuseWeights fuse;

  void check() const {
    if (dt <= 0 || v_max <= 0 || w_max <= 0 || replan_interval < dt ||
        timeout <= 0 || goal_radius <= 0 || lookahead <= 0) {
      throw std::invalid_argument("ControllerConfig: bad values");
    }
  }
};

struct TimedPose {
  double t = 0.0;
  Pose2D pose;
};

struct EpisodeMetrics {
  double tau = 0.0;    // seconds
  double d_t = 0.0;    // meters
  double chc = 0.0;    // radians
  double d_min = 0.0;  // meters
  double si_i = 0.0;   // % of timesteps closer than 0.45 m to a human
  double si_p = 0.0;   // % closer than 1.2 m
  double si_r = 0.0;   // % within 0.5 m of an interaction segment
};

inline constexpr double kIntimateDistance = 0.45;
inline constexpr double kPersonalDistance = 1.2;
inline constexpr double kInteractionDistance = 0.5;

struct EpisodeResult {
  Scenario scenario;  // initial world-frame scene
  std::vector<TimedPose> trajectory;
  std::vector<std::vector<TimedPose>> human_tracks;  // parallel to scenario.humans
  bool reached_goal = false;
  std::string failure_cause;
  EpisodeMetrics metrics;
};

namespace detail {

// Walking humans traverse their waypoint list and ping-pong at the ends;
// standing humans never move.
struct WalkerState {
  std::vector<Vec2> route;
  int target = 1;
  int dir = 1;

  static WalkerState make(const Human& h) {
    WalkerState w;
    w.route.push_back(h.pose.position());
    for (const auto& p : h.waypoints) w.route.push_back(p);
    return w;
  }

  void step(Human& h, double dt) {
    if (!h.walking || route.size() < 2) return;
    double budget = h.speed * dt;
    Vec2 pos = h.pose.position();
    while (budget > 1e-9) {
      const Vec2 goal = route[target];
      const Vec2 delta = goal - pos;
      const double dist = delta.norm();
      if (dist <= budget) {
        pos = goal;
        budget -= dist;
        if (target + dir < 0 || target + dir >= static_cast<int>(route.size())) {
          dir = -dir;
        }
        target += dir;
      } else {
        pos = pos + delta * (budget / dist);
        budget = 0.0;
      }
    }
    const Vec2 heading = route[target] - pos;
    h.pose.x = pos.x;
    h.pose.y = pos.y;
    if (heading.norm() > 1e-9) h.pose.theta = heading.angle();
  }
};

inline std::pair<int, int> nearest_traversable(const NavGrid& grid, Vec2 local,
                                               double max_radius) {
  auto [ci, cj] = grid.local_to_cell(local);
  if (grid.traversable(ci, cj)) return {ci, cj};
  const int r_cells = static_cast<int>(std::ceil(max_radius / grid.resolution()));
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> best_cell{-1, -1};
  for (int i = std::max(0, ci - r_cells); i <= std::min(grid.n - 1, ci + r_cells); ++i) {
    for (int j = std::max(0, cj - r_cells); j <= std::min(grid.n - 1, cj + r_cells); ++j) {
      if (!grid.traversable(i, j)) continue;
      const double d = (grid.cell_local(i, j) - local).squared_norm();
      if (d < best) {
        best = d;
        best_cell = {i, j};
      }
    }
  }
  return best_cell;
}

}  // namespace detail

// Steps the scene at a fixed timestep: humans follow their waypoints, the
// robot replans over fresh provider maps and tracks the path at bounded
// linear/angular speed. Ends on goal, timeout or collision.
inline EpisodeResult run_episode(const Scenario& world, MapProvider& provider,
                                 const ControllerConfig& ctrl) {
  ctrl.check();
  if (world.frame != Frame::world) {
    throw std::invalid_argument("run_episode: scenario must be in world frame");
  }

  EpisodeResult ep;
  ep.scenario = world;
  ep.human_tracks.resize(world.humans.size());

  Scenario scene = world;  // live copy; human poses advance in place
  Pose2D robot = world.robot;
  std::vector<detail::WalkerState> walkers;
  for (const auto& h : scene.humans) walkers.push_back(detail::WalkerState::make(h));

  const int replan_steps = std::max(1, static_cast<int>(std::lround(ctrl.replan_interval / ctrl.dt)));
  const int max_steps = static_cast<int>(std::lround(ctrl.timeout / ctrl.dt));

  auto record = [&](double t) {
    ep.trajectory.push_back({t, robot});
    for (size_t k = 0; k < scene.humans.size(); ++k) {
      ep.human_tracks[k].push_back({t, scene.humans[k].pose});
    }
  };
  record(0.0);

  std::vector<Vec2> path;
  bool provider_failed = false;

  auto replan = [&]() {
    scene.robot = robot;
    Scenario rf = to_robot_frame(scene);
    CostMap map;
    try {
      map = provider.generate(rf);
    } catch (const std::exception& e) {
      provider_failed = true;
      ep.failure_cause = std::string("provider: ") + e.what();
      return;
    }
    const NavGrid grid = fuse_cost(map, rf, robot, ctrl.fuse);
    path.clear();

    const auto start = detail::nearest_traversable(grid, {0.0, 0.0}, 1.0);
    if (start.first < 0) return;  // boxed in; wait for the scene to change

    // Requested goal, clamped to the nearest traversable cell in this window.
    const Vec2 goal_local = rf.goal;
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> goal_cell{-1, -1};
    for (int i = 0; i < grid.n; ++i) {
      for (int j = 0; j < grid.n; ++j) {
        if (!grid.traversable(i, j)) continue;
        const double d = (grid.cell_local(i, j) - goal_local).squared_norm();
        if (d < best) {
          best = d;
          goal_cell = {i, j};
        }
      }
    }
    if (goal_cell.first < 0) return;

    PathResult pr = astar(grid, start, goal_cell);
    if (!pr.found) {
      // Fall back to the reachable cell closest to the goal.
      std::vector<int> parent;
      const auto costs = dijkstra_costs(grid, start, &parent);
      double bd = std::numeric_limits<double>::infinity();
      int bidx = -1;
      for (int idx = 0; idx < grid.n * grid.n; ++idx) {
        if (!std::isfinite(costs[idx])) continue;
        const double d =
            (grid.cell_local(idx / grid.n, idx % grid.n) - goal_local).squared_norm();
        if (d < bd) {
          bd = d;
          bidx = idx;
        }
      }
      if (bidx < 0) return;
      pr.cells.clear();
      for (int idx = bidx; idx != -1; idx = parent[idx]) {
        pr.cells.push_back({idx / grid.n, idx % grid.n});
      }
      std::reverse(pr.cells.begin(), pr.cells.end());
      pr.found = true;
    }
    path.reserve(pr.cells.size());
    for (const auto& [i, j] : pr.cells) path.push_back(grid.cell_world(i, j));
    // Aim for the true goal point once its cell is the path's end.
    const Vec2 end_local = grid.cell_local(pr.cells.back().first, pr.cells.back().second);
    if ((end_local - goal_local).norm() <= 2.0 * grid.resolution()) {
      path.push_back(scene.goal);
    }
  };

  auto collision = [&]() -> std::string {
    const Vec2 p = robot.position();
    for (const auto& h : scene.humans) {
      if ((p - h.pose.position()).norm() < ctrl.human_collision_dist) {
        return "collision: human " + std::to_string(h.id);
      }
    }
    if (!point_in_polygon(p, scene.room) ||
        polygon_boundary_distance(p, scene.room) < ctrl.fuse.robot_radius) {
      return "collision: wall";
    }
    for (const auto& o : scene.objects) {
      if (point_in_oriented_box(p, o.pose, o.width, o.depth, ctrl.fuse.robot_radius)) {
        return "collision: object " + std::to_string(o.id);
      }
    }
    return {};
  };

  for (int step = 0; step < max_steps; ++step) {
    if (step % replan_steps == 0 && !provider_failed) replan();
    if (provider_failed) break;

    for (size_t k = 0; k < scene.humans.size(); ++k) {
      walkers[k].step(scene.humans[k], ctrl.dt);
    }

    if (!path.empty()) {
      // Pure pursuit along the planned polyline.
      size_t nearest = 0;
      double nd = std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < path.size(); ++k) {
        const double d = (path[k] - robot.position()).squared_norm();
        if (d < nd) {
          nd = d;
          nearest = k;
        }
      }
      // Interpolate the target along the polyline so corners are tracked,
      // not cut.
      Vec2 target = path.back();
      double acc = 0.0;
      Vec2 prev = robot.position();
      for (size_t k = nearest; k < path.size(); ++k) {
        const double seg = (path[k] - prev).norm();
        if (acc + seg >= ctrl.lookahead && seg > 1e-9) {
          const double t = (ctrl.lookahead - acc) / seg;
          target = prev + (path[k] - prev) * t;
          break;
        }
        acc += seg;
        prev = path[k];
      }
      const Vec2 to_target = target - robot.position();
      if (to_target.norm() > 1e-6) {
        const double desired = to_target.angle();
        const double err = wrap_angle(desired - robot.theta);
        const double w = std::clamp(err / ctrl.dt, -ctrl.w_max, ctrl.w_max);
        robot.theta = wrap_angle(robot.theta + w * ctrl.dt);
        const double v = std::abs(err) < kPi / 2 ? ctrl.v_max : 0.0;
        robot.x += v * std::cos(robot.theta) * ctrl.dt;
        robot.y += v * std::sin(robot.theta) * ctrl.dt;
      }
    }

    const double t = (step + 1) * ctrl.dt;
    record(t);

    if ((robot.position() - scene.goal).norm() <= ctrl.goal_radius) {
      ep.reached_goal = true;
      break;
    }
    const std::string hit = collision();
    if (!hit.empty()) {
      ep.failure_cause = hit;
      break;
    }
  }
  if (!ep.reached_goal && ep.failure_cause.empty()) ep.failure_cause = "timeout";
  return ep;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline EpisodeMetrics compute_metrics(const EpisodeResult& ep) {
  if (ep.trajectory.empty()) {
    throw std::invalid_argument("compute_metrics: empty trajectory");
  }
  EpisodeMetrics m;
  m.tau = ep.trajectory.back().t;
  for (size_t k = 1; k < ep.trajectory.size(); ++k) {
    m.d_t += (ep.trajectory[k].pose.position() - ep.trajectory[k - 1].pose.position()).norm();
    m.chc += std::abs(wrap_angle(ep.trajectory[k].pose.theta - ep.trajectory[k - 1].pose.theta));
  }

  const size_t steps = ep.trajectory.size();
  size_t intimate = 0, personal = 0, interaction = 0;
  double d_min = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < steps; ++k) {
    const Vec2 p = ep.trajectory[k].pose.position();
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& track : ep.human_tracks) {
      nearest = std::min(nearest, (p - track[k].pose.position()).norm());
    }
    d_min = std::min(d_min, nearest);
    if (nearest < kIntimateDistance) ++intimate;
    if (nearest < kPersonalDistance) ++personal;

    auto endpoint = [&](int id) -> std::optional<Vec2> {
      for (size_t h = 0; h < ep.scenario.humans.size(); ++h) {
        if (ep.scenario.humans[h].id == id) return ep.human_tracks[h][k].pose.position();
      }
      if (const ObjectEntity* o = ep.scenario.find_object(id)) return o->pose.position();
      return std::nullopt;
    };
    for (const auto& it : ep.scenario.interactions) {
      const auto a = endpoint(it.a);
      const auto b = endpoint(it.b);
      if (a && b && dist_point_segment(p, *a, *b) < kInteractionDistance) {
        ++interaction;
        break;
      }
    }
  }
  m.d_min = d_min;
  m.si_i = 100.0 * static_cast<double>(intimate) / static_cast<double>(steps);
  m.si_p = 100.0 * static_cast<double>(personal) / static_cast<double>(steps);
  m.si_r = 100.0 * static_cast<double>(interaction) / static_cast<double>(steps);
  return m;
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"tau",  "d_t",  "chc", "d_min",
                                                 "si_i", "si_p", "si_r"};
  return names;
}

inline double metric_value(const EpisodeMetrics& m, const std::string& name) {
  if (name == "tau") return m.tau;
  if (name == "d_t") return m.d_t;
  if (name == "chc") return m.chc;
  if (name == "d_min") return m.d_min;
  if (name == "si_i") return m.si_i;
  if (name == "si_p") return m.si_p;
  if (name == "si_r") return m.si_r;
  throw std::invalid_argument("unknown metric " + name);
}

struct BenchmarkSummary {
  std::string provider;
  std::string scenario_class;
  int episodes = 0;
  double success_rate = 0.0;  // fraction in [0, 1]
  int failures = 0;
  std::map<std::string, std::pair<double, double>> stats;  // metric -> (mean, std)
  std::vector<EpisodeResult> results;
};

// Runs n seeded episodes of one class; scenario i uses seed mix(seed, i), so
// different providers given the same seed face identical scenes.
inline BenchmarkSummary benchmark(MapProvider& provider, ScenarioClass cls,
                                  int n_episodes, uint64_t seed,
                                  const ControllerConfig& ctrl,
                                  std::function<void(int, const EpisodeResult&)> on_episode = {}) {
  if (n_episodes < 1) throw std::invalid_argument("benchmark: n_episodes must be >= 1");
  BenchmarkSummary sum;
  sum.provider = provider.name();
  sum.scenario_class = to_string(cls);
  sum.episodes = n_episodes;

  std::vector<EpisodeMetrics> metrics;
  int successes = 0;
  for (int e = 0; e < n_episodes; ++e) {
    const Scenario world = generate_scenario(cls, mix_seed(seed, static_cast<uint64_t>(e)));
    EpisodeResult ep = run_episode(world, provider, ctrl);
    ep.metrics = compute_metrics(ep);
    if (ep.reached_goal) {
      ++successes;
    } else {
      ++sum.failures;
    }
    metrics.push_back(ep.metrics);
    if (on_episode) on_episode(e, ep);
    sum.results.push_back(std::move(ep));
  }
  sum.success_rate = static_cast<double>(successes) / n_episodes;

  for (const auto& name : metric_names()) {
    double mean = 0.0;
    for (const auto& m : metrics) mean += metric_value(m, name);
    mean /= metrics.size();
    double var = 0.0;
    for (const auto& m : metrics) {
      const double d = metric_value(m, name) - mean;
      var += d * d;
    }
    var /= metrics.size();  // population variance: n = 1 gives std 0
    sum.stats[name] = {mean, std::sqrt(var)};
  }
  return sum;
}

inline std::string benchmark_csv(const std::vector<BenchmarkSummary>& summaries) {
  std::ostringstream os;
  os << "provider,class,metric,mean,std,n,success_rate\n";
  char buf[160];
  for (const auto& s : summaries) {
    for (const auto& name : metric_names()) {
      const auto& [mean, sd] = s.stats.at(name);
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.9g,%.9g,%d,%.9g\n", s.provider.c_str(),
                    s.scenario_class.c_str(), name.c_str(), mean, sd, s.episodes,
                    s.success_rate);
      os << buf;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Episode trace serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EpisodeResult& ep) {
  nlohmann::json traj = nlohmann::json::array();
  for (const auto& tp : ep.trajectory) {
    traj.push_back({tp.t, tp.pose.x, tp.pose.y, tp.pose.theta});
  }
  nlohmann::json tracks = nlohmann::json::array();
  for (size_t k = 0; k < ep.human_tracks.size(); ++k) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& tp : ep.human_tracks[k]) {
      t.push_back({tp.t, tp.pose.x, tp.pose.y, tp.pose.theta});
    }
    tracks.push_back({{"id", ep.scenario.humans[k].id}, {"track", std::move(t)}});
  }
  return {{"scenario", to_json(ep.scenario)},
          {"reached_goal", ep.reached_goal},
          {"failure_cause", ep.failure_cause},
          {"metrics",
           {{"tau", ep.metrics.tau},
            {"d_t", ep.metrics.d_t},
            {"chc", ep.metrics.chc},
            {"d_min", ep.metrics.d_min},
            {"si_i", ep.metrics.si_i},
            {"si_p", ep.metrics.si_p},
            {"si_r", ep.metrics.si_r}}},
          {"trajectory", std::move(traj)},
          {"humans", std::move(tracks)}};
}

inline uint64_t scenario_hash(const Scenario& s) {
  const std::string dump = to_json(s).dump();
  return fnv1a64(dump.data(), dump.size());
}

}  // namespace socnav
