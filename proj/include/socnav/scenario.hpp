#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socnav/geometry.hpp"

namespace socnav {

enum class Frame { world, robot };

enum class ScenarioClass { S_A, S_B, S_C };

inline const char* to_string(ScenarioClass c) {
  switch (c) {
    case ScenarioClass::S_A: return "S_A";
    case ScenarioClass::S_B: return "S_B";
    case ScenarioClass::S_C: return "S_C";
  }
  return "?";
}

inline std::optional<ScenarioClass> parse_scenario_class(const std::string& s) {
  if (s == "S_A" || s == "s_a" || s == "A") return ScenarioClass::S_A;
  if (s == "S_B" || s == "s_b" || s == "B") return ScenarioClass::S_B;
  if (s == "S_C" || s == "s_c" || s == "C") return ScenarioClass::S_C;
  return std::nullopt;
}

struct Human {
  int id = 0;
  Pose2D pose;
  bool walking = false;
  double speed = 0.0;                // m/s, 0 if standing
  std::vector<Vec2> waypoints;       // empty if standing
};

struct ObjectEntity {
  int id = 0;
  Pose2D pose;
  double width = 0.0;
  double depth = 0.0;
};

enum class InteractionKind { human_human, human_object };

struct Interaction {
  InteractionKind kind = InteractionKind::human_human;
  int a = 0;  // always a human id
  int b = 0;  // human or object id, per kind
};

struct Scenario {
  Polygon room;
  std::vector<Human> humans;
  std::vector<ObjectEntity> objects;
  std::vector<Interaction> interactions;
  Pose2D robot;
  Vec2 goal;
  Frame frame = Frame::world;

  const Human* find_human(int id) const {
    for (const auto& h : humans)
      if (h.id == id) return &h;
    return nullptr;
  }
  const ObjectEntity* find_object(int id) const {
    for (const auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }
  // Position of an interaction endpoint (human or object).
  std::optional<Vec2> entity_position(int id) const {
    if (const Human* h = find_human(id)) return h->pose.position();
    if (const ObjectEntity* o = find_object(id)) return o->pose.position();
    return std::nullopt;
  }
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON serialization. All lengths in meters, angles in radians.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Pose2D& p) {
  return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}};
}

inline Pose2D pose_from_json(const nlohmann::json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(),
          j.at("theta").get<double>()};
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j;
  j["frame"] = s.frame == Frame::world ? "world" : "robot";
  nlohmann::json room = nlohmann::json::array();
  for (const auto& v : s.room) room.push_back({v.x, v.y});
  j["room"] = std::move(room);
  nlohmann::json humans = nlohmann::json::array();
  for (const auto& h : s.humans) {
    nlohmann::json wp = nlohmann::json::array();
    for (const auto& w : h.waypoints) wp.push_back({w.x, w.y});
    humans.push_back({{"id", h.id},
                      {"pose", to_json(h.pose)},
                      {"walking", h.walking},
                      {"speed", h.speed},
                      {"waypoints", std::move(wp)}});
  }
  j["humans"] = std::move(humans);
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"id", o.id},
                       {"pose", to_json(o.pose)},
                       {"width", o.width},
                       {"depth", o.depth}});
  }
  j["objects"] = std::move(objects);
  nlohmann::json inter = nlohmann::json::array();
  for (const auto& it : s.interactions) {
    inter.push_back(
        {{"kind", it.kind == InteractionKind::human_human ? "human_human"
                                                          : "human_object"},
         {"a", it.a},
         {"b", it.b}});
  }
  j["interactions"] = std::move(inter);
  j["robot"] = to_json(s.robot);
  j["goal"] = {s.goal.x, s.goal.y};
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  const std::string frame = j.at("frame").get<std::string>();
  if (frame == "world") {
    s.frame = Frame::world;
  } else if (frame == "robot") {
    s.frame = Frame::robot;
  } else {
    throw std::runtime_error("scenario: unknown frame '" + frame + "'");
  }
  for (const auto& v : j.at("room")) {
    s.room.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  }
  for (const auto& hj : j.at("humans")) {
    Human h;
    h.id = hj.at("id").get<int>();
    h.pose = pose_from_json(hj.at("pose"));
    h.walking = hj.at("walking").get<bool>();
    h.speed = hj.at("speed").get<double>();
    for (const auto& w : hj.at("waypoints")) {
      h.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    }
    s.humans.push_back(std::move(h));
  }
  for (const auto& oj : j.at("objects")) {
    s.objects.push_back({oj.at("id").get<int>(), pose_from_json(oj.at("pose")),
                         oj.at("width").get<double>(),
                         oj.at("depth").get<double>()});
  }
  for (const auto& ij : j.at("interactions")) {
    Interaction it;
    const std::string kind = ij.at("kind").get<std::string>();
    if (kind == "human_human") {
      it.kind = InteractionKind::human_human;
    } else if (kind == "human_object") {
      it.kind = InteractionKind::human_object;
    } else {
      throw std::runtime_error("scenario: unknown interaction kind '" + kind +
                               "'");
    }
    it.a = ij.at("a").get<int>();
    it.b = ij.at("b").get<int>();
    s.interactions.push_back(it);
  }
  s.robot = pose_from_json(j.at("robot"));
  s.goal = {j.at("goal").at(0).get<double>(), j.at("goal").at(1).get<double>()};
  return s;
}

// ---------------------------------------------------------------------------
// Frame transforms
// ---------------------------------------------------------------------------

// Rigidly maps the scene into the robot's frame: the robot ends at the
// origin facing +x, its left side toward +y.
inline Scenario to_robot_frame(const Scenario& s) {
  if (s.frame != Frame::world) {
    throw std::invalid_argument("to_robot_frame: scenario already in robot frame");
  }
  Scenario out = s;
  const Pose2D r = s.robot;
  auto pt = [&](Vec2 p) { return r.inverse_transform(p); };
  auto pose = [&](const Pose2D& p) {
    Vec2 q = pt(p.position());
    return Pose2D{q.x, q.y, wrap_angle(p.theta - r.theta)};
  };
  for (auto& v : out.room) v = pt(v);
  for (auto& h : out.humans) {
    h.pose = pose(h.pose);
    for (auto& w : h.waypoints) w = pt(w);
  }
  for (auto& o : out.objects) o.pose = pose(o.pose);
  out.goal = pt(s.goal);
  out.robot = {0.0, 0.0, 0.0};
  out.frame = Frame::robot;
  return out;
}

// Translates every non-robot element by (-dx, -dy); equivalent to evaluating
// the scene with the robot displaced to (dx, dy).
inline Scenario shift_scenario(const Scenario& s, double dx, double dy) {
  if (s.frame != Frame::robot) {
    throw std::invalid_argument("shift_scenario: scenario must be in robot frame");
  }
  Scenario out = s;
  const Vec2 d{dx, dy};
  for (auto& v : out.room) v = v - d;
  for (auto& h : out.humans) {
    h.pose.x -= dx;
    h.pose.y -= dy;
    for (auto& w : h.waypoints) w = w - d;
  }
  for (auto& o : out.objects) {
    o.pose.x -= dx;
    o.pose.y -= dy;
  }
  out.goal = out.goal - d;
  return out;
}

// ---------------------------------------------------------------------------
// Validation. Violations are data, not errors.
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> v;
  auto add = [&](std::string msg) { v.push_back(std::move(msg)); };

  if (s.room.size() != 4 && s.room.size() != 6) {
    add("room: polygon must have 4 or 6 vertices, has " +
        std::to_string(s.room.size()));
  }
  if (s.room.size() >= 3 && !polygon_is_simple(s.room)) {
    add("room: polygon is self-intersecting or degenerate");
  }

  std::vector<int> ids;
  for (const auto& h : s.humans) ids.push_back(h.id);
  for (const auto& o : s.objects) ids.push_back(o.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    add("entities: duplicate ids");
  }

  auto inside = [&](Vec2 p) {
    return s.room.size() >= 3 && point_in_polygon(p, s.room);
  };

  for (const auto& h : s.humans) {
    const std::string who = "human " + std::to_string(h.id);
    if (!(h.pose.theta > -kPi - 1e-12 && h.pose.theta <= kPi + 1e-12)) {
      add(who + ": theta outside (-pi, pi]");
    }
    if (h.speed < 0.0) add(who + ": negative speed");
    const bool moving = h.speed > 0.0 && !h.waypoints.empty();
    if (h.walking != moving) {
      add(who + ": walking flag inconsistent with speed/waypoints");
    }
    if (!inside(h.pose.position())) add(who + ": outside room polygon");
  }
  for (const auto& o : s.objects) {
    const std::string who = "object " + std::to_string(o.id);
    if (o.width <= 0.0 || o.depth <= 0.0) add(who + ": non-positive extent");
    if (!inside(o.pose.position())) add(who + ": outside room polygon");
  }
  if (!inside(s.robot.position())) add("robot: outside room polygon");
  if (!inside(s.goal)) add("goal: outside room polygon");

  for (size_t k = 0; k < s.interactions.size(); ++k) {
    const auto& it = s.interactions[k];
    const std::string who = "interaction " + std::to_string(k);
    if (it.a == it.b) add(who + ": a == b");
    if (!s.find_human(it.a)) {
      add(who + ": a (" + std::to_string(it.a) + ") is not a known human");
    }
    if (it.kind == InteractionKind::human_human) {
      if (!s.find_human(it.b)) {
        add(who + ": b (" + std::to_string(it.b) + ") is not a known human");
      }
    } else {
      if (!s.find_object(it.b)) {
        add(who + ": b (" + std::to_string(it.b) + ") is not a known object");
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Random generation
// ---------------------------------------------------------------------------

namespace detail {

constexpr int kMaxAttempts = 1000;

struct RoomSampler {
  const Polygon& room;
  Rng& rng;
  double min_x, max_x, min_y, max_y;

  RoomSampler(const Polygon& r, Rng& g) : room(r), rng(g) {
    min_x = max_x = r[0].x;
    min_y = max_y = r[0].y;
    for (const auto& v : r) {
      min_x = std::min(min_x, v.x);
      max_x = std::max(max_x, v.x);
      min_y = std::min(min_y, v.y);
      max_y = std::max(max_y, v.y);
    }
  }

  // Random interior point at least `margin` from every wall.
  Vec2 point(double margin) {
    for (int a = 0; a < kMaxAttempts; ++a) {
      Vec2 p{rng.uniform(min_x, max_x), rng.uniform(min_y, max_y)};
      if (point_in_polygon(p, room) &&
          polygon_boundary_distance(p, room) >= margin) {
        return p;
      }
    }
    throw GenerationError("room too crowded: no interior point found");
  }
};

inline double clearance(Vec2 p, const std::vector<Vec2>& placed) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : placed) best = std::min(best, (p - q).norm());
  return best;
}

}  // namespace detail

inline Polygon make_room(Rng& rng) {
  const double w = rng.uniform(6.0, 10.0);
  const double h = rng.uniform(6.0, 10.0);
  if (rng.bernoulli(0.5)) {
    // Rectangle, CCW.
    return {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}};
  }
  // L-shape: rectangle with the upper-right quadrant region removed.
  const double cw = rng.uniform(0.35, 0.65) * w;
  const double ch = rng.uniform(0.35, 0.65) * h;
  return {{-w / 2, -h / 2}, {w / 2, -h / 2},        {w / 2, h / 2 - ch},
          {w / 2 - cw, h / 2 - ch}, {w / 2 - cw, h / 2}, {-w / 2, h / 2}};
}

// Generates a random human-populated room. Human counts are fixed per class
// (S_A: 2 standing + 1 walking, S_B: 4+2, S_C: 5+3); standing humans pick up
// a human-human or human-object interaction with probability 0.3.
// Deterministic for a fixed (class, seed).
inline Scenario generate_scenario(ScenarioClass cls, uint64_t seed) {
  Rng rng(mix_seed(seed, static_cast<uint64_t>(cls)));

  int n_stand = 0, n_walk = 0;
  switch (cls) {
    case ScenarioClass::S_A: n_stand = 2; n_walk = 1; break;
    case ScenarioClass::S_B: n_stand = 4; n_walk = 2; break;
    case ScenarioClass::S_C: n_stand = 5; n_walk = 3; break;
  }

  Scenario s;
  s.frame = Frame::world;
  s.room = make_room(rng);
  detail::RoomSampler sampler(s.room, rng);

  const double kEntityMargin = 0.4;
  const double kSeparation = 0.6;
  std::vector<Vec2> placed;

  auto place_separated = [&](double margin, double sep) {
    for (int a = 0; a < detail::kMaxAttempts; ++a) {
      Vec2 p = sampler.point(margin);
      if (detail::clearance(p, placed) >= sep) return p;
    }
    throw GenerationError("room too crowded: separation constraint failed");
  };

  // Objects first; interacting humans are placed relative to them.
  const int n_objects = rng.uniform_int(0, 4);
  for (int k = 0; k < n_objects; ++k) {
    ObjectEntity o;
    o.id = 100 + k;
    Vec2 p = place_separated(0.5, kSeparation);
    o.pose = {p.x, p.y, rng.angle()};
    o.width = rng.uniform(0.4, 1.0);
    o.depth = rng.uniform(0.4, 1.0);
    s.objects.push_back(o);
    placed.push_back(p);
  }

  const int n_humans = n_stand + n_walk;
  for (int k = 0; k < n_humans; ++k) {
    Human h;
    h.id = 1 + k;
    h.walking = k >= n_stand;
    s.humans.push_back(h);
  }

  // Interaction assignment over standing humans; pairs are stored once.
  std::vector<bool> engaged(static_cast<size_t>(n_humans), false);
  std::vector<bool> object_used(s.objects.size(), false);
  for (int k = 0; k < n_stand; ++k) {
    if (engaged[k] || !rng.bernoulli(0.3)) continue;
    std::vector<int> free_partners;
    for (int m = 0; m < n_stand; ++m) {
      if (m != k && !engaged[m]) free_partners.push_back(m);
    }
    std::vector<int> free_objects;
    for (size_t m = 0; m < s.objects.size(); ++m) {
      if (!object_used[m]) free_objects.push_back(static_cast<int>(m));
    }
    const bool can_hh = !free_partners.empty();
    const bool can_ho = !free_objects.empty();
    if (!can_hh && !can_ho) continue;
    bool use_hh = can_hh && (!can_ho || rng.bernoulli(0.5));
    if (use_hh) {
      const int m =
          free_partners[rng.uniform_int(0, static_cast<int>(free_partners.size()) - 1)];
      engaged[k] = engaged[m] = true;
      s.interactions.push_back({InteractionKind::human_human, s.humans[k].id,
                                s.humans[m].id});
    } else {
      const int m =
          free_objects[rng.uniform_int(0, static_cast<int>(free_objects.size()) - 1)];
      object_used[m] = true;
      engaged[k] = true;
      s.interactions.push_back({InteractionKind::human_object, s.humans[k].id,
                                s.objects[m].id});
    }
  }

  // Place interacting groups. Human-human pairs stand 1-2.5 m apart facing
  // each other; a human faces its object from 0.5-2 m away.
  for (const auto& it : s.interactions) {
    Human* a = nullptr;
    for (auto& h : s.humans)
      if (h.id == it.a) a = &h;
    if (it.kind == InteractionKind::human_human) {
      Human* b = nullptr;
      for (auto& h : s.humans)
        if (h.id == it.b) b = &h;
      bool ok = false;
      for (int att = 0; att < detail::kMaxAttempts && !ok; ++att) {
        Vec2 mid = sampler.point(kEntityMargin + 0.5);
        const double d = rng.uniform(1.0, 2.5);
        const double phi = rng.angle();
        const Vec2 u{std::cos(phi), std::sin(phi)};
        const Vec2 pa = mid - u * (d / 2), pb = mid + u * (d / 2);
        if (point_in_polygon(pa, s.room) && point_in_polygon(pb, s.room) &&
            polygon_boundary_distance(pa, s.room) >= kEntityMargin &&
            polygon_boundary_distance(pb, s.room) >= kEntityMargin &&
            detail::clearance(pa, placed) >= kSeparation &&
            detail::clearance(pb, placed) >= kSeparation) {
          a->pose = {pa.x, pa.y, (pb - pa).angle()};
          b->pose = {pb.x, pb.y, (pa - pb).angle()};
          placed.push_back(pa);
          placed.push_back(pb);
          ok = true;
        }
      }
      if (!ok) throw GenerationError("could not place interacting pair");
    } else {
      const ObjectEntity* o = s.find_object(it.b);
      bool ok = false;
      for (int att = 0; att < detail::kMaxAttempts && !ok; ++att) {
        const double d = rng.uniform(0.5, 2.0);
        const double phi = rng.angle();
        const Vec2 p = o->pose.position() + Vec2{std::cos(phi), std::sin(phi)} * d;
        if (point_in_polygon(p, s.room) &&
            polygon_boundary_distance(p, s.room) >= kEntityMargin &&
            detail::clearance(p, placed) >= kSeparation * 0.5) {
          a->pose = {p.x, p.y, (o->pose.position() - p).angle()};
          placed.push_back(p);
          ok = true;
        }
      }
      if (!ok) throw GenerationError("could not place human-object interaction");
    }
  }

  // Remaining standing humans.
  for (int k = 0; k < n_stand; ++k) {
    if (engaged[k]) continue;
    Vec2 p = place_separated(kEntityMargin, kSeparation);
    s.humans[k].pose = {p.x, p.y, rng.angle()};
    placed.push_back(p);
  }

  // Walking humans: start pose plus 2-4 straight-line waypoints inside the
  // room, traversed at 0.4-0.8 m/s.
  for (int k = n_stand; k < n_humans; ++k) {
    Human& h = s.humans[k];
    Vec2 start = place_separated(kEntityMargin, kSeparation);
    const int n_wp = rng.uniform_int(2, 4);
    bool ok = false;
    for (int att = 0; att < detail::kMaxAttempts && !ok; ++att) {
      std::vector<Vec2> wps;
      Vec2 prev = start;
      bool valid = true;
      for (int m = 0; m < n_wp && valid; ++m) {
        Vec2 w = sampler.point(kEntityMargin);
        if ((w - prev).norm() < 0.5 || !segment_in_polygon(prev, w, s.room)) {
          valid = false;
          break;
        }
        wps.push_back(w);
        prev = w;
      }
      if (valid) {
        h.waypoints = std::move(wps);
        ok = true;
      }
    }
    if (!ok) throw GenerationError("could not route walking human");
    h.speed = rng.uniform(0.4, 0.8);
    h.pose = {start.x, start.y, (h.waypoints[0] - start).angle()};
    placed.push_back(start);
  }

  auto segment_clearance = [&](Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& it : s.interactions) {
      auto pa = s.entity_position(it.a);
      auto pb = s.entity_position(it.b);
      if (pa && pb) best = std::min(best, dist_point_segment(p, *pa, *pb));
    }
    return best;
  };
  auto human_clearance = [&](Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : s.humans)
      best = std::min(best, (p - h.pose.position()).norm());
    return best;
  };

  // Robot spawn: clear of walls, personal spaces and interaction capsules.
  {
    bool ok = false;
    for (int att = 0; att < detail::kMaxAttempts && !ok; ++att) {
      Vec2 p = sampler.point(0.65);
      if (human_clearance(p) >= 0.8 && detail::clearance(p, placed) >= kSeparation &&
          segment_clearance(p) >= 0.6) {
        s.robot = {p.x, p.y, rng.angle()};
        ok = true;
      }
    }
    if (!ok) throw GenerationError("could not place robot");
  }

  // Goal: reachable standing spot away from the robot.
  {
    bool ok = false;
    for (int att = 0; att < detail::kMaxAttempts && !ok; ++att) {
      Vec2 p = sampler.point(0.65);
      if ((p - s.robot.position()).norm() >= 1.5 && human_clearance(p) >= 0.9 &&
          detail::clearance(p, placed) >= kSeparation && segment_clearance(p) >= 0.7) {
        s.goal = p;
        ok = true;
      }
    }
    if (!ok) throw GenerationError("could not place goal");
  }

  return s;
}

}  // namespace socnav
