#include <gtest/gtest.h>

#include "socnav/scoring.hpp"

using namespace socnav;

namespace {

Scenario robot_frame_room(double side = 8.0) {
  Scenario s;
  s.frame = Frame::robot;
  const double h = side / 2;
  s.room = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  s.robot = {0.0, 0.0, 0.0};
  s.goal = {1.0, 1.0};
  return s;
}

Human human_at(int id, double x, double y, double theta) {
  Human h;
  h.id = id;
  h.pose = {x, y, theta};
  return h;
}

}  // namespace

TEST(HumanDiscomfort, OneAtTheHuman) {
  EXPECT_DOUBLE_EQ(human_discomfort({0.0, 0.0}, SocialParams{}), 1.0);
}

TEST(HumanDiscomfort, OneSigmaInFront) {
  const SocialParams p;
  EXPECT_DOUBLE_EQ(human_discomfort({p.sigma_front, 0.0}, p), std::exp(-0.5));
  EXPECT_NEAR(human_discomfort({p.sigma_front, 0.0}, p), 0.6065, 1e-4);
}

TEST(HumanDiscomfort, NegligibleFarAway) {
  EXPECT_LT(human_discomfort({10.0, 0.0}, SocialParams{}), 1e-10);
  EXPECT_LT(human_discomfort({0.0, 10.0}, SocialParams{}), 1e-10);
}

TEST(HumanDiscomfort, BackLobeNarrowerThanFront) {
  const SocialParams p;
  EXPECT_GT(human_discomfort({0.8, 0.0}, p), human_discomfort({-0.8, 0.0}, p));
}

TEST(ReferenceScore, NearPerfectWhenAlone) {
  Scenario s = robot_frame_room(22.0);  // walls far away
  s.humans.push_back(human_at(1, 10.0, 0.0, 0.0));
  EXPECT_GE(reference_score(s, SocialParams{}), 0.999);
}

TEST(ReferenceScore, ZeroOnInteractionSegment) {
  Scenario s = robot_frame_room();
  s.humans.push_back(human_at(1, -1.0, 0.0, 0.0));
  s.humans.push_back(human_at(2, 1.0, 0.0, kPi));
  s.interactions.push_back({InteractionKind::human_human, 1, 2});
  // Robot sits on the midpoint of the segment: d = 0 forces full disruption.
  EXPECT_DOUBLE_EQ(reference_score(s, SocialParams{}), 0.0);
}

TEST(ReferenceScore, ZeroOutsideRoom) {
  Scenario s = robot_frame_room(4.0);
  s = shift_scenario(s, 10.0, 0.0);  // room now far from the origin
  EXPECT_DOUBLE_EQ(reference_score(s, SocialParams{}), 0.0);
}

TEST(ReferenceScore, ZeroWithinWallMargin) {
  Scenario s = robot_frame_room(4.0);
  s = shift_scenario(s, 2.0 - 0.1, 0.0);  // 0.1 m from the right wall
  EXPECT_DOUBLE_EQ(reference_score(s, SocialParams{}), 0.0);
}

TEST(ReferenceScore, TranslationConsistency) {
  const SocialParams p;
  for (uint64_t seed = 0; seed < 25; ++seed) {
    const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_B, seed));
    Rng rng(seed);
    for (int k = 0; k < 8; ++k) {
      const double dx = rng.uniform(-4.0, 4.0);
      const double dy = rng.uniform(-4.0, 4.0);
      const double via_shift = reference_score(shift_scenario(s, dx, dy), p);
      const double direct =
          std::clamp(1.0 - disruption_at(s, {dx, dy}, p), p.intimate_floor, 1.0);
      EXPECT_NEAR(via_shift, direct, 1e-12);
    }
  }
}

TEST(ReferenceScore, FuzzOutputsInUnitInterval) {
  // 1e5 scored scenarios: 20k generated scenes x 5 random robot offsets.
  const SocialParams p;
  uint64_t scored = 0;
  for (uint64_t seed = 0; seed < 20000; ++seed) {
    const auto cls = static_cast<ScenarioClass>(seed % 3);
    const Scenario s = to_robot_frame(generate_scenario(cls, seed));
    Rng rng(seed ^ 0xabcdef);
    for (int k = 0; k < 5; ++k) {
      const Scenario q = shift_scenario(s, rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0));
      const double v = reference_score(q, p);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      ++scored;
    }
  }
  EXPECT_EQ(scored, 100000u);
}

TEST(ReferenceScore, MonotoneAlongRayFromIsolatedHuman) {
  Scenario s = robot_frame_room(40.0);
  s.humans.push_back(human_at(1, 0.0, 0.0, kPi / 3));
  const SocialParams p;
  double prev = -1.0;
  bool saturated = false;
  for (double r = 0.0; r <= 8.0; r += 0.25) {
    const double v = reference_score(shift_scenario(s, -r * 0.6, -r * 0.8), p);
    if (!saturated) {
      EXPECT_GE(v, prev - 1e-12) << "radius " << r;
    }
    if (v >= 1.0 - 1e-12) saturated = true;
    prev = v;
  }
  EXPECT_TRUE(saturated);
}

TEST(GmmCostmap, EmptyRoomInteriorNearOne) {
  const Scenario s = robot_frame_room(8.0);
  const SocialParams p;
  const CostMap map = gmm_costmap(s, p, 73, 10.0);
  for (int i = 0; i < map.n; ++i) {
    for (int j = 0; j < map.n; ++j) {
      const Vec2 c = grid_coords(i, j, map.n, map.w);
      if (point_in_polygon(c, s.room) &&
          polygon_boundary_distance(c, s.room) >= p.wall_margin) {
        EXPECT_GE(map.at(i, j), 0.999);
      } else if (!point_in_polygon(c, s.room)) {
        EXPECT_DOUBLE_EQ(map.at(i, j), 0.0);
      }
    }
  }
}

TEST(GmmCostmap, ZeroAtHumanPosition) {
  Scenario s = robot_frame_room(8.0);
  // Place the human exactly on a lattice point: (i=26, j=41) -> (50/36, 25/36)... use
  // grid_coords directly so the cell lands on the human.
  const Vec2 cell = grid_coords(20, 50, 73, 10.0);
  s.humans.push_back(human_at(1, cell.x, cell.y, 0.7));
  const CostMap map = gmm_costmap(s, SocialParams{}, 73, 10.0);
  EXPECT_DOUBLE_EQ(map.at(20, 50), 0.0);
}

TEST(GmmCostmap, CentreCellEqualsReferenceScore) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_A, seed));
    const SocialParams p;
    const CostMap map = gmm_costmap(s, p, 73, 10.0);
    EXPECT_NEAR(map.centre(), reference_score(s, p), 1e-12);
  }
}

TEST(GmmCostmap, CellByCellMatchesShiftedReference) {
  // Dual route: direct kernel evaluation at the cell vs shifting the whole
  // scene and scoring at the origin.
  const SocialParams p;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_B, seed));
    const int n = 37;  // coarser lattice keeps the oracle loop cheap
    const CostMap map = gmm_costmap(s, p, n, 10.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Vec2 c = grid_coords(i, j, n, 10.0);
        const double oracle = reference_score(shift_scenario(s, c.x, c.y), p);
        EXPECT_NEAR(map.at(i, j), oracle, 1e-12) << i << "," << j;
      }
    }
  }
}

TEST(GmmCostmap, RejectsTinyLattice) {
  EXPECT_THROW(gmm_costmap(robot_frame_room(), SocialParams{}, 1, 10.0),
               std::invalid_argument);
}

TEST(SocialParams, Validation) {
  SocialParams p;
  p.sigma_front = 0.0;
  EXPECT_THROW(p.check(), std::invalid_argument);
  SocialParams q;
  q.intimate_floor = 1.0;
  EXPECT_THROW(q.check(), std::invalid_argument);
}
