#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mrtmp/rng.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/world.hpp"
#include "oracles.hpp"

using namespace mrtmp;

namespace {

ObjectDisc disc(const std::string& id, double x, double y, double r = 0.03, ObjectKind kind = ObjectKind::clutter) {
  return {id, {x, y}, r, kind, ObjectStatus::on_table};
}

// One robot at (-0.1, 0.4) looking along +x at a target on the center line.
WorkspaceModel line_world(double target_x, std::vector<ObjectDisc> clutter = {}) {
  clutter.insert(clutter.begin(), disc("t", target_x, 0.4, 0.03, ObjectKind::target));
  return build_world({0.0, 0.0, 1.0, 0.8}, std::move(clutter), 1, 0);
}

std::set<std::string> as_set(const std::vector<ObjectId>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(GraspOffsets, NineteenSamplesEndingAtHalfPi) {
  const auto g = grasp_offsets(kDefaultAngleStep);
  ASSERT_EQ(g.size(), 19u);
  EXPECT_DOUBLE_EQ(g.front(), -kPi / 2);
  EXPECT_DOUBLE_EQ(g.back(), kPi / 2);
  EXPECT_THROW(grasp_offsets(0.0), std::invalid_argument);
}

TEST(FeasibleGraspAngles, MidReachTargetHasFullFan) {
  // 0.4 m from the base: every offset stays inside the reach annulus
  const auto w = line_world(0.3);
  const auto fan = feasible_grasp_angles(w, "r1", "t");
  EXPECT_EQ(fan.valid_angles.size(), 19u);
  EXPECT_DOUBLE_EQ(fan.alpha, kPi / 2);
  EXPECT_DOUBLE_EQ(fan.beta, -kPi / 2);
  EXPECT_NEAR(fan.axis, kPi, 1e-12);
  const auto expected = oracle::fan_offsets(w, w.robots[0], w.object("t"));
  EXPECT_EQ(expected.size(), 19u);
}

TEST(FeasibleGraspAngles, OutOfReachThrows) {
  // farther than reach_max + radius + ee from the base
  const auto w = line_world(0.8);
  EXPECT_THROW(feasible_grasp_angles(w, "r1", "t"), NoFeasibleGrasp);
}

TEST(FeasibleGraspAngles, NearReachLimitOnlyHeadOn) {
  // Head-on pose sits 0.7499 m from the base; the 10-degree poses are at about 0.7509 m.
  const double standoff = 0.03 + 0.025 + 0.005;
  const double x = -0.1 + 0.7499 + standoff;
  const auto w = line_world(x);
  const auto fan = feasible_grasp_angles(w, "r1", "t");
  ASSERT_EQ(fan.valid_angles.size(), 1u);
  EXPECT_DOUBLE_EQ(fan.alpha, 0.0);
  EXPECT_DOUBLE_EQ(fan.beta, 0.0);
  const auto oracle_fan = oracle::fan_offsets(w, w.robots[0], w.object("t"));
  ASSERT_EQ(oracle_fan.size(), 1u);
  EXPECT_NEAR(oracle_fan[0], 0.0, 1e-12);
}

TEST(FeasibleGraspAngles, AgreesWithAnnulusOracle) {
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const auto w = generate_scenario(1 + rng.below(10), 1, 1, rng.next());
    WorkspaceModel v = w;
    auto& target = v.object(v.target_ids().front());
    target.center = {rng.uniform(0.03, 0.97), rng.uniform(0.03, 0.77)};
    const auto expected = oracle::fan_offsets(v, v.robots[0], target);
    if (expected.empty()) {
      EXPECT_THROW(feasible_grasp_angles(v, "r1", target.id), NoFeasibleGrasp);
      continue;
    }
    const auto fan = feasible_grasp_angles(v, "r1", target.id);
    ASSERT_EQ(fan.valid_angles.size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_NEAR(fan.valid_angles[k], expected[k], 1e-9);
  }
}

TEST(FeasibleGraspAngles, ClutterIsIgnored) {
  const auto empty = line_world(0.3);
  const auto cluttered = line_world(0.3, {disc("a", 0.24, 0.4), disc("b", 0.3, 0.46), disc("c", 0.3, 0.34)});
  EXPECT_EQ(feasible_grasp_angles(empty, "r1", "t"), feasible_grasp_angles(cluttered, "r1", "t"));
}

TEST(FeasibleGraspAngles, RejectsMissingTarget) {
  auto w = line_world(0.3);
  EXPECT_THROW(feasible_grasp_angles(w, "r1", "nope"), std::invalid_argument);
  w.objects[0].status = ObjectStatus::retrieved;
  EXPECT_THROW(feasible_grasp_angles(w, "r1", "t"), std::invalid_argument);
}

TEST(SelectionTriangle, NoClutterSelectsNothing) {
  const auto w = line_world(0.5);
  const auto fan = feasible_grasp_angles(w, "r1", "t");
  const auto tri = build_selection_triangle(w, "r1", fan);
  EXPECT_TRUE(tri.selected.empty());
  EXPECT_DOUBLE_EQ(tri.ray_length, grasp_standoff(0.03, 0.025));
  EXPECT_EQ(tri.vertices[0], (Vec2{0.5, 0.4}));
  EXPECT_DOUBLE_EQ(tri.inflation, 0.025);
}

TEST(SelectionTriangle, OnAxisObstacleSelected) {
  const auto w = line_world(0.5, {disc("a", 0.3, 0.4)});
  const auto fan = feasible_grasp_angles(w, "r1", "t");
  ASSERT_DOUBLE_EQ(fan.alpha, kPi / 2);
  ASSERT_DOUBLE_EQ(fan.beta, -kPi / 2);
  EXPECT_EQ(as_set(select_obstacles(w, "r1", "t")), (std::set<std::string>{"a"}));
  const auto o = oracle::selection(w, "r1", "t");
  ASSERT_EQ(o.variants.size(), 1u);
  EXPECT_EQ(o.variants[0].selected, (std::set<std::string>{"a"}));
}

TEST(SelectionTriangle, ObstacleBehindTargetIgnored) {
  const auto w = line_world(0.5, {disc("b", 0.7, 0.4)});
  EXPECT_TRUE(select_obstacles(w, "r1", "t").empty());
  EXPECT_TRUE(oracle::selection(w, "r1", "t").variants.at(0).selected.empty());
}

TEST(SelectionTriangle, FarSideObstacleBeyondBaseDistanceIgnored) {
  // Lateral obstacle outside the wedge and a second target in the wedge are both left alone.
  auto w = line_world(0.5, {disc("side", 0.5, 0.7), disc("t2", 0.3, 0.4, 0.03, ObjectKind::target)});
  EXPECT_TRUE(select_obstacles(w, "r1", "t").empty());
}

TEST(SelectionTriangle, TargetNeverSelectedAndSelectedDiscsTouchInflatedTriangle) {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const auto w = generate_scenario(10 + rng.below(50), 2, 2, rng.next());
    for (const auto& r : w.robots)
      for (const auto& t : w.target_ids()) {
        GraspFan fan;
        try {
          fan = feasible_grasp_angles(w, r.id, t);
        } catch (const NoFeasibleGrasp&) {
          continue;
        }
        const auto tri = build_selection_triangle(w, r.id, fan);
        EXPECT_FALSE(tri.selected.contains(t));
        EXPECT_EQ(tri.vertices[0], w.object(t).center);
        for (const auto& id : tri.selected) {
          const auto& o = w.object(id);
          EXPECT_FALSE(o.is_target());
          EXPECT_LT(oracle::tri_dist(o.center, tri.vertices), tri.inflation + o.radius + 1e-12);
        }
      }
  }
}

TEST(SelectionTriangle, DegenerateFanGivesCapsule) {
  const double standoff = 0.03 + 0.025 + 0.005;
  const double x = -0.1 + 0.7499 + standoff;
  const auto w = line_world(x, {disc("a", x - 0.2, 0.4)});
  const auto fan = feasible_grasp_angles(w, "r1", "t");
  const auto tri = build_selection_triangle(w, "r1", fan);
  EXPECT_DOUBLE_EQ(tri.half_width, 0.0);
  EXPECT_EQ(tri.selected, (IdSet{"a"}));
}

TEST(SelectObstacles, MatchesGridOracleOnRandomWorlds) {
  Rng rng(5);
  std::size_t checked = 0;
  for (int i = 0; i < 60; ++i) {
    const auto w = generate_scenario(6 + rng.below(59), 2, 2, rng.next());
    for (const auto& r : w.robots)
      for (const auto& t : w.target_ids()) {
        const auto o = oracle::selection(w, r.id, t);
        if (!o.feasible) {
          EXPECT_THROW(select_obstacles(w, r.id, t), NoFeasibleGrasp);
          continue;
        }
        const auto got = as_set(select_obstacles(w, r.id, t));
        EXPECT_TRUE(o.matches(got)) << "robot " << r.id << " target " << t;
        ++checked;
      }
  }
  EXPECT_GT(checked, 150u);
}

TEST(SelectObstacles, InflationMonotone) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto w = generate_scenario(10 + rng.below(50), 2, 2, rng.next());
    for (const auto& r : w.robots)
      for (const auto& t : w.target_ids()) {
        GraspFan fan;
        try {
          fan = feasible_grasp_angles(w, r.id, t);
        } catch (const NoFeasibleGrasp&) {
          continue;
        }
        WorkspaceModel thin = w, thick = w;
        for (auto& rr : thin.robots) rr.ee_radius = 0.01;
        for (auto& rr : thick.robots) rr.ee_radius = 0.03;
        const auto a = build_selection_triangle(thin, r.id, fan).selected;
        const auto b = build_selection_triangle(thick, r.id, fan).selected;
        EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
      }
  }
}

TEST(SelectObstacles, RemovingSelectedObjectNeverAddsOne) {
  Rng rng(7);
  for (int i = 0; i < 80; ++i) {
    const auto w = generate_scenario(20 + rng.below(45), 2, 2, rng.next());
    for (const auto& r : w.robots)
      for (const auto& t : w.target_ids()) {
        std::vector<ObjectId> before;
        try {
          before = select_obstacles(w, r.id, t);
        } catch (const NoFeasibleGrasp&) {
          continue;
        }
        for (const auto& gone : before) {
          WorkspaceModel v = w;
          v.object(gone).status = ObjectStatus::retrieved;
          const auto after = as_set(select_obstacles(v, r.id, t));
          auto allowed = as_set(before);
          allowed.erase(gone);
          EXPECT_TRUE(std::includes(allowed.begin(), allowed.end(), after.begin(), after.end()));
        }
      }
  }
}

TEST(SelectObstacles, Deterministic) {
  const auto w = generate_scenario(40, 2, 2, 12);
  for (const auto& t : w.target_ids()) {
    try {
      EXPECT_EQ(select_obstacles(w, "r1", t), select_obstacles(w, "r1", t));
    } catch (const NoFeasibleGrasp&) {
    }
  }
}

TEST(SelectObstacles, RemovedObjectsAreExcluded) {
  auto w = line_world(0.5, {disc("a", 0.3, 0.4)});
  w.object("a").status = ObjectStatus::removed_to_safe;
  w.object("a").center = w.safe_regions[0].rect.center();
  EXPECT_TRUE(select_obstacles(w, "r1", "t").empty());
}
