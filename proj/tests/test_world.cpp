#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "mrtmp/rng.hpp"
#include "mrtmp/scenario_io.hpp"
#include "mrtmp/world.hpp"

using namespace mrtmp;

namespace {

// Independent invariant checker; does not call validate().
std::string world_problem(const WorkspaceModel& w) {
  std::size_t targets = 0;
  for (const auto& o : w.objects) {
    if (o.radius <= 0) return "radius";
    if (o.is_target()) ++targets;
    if (o.on_table()) {
      if (o.center.x - o.radius < w.table.x || o.center.x + o.radius > w.table.x + w.table.w ||
          o.center.y - o.radius < w.table.y || o.center.y + o.radius > w.table.y + w.table.h)
        return "outside table: " + o.id;
    }
  }
  for (std::size_t i = 0; i < w.objects.size(); ++i)
    for (std::size_t j = i + 1; j < w.objects.size(); ++j) {
      const auto &a = w.objects[i], &b = w.objects[j];
      const double dx = a.center.x - b.center.x, dy = a.center.y - b.center.y;
      if (dx * dx + dy * dy < (a.radius + b.radius) * (a.radius + b.radius)) return "overlap " + a.id + " " + b.id;
    }
  if (targets == 0 || targets < w.robots.size()) return "targets";
  for (const auto& r : w.robots) {
    if (r.base.x > w.table.x && r.base.x < w.table.x + w.table.w && r.base.y > w.table.y &&
        r.base.y < w.table.y + w.table.h)
      return "base inside table";
    if (!(0 < r.reach_min && r.reach_min < r.reach_max && r.ee_radius > 0)) return "robot params";
    bool owned = false;
    for (const auto& s : w.safe_regions) owned = owned || s.owner == r.id || s.owner == "shared";
    if (!owned) return "no safe region for " + r.id;
  }
  for (const auto& s : w.safe_regions) {
    const bool disjoint = s.rect.x + s.rect.w <= w.table.x || s.rect.x >= w.table.x + w.table.w ||
                          s.rect.y + s.rect.h <= w.table.y || s.rect.y >= w.table.y + w.table.h;
    if (!disjoint) return "safe region overlaps table";
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mrtmp_test_" + name);
}

}  // namespace

TEST(GenerateScenario, SixObjectsTwoTargets) {
  const auto w = generate_scenario(6, 2, 2, 7);
  EXPECT_EQ(w.objects.size(), 6u);
  EXPECT_EQ(w.count(ObjectKind::target), 2u);
  EXPECT_EQ(w.robots.size(), 2u);
  EXPECT_EQ(world_problem(w), "");
  EXPECT_NO_THROW(validate(w));
}

TEST(GenerateScenario, MinimalInstance) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto w = generate_scenario(1, 1, 1, seed);
    ASSERT_EQ(w.objects.size(), 1u);
    EXPECT_TRUE(w.objects[0].is_target());
    EXPECT_EQ(w.count(ObjectKind::clutter), 0u);
    EXPECT_EQ(world_problem(w), "");
  }
}

TEST(GenerateScenario, SixtyFourObjectsDoNotOverlap) {
  const auto w = generate_scenario(64, 2, 2, 3);
  EXPECT_EQ(w.objects.size(), 64u);
  EXPECT_EQ(world_problem(w), "");
}

TEST(GenerateScenario, Deterministic) {
  EXPECT_EQ(generate_scenario(20, 2, 2, 5), generate_scenario(20, 2, 2, 5));
  EXPECT_NE(generate_scenario(20, 2, 2, 5), generate_scenario(20, 2, 2, 6));
}

TEST(GenerateScenario, InvariantsHoldOverManySeeds) {
  Rng rng(2024);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t robots = 1 + rng.below(4);
    const std::size_t targets = robots + rng.below(3);
    const std::size_t objects = targets + rng.below(40);
    const auto w = generate_scenario(objects, targets, robots, seed);
    ASSERT_EQ(world_problem(w), "") << "seed " << seed;
    ASSERT_EQ(w.objects.size(), objects);
    ASSERT_EQ(w.count(ObjectKind::target), targets);
    for (const auto& o : w.objects) {
      if (!o.is_target()) continue;
      const bool reachable =
          std::any_of(w.robots.begin(), w.robots.end(), [&](const auto& r) { return head_on_reachable(r, o); });
      ASSERT_TRUE(reachable) << o.id;
    }
  }
}

TEST(GenerateScenario, BadArguments) {
  EXPECT_THROW(generate_scenario(5, 1, 2, 0), std::invalid_argument);
  EXPECT_THROW(generate_scenario(1, 2, 2, 0), std::invalid_argument);
  EXPECT_THROW(generate_scenario(5, 2, 0, 0), std::invalid_argument);
  EXPECT_THROW(generate_scenario(8, 5, 5, 0), std::invalid_argument);  // more than four robots
}

TEST(GenerateScenario, PlacementBudgetExhausted) {
  EXPECT_THROW(generate_scenario(1000, 2, 2, 1), PlacementFailure);
}

TEST(ObjectIds, ZeroPaddedAndSortable) {
  EXPECT_EQ(object_id(3, 6), "o03");
  EXPECT_EQ(object_id(7, 120), "o007");
  EXPECT_LT(object_id(9, 64), object_id(10, 64));
}

TEST(DiscFree, Basics) {
  WorkspaceModel w = generate_scenario(1, 1, 1, 4);
  w.objects[0].center = {0.5, 0.4};
  w.objects[0].radius = 0.03125;
  EXPECT_TRUE(disc_free(w, {0.2, 0.2}, 0.05));
  EXPECT_FALSE(disc_free(w, {0.5, 0.4}, 0.01));
  EXPECT_TRUE(disc_free(w, {0.5, 0.4}, 0.01, {w.objects[0].id}));
  EXPECT_TRUE(disc_free(w, {0.625, 0.4}, 0.09375));  // tangent, exact in binary
  EXPECT_FALSE(disc_free(w, {0.624, 0.4}, 0.09375));
  EXPECT_FALSE(disc_free(w, {-5.0, 0.4}, 0.05));  // outside the workspace bounds
  w.objects[0].status = ObjectStatus::retrieved;
  EXPECT_TRUE(disc_free(w, {0.5, 0.4}, 0.01));
}

TEST(DiscFree, EmptyWorldIsFreeInsideBounds) {
  WorkspaceModel w = generate_scenario(1, 1, 1, 4);
  w.objects[0].status = ObjectStatus::retrieved;
  const Rect b = w.bounds();
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double r = rng.uniform(0.001, 0.05);
    const Vec2 c{rng.uniform(b.x + r, b.xmax() - r), rng.uniform(b.y + r, b.ymax() - r)};
    EXPECT_TRUE(disc_free(w, c, r));
  }
}

TEST(DiscFree, MonotoneInRadius) {
  const auto w = generate_scenario(30, 2, 2, 8);
  Rng rng(17);
  const Rect b = w.bounds();
  for (int i = 0; i < 2000; ++i) {
    const Vec2 c{rng.uniform(b.x, b.xmax()), rng.uniform(b.y, b.ymax())};
    const double r = rng.uniform(0.0, 0.06);
    const double smaller = rng.uniform(0.0, r);
    if (disc_free(w, c, r)) {
      ASSERT_TRUE(disc_free(w, c, smaller));
    }
  }
}

TEST(SafeRegions, DefaultLayout) {
  const auto w = generate_scenario(30, 2, 2, 2);
  ASSERT_EQ(w.safe_regions.size(), 2u);
  EXPECT_EQ(w.safe_regions[0].owner, "r1");
  EXPECT_LT(w.safe_regions[0].rect.xmax(), w.robots[0].base.x);  // behind r1
  EXPECT_GT(w.safe_regions[1].rect.x, w.robots[1].base.x);
  for (const auto& s : w.safe_regions) EXPECT_FALSE(s.rect.overlaps(w.table));
}

TEST(SafeRegions, EveryClutterObjectGetsItsOwnCell) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    WorkspaceModel w = generate_scenario(49, 2, 2, seed);
    std::set<std::pair<double, double>> used;
    for (auto& o : w.objects) {
      if (o.is_target()) continue;
      const auto cell = next_free_cell(w, "r1");
      ASSERT_TRUE(cell.has_value());
      EXPECT_EQ(w.safe_regions[cell->region].owner, "r1");
      EXPECT_TRUE(w.safe_regions[cell->region].rect.contains_disc(cell->center, o.radius));
      EXPECT_TRUE(used.insert({cell->center.x, cell->center.y}).second);
      o.status = ObjectStatus::removed_to_safe;
      o.center = cell->center;
    }
    EXPECT_NO_THROW(validate(w));
  }
}

TEST(SafeRegions, FallsBackToSharedRegion) {
  WorkspaceModel w = generate_scenario(3, 1, 1, 1);
  const double pitch = safe_cell_pitch(w);
  w.safe_regions = {{{-0.2 - pitch, 0.0, pitch, pitch}, "r1"}, {{0.0, 1.0, pitch, pitch}, "shared"}};
  const auto first = next_free_cell(w, "r1");
  ASSERT_TRUE(first);
  EXPECT_EQ(first->region, 0u);
  auto& o = *std::find_if(w.objects.begin(), w.objects.end(), [](const auto& x) { return !x.is_target(); });
  o.status = ObjectStatus::removed_to_safe;
  o.center = first->center;
  const auto second = next_free_cell(w, "r1");
  ASSERT_TRUE(second);
  EXPECT_EQ(second->region, 1u);
}

TEST(ScenarioFile, RoundTripIsExact) {
  const auto w = generate_scenario(6, 2, 2, 7);
  const auto path = temp_file("roundtrip.json");
  save_scenario(w, path);
  EXPECT_EQ(load_scenario(path), w);
  std::filesystem::remove(path);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto v = generate_scenario(20, 2, 2, seed);
    ASSERT_EQ(parse_scenario(dump_scenario(v)), v);
  }
}

TEST(ScenarioFile, OverlapRejected) {
  auto j = to_json(generate_scenario(6, 2, 2, 7));
  j["objects"][1]["x"] = j["objects"][0]["x"];
  j["objects"][1]["y"] = j["objects"][0]["y"];
  try {
    from_json(j);
    FAIL() << "expected InvariantViolation";
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(std::string(e.what()), "objects pairwise non-overlapping");
  }
}

TEST(ScenarioFile, FewerTargetsThanRobotsRejected) {
  auto j = to_json(generate_scenario(6, 2, 2, 7));
  for (auto& o : j["objects"]) o["kind"] = "clutter";
  j["objects"][0]["kind"] = "target";
  try {
    from_json(j);
    FAIL() << "expected InvariantViolation";
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(std::string(e.what()), "T ≥ R");
  }
}

TEST(ScenarioFile, SchemaErrorsCarryFieldPath) {
  auto j = to_json(generate_scenario(6, 2, 2, 7));
  j["objects"][3].erase("r");
  try {
    from_json(j);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("$.objects[3].r"), std::string::npos) << e.what();
  }
  auto k = to_json(generate_scenario(6, 2, 2, 7));
  k["robots"][0]["bx"] = "left";
  EXPECT_THROW(from_json(k), SchemaError);
  EXPECT_THROW(parse_scenario("{not json"), SchemaError);
  EXPECT_THROW(load_scenario(temp_file("does_not_exist.json")), IOError);
}

TEST(ScenarioFile, MinimalSchemaKeysSuffice) {
  const std::string text = R"({
    "table": {"w": 1.0, "h": 0.8},
    "objects": [{"id": "a", "x": 0.5, "y": 0.4, "r": 0.03, "kind": "target"}],
    "robots": [{"id": "r1", "bx": -0.1, "by": 0.4, "reach_min": 0.05, "reach_max": 0.75, "ee_radius": 0.025}],
    "safe_regions": [{"x": -0.5, "y": 0.0, "w": 0.2, "h": 0.8, "owner": "r1"}],
    "seed": 3
  })";
  const auto w = parse_scenario(text);
  EXPECT_EQ(w.objects[0].status, ObjectStatus::on_table);
  EXPECT_DOUBLE_EQ(w.robots[0].home.x, -0.1);
  EXPECT_NEAR(w.robots[0].home.theta, 0.0, 1e-12);
}

TEST(Validate, RejectsBrokenWorlds) {
  auto base = generate_scenario(6, 2, 2, 7);
  {
    auto w = base;
    w.objects[0].center = {2.0, 2.0};
    EXPECT_THROW(validate(w), InvariantViolation);
  }
  {
    auto w = base;
    w.robots[0].base = {0.5, 0.4};
    EXPECT_THROW(validate(w), InvariantViolation);
  }
  {
    auto w = base;
    w.safe_regions[0].rect = {0.5, 0.5, 1.0, 1.0};
    EXPECT_THROW(validate(w), InvariantViolation);
  }
  {
    auto w = base;
    auto& t = *std::find_if(w.objects.begin(), w.objects.end(), [](const auto& o) { return o.is_target(); });
    t.status = ObjectStatus::removed_to_safe;
    t.center = w.safe_regions[0].rect.center();
    EXPECT_THROW(validate(w), InvariantViolation);
  }
  {
    auto w = base;
    w.robots[0].reach_min = 1.0;
    EXPECT_THROW(validate(w), InvariantViolation);
  }
}
