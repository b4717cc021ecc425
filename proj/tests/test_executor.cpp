#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "mrtmp/executor.hpp"
#include "mrtmp/harness.hpp"
#include "mrtmp/trace.hpp"
#include "mrtmp/world.hpp"

using namespace mrtmp;

namespace {

ObjectDisc disc(const std::string& id, double x, double y, ObjectKind kind = ObjectKind::clutter) {
  return {id, {x, y}, 0.03, kind, ObjectStatus::on_table};
}

std::size_t count_actions(const std::vector<TraceEvent>& log, const std::string& action) {
  return static_cast<std::size_t>(
      std::count_if(log.begin(), log.end(), [&](const auto& e) { return e.action == action; }));
}

}  // namespace

TEST(Ground, ApproachGoalIsGraspPose) {
  const auto w = make_corridor_scenario(0);
  KnowledgeBase kb(w);
  const auto q = ground({ActionKind::approach, "target", 0.3}, kb, "r1");
  const auto& t = w.object("target");
  ASSERT_EQ(q.goals.size(), 1u);
  EXPECT_EQ(q.goals[0], grasp_pose(t, approach_axis(w.robots[0], t), 0.3, 0.025));
  EXPECT_EQ(q.start, w.robots[0].home);
  EXPECT_DOUBLE_EQ(q.moving_radius, 0.025);
}

TEST(Ground, GraspGoalsAreFreeValidPoses) {
  const auto w = make_corridor_scenario(2);
  KnowledgeBase kb(w);
  const auto q = ground({ActionKind::grasp, "c2", 0.0}, kb, "r1");
  const auto fan = feasible_grasp_angles(w, "r1", "c2");
  std::size_t free = 0;
  for (double th : fan.valid_angles) {
    const auto pose = grasp_pose(w.object("c2"), fan.axis, th, 0.025);
    const bool ok = disc_free(w, pose.position(), 0.025);
    free += ok ? 1 : 0;
    EXPECT_EQ(std::find(q.goals.begin(), q.goals.end(), pose) != q.goals.end(), ok);
  }
  EXPECT_EQ(q.goals.size(), free);
  EXPECT_GT(free, 0u);
}

TEST(Ground, PlaceTargetsNextFreeCellCarrying) {
  const auto w = make_corridor_scenario(1);
  KnowledgeBase kb(w);
  const auto q = ground({ActionKind::place, "c1", 0.0}, kb, "r1");
  const auto cell = next_free_cell(w, "r1");
  ASSERT_TRUE(cell);
  ASSERT_EQ(q.goals.size(), 1u);
  EXPECT_EQ(q.goals[0].position(), cell->center);
  EXPECT_DOUBLE_EQ(q.moving_radius, 0.055);
  for (const auto& o : q.obstacles) EXPECT_NE(o.center, w.object("c1").center);
}

TEST(Ground, Errors) {
  auto w = make_corridor_scenario(1);
  {
    KnowledgeBase kb(w);
    EXPECT_THROW(ground({ActionKind::grasp, "nope", 0.0}, kb, "r1"), GroundingError);
  }
  // Fill every safe cell.
  std::size_t k = 0;
  for (const auto& region : w.safe_regions)
    for (Vec2 c : safe_cells(w, region)) {
      w.objects.push_back({"s" + std::to_string(k++), c, 0.03, ObjectKind::clutter, ObjectStatus::removed_to_safe});
    }
  KnowledgeBase full(w);
  try {
    ground({ActionKind::place, "c1", 0.0}, full, "r1");
    FAIL() << "expected GroundingError";
  } catch (const GroundingError& e) {
    EXPECT_STREQ(e.what(), "no free safe cell");
  }
  w.object("c1").status = ObjectStatus::removed_to_safe;
  KnowledgeBase moved(w);
  EXPECT_THROW(ground({ActionKind::grasp, "c1", 0.0}, moved, "r1"), GroundingError);
}

TEST(KnowledgeBase, OneHeldObjectAndLoggedMutations) {
  const auto w = make_corridor_scenario(2);
  KnowledgeBase kb(w);
  kb.set_object("r1", "target", "c1", ObjectStatus::grasped, {0.42, 0.4}, "grasp", 0);
  EXPECT_EQ(kb.state("r1").carried, std::optional<ObjectId>{"c1"});
  EXPECT_THROW(kb.set_object("r1", "target", "c2", ObjectStatus::grasped, {0.34, 0.4}, "grasp", 0),
               std::logic_error);
  kb.set_object("r1", "target", "c1", ObjectStatus::removed_to_safe, {-0.3, 0.4}, "place", 0);
  EXPECT_FALSE(kb.state("r1").carried);
  ASSERT_EQ(kb.log().size(), 2u);
  EXPECT_EQ(kb.log()[1].seq, 1u);
  EXPECT_EQ(kb.log()[1].status, ObjectStatus::removed_to_safe);
  EXPECT_EQ(kb.world().object("c1").center, (Vec2{-0.3, 0.4}));
}

TEST(RunTask, ClutterFreeSolvesAtDepthOne) {
  KnowledgeBase kb(make_corridor_scenario(0));
  const auto r = run_task("r1", "target", kb, {});
  EXPECT_TRUE(r.solved);
  EXPECT_EQ(r.outcome, "solved");
  EXPECT_EQ(r.depth, 1u);
  EXPECT_EQ(r.rearranged, 0u);
  EXPECT_EQ(r.executions, 1u);
  EXPECT_GE(r.attempts, r.executions);
  EXPECT_EQ(kb.world().object("target").status, ObjectStatus::retrieved);
  EXPECT_EQ(kb.state("r1").config, kb.world().robots[0].home);
}

TEST(RunTask, SingleObstacleDepthTwo) {
  KnowledgeBase kb(make_corridor_scenario(1));
  const auto r = run_task("r1", "target", kb, {});
  EXPECT_TRUE(r.solved);
  EXPECT_EQ(r.depth, 2u);
  EXPECT_EQ(r.rearranged, 1u);
  EXPECT_EQ(r.transitions.size(), 1u);
  const auto& c1 = kb.world().object("c1");
  EXPECT_EQ(c1.status, ObjectStatus::removed_to_safe);
  EXPECT_TRUE(std::any_of(kb.world().safe_regions.begin(), kb.world().safe_regions.end(),
                          [&](const auto& s) { return s.rect.contains_disc(c1.center, c1.radius); }));
  EXPECT_LE(r.nodes_visited, tmpl::kNodeCount * r.depth);
}

TEST(RunTask, NearCertainFailureExhaustsRetryBudget) {
  ExecutorConfig cfg;
  cfg.failure_probability = 0.999;
  cfg.retry_budget = 5;
  const auto w = make_corridor_scenario(1);
  KnowledgeBase kb(w);
  const auto r = run_task("r1", "target", kb, cfg, 3);
  EXPECT_FALSE(r.solved);
  EXPECT_EQ(r.outcome, "retry_budget");
  EXPECT_EQ(r.failures, 5u);
  EXPECT_EQ(count_actions(kb.log(), "budget_exceeded"), 1u);
  // Every failure restored the world.
  EXPECT_EQ(kb.world().objects, w.objects);
}

TEST(RunTask, FailuresGrowTheNetwork) {
  ExecutorConfig cfg;
  cfg.failure_probability = 0.5;
  std::size_t grew = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seeds.failure = seed;
    KnowledgeBase kb(make_corridor_scenario(2));
    const auto r = run_task("r1", "target", kb, cfg, seed);
    ASSERT_TRUE(r.solved);
    std::size_t retries = 0;
    for (const auto& t : r.transitions) retries += t.reason == TransitionReason::failure_retry ? 1 : 0;
    EXPECT_EQ(r.depth, 1 + r.rearranged + retries);
    EXPECT_EQ(retries, r.failures);
    grew += r.failures > 0 ? 1 : 0;
  }
  EXPECT_GT(grew, 0u);
}

TEST(RunTask, AckFollowsEveryExecution) {
  KnowledgeBase kb(make_corridor_scenario(3));
  run_task("r1", "target", kb, {});
  bool pending = false;
  for (const auto& e : kb.log()) {
    if (e.action == "execute") {
      EXPECT_FALSE(pending);
      pending = true;
    } else if (e.action == "ack" || e.action == "failure") {
      pending = false;
    } else if (e.action == "step") {
      EXPECT_FALSE(pending) << "task step before ack at seq " << e.seq;
    }
  }
  EXPECT_FALSE(pending);
}

TEST(Run, SingleRobotTwoTasksSeesEarlierRemoval) {
  // c lies in both targets' selection triangles; t1's removal clears t2's.
  auto w = build_world({0.0, 0.0, 1.0, 0.8},
                       {disc("t1", 0.3, 0.4, ObjectKind::target), disc("c", 0.2, 0.4),
                        disc("t2", 0.55, 0.5, ObjectKind::target)},
                       1, 0);
  ASSERT_EQ(select_obstacles(w, "r1", "t1"), (std::vector<ObjectId>{"c"}));
  ASSERT_EQ(select_obstacles(w, "r1", "t2"), (std::vector<ObjectId>{"c"}));
  ExecutorConfig cfg;
  cfg.order = TaskOrder::lexical;
  const auto rep = run(w, cfg);
  ASSERT_TRUE(rep.success);
  EXPECT_EQ(rep.allocation.schedule_of("r1"), (std::vector<ObjectId>{"t1", "t2"}));
  ASSERT_EQ(rep.tasks.size(), 2u);
  EXPECT_EQ(rep.tasks[0].task, "t1");
  EXPECT_EQ(rep.tasks[0].depth, 2u);
  EXPECT_EQ(rep.tasks[1].task, "t2");
  EXPECT_EQ(rep.tasks[1].depth, 1u);
  EXPECT_EQ(rep.tasks[1].rearranged, 0u);
  EXPECT_EQ(rep.metrics("r1").depth, 3u);
  EXPECT_TRUE(replay_trace(rep.initial_world, rep.trace, 0.005, &rep.final_world).ok());
}

TEST(Run, SixObjectScenariosSucceed) {
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    const std::uint64_t seed = scenario_seed(1, 6, rep);
    const auto w = generate_scenario(6, 2, 2, seed);
    const auto r = run(w, run_config({}, seed));
    EXPECT_TRUE(r.success) << "rep " << rep;
    ASSERT_EQ(r.robots.size(), 2u);
    std::size_t tasks = 0;
    for (const auto& m : r.robots) {
      tasks += m.tasks;
      EXPECT_GE(m.attempts, m.executions);
      EXPECT_LE(m.nodes_visited, tmpl::kNodeCount * m.depth);
    }
    EXPECT_EQ(tasks, 2u);
    const auto replay = replay_trace(r.initial_world, r.trace, 0.005, &r.final_world);
    EXPECT_TRUE(replay.ok()) << (replay.problems.empty() ? "" : replay.problems.front());
  }
}

TEST(Run, TurnBasedIntervalsNeverOverlap) {
  const auto w = generate_scenario(30, 2, 2, 5);
  const auto r = run(w);
  std::vector<std::pair<double, double>> spans;
  for (const auto& e : r.trace)
    if (e.action == "execute") spans.push_back({e.time, e.end_time});
  for (std::size_t i = 1; i < spans.size(); ++i) EXPECT_LE(spans[i - 1].second, spans[i].first + 1e-12);
  EXPECT_DOUBLE_EQ(r.sim_seconds, spans.empty() ? 0.0 : spans.back().second);
}

TEST(Run, RearrangedCountMatchesPlaceEvents) {
  const auto w = generate_scenario(20, 2, 2, 9);
  const auto r = run(w);
  std::map<RobotId, std::size_t> places;
  for (const auto& e : r.trace)
    if (e.action == "place") ++places[e.robot];
  for (const auto& m : r.robots) EXPECT_EQ(m.rearranged, places[m.robot]);
}

TEST(Run, DeterministicForSeeds) {
  const auto w = generate_scenario(16, 2, 2, 3);
  ExecutorConfig cfg;
  cfg.failure_probability = 0.2;
  const auto a = run(w, cfg), b = run(w, cfg);
  EXPECT_EQ(a.final_world, b.final_world);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].action, b.trace[i].action);
    EXPECT_EQ(a.trace[i].object, b.trace[i].object);
    EXPECT_EQ(a.trace[i].path, b.trace[i].path);
  }
}

TEST(Run, ConfigValidation) {
  ExecutorConfig cfg;
  cfg.failure_probability = 1.0;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  EXPECT_THROW(run(make_corridor_scenario(0), cfg), std::invalid_argument);
}

TEST(Replay, DetectsTamperedTrace) {
  const auto w = make_corridor_scenario(2);
  const auto r = run(w);
  ASSERT_TRUE(replay_trace(r.initial_world, r.trace, 0.005, &r.final_world).ok());

  auto through = r.trace;
  auto it = std::find_if(through.begin(), through.end(), [](const auto& e) { return e.action == "execute"; });
  ASSERT_NE(it, through.end());
  // Drag the path straight through the target.
  it->path.insert(it->path.begin() + 1, w.object("target").center);
  EXPECT_GT(replay_trace(r.initial_world, through, 0.005).collisions, 0u);

  auto no_ack = r.trace;
  no_ack.erase(std::remove_if(no_ack.begin(), no_ack.end(), [](const auto& e) { return e.action == "ack"; }),
               no_ack.end());
  EXPECT_GT(replay_trace(r.initial_world, no_ack, 0.005).missing_acks, 0u);

  auto wrong_final = r.final_world;
  wrong_final.object("c1").center.x += 0.01;
  EXPECT_FALSE(replay_trace(r.initial_world, r.trace, 0.005, &wrong_final).matches_final);
}
