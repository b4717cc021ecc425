#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/motion.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/world.hpp"

namespace mrtmp {

/// Planner call accounting: one attempt per plan_path invocation.
struct MotionStats {
  std::size_t attempts{0};
  double seconds{0.0};
};

/// Times and counts a single plan_path call.
inline std::optional<MotionPlan> counted_plan(const MotionQuery& q, MotionStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  auto tally = [&] {
    if (!stats) return;
    ++stats->attempts;
    stats->seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    auto plan = plan_path(q);
    tally();
    return plan;
  } catch (...) {
    tally();
    throw;
  }
}

/// Fan offsets ordered by |offset|, negative before positive on ties.
inline std::vector<double> offsets_by_magnitude(const GraspFan& fan) {
  std::vector<double> v = fan.valid_angles;
  std::stable_sort(v.begin(), v.end(), [](double a, double b) {
    if (std::abs(std::abs(a) - std::abs(b)) > 1e-12) return std::abs(a) < std::abs(b);
    return a < b;
  });
  return v;
}

struct PickPlacePlan {
  MotionPlan approach;
  MotionPlan transfer;
  double offset{0.0};
  Configuration grasp;
  double transfer_radius{0.0};
};

struct GraspApproach {
  MotionPlan plan;
  double offset{0.0};
  Configuration grasp;
};

/// First fan offset (by |offset|) whose grasp pose is free and reachable from
/// `start`, with its approach path. Transfer is not considered.
inline GraspApproach plan_grasp_approach(const WorkspaceModel& world, const RobotId& robot_id,
                                         const ObjectId& object_id, const Configuration& start,
                                         const PlannerParams& params = {}, std::uint64_t seed = 0,
                                         double angle_step = kDefaultAngleStep, MotionStats* stats = nullptr) {
  const RobotModel& robot = world.robot(robot_id);
  const ObjectDisc& obj = world.object(object_id);
  GraspFan fan;
  try {
    fan = feasible_grasp_angles(world, robot_id, object_id, angle_step);
  } catch (const NoFeasibleGrasp& e) {
    throw NoGraspReachable(e.what());
  }
  const auto obstacles = static_obstacles(world);
  std::uint64_t salt = 0;
  for (double offset : offsets_by_magnitude(fan)) {
    const Configuration pose = grasp_pose(obj, fan.axis, offset, robot.ee_radius);
    if (!disc_free(world, pose.position(), robot.ee_radius)) continue;
    MotionQuery q;
    q.start = start;
    q.goals = {pose};
    q.moving_radius = robot.ee_radius;
    q.obstacles = obstacles;
    q.bounds = query_bounds(world, start.position(), q.goals, robot.ee_radius);
    q.params = params;
    q.seed = mix_seed(seed, salt++);
    if (auto a = counted_plan(q, stats)) return {*a, offset, pose};
  }
  throw NoGraspReachable("no reachable grasp pose for " + object_id);
}

/// Approach from `start` to a side-grasp pose of `object` (offsets tried in
/// increasing |offset|), then transfer to `destination` with the moving disc
/// inflated by the carried object's radius. Does not mutate the world.
inline PickPlacePlan plan_pick_and_place(const WorkspaceModel& world, const RobotId& robot_id,
                                         const ObjectId& object_id, Vec2 destination, const Configuration& start,
                                         const PlannerParams& params = {}, std::uint64_t seed = 0,
                                         double angle_step = kDefaultAngleStep, MotionStats* stats = nullptr) {
  const RobotModel& robot = world.robot(robot_id);
  const ObjectDisc& obj = world.object(object_id);
  if (!obj.on_table()) throw std::invalid_argument("plan_pick_and_place: '" + object_id + "' is not on the table");

  for (const auto& o : world.objects) {
    if (o.status == ObjectStatus::removed_to_safe && discs_overlap(destination, obj.radius, o.center, o.radius))
      throw TransferInfeasible("destination overlaps placed object " + o.id);
  }

  GraspFan fan;
  try {
    fan = feasible_grasp_angles(world, robot_id, object_id, angle_step);
  } catch (const NoFeasibleGrasp& e) {
    throw NoGraspReachable(e.what());
  }

  const auto obstacles = static_obstacles(world);
  const auto carried_obstacles = static_obstacles(world, {object_id});
  const double carry_radius = robot.ee_radius + obj.radius;
  bool reached = false;
  std::uint64_t salt = 0;
  for (double offset : offsets_by_magnitude(fan)) {
    const Configuration pose = grasp_pose(obj, fan.axis, offset, robot.ee_radius);
    if (!disc_free(world, pose.position(), robot.ee_radius)) continue;

    MotionQuery approach;
    approach.start = start;
    approach.goals = {pose};
    approach.moving_radius = robot.ee_radius;
    approach.obstacles = obstacles;
    approach.bounds = query_bounds(world, start.position(), approach.goals, robot.ee_radius);
    approach.params = params;
    approach.seed = mix_seed(seed, salt++);
    auto a = counted_plan(approach, stats);
    if (!a) continue;
    reached = true;

    MotionQuery transfer;
    transfer.start = pose;
    transfer.goals = {{destination.x, destination.y, pose.theta}};
    transfer.moving_radius = carry_radius;
    transfer.obstacles = carried_obstacles;
    transfer.bounds = query_bounds(world, pose.position(), transfer.goals, carry_radius);
    transfer.params = params;
    transfer.seed = mix_seed(seed, salt++);
    std::optional<MotionPlan> t;
    try {
      t = counted_plan(transfer, stats);
    } catch (const StartInCollision&) {
      continue;
    }
    if (t) return {*a, *t, offset, pose, carry_radius};
  }
  if (reached) throw TransferInfeasible("no transfer path for " + object_id);
  throw NoGraspReachable("no reachable grasp pose for " + object_id);
}

}  // namespace mrtmp
