#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/geometry.hpp"
#include "mrtmp/motion.hpp"
#include "mrtmp/world.hpp"

// Obstacle selection: which clutter objects must be moved before a robot can
// side-grasp a target. The grasp-angle fan is computed with all clutter
// ignored; the fan is turned into a wedge anchored at the target and opening
// toward the robot, cut off beyond the last obstacle inside it, and inflated
// by the end-effector radius.

namespace mrtmp {

inline constexpr double kDefaultAngleStep = kPi / 18.0;
/// Widest half-angle the selection wedge may open to; a triangle cannot
/// represent a fan of pi or more.
inline constexpr double kMaxWedgeHalfAngle = kPi / 4.0;

struct GraspFan {
  RobotId robot;
  ObjectId target;
  double axis{0.0};                 // direction target -> robot base
  std::vector<double> valid_angles;  // offsets relative to axis, ascending
  double alpha{0.0};                 // max valid offset
  double beta{0.0};                  // min valid offset

  bool operator==(const GraspFan&) const = default;
};

/// Sampled offsets {-pi/2, -pi/2 + step, ...} up to +pi/2 inclusive.
inline std::vector<double> grasp_offsets(double step) {
  if (!(step > 0.0)) throw std::invalid_argument("angle step must be positive");
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    double th = -kPi / 2.0 + static_cast<double>(k) * step;
    if (std::abs(th - kPi / 2.0) < 1e-9) th = kPi / 2.0;
    if (th > kPi / 2.0) break;
    out.push_back(th);
  }
  return out;
}

/// A grasp offset is valid iff its pose lies in the robot's reach annulus and
/// the end-effector disc stays inside the workspace bounds. Clutter is ignored.
inline bool grasp_offset_valid(const WorkspaceModel& world, const RobotModel& robot, const ObjectDisc& object,
                               double axis, double offset) {
  const Configuration pose = grasp_pose(object, axis, offset, robot.ee_radius);
  return robot.in_reach(pose.position()) && world.bounds().contains_disc(pose.position(), robot.ee_radius);
}

/// Throws NoFeasibleGrasp when no sampled offset is valid.
inline GraspFan feasible_grasp_angles(const WorkspaceModel& world, const RobotId& robot_id,
                                      const ObjectId& target_id, double step = kDefaultAngleStep) {
  const RobotModel& robot = world.robot(robot_id);
  const ObjectDisc* target = world.find_object(target_id);
  if (target == nullptr || !target->on_table())
    throw std::invalid_argument("feasible_grasp_angles: '" + target_id + "' is not an on-table object");
  GraspFan fan{robot_id, target_id, approach_axis(robot, *target), {}, 0.0, 0.0};
  for (double th : grasp_offsets(step))
    if (grasp_offset_valid(world, robot, *target, fan.axis, th)) fan.valid_angles.push_back(th);
  if (fan.valid_angles.empty())
    throw NoFeasibleGrasp("no valid grasp angle for " + robot_id + " on " + target_id);
  fan.alpha = fan.valid_angles.back();
  fan.beta = fan.valid_angles.front();
  return fan;
}

struct SelectionTriangle {
  RobotId robot;
  ObjectId target;
  std::array<Vec2, 3> vertices;  // target center, alpha-side end, beta-side end
  double inflation{0.0};
  double bisector{0.0};    // absolute direction of the wedge axis
  double half_width{0.0};  // wedge half-angle actually used
  double ray_length{0.0};
  IdSet selected;

  bool contains_disc(Vec2 c, double r) const { return distance_point_triangle(c, vertices) < inflation + r; }
};

namespace detail {

// Distance from v (relative to the apex) to the cone {dir +- half}.
inline double distance_to_cone(Vec2 v, double dir, double half) {
  const double len = v.norm();
  if (len == 0.0) return 0.0;
  const double phi = normalize_angle(angle_of(v) - dir);
  if (std::abs(phi) <= half) return 0.0;
  const Vec2 edge = unit_from_angle(dir + (phi > 0.0 ? half : -half));
  const double t = dot(v, edge);
  return t <= 0.0 ? len : std::abs(cross(edge, v));
}

inline bool selectable(const ObjectDisc& o, const ObjectId& target) {
  return o.on_table() && !o.is_target() && o.id != target;
}

}  // namespace detail

/// Rays leave the target center at the wedge's two edges. Both rays share one
/// length: long enough that the far side of the triangle clears every
/// selectable object touching the inflated wedge between the target and the
/// robot base (never shorter than the grasp standoff). Objects whose disc meets
/// the triangle inflated by the end-effector radius are selected.
inline SelectionTriangle build_selection_triangle(const WorkspaceModel& world, const RobotId& robot_id,
                                                  const GraspFan& fan,
                                                  double max_half_width = kMaxWedgeHalfAngle) {
  if (fan.valid_angles.empty()) throw std::invalid_argument("build_selection_triangle: empty grasp fan");
  const RobotModel& robot = world.robot(robot_id);
  const ObjectDisc& target = world.object(fan.target);
  const double ee = robot.ee_radius;

  SelectionTriangle tri;
  tri.robot = robot_id;
  tri.target = fan.target;
  tri.inflation = ee;
  tri.bisector = fan.axis + 0.5 * (fan.alpha + fan.beta);
  tri.half_width = std::min(0.5 * (fan.alpha - fan.beta), max_half_width);

  const double reach = distance(target.center, robot.base);
  const double cos_h = std::cos(tri.half_width);
  double length = grasp_standoff(target.radius, ee);
  for (const auto& o : world.objects) {
    if (!detail::selectable(o, target.id)) continue;
    const Vec2 v = o.center - target.center;
    if (v.norm() > reach) continue;
    if (detail::distance_to_cone(v, tri.bisector, tri.half_width) >= ee + o.radius) continue;
    length = std::max(length, (v.norm() + o.radius) / cos_h);
  }
  tri.ray_length = length;
  tri.vertices = {target.center, target.center + unit_from_angle(tri.bisector + tri.half_width) * length,
                  target.center + unit_from_angle(tri.bisector - tri.half_width) * length};

  for (const auto& o : world.objects)
    if (detail::selectable(o, target.id) && tri.contains_disc(o.center, o.radius)) tri.selected.insert(o.id);
  return tri;
}

/// Sorted ids of the objects to re-arrange. Propagates NoFeasibleGrasp.
inline std::vector<ObjectId> select_obstacles(const WorkspaceModel& world, const RobotId& robot,
                                              const ObjectId& target, double step = kDefaultAngleStep) {
  const GraspFan fan = feasible_grasp_angles(world, robot, target, step);
  const SelectionTriangle tri = build_selection_triangle(world, robot, fan);
  return {tri.selected.begin(), tri.selected.end()};
}

}  // namespace mrtmp
