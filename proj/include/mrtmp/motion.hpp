#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/geometry.hpp"
#include "mrtmp/rng.hpp"
#include "mrtmp/world.hpp"

namespace mrtmp {

/// Side-grasp pose: end-effector center on the circle of radius
/// (object radius + ee radius + standoff) around the object, facing it.
inline Configuration grasp_pose(const ObjectDisc& target, double axis, double offset, double ee_radius) {
  const double dir = axis + offset;
  const Vec2 p = target.center + unit_from_angle(dir) * grasp_standoff(target.radius, ee_radius);
  return {p.x, p.y, normalize_angle(dir + kPi)};
}

/// Direction from the object toward the robot base.
inline double approach_axis(const RobotModel& robot, const ObjectDisc& object) {
  return angle_of(robot.base - object.center);
}

struct Obstacle {
  Vec2 center;
  double radius{0.0};
};

inline std::vector<Obstacle> static_obstacles(const WorkspaceModel& world, const IdSet& ignore = {}) {
  std::vector<Obstacle> out;
  for (const auto& o : world.objects)
    if (o.on_table() && !ignore.contains(o.id)) out.push_back({o.center, o.radius});
  return out;
}

struct PlannerParams {
  double step{0.02};
  double goal_bias{0.1};
  double resolution{0.005};
  std::size_t max_iterations{5000};
};

// Clearance added to swept-segment checks so sampled re-validation never sees
// a rounding-level overlap.
inline constexpr double kSweepMargin = 1e-9;

struct MotionQuery {
  Configuration start;
  std::vector<Configuration> goals;
  double moving_radius{0.025};
  std::vector<Obstacle> obstacles;
  Rect bounds;
  PlannerParams params;
  std::uint64_t seed{0};

  bool disc_free(Vec2 p) const {
    if (!bounds.contains_disc(p, moving_radius)) return false;
    for (const auto& o : obstacles)
      if (discs_overlap(p, moving_radius, o.center, o.radius)) return false;
    return true;
  }

  bool segment_free(Vec2 a, Vec2 b, double resolution) const {
    const double len = distance(a, b);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / resolution)));
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      if (!disc_free(a + (b - a) * t)) return false;
    }
    return true;
  }

  /// Exact swept-disc test: the bounds are convex, so the endpoints decide
  /// containment; obstacles are checked against the whole segment.
  bool segment_free(Vec2 a, Vec2 b) const {
    if (!bounds.contains_disc(a, moving_radius) || !bounds.contains_disc(b, moving_radius)) return false;
    for (const auto& o : obstacles)
      if (distance_point_segment(o.center, a, b) < moving_radius + o.radius + kSweepMargin) return false;
    return true;
  }
};

struct MotionPlan {
  std::vector<Configuration> waypoints;
  double resolution{0.005};

  double length() const {
    double l = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      l += distance(waypoints[i - 1].position(), waypoints[i].position());
    return l;
  }
};

/// Endpoint contract plus a dense collision re-check at `resolution`.
inline bool validate_plan(const MotionPlan& plan, const MotionQuery& q, double resolution) {
  if (plan.waypoints.size() < 2) return false;
  if (!(plan.waypoints.front() == q.start)) return false;
  if (std::find(q.goals.begin(), q.goals.end(), plan.waypoints.back()) == q.goals.end()) return false;
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i)
    if (!q.segment_free(plan.waypoints[i - 1].position(), plan.waypoints[i].position(), resolution)) return false;
  return true;
}

namespace detail {

inline std::vector<Configuration> shortcut(const MotionQuery& q, const std::vector<Configuration>& path) {
  std::vector<Configuration> out{path.front()};
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    std::size_t j = path.size() - 1;
    while (j > i + 1 && !q.segment_free(path[i].position(), path[j].position())) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

}  // namespace detail

/// Goal-biased RRT over end-effector positions. Returns nullopt when the
/// iteration budget is exhausted (or no goal is collision-free).
/// Throws StartInCollision when the start itself is in collision.
inline std::optional<MotionPlan> plan_path(const MotionQuery& q) {
  if (q.goals.empty()) throw std::invalid_argument("plan_path: empty goal set");
  if (!(q.moving_radius > 0.0)) throw std::invalid_argument("plan_path: moving_radius must be positive");
  const Vec2 start = q.start.position();
  if (!q.disc_free(start)) throw StartInCollision("start configuration in collision");

  std::vector<Configuration> goals;
  for (const auto& g : q.goals)
    if (q.disc_free(g.position())) goals.push_back(g);
  if (goals.empty()) return std::nullopt;

  const double res = q.params.resolution;
  for (const auto& g : goals)
    if (q.segment_free(start, g.position())) return MotionPlan{{q.start, g}, res};

  Rng rng(q.seed);
  std::vector<Vec2> nodes{start};
  std::vector<std::size_t> parent{0};
  const Rect sample = q.bounds.expanded(-q.moving_radius);
  if (sample.w < 0.0 || sample.h < 0.0) return std::nullopt;

  for (std::size_t it = 0; it < q.params.max_iterations; ++it) {
    Vec2 target;
    if (rng.uniform() < q.params.goal_bias) {
      target = goals[rng.below(goals.size())].position();
    } else {
      target = {rng.uniform(sample.x, sample.xmax()), rng.uniform(sample.y, sample.ymax())};
    }
    std::size_t near = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const Vec2 d = nodes[k] - target;
      const double d2 = dot(d, d);
      if (d2 < best) {
        best = d2;
        near = k;
      }
    }
    const double dist = std::sqrt(best);
    if (dist < 1e-12) continue;
    const Vec2 next = nodes[near] + (target - nodes[near]) * (std::min(q.params.step, dist) / dist);
    if (!q.segment_free(nodes[near], next)) continue;
    nodes.push_back(next);
    parent.push_back(near);

    for (const auto& g : goals) {
      if (distance(next, g.position()) > q.params.step || !q.segment_free(next, g.position())) continue;
      std::vector<Configuration> path{g};
      for (std::size_t k = nodes.size() - 1; k != 0; k = parent[k])
        path.push_back({nodes[k].x, nodes[k].y, g.theta});
      path.push_back(q.start);
      std::reverse(path.begin(), path.end());
      return MotionPlan{detail::shortcut(q, path), res};
    }
  }
  return std::nullopt;
}

/// Sampling box for a query: table plus margin, grown to cover start and goals.
inline Rect query_bounds(const WorkspaceModel& world, Vec2 start, const std::vector<Configuration>& goals,
                         double moving_radius) {
  Rect b = world.table.expanded(kWorkspaceMargin);
  b = b.united(start);
  for (const auto& g : goals) b = b.united(g.position());
  b = b.expanded(moving_radius + 0.05);
  const Rect w = world.bounds();
  const double lx = std::max(b.x, w.x), ly = std::max(b.y, w.y);
  const double hx = std::min(b.xmax(), w.xmax()), hy = std::min(b.ymax(), w.ymax());
  return {lx, ly, std::max(0.0, hx - lx), std::max(0.0, hy - ly)};
}

}  // namespace mrtmp
