#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/geometry.hpp"
#include "mrtmp/rng.hpp"

namespace mrtmp {

using ObjectId = std::string;
using RobotId = std::string;
using IdSet = std::set<std::string>;

inline constexpr std::string_view kSharedOwner = "shared";

/// Clearance between a grasped object's surface and the end-effector disc.
inline constexpr double kGraspStandoff = 0.005;
/// Margin added around table, bases and safe regions to form the workspace bounds.
inline constexpr double kWorkspaceMargin = 0.1;

enum class ObjectKind { target, clutter };
enum class ObjectStatus { on_table, removed_to_safe, grasped, retrieved };

inline std::string_view to_string(ObjectKind k) { return k == ObjectKind::target ? "target" : "clutter"; }

inline std::string_view to_string(ObjectStatus s) {
  switch (s) {
    case ObjectStatus::on_table: return "on_table";
    case ObjectStatus::removed_to_safe: return "removed_to_safe";
    case ObjectStatus::grasped: return "grasped";
    case ObjectStatus::retrieved: return "retrieved";
  }
  return "on_table";
}

inline std::optional<ObjectKind> parse_kind(std::string_view s) {
  if (s == "target") return ObjectKind::target;
  if (s == "clutter") return ObjectKind::clutter;
  return std::nullopt;
}

inline std::optional<ObjectStatus> parse_status(std::string_view s) {
  if (s == "on_table") return ObjectStatus::on_table;
  if (s == "removed_to_safe") return ObjectStatus::removed_to_safe;
  if (s == "grasped") return ObjectStatus::grasped;
  if (s == "retrieved") return ObjectStatus::retrieved;
  return std::nullopt;
}

struct ObjectDisc {
  ObjectId id;
  Vec2 center;
  double radius{0.03};
  ObjectKind kind{ObjectKind::clutter};
  ObjectStatus status{ObjectStatus::on_table};

  bool operator==(const ObjectDisc&) const = default;
  bool on_table() const { return status == ObjectStatus::on_table; }
  bool is_target() const { return kind == ObjectKind::target; }
};

// Planar pose of the free-flying end-effector.
struct Configuration {
  double x{0.0};
  double y{0.0};
  double theta{0.0};

  bool operator==(const Configuration&) const = default;
  Vec2 position() const { return {x, y}; }
};

struct RobotModel {
  RobotId id;
  Vec2 base;
  double reach_min{0.05};
  double reach_max{0.75};
  double ee_radius{0.025};
  Configuration home;

  bool operator==(const RobotModel&) const = default;

  bool in_reach(Vec2 p) const {
    const double d = distance(p, base);
    return d >= reach_min && d <= reach_max;
  }
};

struct SafeRegion {
  Rect rect;
  std::string owner{kSharedOwner};

  bool operator==(const SafeRegion&) const = default;
  bool accessible_by(const RobotId& r) const { return owner == r || owner == kSharedOwner; }
};

struct WorkspaceModel {
  Rect table{0.0, 0.0, 1.0, 0.8};
  std::vector<ObjectDisc> objects;
  std::vector<RobotModel> robots;
  std::vector<SafeRegion> safe_regions;
  std::uint64_t seed{0};

  bool operator==(const WorkspaceModel&) const = default;

  const ObjectDisc* find_object(const ObjectId& id) const {
    auto it = std::find_if(objects.begin(), objects.end(), [&](const auto& o) { return o.id == id; });
    return it == objects.end() ? nullptr : &*it;
  }
  ObjectDisc* find_object(const ObjectId& id) {
    return const_cast<ObjectDisc*>(std::as_const(*this).find_object(id));
  }
  const ObjectDisc& object(const ObjectId& id) const {
    if (auto* o = find_object(id)) return *o;
    throw std::out_of_range("unknown object '" + id + "'");
  }
  ObjectDisc& object(const ObjectId& id) { return const_cast<ObjectDisc&>(std::as_const(*this).object(id)); }

  const RobotModel& robot(const RobotId& id) const {
    auto it = std::find_if(robots.begin(), robots.end(), [&](const auto& r) { return r.id == id; });
    if (it == robots.end()) throw std::out_of_range("unknown robot '" + id + "'");
    return *it;
  }

  std::vector<ObjectId> target_ids() const {
    std::vector<ObjectId> out;
    for (const auto& o : objects)
      if (o.is_target()) out.push_back(o.id);
    return out;
  }

  std::size_t count(ObjectKind k) const {
    return static_cast<std::size_t>(
        std::count_if(objects.begin(), objects.end(), [&](const auto& o) { return o.kind == k; }));
  }

  std::size_t count_on_table(ObjectKind k) const {
    return static_cast<std::size_t>(std::count_if(
        objects.begin(), objects.end(), [&](const auto& o) { return o.kind == k && o.on_table(); }));
  }

  double max_object_radius() const {
    double r = 0.0;
    for (const auto& o : objects) r = std::max(r, o.radius);
    return r;
  }

  Rect bounds() const {
    Rect b = table;
    for (const auto& s : safe_regions) b = b.united(s.rect);
    for (const auto& r : robots) b = b.united(r.base);
    return b.expanded(kWorkspaceMargin);
  }
};

/// True iff a disc at `center` stays inside the workspace bounds and overlaps
/// no on-table object outside `ignore`. Touching counts as free.
inline bool disc_free(const WorkspaceModel& world, Vec2 center, double radius, const IdSet& ignore = {}) {
  if (!world.bounds().contains_disc(center, radius)) return false;
  for (const auto& o : world.objects) {
    if (!o.on_table() || ignore.contains(o.id)) continue;
    if (discs_overlap(center, radius, o.center, o.radius)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Safe-region placement grid

/// Cell pitch is twice the largest object diameter present in the world.
inline double safe_cell_pitch(const WorkspaceModel& world) { return 4.0 * world.max_object_radius(); }

/// Cell centers of a region, nearest-to-table rows first.
inline std::vector<Vec2> safe_cells(const WorkspaceModel& world, const SafeRegion& region) {
  const double p = safe_cell_pitch(world);
  std::vector<Vec2> cells;
  if (p <= 0.0) return cells;
  const auto nx = static_cast<int>(std::floor(region.rect.w / p + 1e-9));
  const auto ny = static_cast<int>(std::floor(region.rect.h / p + 1e-9));
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      cells.push_back({region.rect.x + (i + 0.5) * p, region.rect.y + (j + 0.5) * p});
  std::stable_sort(cells.begin(), cells.end(), [&](Vec2 a, Vec2 b) {
    const double da = distance_point_rect(a, world.table), db = distance_point_rect(b, world.table);
    if (std::abs(da - db) > 1e-9) return da < db;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  return cells;
}

inline bool safe_cell_occupied(const WorkspaceModel& world, Vec2 cell) {
  const double half = 0.5 * safe_cell_pitch(world);
  for (const auto& o : world.objects) {
    if (o.status != ObjectStatus::removed_to_safe) continue;
    if (std::abs(o.center.x - cell.x) < half && std::abs(o.center.y - cell.y) < half) return true;
  }
  return false;
}

struct SafeCell {
  std::size_t region{0};
  Vec2 center;
};

/// First free cell in the robot's own regions, then in shared ones.
inline std::optional<SafeCell> next_free_cell(const WorkspaceModel& world, const RobotId& robot) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < world.safe_regions.size(); ++i) {
      const auto& region = world.safe_regions[i];
      const bool own = region.owner == robot;
      if ((pass == 0) != own || !region.accessible_by(robot)) continue;
      for (Vec2 c : safe_cells(world, region))
        if (!safe_cell_occupied(world, c)) return SafeCell{i, c};
    }
  }
  return std::nullopt;
}

inline bool in_some_safe_region(const WorkspaceModel& world, Vec2 p) {
  return std::any_of(world.safe_regions.begin(), world.safe_regions.end(),
                     [&](const auto& s) { return s.rect.contains(p); });
}

// ---------------------------------------------------------------------------
// Validation

/// Throws InvariantViolation naming the first broken invariant.
inline void validate(const WorkspaceModel& w) {
  auto fail = [](const std::string& what) { throw InvariantViolation(what); };

  if (!(w.table.w > 0.0 && w.table.h > 0.0)) fail("table has positive extent");
  IdSet ids;
  for (const auto& o : w.objects) {
    if (!ids.insert(o.id).second) fail("object ids unique");
    if (!(o.radius > 0.0)) fail("object radius > 0");
    if (o.on_table() && !w.table.contains_disc(o.center, o.radius)) fail("on_table objects inside table");
    if (o.is_target() && o.status == ObjectStatus::removed_to_safe) fail("targets never removed_to_safe");
    if (o.status == ObjectStatus::removed_to_safe && !in_some_safe_region(w, o.center))
      fail("removed_to_safe objects inside a safe region");
  }
  for (std::size_t i = 0; i < w.objects.size(); ++i) {
    const auto& a = w.objects[i];
    if (!a.on_table()) continue;
    for (std::size_t j = i + 1; j < w.objects.size(); ++j) {
      const auto& b = w.objects[j];
      if (b.on_table() && discs_overlap(a.center, a.radius, b.center, b.radius))
        fail("objects pairwise non-overlapping");
    }
  }
  const std::size_t targets = w.count(ObjectKind::target);
  if (targets == 0) fail("at least one target");
  if (w.robots.empty()) fail("at least one robot");
  if (targets < w.robots.size()) fail("T ≥ R");

  IdSet robot_ids;
  for (const auto& r : w.robots) {
    if (!robot_ids.insert(r.id).second) fail("robot ids unique");
    if (!(r.reach_min > 0.0 && r.reach_min < r.reach_max)) fail("0 < reach_min < reach_max");
    if (!(r.ee_radius > 0.0)) fail("ee_radius > 0");
    const Rect& t = w.table;
    if (r.base.x > t.x && r.base.x < t.xmax() && r.base.y > t.y && r.base.y < t.ymax())
      fail("robot bases outside table interior");
  }
  for (const auto& s : w.safe_regions) {
    if (s.rect.overlaps(w.table)) fail("safe regions disjoint from table");
    if (s.owner != kSharedOwner && !robot_ids.contains(s.owner)) fail("safe region owner is a robot or shared");
  }
  const std::size_t clutter = w.count(ObjectKind::clutter);
  for (const auto& r : w.robots) {
    std::size_t capacity = 0;
    bool any = false;
    for (const auto& s : w.safe_regions) {
      if (!s.accessible_by(r.id)) continue;
      any = true;
      capacity = std::max(capacity, safe_cells(w, s).size());
    }
    if (!any) fail("at least one safe region per robot");
    if (capacity < clutter) fail("safe region capacity hosts all clutter");
  }
}

// ---------------------------------------------------------------------------
// Scenario construction

struct RobotDefaults {
  double reach_min{0.05};
  double reach_max{0.75};
  double ee_radius{0.025};
  double base_offset{0.1};    // distance of the base outside the table edge
  double region_offset{0.2};  // distance of the safe region outside the table edge
};

/// Robots on the short edges first (left, right), then the long edges (bottom, top).
inline std::vector<RobotModel> default_robots(const Rect& table, std::size_t n, const RobotDefaults& d = {}) {
  if (n > 4) throw std::invalid_argument("at most 4 robots are supported by the default layout");
  const Vec2 spots[4] = {{table.x - d.base_offset, table.center().y},
                         {table.xmax() + d.base_offset, table.center().y},
                         {table.center().x, table.y - d.base_offset},
                         {table.center().x, table.ymax() + d.base_offset}};
  std::vector<RobotModel> robots;
  for (std::size_t i = 0; i < n; ++i) {
    RobotModel r;
    r.id = "r" + std::to_string(i + 1);
    r.base = spots[i];
    r.reach_min = d.reach_min;
    r.reach_max = d.reach_max;
    r.ee_radius = d.ee_radius;
    r.home = {r.base.x, r.base.y, angle_of(table.center() - r.base)};
    robots.push_back(r);
  }
  return robots;
}

/// One owned region behind each robot, deep enough to hold `n_clutter` objects
/// on the placement grid of the given pitch.
inline std::vector<SafeRegion> default_safe_regions(const Rect& table, const std::vector<RobotModel>& robots,
                                                    std::size_t n_clutter, double pitch,
                                                    const RobotDefaults& d = {}) {
  std::vector<SafeRegion> regions;
  for (const auto& r : robots) {
    const bool horizontal = r.base.x < table.x || r.base.x > table.xmax();
    const double edge = horizontal ? table.h : table.w;
    const auto per_line = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(edge / pitch + 1e-9)));
    const std::size_t lines = std::max<std::size_t>(1, (n_clutter + per_line - 1) / per_line);
    const double depth = static_cast<double>(lines) * pitch;
    Rect rect;
    if (horizontal) {
      const double x = r.base.x < table.x ? table.x - d.region_offset - depth : table.xmax() + d.region_offset;
      rect = {x, table.y, depth, table.h};
    } else {
      const double y = r.base.y < table.y ? table.y - d.region_offset - depth : table.ymax() + d.region_offset;
      rect = {table.x, y, table.w, depth};
    }
    regions.push_back({rect, r.id});
  }
  return regions;
}

/// Distance from target center to the end-effector center at a grasp pose.
inline double grasp_standoff(double object_radius, double ee_radius) {
  return object_radius + ee_radius + kGraspStandoff;
}

/// Head-on grasp pose of the object lies in the robot's reach annulus.
inline bool head_on_reachable(const RobotModel& r, const ObjectDisc& o) {
  const double d = distance(r.base, o.center) - grasp_standoff(o.radius, r.ee_radius);
  return d >= r.reach_min && d <= r.reach_max;
}

/// Completes a world from its table and objects: default robots, safe regions
/// sized for the clutter count, and validation.
inline WorkspaceModel build_world(Rect table, std::vector<ObjectDisc> objects, std::size_t n_robots,
                                  std::uint64_t seed, const RobotDefaults& d = {}) {
  WorkspaceModel w;
  w.table = table;
  w.objects = std::move(objects);
  w.robots = default_robots(table, n_robots, d);
  w.seed = seed;
  w.safe_regions =
      default_safe_regions(table, w.robots, w.count(ObjectKind::clutter), safe_cell_pitch(w), d);
  validate(w);
  return w;
}

inline std::string object_id(std::size_t i, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(n == 0 ? 0 : n - 1).size());
  std::string digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "o" + digits;
}

inline constexpr std::size_t kPlacementBudget = 10000;
inline constexpr double kMinObjectRadius = 0.02;
inline constexpr double kMaxObjectRadius = 0.04;

/// Seeded table-top scenario: rejection-sampled non-overlapping discs on a
/// 1.0 x 0.8 m table, targets drawn among objects some robot can grasp head-on.
inline WorkspaceModel generate_scenario(std::size_t n_objects, std::size_t n_targets, std::size_t n_robots,
                                        std::uint64_t seed) {
  if (n_robots < 1 || n_targets < n_robots || n_objects < n_targets)
    throw std::invalid_argument("generate_scenario requires n_objects >= n_targets >= n_robots >= 1");
  Rng rng(seed);
  const Rect table{0.0, 0.0, 1.0, 0.8};
  const RobotDefaults defaults;
  const auto robots = default_robots(table, n_robots, defaults);

  auto reachable = [&](const ObjectDisc& o) {
    return std::any_of(robots.begin(), robots.end(), [&](const auto& r) { return head_on_reachable(r, o); });
  };

  std::vector<ObjectDisc> objects;
  objects.reserve(n_objects);
  std::size_t n_reachable = 0;
  for (std::size_t i = 0; i < n_objects; ++i) {
    // Once the remaining slots are all needed for targets, only reachable samples are kept.
    const bool must_reach = n_objects - i <= n_targets - std::min(n_targets, n_reachable);
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kPlacementBudget && !placed; ++attempt) {
      const double r = rng.uniform(kMinObjectRadius, kMaxObjectRadius);
      const Vec2 c{rng.uniform(table.x + r, table.xmax() - r), rng.uniform(table.y + r, table.ymax() - r)};
      const ObjectDisc candidate{object_id(i, n_objects), c, r, ObjectKind::clutter, ObjectStatus::on_table};
      if (must_reach && !reachable(candidate)) continue;
      const bool clear = std::none_of(objects.begin(), objects.end(),
                                      [&](const auto& o) { return discs_overlap(c, r, o.center, o.radius); });
      if (clear) {
        n_reachable += reachable(candidate) ? 1 : 0;
        objects.push_back({object_id(i, n_objects), c, r, ObjectKind::clutter, ObjectStatus::on_table});
        placed = true;
      }
    }
    if (!placed)
      throw PlacementFailure("could not place object " + std::to_string(i) + " within " +
                             std::to_string(kPlacementBudget) + " attempts");
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (reachable(objects[i])) candidates.push_back(i);
  }
  if (candidates.size() < n_targets) throw PlacementFailure("not enough reachable objects for the targets");
  rng.shuffle(candidates);
  for (std::size_t k = 0; k < n_targets; ++k) objects[candidates[k]].kind = ObjectKind::target;

  return build_world(table, std::move(objects), n_robots, seed, defaults);
}

}  // namespace mrtmp
