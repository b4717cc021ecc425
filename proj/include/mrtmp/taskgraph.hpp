#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/world.hpp"

// AND/OR graph network task planner. Each retrieval task starts from a fixed
// augmented AND/OR graph bound to the current workspace; whenever a
// re-arrangement sub-task completes (or an execution fails) the network grows
// by one graph rebuilt against the updated workspace, until the root of the
// newest graph is solved or no alternative remains.

namespace mrtmp {

enum class Terminal { none, success, failure };
enum class Feasibility { unknown, yes, no };
enum class ActionKind { approach, grasp, place };

struct AbstractAction {
  ActionKind kind{ActionKind::grasp};
  ObjectId object;
  double offset{0.0};  // approach offset; unused for grasp/place

  bool operator==(const AbstractAction&) const = default;
};

inline std::string describe(const AbstractAction& a) {
  switch (a.kind) {
    case ActionKind::approach: return "approach(" + a.object + ")";
    case ActionKind::grasp: return "grasp(" + a.object + ")";
    case ActionKind::place: return "place(" + a.object + ", safe)";
  }
  return "?";
}

struct AndOrNode {
  int id{0};
  std::string label;
  bool solved{false};
  Terminal terminal{Terminal::none};
};

struct HyperArc {
  int id{0};
  int parent{0};
  std::vector<int> children;
  std::vector<AbstractAction> actions;
  double cost{0.0};
  Feasibility feasible{Feasibility::unknown};
  bool is_virtual{false};  // parent is the virtual node; child is the successor graph's root
};

struct AndOrGraph {
  std::vector<AndOrNode> nodes;
  std::vector<HyperArc> arcs;

  std::vector<int> arcs_from(int parent) const {
    std::vector<int> out;
    for (const auto& a : arcs)
      if (a.parent == parent) out.push_back(a.id);
    return out;
  }
};

// Fixed template ids.
namespace tmpl {
inline constexpr int kRoot = 0;
inline constexpr int kDirectGrasp = 1;
inline constexpr int kObstacleSelected = 2;
inline constexpr int kObstacleGrasped = 3;
inline constexpr int kObstaclePlaced = 4;
inline constexpr int kVirtual = 5;
inline constexpr std::size_t kNodeCount = 6;

inline constexpr int kArcDirect = 0;
inline constexpr int kArcRearrange = 1;
inline constexpr int kArcVirtual = 2;
}  // namespace tmpl

struct AugmentedGraph {
  AndOrGraph base;
  int virtual_node{tmpl::kVirtual};
  std::vector<int> virtual_arcs;
  WorkspaceModel snapshot;
  RobotId robot;
  ObjectId task;
  bool expanded{false};
  std::set<int> examined;

  AndOrNode& node(int id) { return base.nodes.at(static_cast<std::size_t>(id)); }
  const AndOrNode& node(int id) const { return base.nodes.at(static_cast<std::size_t>(id)); }
  HyperArc& arc(int id) { return base.arcs.at(static_cast<std::size_t>(id)); }
  const HyperArc& arc(int id) const { return base.arcs.at(static_cast<std::size_t>(id)); }
};

/// Root "task done" with two alternatives: a direct grasp (cost 0) and a
/// re-arrangement (cost 1) whose AND-children end in the virtual node.
inline AugmentedGraph make_initial_graph(const RobotId& robot, const ObjectId& task, const WorkspaceModel& world) {
  AugmentedGraph g;
  g.robot = robot;
  g.task = task;
  g.snapshot = world;
  auto& n = g.base.nodes;
  n.push_back({tmpl::kRoot, "task done: " + task + " retrieved", false, Terminal::none});
  n.push_back({tmpl::kDirectGrasp, "direct grasp of " + task + " feasible", false, Terminal::success});
  n.push_back({tmpl::kObstacleSelected, "obstacle selected", false, Terminal::success});
  n.push_back({tmpl::kObstacleGrasped, "obstacle grasped", false, Terminal::success});
  n.push_back({tmpl::kObstaclePlaced, "obstacle placed in safe region", false, Terminal::success});
  n.push_back({tmpl::kVirtual, "virtual: workspace updated", false, Terminal::none});

  auto& a = g.base.arcs;
  a.push_back({tmpl::kArcDirect, tmpl::kRoot, {tmpl::kDirectGrasp},
               {{ActionKind::approach, task, 0.0}, {ActionKind::grasp, task, 0.0}}, 0.0});
  a.push_back({tmpl::kArcRearrange, tmpl::kRoot,
               {tmpl::kObstacleSelected, tmpl::kObstacleGrasped, tmpl::kObstaclePlaced, tmpl::kVirtual},
               {{ActionKind::grasp, "", 0.0}, {ActionKind::place, "", 0.0}}, 1.0});
  a.push_back({tmpl::kArcVirtual, tmpl::kVirtual, {tmpl::kRoot}, {}, 0.0, Feasibility::yes, true});
  g.virtual_arcs = {tmpl::kArcVirtual};
  return g;
}

enum class TransitionReason { rearranged, failure_retry };

inline std::string_view to_string(TransitionReason r) {
  return r == TransitionReason::rearranged ? "rearranged" : "failure_retry";
}

struct Transition {
  std::size_t from_graph{0};
  TransitionReason reason{TransitionReason::rearranged};
  ObjectId object;
};

/// One line of the network trace.
struct NetworkRecord {
  std::size_t step{0};
  std::size_t graph{0};
  std::string element;  // "node N", "arc N" or "network"
  std::string verdict;  // examined, feasible, infeasible, solved, expand, Solved, Failed
  double timestamp{0.0};
};

struct NextActions {
  int arc{0};
  std::vector<AbstractAction> actions;
};

struct Expand {
  WorkspaceModel world;
  TransitionReason reason{TransitionReason::rearranged};
  ObjectId object;
};

struct Solved {};

struct Failed {
  std::string reason;
};

using StepResult = std::variant<NextActions, Expand, Solved, Failed>;

struct FeasibilityVerdict {
  bool feasible{false};
  std::vector<AbstractAction> actions;  // grounded actions when feasible
};

/// Checks an arc's actions against the current world; may bind free action
/// parameters (which obstacle, which offset).
using FeasibilityFn = std::function<FeasibilityVerdict(const AugmentedGraph&, const HyperArc&)>;

inline constexpr std::size_t kDefaultDepthCap = 256;

class GraphNetwork {
 public:
  GraphNetwork(RobotId robot, ObjectId task, const WorkspaceModel& world, std::size_t depth_cap = kDefaultDepthCap)
      : robot_(std::move(robot)), task_(std::move(task)), depth_cap_(depth_cap) {
    graphs_.push_back(make_initial_graph(robot_, task_, world));
  }

  const RobotId& robot() const { return robot_; }
  const ObjectId& task() const { return task_; }
  const std::vector<AugmentedGraph>& graphs() const { return graphs_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<NetworkRecord>& trace() const { return trace_; }
  std::size_t depth() const { return graphs_.size(); }
  std::size_t depth_cap() const { return depth_cap_; }
  std::size_t nodes_visited() const { return nodes_visited_; }
  std::size_t steps() const { return step_; }
  const std::optional<Expand>& pending() const { return pending_; }

  AugmentedGraph& newest() { return graphs_.back(); }
  const AugmentedGraph& newest() const { return graphs_.back(); }

  void set_clock(double t) { clock_ = t; }

  /// Counts a node once per graph.
  void visit(int node) {
    if (newest().examined.insert(node).second) {
      ++nodes_visited_;
      record("node " + std::to_string(node), "examined");
    }
  }

  void record(std::string element, std::string verdict) {
    trace_.push_back({step_, graphs_.size() - 1, std::move(element), std::move(verdict), clock_});
  }

  /// The executor acknowledges that an arc's actions were carried out.
  void report_executed(int arc_id, const WorkspaceModel& world_after) {
    auto& g = newest();
    HyperArc& arc = g.arc(arc_id);
    for (int c : arc.children) {
      if (c == g.virtual_node) continue;
      mark_solved(c);
    }
    propagate();
    if (arc.id == tmpl::kArcRearrange) {
      const ObjectId obj = arc.actions.empty() ? ObjectId{} : arc.actions.front().object;
      pending_ = Expand{world_after, TransitionReason::rearranged, obj};
    }
  }

  /// Execution failed; the next step re-expands against the restored world.
  void report_failure(int arc_id, const WorkspaceModel& world_after) {
    const HyperArc& arc = newest().arc(arc_id);
    const ObjectId obj = arc.actions.empty() ? ObjectId{} : arc.actions.front().object;
    record("arc " + std::to_string(arc_id), "execution_failed");
    pending_ = Expand{world_after, TransitionReason::failure_retry, obj};
  }

  /// Appends a graph rebuilt against `world`. Throws DepthBudgetExceeded past the cap.
  void expand(const WorkspaceModel& world) {
    if (graphs_.size() + 1 > depth_cap_)
      throw DepthBudgetExceeded("network depth would exceed cap " + std::to_string(depth_cap_));
    const TransitionReason reason = pending_ ? pending_->reason : TransitionReason::rearranged;
    const ObjectId object = pending_ ? pending_->object : ObjectId{};
    newest().expanded = true;
    record("network", "expand");
    transitions_.push_back({graphs_.size() - 1, reason, object});
    graphs_.push_back(make_initial_graph(robot_, task_, world));
    pending_.reset();
  }

  std::size_t begin_step() { return ++step_; }

 private:
  void mark_solved(int node) {
    auto& n = newest().node(node);
    if (n.solved) return;
    n.solved = true;
    record("node " + std::to_string(node), "solved");
  }

  // A parent is solved only through an arc whose children are all solved.
  void propagate() {
    auto& g = newest();
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& arc : g.base.arcs) {
        if (arc.is_virtual || g.node(arc.parent).solved) continue;
        const bool all = std::all_of(arc.children.begin(), arc.children.end(),
                                     [&](int c) { return g.node(c).solved; });
        if (all) {
          mark_solved(arc.parent);
          changed = true;
        }
      }
    }
  }

  RobotId robot_;
  ObjectId task_;
  std::size_t depth_cap_;
  std::vector<AugmentedGraph> graphs_;
  std::vector<Transition> transitions_;
  std::vector<NetworkRecord> trace_;
  std::optional<Expand> pending_;
  std::size_t nodes_visited_{0};
  std::size_t step_{0};
  double clock_{0.0};
};

/// One search step over the newest graph: root alternatives in ascending cost.
inline StepResult network_step(GraphNetwork& net, const FeasibilityFn& feasible) {
  net.begin_step();
  auto& g = net.newest();
  net.visit(tmpl::kRoot);
  if (g.node(tmpl::kRoot).solved) {
    net.record("network", "Solved");
    return Solved{};
  }
  if (net.pending()) return *net.pending();

  std::vector<int> order = g.base.arcs_from(tmpl::kRoot);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g.arc(a).cost < g.arc(b).cost; });
  for (int id : order) {
    HyperArc& arc = g.arc(id);
    if (arc.feasible == Feasibility::no) continue;
    for (int c : arc.children) net.visit(c);
    if (arc.feasible == Feasibility::unknown) {
      FeasibilityVerdict v = feasible(g, arc);
      if (!v.feasible) {
        arc.feasible = Feasibility::no;
        net.record("arc " + std::to_string(id), "infeasible");
        continue;
      }
      arc.feasible = Feasibility::yes;
      if (!v.actions.empty()) arc.actions = std::move(v.actions);
      net.record("arc " + std::to_string(id), "feasible");
    }
    return NextActions{id, arc.actions};
  }
  net.record("network", "Failed");
  return Failed{"no feasible alternative and no obstacle selectable"};
}

/// Free-function form of GraphNetwork::expand.
inline GraphNetwork& expand(GraphNetwork& net, const WorkspaceModel& world) {
  net.expand(world);
  return net;
}

/// Selected obstacles ordered by distance to the robot base, ties by id.
inline std::vector<ObjectId> rank_obstacles(const WorkspaceModel& world, const RobotId& robot, const ObjectId& target,
                                            double step = kDefaultAngleStep) {
  std::vector<ObjectId> ids = select_obstacles(world, robot, target, step);
  const Vec2 base = world.robot(robot).base;
  std::stable_sort(ids.begin(), ids.end(), [&](const ObjectId& a, const ObjectId& b) {
    const double da = distance(world.object(a).center, base), db = distance(world.object(b).center, base);
    if (da != db) return da < db;
    return a < b;
  });
  return ids;
}

/// Nearest selected obstacle to the robot base. Throws NothingToRemove.
inline ObjectId choose_obstacle(const WorkspaceModel& world, const RobotId& robot, const ObjectId& target,
                                double step = kDefaultAngleStep) {
  const auto ranked = rank_obstacles(world, robot, target, step);
  if (ranked.empty()) throw NothingToRemove("no obstacle selected for " + robot + " on " + target);
  return ranked.front();
}

}  // namespace mrtmp
