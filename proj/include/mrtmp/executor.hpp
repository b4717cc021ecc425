#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mrtmp/allocation.hpp"
#include "mrtmp/errors.hpp"
#include "mrtmp/motion.hpp"
#include "mrtmp/pick_place.hpp"
#include "mrtmp/rng.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/taskgraph.hpp"
#include "mrtmp/world.hpp"

// Multi-robot task-motion loop: offline allocation, then per robot a graph
// network that proposes abstract actions, a grounding step that turns them
// into motion queries, planning, simulated execution against the shared
// knowledge base, and an acknowledgment back to the network.

namespace mrtmp {

enum class Coordination { turn_based };

struct ExecutorSeeds {
  std::uint64_t allocation{0};
  std::uint64_t motion{1};
  std::uint64_t failure{2};
};

struct ExecutorConfig {
  double failure_probability{0.0};
  std::size_t retry_budget{32};      // execution failures tolerated per task
  std::size_t depth_cap{kDefaultDepthCap};
  std::size_t arc_retries{3};        // fresh-seed planning rounds before an arc is infeasible
  std::size_t obstacle_fallbacks{3};  // selected obstacles tried, nearest first
  Coordination coordination{Coordination::turn_based};
  double angle_step{kDefaultAngleStep};
  CountMode mode{CountMode::union_claimed};
  TaskOrder order{TaskOrder::seeded_random};
  PlannerParams planner;
  double nominal_speed{0.1};  // m/s, converts path length to execution time
  ExecutorSeeds seeds;

  void check() const {
    if (!(failure_probability >= 0.0 && failure_probability < 1.0))
      throw std::invalid_argument("failure probability must lie in [0, 1)");
    if (depth_cap < 1) throw std::invalid_argument("depth cap must be at least 1");
    if (arc_retries < 1) throw std::invalid_argument("arc retries must be at least 1");
    if (!(nominal_speed > 0.0)) throw std::invalid_argument("nominal speed must be positive");
  }
};

struct RobotState {
  Configuration config;
  std::optional<ObjectId> carried;
};

/// Knowledge-base log record. `execute` events carry the executed path with
/// its moving radius and ignore set; events with `status` set mutate `object`.
struct TraceEvent {
  std::size_t seq{0};
  double time{0.0};
  double end_time{0.0};
  RobotId robot;
  ObjectId task;
  std::string action;  // task_start, step, execute, ack, failure, restore, retract, expand, solved, failed, budget_exceeded
  ObjectId object;
  std::string verdict;
  std::size_t graph{0};
  std::vector<Vec2> path;
  double moving_radius{0.0};
  std::vector<ObjectId> ignore;
  std::optional<ObjectStatus> status;
  std::optional<Vec2> center;
};

class KnowledgeBase {
 public:
  explicit KnowledgeBase(WorkspaceModel world) : world_(std::move(world)) {
    for (const auto& r : world_.robots) states_[r.id] = {r.home, std::nullopt};
  }

  const WorkspaceModel& world() const { return world_; }
  const std::vector<TraceEvent>& log() const { return log_; }
  const RobotState& state(const RobotId& r) const { return states_.at(r); }
  double clock() const { return clock_; }
  void advance(double dt) { clock_ += dt; }

  TraceEvent& append(TraceEvent e) {
    e.seq = log_.size();
    if (e.end_time < e.time) e.end_time = e.time;
    log_.push_back(std::move(e));
    return log_.back();
  }

  void set_config(const RobotId& r, const Configuration& c) { states_.at(r).config = c; }

  /// Mutates an object and logs the change.
  void set_object(const RobotId& robot, const ObjectId& task, const ObjectId& id, ObjectStatus status, Vec2 center,
                  const std::string& action, std::size_t graph) {
    ObjectDisc& o = world_.object(id);
    RobotState& rs = states_.at(robot);
    if (status == ObjectStatus::grasped) {
      if (rs.carried && *rs.carried != id)
        throw std::logic_error(robot + " already holds " + *rs.carried);
      rs.carried = id;
    } else if (rs.carried == id) {
      rs.carried.reset();
    }
    o.status = status;
    o.center = center;
    TraceEvent e;
    e.time = e.end_time = clock_;
    e.robot = robot;
    e.task = task;
    e.action = action;
    e.object = id;
    e.verdict = "ok";
    e.graph = graph;
    e.status = status;
    e.center = center;
    append(std::move(e));
  }

 private:
  WorkspaceModel world_;
  std::map<RobotId, RobotState> states_;
  std::vector<TraceEvent> log_;
  double clock_{0.0};
};

/// Maps an abstract action to a motion query against the knowledge base:
/// approach(t, offset) -> that grasp pose; grasp(o) -> every free valid grasp
/// pose of o; place(o) -> the next free safe cell, carrying o.
inline MotionQuery ground(const AbstractAction& action, const KnowledgeBase& kb, const RobotId& robot_id,
                          double angle_step = kDefaultAngleStep, const PlannerParams& params = {}) {
  const WorkspaceModel& world = kb.world();
  const RobotModel& robot = world.robot(robot_id);
  const ObjectDisc* obj = world.find_object(action.object);
  if (obj == nullptr) throw GroundingError("missing object '" + action.object + "'");

  MotionQuery q;
  q.start = kb.state(robot_id).config;
  q.params = params;
  switch (action.kind) {
    case ActionKind::approach: {
      if (!obj->on_table()) throw GroundingError(action.object + " is not on the table");
      q.goals = {grasp_pose(*obj, approach_axis(robot, *obj), action.offset, robot.ee_radius)};
      q.moving_radius = robot.ee_radius;
      q.obstacles = static_obstacles(world);
      break;
    }
    case ActionKind::grasp: {
      if (!obj->on_table()) throw GroundingError(action.object + " is not on the table");
      GraspFan fan;
      try {
        fan = feasible_grasp_angles(world, robot_id, obj->id, angle_step);
      } catch (const NoFeasibleGrasp&) {
        throw GroundingError("no valid grasp pose for " + obj->id);
      }
      for (double th : offsets_by_magnitude(fan)) {
        const Configuration pose = grasp_pose(*obj, fan.axis, th, robot.ee_radius);
        if (disc_free(world, pose.position(), robot.ee_radius)) q.goals.push_back(pose);
      }
      if (q.goals.empty()) throw GroundingError("every grasp pose of " + obj->id + " is blocked");
      q.moving_radius = robot.ee_radius;
      q.obstacles = static_obstacles(world);
      break;
    }
    case ActionKind::place: {
      const auto cell = next_free_cell(world, robot_id);
      if (!cell) throw GroundingError("no free safe cell");
      q.goals = {{cell->center.x, cell->center.y, q.start.theta}};
      q.moving_radius = robot.ee_radius + obj->radius;
      q.obstacles = static_obstacles(world, {obj->id});
      break;
    }
  }
  q.bounds = query_bounds(world, q.start.position(), q.goals, q.moving_radius);
  return q;
}

struct TaskReport {
  RobotId robot;
  ObjectId task;
  bool solved{false};
  std::string outcome;  // solved, failed, depth_budget, retry_budget
  std::size_t depth{0};
  std::size_t nodes_visited{0};
  std::size_t attempts{0};
  std::size_t executions{0};
  std::size_t rearranged{0};
  std::size_t failures{0};
  double tp_seconds{0.0};
  double mp_seconds{0.0};
  std::vector<Transition> transitions;
  std::vector<NetworkRecord> network_trace;
};

/// Drives one robot-task graph network against the shared knowledge base.
class TaskRunner {
 public:
  enum class Outcome { executed, solved, failed };

  TaskRunner(RobotId robot, ObjectId task, const KnowledgeBase& kb, const ExecutorConfig& cfg, std::uint64_t seed)
      : robot_(std::move(robot)),
        task_(std::move(task)),
        cfg_(cfg),
        net_(robot_, task_, kb.world(), cfg.depth_cap),
        motion_seed_(mix_seed(cfg.seeds.motion, seed)),
        failure_rng_(mix_seed(cfg.seeds.failure, seed)) {
    report_.robot = robot_;
    report_.task = task_;
  }

  const GraphNetwork& network() const { return net_; }
  const TaskReport& report() const { return report_; }

  /// Steps the network until one action sequence has been executed (success
  /// or injected failure) or the task terminates.
  Outcome advance(KnowledgeBase& kb) {
    while (true) {
      net_.set_clock(kb.clock());
      log(kb, "step", "", "");
      const auto t0 = std::chrono::steady_clock::now();
      const double mp_before = stats_.seconds;
      StepResult res = network_step(net_, [&](const AugmentedGraph& g, const HyperArc& arc) {
        return check_arc(kb, g, arc);
      });
      const double step_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report_.tp_seconds += std::max(0.0, step_seconds - (stats_.seconds - mp_before));

      if (auto* next = std::get_if<NextActions>(&res)) {
        execute(kb, *next);
        return Outcome::executed;
      }
      if (auto* exp = std::get_if<Expand>(&res)) {
        try {
          net_.expand(exp->world);
        } catch (const DepthBudgetExceeded&) {
          return finish(kb, false, "depth_budget");
        }
        log(kb, "expand", exp->object, std::string(to_string(exp->reason)));
        continue;
      }
      if (std::holds_alternative<Solved>(res)) return finish(kb, true, "solved");
      return finish(kb, false, "failed");
    }
  }

 private:
  struct PreparedStep {
    AbstractAction action;
    std::optional<MotionPlan> plan;
    double radius{0.0};
    IdSet ignore;
  };

  void log(KnowledgeBase& kb, const std::string& action, const ObjectId& object, const std::string& verdict) {
    TraceEvent e;
    e.time = e.end_time = kb.clock();
    e.robot = robot_;
    e.task = task_;
    e.action = action;
    e.object = object;
    e.verdict = verdict;
    e.graph = net_.depth() - 1;
    kb.append(std::move(e));
  }

  std::uint64_t next_seed() { return mix_seed(motion_seed_, seed_counter_++); }

  FeasibilityVerdict check_arc(const KnowledgeBase& kb, const AugmentedGraph&, const HyperArc& arc) {
    prepared_.clear();
    return arc.id == tmpl::kArcDirect ? check_direct(kb) : check_rearrange(kb);
  }

  // Direct grasp: nothing left to re-arrange and an approach plan exists.
  FeasibilityVerdict check_direct(const KnowledgeBase& kb) {
    const WorkspaceModel& world = kb.world();
    GraspFan fan;
    try {
      if (!select_obstacles(world, robot_, task_, cfg_.angle_step).empty()) return {};
      fan = feasible_grasp_angles(world, robot_, task_, cfg_.angle_step);
    } catch (const NoFeasibleGrasp&) {
      return {};
    }
    const RobotModel& robot = world.robot(robot_);
    const ObjectDisc& target = world.object(task_);
    for (std::size_t round = 0; round < cfg_.arc_retries; ++round) {
      for (double th : offsets_by_magnitude(fan)) {
        const Configuration pose = grasp_pose(target, fan.axis, th, robot.ee_radius);
        if (!disc_free(world, pose.position(), robot.ee_radius)) continue;
        const AbstractAction approach{ActionKind::approach, task_, th};
        MotionQuery q = ground(approach, kb, robot_, cfg_.angle_step, cfg_.planner);
        q.seed = next_seed();
        auto plan = counted_plan(q, &stats_);
        if (!plan) continue;
        prepared_ = {{approach, *plan, q.moving_radius, {}},
                     {{ActionKind::grasp, task_, 0.0}, std::nullopt, 0.0, {}}};
        return {true, {approach, {ActionKind::grasp, task_, 0.0}}};
      }
    }
    return {};
  }

  // Re-arrangement: pick the nearest selected obstacle that can be moved to a safe cell.
  FeasibilityVerdict check_rearrange(const KnowledgeBase& kb) {
    const WorkspaceModel& world = kb.world();
    std::vector<ObjectId> ranked;
    try {
      ranked = rank_obstacles(world, robot_, task_, cfg_.angle_step);
    } catch (const NoFeasibleGrasp&) {
      return {};
    }
    const auto cell = next_free_cell(world, robot_);
    if (ranked.empty() || !cell) return {};
    const Configuration start = kb.state(robot_).config;
    const std::size_t n = std::min(ranked.size(), std::max<std::size_t>(1, cfg_.obstacle_fallbacks));
    for (std::size_t i = 0; i < n; ++i) {
      const ObjectId& obstacle = ranked[i];
      for (std::size_t round = 0; round < cfg_.arc_retries; ++round) {
        try {
          PickPlacePlan p = plan_pick_and_place(world, robot_, obstacle, cell->center, start, cfg_.planner,
                                                next_seed(), cfg_.angle_step, &stats_);
          const AbstractAction grasp{ActionKind::grasp, obstacle, p.offset};
          const AbstractAction place{ActionKind::place, obstacle, 0.0};
          prepared_ = {{grasp, p.approach, world.robot(robot_).ee_radius, {}},
                       {place, p.transfer, p.transfer_radius, {obstacle}}};
          return {true, {grasp, place}};
        } catch (const NoGraspReachable&) {
        } catch (const TransferInfeasible&) {
        }
      }
    }
    return {};
  }

  void execute(KnowledgeBase& kb, const NextActions& next) {
    report_.attempts = stats_.attempts;
    report_.mp_seconds = stats_.seconds;
    const std::size_t graph = net_.depth() - 1;
    const Configuration start_config = kb.state(robot_).config;
    std::map<ObjectId, std::pair<ObjectStatus, Vec2>> before;
    for (const auto& s : prepared_) {
      const ObjectDisc& o = kb.world().object(s.action.object);
      before.emplace(o.id, std::make_pair(o.status, o.center));
    }

    for (const auto& s : prepared_) {
      if (s.plan) {
        TraceEvent e;
        e.time = kb.clock();
        e.end_time = e.time + s.plan->length() / cfg_.nominal_speed;
        e.robot = robot_;
        e.task = task_;
        e.action = "execute";
        e.object = s.action.object;
        e.graph = graph;
        for (const auto& w : s.plan->waypoints) e.path.push_back(w.position());
        e.moving_radius = s.radius;
        e.ignore.assign(s.ignore.begin(), s.ignore.end());
        const bool failed = failure_rng_.bernoulli(cfg_.failure_probability);
        e.verdict = failed ? "failed" : "ok";
        const double duration = e.end_time - e.time;
        kb.append(std::move(e));
        kb.advance(duration);
        ++report_.executions;
        if (failed) {
          ++report_.failures;
          log(kb, "failure", s.action.object, describe(s.action));
          for (const auto& [id, state] : before) {
            const ObjectDisc& o = kb.world().object(id);
            if (o.status != state.first || !(o.center == state.second))
              kb.set_object(robot_, task_, id, state.first, state.second, "restore", graph);
          }
          kb.set_config(robot_, start_config);
          net_.report_failure(next.arc, kb.world());
          if (report_.failures >= cfg_.retry_budget) retry_exhausted_ = true;
          prepared_.clear();
          return;
        }
        kb.set_config(robot_, s.plan->waypoints.back());
      }
      apply_effect(kb, s, graph);
      log(kb, "ack", s.action.object, describe(s.action));
    }
    if (next.arc == tmpl::kArcRearrange) ++report_.rearranged;
    net_.report_executed(next.arc, kb.world());
    prepared_.clear();
  }

  void apply_effect(KnowledgeBase& kb, const PreparedStep& s, std::size_t graph) {
    const ObjectDisc& o = kb.world().object(s.action.object);
    switch (s.action.kind) {
      case ActionKind::approach: break;
      case ActionKind::grasp:
        kb.set_object(robot_, task_, o.id, ObjectStatus::grasped, o.center, "grasp", graph);
        if (o.is_target()) {
          // Targets are lifted out of the plane and carried home.
          kb.set_object(robot_, task_, o.id, ObjectStatus::retrieved, o.center, "retrieve", graph);
          kb.set_config(robot_, kb.world().robot(robot_).home);
          log(kb, "retract", o.id, "ok");
        }
        break;
      case ActionKind::place:
        kb.set_object(robot_, task_, o.id, ObjectStatus::removed_to_safe, s.plan->waypoints.back().position(),
                      "place", graph);
        break;
    }
  }

  Outcome finish(KnowledgeBase& kb, bool solved, const std::string& outcome) {
    report_.solved = solved;
    report_.outcome = outcome;
    report_.depth = net_.depth();
    report_.nodes_visited = net_.nodes_visited();
    report_.attempts = stats_.attempts;
    report_.mp_seconds = stats_.seconds;
    report_.transitions = net_.transitions();
    report_.network_trace = net_.trace();
    log(kb, solved ? "solved" : (outcome == "retry_budget" ? "budget_exceeded" : "failed"), task_, outcome);
    return solved ? Outcome::solved : Outcome::failed;
  }

 public:
  /// True once injected failures have used up the retry budget.
  bool retry_exhausted() const { return retry_exhausted_; }
  Outcome give_up(KnowledgeBase& kb) { return finish(kb, false, "retry_budget"); }

 private:
  RobotId robot_;
  ObjectId task_;
  ExecutorConfig cfg_;
  GraphNetwork net_;
  std::uint64_t motion_seed_;
  std::uint64_t seed_counter_{0};
  Rng failure_rng_;
  MotionStats stats_;
  std::vector<PreparedStep> prepared_;
  TaskReport report_;
  bool retry_exhausted_{false};
};

/// Runs a single allocated task to completion with no other robot active.
inline TaskReport run_task(const RobotId& robot, const ObjectId& task, KnowledgeBase& kb,
                           const ExecutorConfig& cfg, std::uint64_t seed = 0) {
  cfg.check();
  TaskRunner runner(robot, task, kb, cfg, seed);
  while (true) {
    const auto outcome = runner.advance(kb);
    if (outcome != TaskRunner::Outcome::executed) break;
    if (runner.retry_exhausted()) {
      runner.give_up(kb);
      break;
    }
  }
  return runner.report();
}

struct RobotMetrics {
  RobotId robot;
  std::size_t tasks{0};
  std::size_t tasks_solved{0};
  std::size_t depth{0};  // summed over the robot's task networks
  std::size_t nodes_visited{0};
  std::size_t attempts{0};
  std::size_t executions{0};
  std::size_t rearranged{0};
  std::size_t failures{0};
  double tp_seconds{0.0};
  double mp_seconds{0.0};
};

struct ExecutionReport {
  Allocation allocation;
  std::vector<RobotMetrics> robots;
  std::vector<TaskReport> tasks;
  bool success{false};
  double wall_seconds{0.0};
  double sim_seconds{0.0};
  WorkspaceModel initial_world;
  WorkspaceModel final_world;
  std::vector<TraceEvent> trace;

  const RobotMetrics& metrics(const RobotId& r) const {
    for (const auto& m : robots)
      if (m.robot == r) return m;
    throw std::out_of_range("no metrics for robot " + r);
  }
};

/// Allocation, then turn-based execution: robots take turns of one executed
/// sub-task (pick-and-place or target grasp); a robot with nothing pending passes.
inline ExecutionReport run(const WorkspaceModel& world, const ExecutorConfig& cfg = {}) {
  cfg.check();
  const auto wall0 = std::chrono::steady_clock::now();
  ExecutionReport rep;
  rep.initial_world = world;
  rep.allocation = allocate(world, {cfg.angle_step, cfg.seeds.allocation, cfg.mode, cfg.order});

  KnowledgeBase kb(world);
  std::map<RobotId, std::deque<ObjectId>> queue;
  std::map<RobotId, std::optional<TaskRunner>> active;
  for (const auto& r : world.robots) {
    const auto& s = rep.allocation.schedule_of(r.id);
    queue[r.id] = {s.begin(), s.end()};
    active[r.id];
    rep.robots.push_back({r.id});
  }

  auto close = [&](const RobotId& r) {
    const TaskReport& t = active[r]->report();
    rep.tasks.push_back(t);
    active[r].reset();
  };

  std::uint64_t task_index = 0;
  auto busy = [&] {
    return std::any_of(world.robots.begin(), world.robots.end(),
                       [&](const auto& r) { return active[r.id].has_value() || !queue[r.id].empty(); });
  };
  while (busy()) {
    for (const auto& r : world.robots) {
      while (true) {
        if (!active[r.id]) {
          if (queue[r.id].empty()) break;
          const ObjectId task = queue[r.id].front();
          queue[r.id].pop_front();
          active[r.id].emplace(r.id, task, kb, cfg, task_index++);
          TraceEvent e;
          e.time = e.end_time = kb.clock();
          e.robot = r.id;
          e.task = task;
          e.action = "task_start";
          e.object = task;
          e.verdict = "ok";
          kb.append(std::move(e));
        }
        const auto outcome = active[r.id]->advance(kb);
        if (outcome == TaskRunner::Outcome::executed) {
          if (active[r.id]->retry_exhausted()) {
            active[r.id]->give_up(kb);
            close(r.id);
          }
          break;
        }
        close(r.id);
      }
    }
  }

  for (const auto& t : rep.tasks) {
    auto it = std::find_if(rep.robots.begin(), rep.robots.end(), [&](const auto& m) { return m.robot == t.robot; });
    it->tasks += 1;
    it->tasks_solved += t.solved ? 1 : 0;
    it->depth += t.depth;
    it->nodes_visited += t.nodes_visited;
    it->attempts += t.attempts;
    it->executions += t.executions;
    it->rearranged += t.rearranged;
    it->failures += t.failures;
    it->tp_seconds += t.tp_seconds;
    it->mp_seconds += t.mp_seconds;
  }
  rep.final_world = kb.world();
  rep.trace = kb.log();
  rep.sim_seconds = kb.clock();
  rep.success = std::all_of(rep.final_world.objects.begin(), rep.final_world.objects.end(), [](const auto& o) {
    return !o.is_target() || o.status == ObjectStatus::retrieved;
  });
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return rep;
}

}  // namespace mrtmp
