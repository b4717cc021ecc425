#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/rng.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/world.hpp"

// Greedy sequential allocation of retrieval tasks. A task's cost for a robot
// is the number of objects it would have to re-arrange, corrected for objects
// that tasks allocated earlier (to any robot) will already have removed.

namespace mrtmp {

using TaskId = ObjectId;

enum class CountMode {
  union_claimed,  // |O \ (objects of all earlier allocations)|
  pairwise_eq1,   // |O| - sum intra - sum inter, clamped at 0
};

inline std::string_view to_string(CountMode m) { return m == CountMode::union_claimed ? "union" : "eq1"; }

inline std::optional<CountMode> parse_count_mode(std::string_view s) {
  if (s == "union") return CountMode::union_claimed;
  if (s == "eq1" || s == "pairwise_eq1") return CountMode::pairwise_eq1;
  return std::nullopt;
}

/// Rearrangement sets per (robot, task); nullopt records NoFeasibleGrasp.
class SetSystem {
 public:
  SetSystem() = default;
  SetSystem(std::vector<RobotId> robots, std::vector<TaskId> tasks)
      : robots_(std::move(robots)), tasks_(std::move(tasks)) {}

  const std::vector<RobotId>& robots() const { return robots_; }
  const std::vector<TaskId>& tasks() const { return tasks_; }

  void set(const RobotId& r, const TaskId& t, std::optional<IdSet> objects) {
    if (objects) objects->erase(t);
    sets_[{r, t}] = std::move(objects);
  }

  bool contains(const RobotId& r, const TaskId& t) const { return sets_.contains({r, t}); }

  /// nullopt when the robot cannot grasp the target at all.
  const std::optional<IdSet>& get(const RobotId& r, const TaskId& t) const {
    auto it = sets_.find({r, t});
    if (it == sets_.end()) throw std::out_of_range("no rearrangement set for (" + r + ", " + t + ")");
    return it->second;
  }

 private:
  std::vector<RobotId> robots_;
  std::vector<TaskId> tasks_;
  std::map<std::pair<RobotId, TaskId>, std::optional<IdSet>> sets_;
};

/// Per-robot schedules in greedy assignment order.
struct PartialAllocation {
  std::map<RobotId, std::vector<TaskId>> schedule;

  const std::vector<TaskId>& of(const RobotId& r) const {
    static const std::vector<TaskId> kEmpty;
    auto it = schedule.find(r);
    return it == schedule.end() ? kEmpty : it->second;
  }

  bool allotted(const RobotId& r, const TaskId& t) const {
    const auto& s = of(r);
    return std::find(s.begin(), s.end(), t) != s.end();
  }
};

namespace detail {

inline IdSet intersect(const IdSet& a, const IdSet& b) {
  IdSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline const IdSet& feasible_set(const SetSystem& sets, const RobotId& r, const TaskId& t) {
  static const IdSet kEmpty;
  const auto& s = sets.get(r, t);
  return s ? *s : kEmpty;
}

}  // namespace detail

/// O_{r,j} ∩ O_{r,k} when task k was allotted to r before j; empty otherwise.
inline IdSet intra_overlap(const SetSystem& sets, const PartialAllocation& alloc, const RobotId& robot,
                           const TaskId& task_j, const TaskId& task_k) {
  if (task_j == task_k) return {};
  const auto& s = alloc.of(robot);
  const auto k_pos = std::find(s.begin(), s.end(), task_k);
  if (k_pos == s.end()) return {};
  const auto j_pos = std::find(s.begin(), s.end(), task_j);
  if (j_pos != s.end() && j_pos < k_pos) return {};
  return detail::intersect(detail::feasible_set(sets, robot, task_j), detail::feasible_set(sets, robot, task_k));
}

/// O_{i,j} ∩ O_{k,l} when task l was allotted to robot k; empty otherwise.
/// Same-robot pairs belong to intra_overlap.
inline IdSet inter_overlap(const SetSystem& sets, const PartialAllocation& alloc, const RobotId& robot_i,
                           const TaskId& task_j, const RobotId& robot_k, const TaskId& task_l) {
  if (robot_i == robot_k) throw std::invalid_argument("inter_overlap needs distinct robots; use intra_overlap");
  if (!alloc.allotted(robot_k, task_l)) return {};
  return detail::intersect(detail::feasible_set(sets, robot_i, task_j),
                           detail::feasible_set(sets, robot_k, task_l));
}

/// Corrected re-arrangement count; nullopt means Infeasible.
inline std::optional<std::size_t> corrected_count(const SetSystem& sets, const PartialAllocation& alloc,
                                                  const RobotId& robot, const TaskId& task, CountMode mode) {
  const auto& own = sets.get(robot, task);
  if (!own) return std::nullopt;
  if (mode == CountMode::union_claimed) {
    IdSet claimed;
    for (const auto& [r, tasks] : alloc.schedule)
      for (const auto& t : tasks)
        if (const auto& s = sets.get(r, t)) claimed.insert(s->begin(), s->end());
    return static_cast<std::size_t>(
        std::count_if(own->begin(), own->end(), [&](const auto& o) { return !claimed.contains(o); }));
  }
  long long count = static_cast<long long>(own->size());
  for (const auto& [r, tasks] : alloc.schedule) {
    for (const auto& t : tasks) {
      if (t == task) continue;
      count -= static_cast<long long>(r == robot ? intra_overlap(sets, alloc, robot, task, t).size()
                                                 : inter_overlap(sets, alloc, robot, task, r, t).size());
    }
  }
  return static_cast<std::size_t>(std::max(0LL, count));
}

/// 1 / (1 + count); 0 for Infeasible.
inline double utility(std::optional<std::size_t> corrected) {
  return corrected ? 1.0 / (1.0 + static_cast<double>(*corrected)) : 0.0;
}

struct UtilityEntry {
  std::optional<std::size_t> raw_count;        // |O|, nullopt when infeasible
  std::optional<std::size_t> corrected_count;  // nullopt when infeasible
  double utility{0.0};
};

/// One greedy decision, with every robot's values against the same partial allocation.
struct AllocationStep {
  TaskId task;
  RobotId chosen;
  std::map<RobotId, UtilityEntry> entries;
  std::vector<RobotId> tied;
};

struct Allocation {
  std::vector<RobotId> robots;
  std::vector<TaskId> tasks;
  std::map<RobotId, std::vector<TaskId>> schedule;
  std::vector<std::vector<int>> x;  // x[robot index][task index]
  double total_utility{0.0};
  CountMode mode{CountMode::union_claimed};
  std::vector<AllocationStep> steps;

  const std::vector<TaskId>& schedule_of(const RobotId& r) const {
    static const std::vector<TaskId> kEmpty;
    auto it = schedule.find(r);
    return it == schedule.end() ? kEmpty : it->second;
  }

  std::optional<RobotId> robot_for(const TaskId& t) const {
    for (const auto& [r, ts] : schedule)
      if (std::find(ts.begin(), ts.end(), t) != ts.end()) return r;
    return std::nullopt;
  }
};

enum class TaskOrder { seeded_random, lexical };

/// Greedy core over a precomputed set system. Tasks are taken in `order`;
/// each goes to the robot with maximum utility. Ties go to robots with an
/// empty schedule, then uniformly at random among the remaining tie.
inline Allocation allocate_sets(const SetSystem& sets, const std::vector<TaskId>& order, CountMode mode, Rng& rng) {
  Allocation a;
  a.robots = sets.robots();
  a.tasks = sets.tasks();
  a.mode = mode;
  a.x.assign(a.robots.size(), std::vector<int>(a.tasks.size(), 0));
  PartialAllocation partial;

  for (const auto& task : order) {
    AllocationStep step;
    step.task = task;
    double best = -1.0;
    for (const auto& r : a.robots) {
      UtilityEntry e;
      if (const auto& s = sets.get(r, task)) e.raw_count = s->size();
      e.corrected_count = corrected_count(sets, partial, r, task, mode);
      e.utility = utility(e.corrected_count);
      step.entries[r] = e;
      best = std::max(best, e.utility);
    }
    if (best <= 0.0) throw TaskInfeasible("no robot can grasp task " + task);
    for (const auto& r : a.robots)
      if (step.entries[r].utility == best) step.tied.push_back(r);

    std::vector<RobotId> pool;
    for (const auto& r : step.tied)
      if (partial.of(r).empty()) pool.push_back(r);
    if (pool.empty()) pool = step.tied;
    step.chosen = pool.size() == 1 ? pool.front() : pool[rng.below(pool.size())];

    partial.schedule[step.chosen].push_back(task);
    a.schedule[step.chosen].push_back(task);
    const auto ri = std::find(a.robots.begin(), a.robots.end(), step.chosen) - a.robots.begin();
    const auto ti = std::find(a.tasks.begin(), a.tasks.end(), task) - a.tasks.begin();
    a.x[ri][ti] = 1;
    a.total_utility += best;
    a.steps.push_back(std::move(step));
  }
  return a;
}

struct AllocationOptions {
  double angle_step{kDefaultAngleStep};
  std::uint64_t seed{0};
  CountMode mode{CountMode::union_claimed};
  TaskOrder order{TaskOrder::seeded_random};
};

/// Rearrangement sets for every (robot, target) pair of a world.
inline SetSystem rearrangement_sets(const WorkspaceModel& world, double angle_step = kDefaultAngleStep) {
  std::vector<RobotId> robots;
  for (const auto& r : world.robots) robots.push_back(r.id);
  std::vector<TaskId> tasks;
  for (const auto& o : world.objects)
    if (o.is_target() && o.on_table()) tasks.push_back(o.id);
  SetSystem sets(robots, tasks);
  for (const auto& r : robots) {
    for (const auto& t : tasks) {
      try {
        const auto sel = select_obstacles(world, r, t, angle_step);
        sets.set(r, t, IdSet(sel.begin(), sel.end()));
      } catch (const NoFeasibleGrasp&) {
        sets.set(r, t, std::nullopt);
      }
    }
  }
  return sets;
}

/// Offline allocation of every on-table target of the world.
inline Allocation allocate(const WorkspaceModel& world, const AllocationOptions& opt = {}) {
  const SetSystem sets = rearrangement_sets(world, opt.angle_step);
  std::vector<TaskId> order = sets.tasks();
  std::sort(order.begin(), order.end());
  Rng rng(opt.seed);
  if (opt.order == TaskOrder::seeded_random) rng.shuffle(order);
  return allocate_sets(sets, order, opt.mode, rng);
}

inline constexpr double kBruteForceLimit = 1e6;

/// Exhaustive maximizer of sum U[r][t] * x[r][t] subject to one robot per task,
/// with utilities held fixed. First maximizer in lexicographic order wins.
inline Allocation brute_force_allocate(const std::vector<std::vector<double>>& utility_table, std::size_t tasks,
                                       std::size_t robots) {
  if (robots == 0) throw std::invalid_argument("brute_force_allocate: no robots");
  if (std::pow(static_cast<double>(robots), static_cast<double>(tasks)) > kBruteForceLimit)
    throw InstanceTooLarge("R^T exceeds 1e6");
  if (utility_table.size() != robots) throw std::invalid_argument("utility table has wrong robot count");
  for (const auto& row : utility_table)
    if (row.size() != tasks) throw std::invalid_argument("utility table has wrong task count");

  const auto combos = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(robots), static_cast<double>(tasks))));
  std::vector<std::size_t> assign(tasks, 0), best_assign(tasks, 0);
  double best = -1.0;
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    double total = 0.0;
    for (std::size_t t = tasks; t-- > 0;) {
      assign[t] = c % robots;
      c /= robots;
      total += utility_table[assign[t]][t];
    }
    if (total > best) {
      best = total;
      best_assign = assign;
    }
  }

  Allocation a;
  for (std::size_t r = 0; r < robots; ++r) a.robots.push_back("r" + std::to_string(r + 1));
  for (std::size_t t = 0; t < tasks; ++t) a.tasks.push_back("t" + std::to_string(t + 1));
  a.x.assign(robots, std::vector<int>(tasks, 0));
  for (std::size_t t = 0; t < tasks; ++t) {
    a.x[best_assign[t]][t] = 1;
    a.schedule[a.robots[best_assign[t]]].push_back(a.tasks[t]);
  }
  a.total_utility = std::max(best, 0.0);
  return a;
}

/// Utility table in robot x task order as seen at each task's greedy step.
inline std::vector<std::vector<double>> utility_matrix(const Allocation& a) {
  std::vector<std::vector<double>> u(a.robots.size(), std::vector<double>(a.tasks.size(), 0.0));
  for (const auto& step : a.steps) {
    const auto ti = std::find(a.tasks.begin(), a.tasks.end(), step.task) - a.tasks.begin();
    for (std::size_t ri = 0; ri < a.robots.size(); ++ri) u[ri][ti] = step.entries.at(a.robots[ri]).utility;
  }
  return u;
}

}  // namespace mrtmp
