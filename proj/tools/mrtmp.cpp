// Command-line front end: scenario generation, end-to-end runs, benchmark
// sweeps and the per-module debug views.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mrtmp/allocation.hpp"
#include "mrtmp/executor.hpp"
#include "mrtmp/harness.hpp"
#include "mrtmp/motion.hpp"
#include "mrtmp/render.hpp"
#include "mrtmp/scenario_io.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/trace.hpp"

namespace {

using namespace mrtmp;

constexpr int kOk = 0;
constexpr int kPlanningFailure = 1;
constexpr int kUsage = 2;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot open " + path + " for writing");
  return out;
}

Vec2 parse_point(const std::string& s) {
  double x = 0.0, y = 0.0;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> x >> comma >> y) || comma != ',') throw std::invalid_argument("expected x,y but got '" + s + "'");
  return {x, y};
}

void print_metrics(const ExecutionReport& rep) {
  std::printf("%-6s %5s %5s %6s %8s %6s %10s %10s %9s\n", "robot", "tasks", "d", "nodes", "attempts", "execs",
              "rearranged", "tp_s", "mp_s");
  for (const auto& m : rep.robots)
    std::printf("%-6s %5zu %5zu %6zu %8zu %6zu %10zu %10.4f %9.4f\n", m.robot.c_str(), m.tasks, m.depth,
                m.nodes_visited, m.attempts, m.executions, m.rearranged, m.tp_seconds, m.mp_seconds);
  std::printf("success=%s sim_time=%.3fs wall=%.3fs\n", rep.success ? "yes" : "no", rep.sim_seconds,
              rep.wall_seconds);
}

int cmd_gen(std::size_t objects, std::size_t targets, std::size_t robots, std::uint64_t seed,
            const std::string& out) {
  WorkspaceModel w;
  try {
    w = generate_scenario(objects, targets, robots, seed);
  } catch (const PlacementFailure& e) {
    std::fprintf(stderr, "gen: %s\n", e.what());
    return kPlanningFailure;
  }
  if (out.empty() || out == "-") std::cout << dump_scenario(w);
  else save_scenario(w, out);
  return kOk;
}

int cmd_run(const std::string& scenario, double p, std::uint64_t seed, const std::string& trace,
            const std::string& svg, const std::string& csv) {
  const WorkspaceModel w = load_scenario(scenario);
  ExecutorConfig cfg = run_config(ExecutorConfig{}, seed);
  cfg.failure_probability = p;
  const ExecutionReport rep = run(w, cfg);
  print_metrics(rep);
  if (!trace.empty()) {
    auto out = open_out(trace);
    write_trace(out, rep);
  }
  if (!svg.empty()) {
    RenderOverlay overlay;
    for (const auto& e : rep.trace)
      if (e.action == "execute") overlay.paths.push_back({e.path, e.ignore.empty() ? "#1f77b4" : "#2ca02c"});
    save_svg(svg, render_svg(rep.initial_world, overlay));
  }
  if (!csv.empty()) {
    MetricsTable t;
    for (const auto& m : rep.robots)
      t.rows.push_back({w.objects.size(), 0, seed, m.robot, rep.success, m.tasks, m.tasks_solved, m.depth,
                        m.nodes_visited, m.attempts, m.executions, m.rearranged, m.failures, m.tp_seconds,
                        m.mp_seconds});
    auto out = open_out(csv);
    write_csv(out, t);
  }
  return rep.success ? kOk : kPlanningFailure;
}

int cmd_bench(const BenchmarkSpec& spec, const std::string& csv) {
  const MetricsTable table = bench(spec, [](const RunRecord& r, const WorkspaceModel*, const ExecutionReport*) {
    std::fprintf(stderr, "objects=%zu rep=%zu %s %.2fs%s%s\n", r.object_count, r.repetition,
                 r.success ? "ok" : "FAILED", r.wall_seconds, r.error.empty() ? "" : " ", r.error.c_str());
  });
  if (!csv.empty()) {
    auto out = open_out(csv);
    write_csv(out, table);
  }
  const Summary s = aggregate(table);
  std::printf("%8s %5s %8s %8s %8s %10s %10s %9s %9s\n", "objects", "runs", "success", "mean_d", "nodes",
              "attempts", "rearranged", "tp_s", "mp_s");
  for (const auto& c : s.per_count)
    std::printf("%8zu %5zu %8zu %8.2f %8.2f %10.2f %10.2f %9.4f %9.4f\n", c.object_count, c.runs, c.successes,
                c.mean_d, c.mean_nodes, c.mean_attempts, c.mean_rearranged, c.mean_tp_seconds, c.mean_mp_seconds);
  std::printf("\n%4s %5s %10s %10s %9s\n", "d", "rows", "nodes", "attempts", "mp_s");
  for (const auto& b : s.per_depth)
    std::printf("%4zu %5zu %10zu %10zu %9.4f\n", b.d, b.rows, b.nodes_visited, b.mp_attempts, b.mp_seconds);
  std::printf("\nnodes = %.4f * d + %.4f (R^2 = %.4f, n = %zu)\n", s.nodes_vs_d.slope, s.nodes_vs_d.intercept,
              s.nodes_vs_d.r2, s.nodes_vs_d.n);
  std::printf("spearman(objects, mean d) = %.4f\n", s.spearman_count_d);
  std::printf("runs: %zu ok, %zu failed\n", s.successful_runs, s.failed_runs);
  return s.failed_runs == 0 ? kOk : kPlanningFailure;
}

int cmd_select(const std::string& scenario, const std::string& robot, const std::string& target, double step,
               const std::string& svg) {
  const WorkspaceModel w = load_scenario(scenario);
  GraspFan fan;
  try {
    fan = feasible_grasp_angles(w, robot, target, step);
  } catch (const NoFeasibleGrasp& e) {
    std::printf("infeasible: %s\n", e.what());
    return kPlanningFailure;
  }
  const SelectionTriangle tri = build_selection_triangle(w, robot, fan);
  std::printf("fan: axis=%.6f alpha=%.6f beta=%.6f valid=%zu\n", fan.axis, fan.alpha, fan.beta,
              fan.valid_angles.size());
  for (const auto& v : tri.vertices) std::printf("vertex %.6f %.6f\n", v.x, v.y);
  std::printf("inflation %.6f\nselected:", tri.inflation);
  for (const auto& id : tri.selected) std::printf(" %s", id.c_str());
  std::printf("\n");
  if (!svg.empty()) save_svg(svg, render_svg(w, {{tri}, {}}));
  return kOk;
}

int cmd_allocate(const std::string& scenario, std::uint64_t seed, const std::string& mode_name,
                 const std::string& csv) {
  const auto mode = parse_count_mode(mode_name);
  if (!mode) throw CLI::ValidationError("--mode", "expected union or eq1");
  const WorkspaceModel w = load_scenario(scenario);
  Allocation a;
  try {
    a = allocate(w, {kDefaultAngleStep, seed, *mode, TaskOrder::seeded_random});
  } catch (const TaskInfeasible& e) {
    std::printf("infeasible: %s\n", e.what());
    return kPlanningFailure;
  }
  std::printf("%-4s %-8s %-6s %5s %9s %8s %s\n", "step", "task", "robot", "raw", "corrected", "utility", "chosen");
  std::string rows = "step,task,robot,raw,corrected,utility,chosen\n";
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& s = a.steps[i];
    for (const auto& [r, e] : s.entries) {
      const std::string raw = e.raw_count ? std::to_string(*e.raw_count) : "inf";
      const std::string cor = e.corrected_count ? std::to_string(*e.corrected_count) : "inf";
      const char* chosen = r == s.chosen ? "*" : "";
      std::printf("%-4zu %-8s %-6s %5s %9s %8.4f %s\n", i + 1, s.task.c_str(), r.c_str(), raw.c_str(), cor.c_str(),
                  e.utility, chosen);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%zu,%s,%s,%s,%s,%.6f,%d\n", i + 1, s.task.c_str(), r.c_str(), raw.c_str(),
                    cor.c_str(), e.utility, r == s.chosen ? 1 : 0);
      rows += buf;
    }
  }
  for (const auto& r : a.robots) {
    std::printf("%s:", r.c_str());
    for (const auto& t : a.schedule_of(r)) std::printf(" %s", t.c_str());
    std::printf("\n");
  }
  std::printf("total utility %.6f (mode %s)\n", a.total_utility, std::string(to_string(a.mode)).c_str());
  if (!csv.empty()) open_out(csv) << rows;
  return kOk;
}

int cmd_plan(const std::string& scenario, const std::string& from, const std::string& to, double radius,
             std::uint64_t seed, const std::string& svg) {
  const WorkspaceModel w = load_scenario(scenario);
  const Vec2 a = parse_point(from), b = parse_point(to);
  MotionQuery q;
  q.start = {a.x, a.y, 0.0};
  q.goals = {{b.x, b.y, 0.0}};
  q.moving_radius = radius;
  q.obstacles = static_obstacles(w);
  q.bounds = query_bounds(w, a, q.goals, radius);
  q.seed = seed;
  std::optional<MotionPlan> plan;
  try {
    plan = plan_path(q);
  } catch (const StartInCollision& e) {
    std::printf("infeasible: %s\n", e.what());
    return kPlanningFailure;
  }
  if (!plan) {
    std::printf("infeasible: no path within %zu iterations\n", q.params.max_iterations);
    return kPlanningFailure;
  }
  for (const auto& c : plan->waypoints) std::printf("%.6f %.6f\n", c.x, c.y);
  std::printf("length %.6f\n", plan->length());
  if (!svg.empty()) {
    RenderPath path;
    for (const auto& c : plan->waypoints) path.points.push_back(c.position());
    save_svg(svg, render_svg(w, {{}, {path}}));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot task and motion planning for table-top object retrieval"};
  app.require_subcommand(1);

  std::size_t objects = 16, targets = 2, robots = 2;
  std::uint64_t seed = 0;
  std::string out, scenario, trace, svg, csv, robot, target, mode = "union", from, to;
  double p = 0.0, step = kDefaultAngleStep, radius = 0.025;
  BenchmarkSpec spec;
  int code = kOk;

  auto* gen = app.add_subcommand("gen", "Generate a random scenario");
  gen->add_option("--objects", objects, "Number of objects")->required();
  gen->add_option("--targets", targets, "Number of targets");
  gen->add_option("--robots", robots, "Number of robots (1-4)");
  gen->add_option("--seed", seed, "Scenario seed");
  gen->add_option("--out", out, "Output JSON file (default stdout)");

  auto* runc = app.add_subcommand("run", "Allocate and execute every task of a scenario");
  runc->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  runc->add_option("--p", p, "Execution failure probability in [0,1)")->check(CLI::Range(0.0, 0.999999));
  runc->add_option("--seed", seed, "Executor seed");
  runc->add_option("--trace", trace, "Write NDJSON event trace");
  runc->add_option("--render", svg, "Write SVG of the scene with executed paths");
  runc->add_option("--csv", csv, "Write per-robot metrics CSV");

  auto* benchc = app.add_subcommand("bench", "Benchmark sweep over object counts");
  benchc->add_option("--counts", spec.object_counts, "Object counts (ascending)");
  benchc->add_option("--reps", spec.repetitions, "Repetitions per count");
  benchc->add_option("--robots", spec.robots, "Robots per scenario");
  benchc->add_option("--targets", spec.targets, "Targets per scenario");
  benchc->add_option("--seed", spec.seed, "Base seed");
  benchc->add_option("--p", spec.executor.failure_probability, "Execution failure probability")
      ->check(CLI::Range(0.0, 0.999999));
  benchc->add_option("--csv", csv, "Write the metrics table as CSV");

  auto* sel = app.add_subcommand("select", "Show the selection triangle for a robot and target");
  sel->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sel->add_option("--robot", robot, "Robot id")->required();
  sel->add_option("--target", target, "Target id")->required();
  sel->add_option("--step", step, "Grasp angle step (radians)");
  sel->add_option("--render", svg, "Write SVG with the triangle overlay");

  auto* alloc = app.add_subcommand("allocate", "Print the utility table and the greedy assignment");
  alloc->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  alloc->add_option("--seed", seed, "Allocation seed");
  alloc->add_option("--mode", mode, "Count mode: union or eq1");
  alloc->add_option("--csv", csv, "Also write the table as CSV");

  auto* plan = app.add_subcommand("plan", "Plan a disc path between two points");
  plan->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--from", from, "Start x,y")->required();
  plan->add_option("--to", to, "Goal x,y")->required();
  plan->add_option("--radius", radius, "Moving disc radius");
  plan->add_option("--seed", seed, "Planner seed");
  plan->add_option("--render", svg, "Write SVG with the path overlay");

  try {
    app.parse(argc, argv);
    if (*gen) code = cmd_gen(objects, targets, robots, seed, out);
    else if (*runc) code = cmd_run(scenario, p, seed, trace, svg, csv);
    else if (*benchc) code = cmd_bench(spec, csv);
    else if (*sel) code = cmd_select(scenario, robot, target, step, svg);
    else if (*alloc) code = cmd_allocate(scenario, seed, mode, csv);
    else if (*plan) code = cmd_plan(scenario, from, to, radius, seed, svg);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return kUsage;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invalid scenario: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPlanningFailure;
  }
  return code;
}
