#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/executor.hpp"
#include "mrtmp/rng.hpp"
#include "mrtmp/world.hpp"

// Benchmark sweeps over object counts, a fixed CSV metrics schema, and the
// aggregates used to check depth growth and the nodes-vs-depth bound.

namespace mrtmp {

struct BenchmarkSpec {
  std::vector<std::size_t> object_counts{6, 8, 9, 12, 16, 20, 30, 49, 64};
  std::size_t repetitions{3};
  std::size_t robots{2};
  std::size_t targets{2};
  std::uint64_t seed{1};
  ExecutorConfig executor;

  void check() const {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
    if (object_counts.empty()) throw std::invalid_argument("no object counts");
    if (!std::is_sorted(object_counts.begin(), object_counts.end()))
      throw std::invalid_argument("object counts must be sorted ascending");
    executor.check();
  }
};

struct MetricsRow {
  std::size_t object_count{0};
  std::size_t repetition{0};
  std::uint64_t seed{0};
  RobotId robot;
  bool success{false};  // run-level flag
  std::size_t tasks{0};
  std::size_t tasks_solved{0};
  std::size_t d{0};
  std::size_t nodes_visited{0};
  std::size_t mp_attempts{0};
  std::size_t executions{0};
  std::size_t rearranged{0};
  std::size_t failures{0};
  double tp_seconds{0.0};
  double mp_seconds{0.0};

  bool operator==(const MetricsRow&) const = default;
};

struct RunRecord {
  std::size_t object_count{0};
  std::size_t repetition{0};
  std::uint64_t seed{0};
  bool success{false};
  std::string error;
  double wall_seconds{0.0};
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  std::vector<RunRecord> runs;
};

inline std::uint64_t scenario_seed(std::uint64_t base, std::size_t count, std::size_t rep) {
  return mix_seed(base, count * 1000 + rep);
}

/// Per-run executor config: every component seed is mixed with the scenario seed.
inline ExecutorConfig run_config(const ExecutorConfig& base, std::uint64_t seed) {
  ExecutorConfig c = base;
  c.seeds.allocation = mix_seed(base.seeds.allocation, seed);
  c.seeds.motion = mix_seed(base.seeds.motion, seed);
  c.seeds.failure = mix_seed(base.seeds.failure, seed);
  return c;
}

/// Called once per run; `report` is null when the run threw.
using RunObserver = std::function<void(const RunRecord&, const WorkspaceModel* world, const ExecutionReport* report)>;

inline MetricsTable bench(const BenchmarkSpec& spec, const RunObserver& observer = {}) {
  spec.check();
  MetricsTable table;
  for (std::size_t count : spec.object_counts) {
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
      RunRecord run{count, rep, scenario_seed(spec.seed, count, rep), false, {}, 0.0};
      const auto t0 = std::chrono::steady_clock::now();
      std::optional<WorkspaceModel> world;
      std::optional<ExecutionReport> report;
      try {
        world = generate_scenario(count, spec.targets, spec.robots, run.seed);
        report = mrtmp::run(*world, run_config(spec.executor, run.seed));
        run.success = report->success;
        if (!run.success) run.error = "targets not retrieved";
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      for (std::size_t i = 0; i < spec.robots; ++i) {
        MetricsRow row{count, rep, run.seed, "r" + std::to_string(i + 1), run.success};
        if (report) {
          const RobotMetrics& m = report->metrics(row.robot);
          row.tasks = m.tasks;
          row.tasks_solved = m.tasks_solved;
          row.d = m.depth;
          row.nodes_visited = m.nodes_visited;
          row.mp_attempts = m.attempts;
          row.executions = m.executions;
          row.rearranged = m.rearranged;
          row.failures = m.failures;
          row.tp_seconds = m.tp_seconds;
          row.mp_seconds = m.mp_seconds;
        }
        table.rows.push_back(row);
      }
      table.runs.push_back(run);
      if (observer) observer(run, world ? &*world : nullptr, report ? &*report : nullptr);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kCsvHeader =
    "object_count,repetition,seed,robot,success,tasks,tasks_solved,d,nodes_visited,mp_attempts,executions,"
    "rearranged,failures,tp_seconds,mp_seconds";

inline void write_csv(std::ostream& out, const MetricsTable& table) {
  out << kCsvHeader << '\n';
  char buf[512];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%llu,%s,%d,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%.17g,%.17g\n",
                  r.object_count, r.repetition, static_cast<unsigned long long>(r.seed), r.robot.c_str(),
                  r.success ? 1 : 0, r.tasks, r.tasks_solved, r.d, r.nodes_visited, r.mp_attempts, r.executions,
                  r.rearranged, r.failures, r.tp_seconds, r.mp_seconds);
    out << buf;
  }
}

/// Reads rows written by write_csv. Throws SchemaError on a header or field mismatch.
inline MetricsTable read_csv(std::istream& in) {
  MetricsTable table;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw SchemaError("unexpected CSV header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 15) throw SchemaError("line " + std::to_string(lineno) + ": expected 15 fields");
    try {
      auto u = [&](std::size_t i) { return static_cast<std::size_t>(std::stoull(f[i])); };
      MetricsRow r;
      r.object_count = u(0);
      r.repetition = u(1);
      r.seed = std::stoull(f[2]);
      r.robot = f[3];
      r.success = f[4] == "1";
      r.tasks = u(5);
      r.tasks_solved = u(6);
      r.d = u(7);
      r.nodes_visited = u(8);
      r.mp_attempts = u(9);
      r.executions = u(10);
      r.rearranged = u(11);
      r.failures = u(12);
      r.tp_seconds = std::stod(f[13]);
      r.mp_seconds = std::stod(f[14]);
      table.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw SchemaError("line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Statistics

struct LinearFit {
  double slope{0.0};
  double intercept{0.0};
  double r2{0.0};
  std::size_t n{0};
};

/// Least squares y = slope * x + intercept. R^2 is 1 when every residual vanishes.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  f.n = x.size();
  if (x.size() != y.size() || x.empty()) return f;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    sse += e * e;
  }
  if (syy > 0.0) f.r2 = 1.0 - sse / syy;
  else f.r2 = sse <= 1e-18 ? 1.0 : 0.0;
  return f;
}

/// 1-based ranks; ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of the average ranks. NaN when either side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

struct DepthBin {
  std::size_t d{0};
  std::size_t rows{0};
  std::size_t nodes_visited{0};
  std::size_t mp_attempts{0};
  double mp_seconds{0.0};
};

struct CountBin {
  std::size_t object_count{0};
  std::size_t runs{0};
  std::size_t successes{0};
  std::size_t rows{0};  // successful robot rows
  double mean_d{0.0};
  double mean_nodes{0.0};
  double mean_attempts{0.0};
  double mean_rearranged{0.0};
  double mean_tp_seconds{0.0};
  double mean_mp_seconds{0.0};
};

struct Summary {
  std::vector<DepthBin> per_depth;
  std::vector<CountBin> per_count;
  LinearFit nodes_vs_d;
  double spearman_count_d{std::numeric_limits<double>::quiet_NaN()};
  std::size_t successful_runs{0};
  std::size_t failed_runs{0};
};

/// Means and totals over rows of successful runs; failed runs are only counted.
inline Summary aggregate(const MetricsTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("aggregate: empty table");
  Summary s;
  std::map<std::size_t, DepthBin> depth;
  std::map<std::size_t, CountBin> count;
  std::map<std::pair<std::size_t, std::size_t>, bool> run_success;
  std::vector<double> xs, ys;
  for (const auto& r : table.rows) {
    run_success[{r.object_count, r.repetition}] = r.success;
    CountBin& c = count[r.object_count];
    c.object_count = r.object_count;
    if (!r.success) continue;
    DepthBin& b = depth[r.d];
    b.d = r.d;
    ++b.rows;
    b.nodes_visited += r.nodes_visited;
    b.mp_attempts += r.mp_attempts;
    b.mp_seconds += r.mp_seconds;
    ++c.rows;
    c.mean_d += static_cast<double>(r.d);
    c.mean_nodes += static_cast<double>(r.nodes_visited);
    c.mean_attempts += static_cast<double>(r.mp_attempts);
    c.mean_rearranged += static_cast<double>(r.rearranged);
    c.mean_tp_seconds += r.tp_seconds;
    c.mean_mp_seconds += r.mp_seconds;
    xs.push_back(static_cast<double>(r.d));
    ys.push_back(static_cast<double>(r.nodes_visited));
  }
  for (const auto& [key, ok] : run_success) {
    CountBin& c = count[key.first];
    ++c.runs;
    c.successes += ok ? 1 : 0;
    (ok ? s.successful_runs : s.failed_runs) += 1;
  }
  std::vector<double> cx, cy;
  for (auto& [n, c] : count) {
    if (c.rows > 0) {
      const double k = static_cast<double>(c.rows);
      c.mean_d /= k;
      c.mean_nodes /= k;
      c.mean_attempts /= k;
      c.mean_rearranged /= k;
      c.mean_tp_seconds /= k;
      c.mean_mp_seconds /= k;
      cx.push_back(static_cast<double>(n));
      cy.push_back(c.mean_d);
    }
    s.per_count.push_back(c);
  }
  for (const auto& [d, b] : depth) s.per_depth.push_back(b);
  s.nodes_vs_d = linear_fit(xs, ys);
  s.spearman_count_d = spearman(cx, cy);
  return s;
}

// ---------------------------------------------------------------------------
// Constructed scenes

/// One robot on the left edge, a target at the table center line and `k`
/// clutter discs in single file between them, so each must be removed in turn.
inline WorkspaceModel make_corridor_scenario(std::size_t k) {
  const Rect table{0.0, 0.0, 1.0, 0.8};
  std::vector<ObjectDisc> objects{{"target", {0.5, 0.4}, 0.03, ObjectKind::target, ObjectStatus::on_table}};
  for (std::size_t i = 1; i <= k; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "c%zu", i);
    objects.push_back({id, {0.5 - 0.08 * static_cast<double>(i), 0.4}, 0.03, ObjectKind::clutter,
                       ObjectStatus::on_table});
  }
  return build_world(table, std::move(objects), 1, k);
}

}  // namespace mrtmp
