#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrtmp/executor.hpp"
#include "mrtmp/world.hpp"

namespace mrtmp {

inline nlohmann::json to_json(const TraceEvent& e) {
  nlohmann::json j{{"seq", e.seq},       {"time", e.time},     {"end_time", e.end_time}, {"robot", e.robot},
                   {"task", e.task},     {"action", e.action}, {"object", e.object},     {"verdict", e.verdict},
                   {"graph", e.graph}};
  if (!e.path.empty()) {
    auto& p = j["path"] = nlohmann::json::array();
    for (Vec2 w : e.path) p.push_back({w.x, w.y});
    j["moving_radius"] = e.moving_radius;
    j["ignore"] = e.ignore;
  }
  if (e.status) {
    j["status"] = std::string(to_string(*e.status));
    j["center"] = {e.center->x, e.center->y};
  }
  return j;
}

/// Newline-delimited trace: executor events, then each task's network records.
inline void write_trace(std::ostream& out, const ExecutionReport& rep) {
  for (const auto& e : rep.trace) out << to_json(e).dump() << '\n';
  for (const auto& t : rep.tasks) {
    for (const auto& r : t.network_trace) {
      nlohmann::json j{{"source", "network"}, {"robot", t.robot}, {"task", t.task},
                       {"step", r.step},      {"graph", r.graph}, {"element", r.element},
                       {"verdict", r.verdict}, {"time", r.timestamp}};
      out << j.dump() << '\n';
    }
  }
}

struct ReplayResult {
  std::size_t collisions{0};
  std::size_t interval_overlaps{0};
  std::size_t missing_acks{0};
  bool conservation{true};
  bool targets_retrieved{true};
  bool clutter_in_safe{true};
  bool matches_final{true};
  std::vector<std::string> problems;

  bool ok() const {
    return collisions == 0 && interval_overlaps == 0 && missing_acks == 0 && conservation && targets_retrieved &&
           clutter_in_safe && matches_final;
  }
};

/// Rebuilds the world from the initial scenario and the event log, checking
/// every executed path against the world at that instant.
inline ReplayResult replay_trace(const WorkspaceModel& initial, const std::vector<TraceEvent>& trace,
                                 double resolution = 0.005, const WorkspaceModel* final_world = nullptr) {
  ReplayResult res;
  WorkspaceModel w = initial;
  std::map<RobotId, std::vector<ObjectId>> held;
  std::map<RobotId, bool> awaiting_ack;
  double last_end = -1e300;
  auto problem = [&](std::string s) {
    if (res.problems.size() < 20) res.problems.push_back(std::move(s));
  };

  auto check_disc = [&](Vec2 p, double r, const std::vector<ObjectId>& ignore, std::size_t seq) {
    for (const auto& o : w.objects) {
      if (!o.on_table() || std::find(ignore.begin(), ignore.end(), o.id) != ignore.end()) continue;
      if (distance(p, o.center) < r + o.radius - 1e-9) {
        ++res.collisions;
        problem("event " + std::to_string(seq) + " collides with " + o.id);
        return;
      }
    }
  };

  for (const auto& e : trace) {
    if (e.action == "step" && awaiting_ack[e.robot]) {
      ++res.missing_acks;
      problem("event " + std::to_string(e.seq) + ": step before ack");
      awaiting_ack[e.robot] = false;
    }
    if (e.action == "execute") {
      if (e.time < last_end - 1e-9) {
        ++res.interval_overlaps;
        problem("event " + std::to_string(e.seq) + " overlaps the previous execution");
      }
      last_end = std::max(last_end, e.end_time);
      for (std::size_t i = 0; i + 1 < e.path.size(); ++i) {
        const Vec2 a = e.path[i], b = e.path[i + 1];
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / resolution)));
        for (std::size_t s = 0; s <= n; ++s) check_disc(a + (b - a) * (static_cast<double>(s) / n), e.moving_radius,
                                                        e.ignore, e.seq);
      }
      if (e.path.size() == 1) check_disc(e.path[0], e.moving_radius, e.ignore, e.seq);
      if (e.verdict == "ok") awaiting_ack[e.robot] = true;
    } else if (e.action == "ack" || e.action == "failure") {
      awaiting_ack[e.robot] = false;
    }
    if (e.status) {
      ObjectDisc* o = w.find_object(e.object);
      if (o == nullptr) {
        res.conservation = false;
        problem("event " + std::to_string(e.seq) + " mutates unknown object " + e.object);
        continue;
      }
      auto& h = held[e.robot];
      std::erase(h, o->id);
      if (*e.status == ObjectStatus::grasped) h.push_back(o->id);
      if (h.size() > 1) {
        res.conservation = false;
        problem(e.robot + " holds more than one object");
      }
      o->status = *e.status;
      o->center = *e.center;
    }
  }

  for (const auto& o : w.objects) {
    if (o.is_target() && o.status != ObjectStatus::retrieved) {
      res.targets_retrieved = false;
      problem("target " + o.id + " not retrieved");
    }
    if (o.status == ObjectStatus::removed_to_safe) {
      const bool inside = std::any_of(w.safe_regions.begin(), w.safe_regions.end(),
                                      [&](const auto& s) { return s.rect.contains_disc(o.center, o.radius); });
      if (!inside) {
        res.clutter_in_safe = false;
        problem(o.id + " placed outside every safe region");
      }
    }
    if (o.status == ObjectStatus::grasped) {
      res.conservation = false;
      problem(o.id + " still held at the end");
    }
  }
  if (final_world != nullptr && !(*final_world == w)) {
    res.matches_final = false;
    problem("replayed world differs from the final knowledge base");
  }
  return res;
}

}  // namespace mrtmp
