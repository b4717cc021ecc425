#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mrtmp/errors.hpp"
#include "mrtmp/world.hpp"

namespace mrtmp {

// Scenario file schema (JSON, meters and radians):
//
//   {
//     "table":        {"w": 1.0, "h": 0.8},                  // optional "x", "y" (default 0)
//     "objects":      [{"id", "x", "y", "r", "kind"}],        // kind: target | clutter
//                                                             // optional "status" (default on_table)
//     "robots":       [{"id", "bx", "by", "reach_min", "reach_max", "ee_radius"}],
//                                                             // optional "home": {"x","y","theta"}
//     "safe_regions": [{"x", "y", "w", "h", "owner"}],        // owner: robot id or "shared"
//     "seed":         unsigned integer
//   }
//
// Doubles are written in shortest round-trip form, so load(save(w)) == w.

namespace detail {

using nlohmann::json;

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key + ": missing");
  return *it;
}

inline double number(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw SchemaError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::string text(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline const json& array(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) throw SchemaError(path + "." + key + ": expected an array");
  return v;
}

inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

}  // namespace detail

inline nlohmann::json to_json(const WorkspaceModel& w) {
  using nlohmann::json;
  json j;
  j["table"] = {{"x", w.table.x}, {"y", w.table.y}, {"w", w.table.w}, {"h", w.table.h}};
  j["objects"] = json::array();
  for (const auto& o : w.objects) {
    j["objects"].push_back({{"id", o.id},
                            {"x", o.center.x},
                            {"y", o.center.y},
                            {"r", o.radius},
                            {"kind", to_string(o.kind)},
                            {"status", to_string(o.status)}});
  }
  j["robots"] = json::array();
  for (const auto& r : w.robots) {
    j["robots"].push_back({{"id", r.id},
                           {"bx", r.base.x},
                           {"by", r.base.y},
                           {"reach_min", r.reach_min},
                           {"reach_max", r.reach_max},
                           {"ee_radius", r.ee_radius},
                           {"home", {{"x", r.home.x}, {"y", r.home.y}, {"theta", r.home.theta}}}});
  }
  j["safe_regions"] = json::array();
  for (const auto& s : w.safe_regions) {
    j["safe_regions"].push_back(
        {{"x", s.rect.x}, {"y", s.rect.y}, {"w", s.rect.w}, {"h", s.rect.h}, {"owner", s.owner}});
  }
  j["seed"] = w.seed;
  return j;
}

/// Parses and validates. Throws SchemaError (with field path) or InvariantViolation.
inline WorkspaceModel from_json(const nlohmann::json& j) {
  using namespace detail;
  WorkspaceModel w;
  const std::string root = "$";

  const json& table = field(j, "table", root);
  w.table.x = table.contains("x") ? number(table, "x", root + ".table") : 0.0;
  w.table.y = table.contains("y") ? number(table, "y", root + ".table") : 0.0;
  w.table.w = number(table, "w", root + ".table");
  w.table.h = number(table, "h", root + ".table");

  const json& objects = array(j, "objects", root);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = at(root + ".objects", i);
    const json& o = objects[i];
    ObjectDisc d;
    d.id = text(o, "id", p);
    d.center = {number(o, "x", p), number(o, "y", p)};
    d.radius = number(o, "r", p);
    auto kind = parse_kind(text(o, "kind", p));
    if (!kind) throw SchemaError(p + ".kind: expected 'target' or 'clutter'");
    d.kind = *kind;
    if (o.contains("status")) {
      auto status = parse_status(text(o, "status", p));
      if (!status) throw SchemaError(p + ".status: unknown status");
      d.status = *status;
    }
    w.objects.push_back(d);
  }

  const json& robots = array(j, "robots", root);
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string p = at(root + ".robots", i);
    const json& r = robots[i];
    RobotModel m;
    m.id = text(r, "id", p);
    m.base = {number(r, "bx", p), number(r, "by", p)};
    m.reach_min = number(r, "reach_min", p);
    m.reach_max = number(r, "reach_max", p);
    m.ee_radius = number(r, "ee_radius", p);
    if (r.contains("home")) {
      const json& h = field(r, "home", p);
      m.home = {number(h, "x", p + ".home"), number(h, "y", p + ".home"), number(h, "theta", p + ".home")};
    } else {
      m.home = {m.base.x, m.base.y, angle_of(w.table.center() - m.base)};
    }
    w.robots.push_back(m);
  }

  const json& regions = array(j, "safe_regions", root);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string p = at(root + ".safe_regions", i);
    const json& s = regions[i];
    w.safe_regions.push_back({{number(s, "x", p), number(s, "y", p), number(s, "w", p), number(s, "h", p)},
                              text(s, "owner", p)});
  }

  const json& seed = field(j, "seed", root);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    throw SchemaError(root + ".seed: expected an unsigned integer");
  w.seed = seed.get<std::uint64_t>();

  validate(w);
  return w;
}

inline std::string dump_scenario(const WorkspaceModel& w) { return to_json(w).dump(2) + "\n"; }

inline WorkspaceModel parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("$: not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline void save_scenario(const WorkspaceModel& w, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IOError("cannot open '" + file.string() + "' for writing");
  out << dump_scenario(w);
}

inline WorkspaceModel load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IOError("cannot open '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace mrtmp
