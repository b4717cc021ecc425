#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mrtmp/errors.hpp"
#include "mrtmp/selection.hpp"
#include "mrtmp/world.hpp"

// Top-down SVG of a workspace. Output depends only on the inputs, so two
// renders of the same scene are byte-identical.

namespace mrtmp {

struct RenderPath {
  std::vector<Vec2> points;
  std::string color{"#1f77b4"};
};

struct RenderOverlay {
  std::vector<SelectionTriangle> triangles;
  std::vector<RenderPath> paths;
};

namespace detail {

class SvgWriter {
 public:
  SvgWriter(const Rect& view, double scale) : view_(view), scale_(scale) {}

  double sx(double x) const { return (x - view_.x) * scale_; }
  double sy(double y) const { return (view_.ymax() - y) * scale_; }

  void raw(const std::string& s) { out_ += s; }

  void printf(const char* fmt, auto... args) {
    const int n = std::snprintf(nullptr, 0, fmt, args...);
    std::string buf(static_cast<std::size_t>(n) + 1, '\0');
    std::snprintf(buf.data(), buf.size(), fmt, args...);
    buf.pop_back();
    out_ += buf;
  }

  void rect(const Rect& r, const char* fill, const char* stroke, const char* extra = "") {
    printf("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\" stroke=\"%s\"%s/>\n", sx(r.x),
           sy(r.ymax()), r.w * scale_, r.h * scale_, fill, stroke, extra);
  }

  void circle(Vec2 c, double r, const char* fill, const char* stroke, const std::string& id) {
    printf("<circle id=\"%s\" cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" stroke=\"%s\"/>\n", id.c_str(), sx(c.x),
           sy(c.y), r * scale_, fill, stroke);
  }

  std::string points(const std::vector<Vec2>& pts) const {
    std::string s;
    char buf[64];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", sx(pts[i].x), sy(pts[i].y));
      s += buf;
    }
    return s;
  }

  const std::string& str() const { return out_; }

 private:
  Rect view_;
  double scale_;
  std::string out_;
};

}  // namespace detail

inline std::string render_svg(const WorkspaceModel& world, const RenderOverlay& overlay = {}, double scale = 400.0) {
  const Rect view = world.bounds();
  detail::SvgWriter w(view, scale);
  w.printf("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.2f %.2f\">\n",
           view.w * scale, view.h * scale, view.w * scale, view.h * scale);
  w.raw("<g id=\"regions\">\n");
  for (const auto& s : world.safe_regions) w.rect(s.rect, "#e8f5e9", "#2e7d32", " stroke-dasharray=\"4 3\"");
  w.raw("</g>\n<g id=\"table\">\n");
  w.rect(world.table, "#f5f0e6", "#8d6e63");
  w.raw("</g>\n");

  IdSet highlighted;
  if (!overlay.triangles.empty()) {
    w.raw("<g id=\"triangles\">\n");
    for (const auto& t : overlay.triangles) {
      const std::vector<Vec2> pts(t.vertices.begin(), t.vertices.end());
      w.printf("<polygon class=\"selection\" points=\"%s\" fill=\"#ffcc80\" fill-opacity=\"0.4\" stroke=\"#ef6c00\"/>\n",
               w.points(pts).c_str());
      highlighted.insert(t.selected.begin(), t.selected.end());
    }
    w.raw("</g>\n");
  }

  w.raw("<g id=\"objects\">\n");
  for (const auto& o : world.objects) {
    if (o.status == ObjectStatus::retrieved) continue;
    const char* fill = o.is_target() ? "#e53935" : (o.on_table() ? "#9e9e9e" : "#cfd8dc");
    const char* stroke = highlighted.contains(o.id) ? "#ef6c00" : "#424242";
    w.circle(o.center, o.radius, fill, stroke, o.id);
  }
  w.raw("</g>\n");

  if (!overlay.paths.empty()) {
    w.raw("<g id=\"paths\">\n");
    for (const auto& p : overlay.paths)
      w.printf("<polyline points=\"%s\" fill=\"none\" stroke=\"%s\"/>\n", w.points(p.points).c_str(),
               p.color.c_str());
    w.raw("</g>\n");
  }

  w.raw("<g id=\"robots\">\n");
  for (const auto& r : world.robots) {
    const double h = 0.03;
    w.printf("<rect id=\"%s\" x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#1e88e5\"/>\n", r.id.c_str(),
             w.sx(r.base.x - h), w.sy(r.base.y + h), 2 * h * scale, 2 * h * scale);
  }
  w.raw("</g>\n</svg>\n");
  return w.str();
}

inline void save_svg(const std::filesystem::path& file, const std::string& svg) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IOError("cannot open " + file.string());
  out << svg;
  if (!out) throw IOError("write failed for " + file.string());
}

}  // namespace mrtmp
