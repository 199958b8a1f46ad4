#pragma once

// SVG and CSV writers for segments and simulation traces.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmfab/format.hpp"
#include "swarmfab/gcode.hpp"
#include "swarmfab/geometry.hpp"
#include "swarmfab/sim.hpp"

namespace swarmfab::io {

inline constexpr double kLayerQuantum = 1e-6;  // mm

inline long long layer_key(double z) { return std::llround(z / kLayerQuantum); }

struct SvgOptions {
  std::optional<Box3> view;  // defaults to the drawn bounds
  bool show_travel = true;
  double print_width = 0.4;
  double travel_width = 0.2;
};

struct Stroke {
  std::vector<Vec2> points;
  bool print = false;
  long long layer = 0;
};

namespace detail {

// Travel is drawn in the layer of the print it follows (or the first print
// when it comes before any), so groups are the printed layers. Drawings with
// no print at all keep their own z.
inline void attach_travel(std::vector<Stroke>& strokes) {
  const auto first = std::find_if(strokes.begin(), strokes.end(), [](const Stroke& s) { return s.print; });
  if (first == strokes.end()) return;
  long long layer = first->layer;
  for (auto& s : strokes) {
    if (s.print) {
      layer = s.layer;
    } else {
      s.layer = layer;
    }
  }
}

inline std::string render_svg(std::vector<Stroke> strokes, const SvgOptions& opt) {
  attach_travel(strokes);
  if (!opt.show_travel) std::erase_if(strokes, [](const Stroke& s) { return !s.print; });
  std::erase_if(strokes, [](const Stroke& s) { return s.points.size() < 2; });

  Box2 view{{0.0, 0.0}, {1.0, 1.0}};
  if (opt.view) {
    view = {opt.view->min.xy(), opt.view->max.xy()};
  } else if (!strokes.empty()) {
    view = {strokes[0].points[0], strokes[0].points[0]};
    for (const auto& s : strokes) {
      for (const auto& p : s.points) {
        view.min = {std::min(view.min.x, p.x), std::min(view.min.y, p.y)};
        view.max = {std::max(view.max.x, p.x), std::max(view.max.y, p.y)};
      }
    }
  }
  const double w = std::max(view.max.x - view.min.x, 1e-3);
  const double h = std::max(view.max.y - view.min.y, 1e-3);

  std::map<long long, std::vector<const Stroke*>> layers;
  for (const auto& s : strokes) layers[s.layer].push_back(&s);

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fixed(w, 4) + "mm\" height=\"" +
         fixed(h, 4) + "mm\" viewBox=\"" + fixed(view.min.x, 4) + " " + fixed(-view.max.y, 4) + " " + fixed(w, 4) +
         " " + fixed(h, 4) + "\">\n";
  out += "  <g transform=\"scale(1,-1)\" fill=\"none\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n";
  for (const auto& [key, list] : layers) {
    out += "    <g class=\"layer\" data-z=\"" + fixed(static_cast<double>(key) * kLayerQuantum, 6) + "\">\n";
    for (const Stroke* s : list) {
      auto pts = s->points;
      const bool closed = pts.size() >= 4 && pts.front() == pts.back();
      if (closed) pts.pop_back();
      std::string coords;
      for (const auto& p : pts) {
        if (!coords.empty()) coords += ' ';
        coords += fixed(p.x, 4) + "," + fixed(p.y, 4);
      }
      out += std::string("      <") + (closed ? "polygon" : "polyline");
      if (s->print) {
        out += " class=\"print\" stroke=\"#000000\" stroke-width=\"" + fixed(opt.print_width, 3) + "\"";
      } else {
        out += " class=\"travel\" stroke=\"#888888\" stroke-width=\"" + fixed(opt.travel_width, 3) +
               "\" stroke-dasharray=\"2 1\"";
      }
      out += " points=\"" + coords + "\"/>\n";
    }
    out += "    </g>\n";
  }
  out += "  </g>\n</svg>\n";
  return out;
}

}  // namespace detail

// Commanded path: chained segments of the same kind and layer merge into one
// stroke; a stroke that returns to its start is written as a polygon.
inline std::string export_svg(std::span<const gcode::MotionSegment> segments, const SvgOptions& opt = {}) {
  std::vector<Stroke> strokes;
  for (const auto& seg : segments) {
    if (seg.start.xy() == seg.end.xy()) continue;
    const bool print = seg.kind == gcode::SegmentKind::Print;
    const long long layer = layer_key(seg.end.z);
    if (!strokes.empty() && strokes.back().print == print && strokes.back().layer == layer &&
        strokes.back().points.back() == seg.start.xy()) {
      strokes.back().points.push_back(seg.end.xy());
      continue;
    }
    strokes.push_back({{seg.start.xy(), seg.end.xy()}, print, layer});
  }
  return detail::render_svg(std::move(strokes), opt);
}

// Simulated path, split into strokes wherever the extrusion state or the
// commanded layer changes. Each stroke starts at the previous sample so the
// drawing stays connected. The view defaults to the machine workspace.
inline std::string export_svg(const sim::Trace& trace, SvgOptions opt = {}) {
  if (!opt.view && trace.config.workspace.valid()) opt.view = trace.config.workspace;
  std::vector<Stroke> strokes;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    const long long layer = layer_key(s.layer_z);
    if (strokes.empty() || strokes.back().print != s.extruding || strokes.back().layer != layer) {
      strokes.push_back({{trace.samples[i - 1].tool.xy()}, s.extruding, layer});
    }
    if (strokes.back().points.back() != s.tool.xy()) strokes.back().points.push_back(s.tool.xy());
  }
  return detail::render_svg(std::move(strokes), opt);
}

// One row per robot per sample.
inline std::string export_csv(const sim::Trace& trace) {
  std::string out = "t,robot_id,x,y,heading,tool_x,tool_y,tool_z,extruding\n";
  for (const auto& s : trace.samples) {
    const std::string tail = fixed(s.tool.x) + "," + fixed(s.tool.y) + "," + fixed(s.tool.z) + "," +
                             (s.extruding ? "1" : "0") + "\n";
    for (std::size_t i = 0; i < s.poses.size(); ++i) {
      out += fixed(s.t) + "," + trace.robot_ids[i] + "," + fixed(s.poses[i].x) + "," + fixed(s.poses[i].y) + "," +
             fixed(s.poses[i].heading) + "," + tail;
    }
  }
  return out;
}

}  // namespace swarmfab::io
