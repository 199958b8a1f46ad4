#pragma once

// Machine configuration files (JSON, schema version 1). Unknown keys are
// errors at every level so typos never pass silently.

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "swarmfab/error.hpp"
#include "swarmfab/machine.hpp"

namespace swarmfab::config {

using json = nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct LoadedConfig {
  MachineConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail("missing key '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return as_number(j_.at(key), path_ + "." + key);
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const std::string& key, Vec3 fallback) {
    if (!has(key)) return fallback;
    return as_vec3(j_.at(key), path_ + "." + key);
  }

  Vec2 vec2(const std::string& key, Vec2 fallback) {
    if (!has(key)) return fallback;
    return as_vec2(j_.at(key), path_ + "." + key);
  }

  // Rejects keys that were never asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + ": number must be finite");
    return d;
  }

  static std::vector<double> as_array(const json& v, std::size_t n, const std::string& path) {
    if (!v.is_array() || v.size() != n) {
      throw ConfigError(path + ": expected an array of " + std::to_string(n) + " numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  static Vec3 as_vec3(const json& v, const std::string& path) {
    const auto a = as_array(v, 3, path);
    return {a[0], a[1], a[2]};
  }

  static Vec2 as_vec2(const json& v, const std::string& path) {
    const auto a = as_array(v, 2, path);
    return {a[0], a[1]};
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline kinematics::BridgeGeometry read_bridge(Reader& g) {
  kinematics::BridgeGeometry b;
  b.rail_x = g.number("rail_x", b.rail_x);
  b.bridge_span = g.number("bridge_span", b.bridge_span);
  b.carriage_min = g.number("carriage_min", b.carriage_min);
  b.carriage_max = g.number("carriage_max", b.carriage_max);
  b.bridge_height = g.number("bridge_height", b.bridge_height);
  b.y_min = g.number("y_min", b.y_min);
  b.y_max = g.number("y_max", b.y_max);
  return b;
}

inline Geometry read_geometry(Morphology m, const json& j) {
  Reader g(j, "geometry");
  Geometry out;
  switch (m) {
    case Morphology::BridgeXY:
      out = read_bridge(g);
      break;
    case Morphology::PrinterBridge: {
      PrinterBridgeGeometry p;
      p.bridge = read_bridge(g);
      Reader s(g.at("leadscrew"), "geometry.leadscrew");
      p.screw.pitch = s.number("pitch", p.screw.pitch);
      const double dir = s.number("direction", p.screw.direction);
      if (dir != 1.0 && dir != -1.0) s.fail("direction must be 1 or -1");
      p.screw.direction = static_cast<int>(dir);
      p.screw.z_min = s.number("z_min", p.screw.z_min);
      p.screw.z_max = s.number("z_max", p.screw.z_max);
      s.finish();
      p.screw_mount = g.vec2("screw_mount", p.screw_mount);
      out = p;
      break;
    }
    case Morphology::Wire2DWall: {
      kinematics::WireGeometry2D w;
      const auto& anchors = g.at("anchors");
      if (!anchors.is_array() || anchors.size() != 2) g.fail("anchors must hold 2 points");
      for (std::size_t i = 0; i < 2; ++i) w.anchors[i] = Reader::as_vec2(anchors[i], "geometry.anchors");
      w.spool_radius = g.number("spool_radius", w.spool_radius);
      w.workspace_margin = g.number("workspace_margin", w.workspace_margin);
      out = w;
      break;
    }
    case Morphology::Wire3DPrinter: {
      Wire3DPrinterGeometry w;
      const auto& anchors = g.at("anchors");
      if (!anchors.is_array() || anchors.size() != 3) g.fail("anchors must hold 3 points");
      for (std::size_t i = 0; i < 3; ++i) w.wires.anchors[i] = Reader::as_vec3(anchors[i], "geometry.anchors");
      w.wires.spool_radius = g.number("spool_radius", w.wires.spool_radius);
      w.wires.workspace_margin = g.number("workspace_margin", w.wires.workspace_margin);
      if (g.has("working_side")) {
        const std::string side = g.string("working_side");
        if (side == "below") w.wires.side = kinematics::WorkingSide::Below;
        else if (side == "above") w.wires.side = kinematics::WorkingSide::Above;
        else g.fail("working_side must be \"below\" or \"above\"");
      }
      w.bed_origin = g.vec3("bed_origin", w.bed_origin);
      out = w;
      break;
    }
  }
  g.finish();
  return out;
}

inline json bridge_json(const kinematics::BridgeGeometry& b) {
  json j = {{"rail_x", b.rail_x},
            {"bridge_span", b.bridge_span},
            {"carriage_min", b.carriage_min},
            {"carriage_max", b.carriage_max},
            {"bridge_height", b.bridge_height}};
  if (std::isfinite(b.y_min)) j["y_min"] = b.y_min;
  if (std::isfinite(b.y_max)) j["y_max"] = b.y_max;
  return j;
}

inline json arr(Vec2 v) { return json::array({v.x, v.y}); }
inline json arr(Vec3 v) { return json::array({v.x, v.y, v.z}); }

}  // namespace detail

inline LoadedConfig from_json(const json& j) {
  using detail::Reader;
  LoadedConfig out;
  auto& c = out.config;
  Reader top(j, "config");

  const auto& v = top.at("v");
  if (!v.is_number_integer() || v.get<long long>() != 1) top.fail("unsupported schema version (expected \"v\": 1)");

  const std::string name = top.string("morphology");
  const auto morph = parse_morphology(name);
  if (!morph) top.fail("unknown morphology '" + name + "'");
  c.geometry = detail::read_geometry(*morph, top.at("geometry"));

  const auto& roster = top.at("roster");
  if (!roster.is_array()) top.fail("roster must be an array");
  for (std::size_t i = 0; i < roster.size(); ++i) {
    Reader r(roster[i], "roster[" + std::to_string(i) + "]");
    RosterEntry e;
    e.id = r.string("id");
    if (e.id.empty() || e.id.find_first_of(" \t\n,=") != std::string::npos) {
      r.fail("id must be non-empty without spaces, commas or '='");
    }
    e.params.wheel_track = r.number("wheel_track", e.params.wheel_track);
    e.params.max_wheel_speed = r.number("max_wheel_speed", e.params.max_wheel_speed);
    e.params.body_radius = r.number("body_radius", e.params.body_radius);
    e.params.position_noise_std = r.number("position_noise_std", e.params.position_noise_std);
    r.finish();
    c.roster.push_back(std::move(e));
  }

  {
    Reader w(top.at("workspace"), "workspace");
    c.workspace.min = Reader::as_vec3(w.at("min"), "workspace.min");
    c.workspace.max = Reader::as_vec3(w.at("max"), "workspace.max");
    w.finish();
  }
  if (top.has("limits")) {
    Reader l(j.at("limits"), "limits");
    c.max_tool_speed = l.number("max_tool_speed", c.max_tool_speed);
    c.sync_tol = l.number("sync_tol", c.sync_tol);
    l.finish();
  }
  if (top.has("planning")) {
    Reader p(j.at("planning"), "planning");
    c.dt_plan = p.number("dt_plan", c.dt_plan);
    c.home = p.vec3("home", c.home);
    c.barrier_angle_deg = p.number("barrier_angle_deg", c.barrier_angle_deg);
    c.chord_tol = p.number("chord_tol", c.chord_tol);
    c.default_feed = p.number("default_feed", c.default_feed);
    p.finish();
  }
  if (top.has("sim")) {
    Reader s(j.at("sim"), "sim");
    c.dt_sim = s.number("dt_sim", c.dt_sim);
    c.noise_std = s.number("noise_std", c.noise_std);
    c.stall_timeout = s.number("stall_timeout", c.stall_timeout);
    s.finish();
  }
  if (top.has("control")) {
    Reader k(j.at("control"), "control");
    auto& g = c.control;
    g.k_heading = k.number("k_heading", g.k_heading);
    g.k_distance = k.number("k_distance", g.k_distance);
    g.v_cap = k.number("v_cap", g.v_cap);
    g.arrival_tol = k.number("arrival_tol", g.arrival_tol);
    g.angular_tol = k.number("angular_tol", g.angular_tol);
    k.finish();
    if (!(g.k_heading > 0 && g.k_distance > 0 && g.v_cap > 0 && g.arrival_tol > 0 && g.angular_tol > 0)) {
      k.fail("controller parameters must be positive");
    }
  }
  if (top.has("reconfig")) {
    Reader r(j.at("reconfig"), "reconfig");
    auto& rc = c.reconfig;
    rc.dock = r.vec2("dock", rc.dock);
    rc.swap_duration = r.number("swap_duration", rc.swap_duration);
    if (r.has("parking")) {
      const auto& p = j.at("reconfig").at("parking");
      if (!p.is_array()) r.fail("parking must be an array of points");
      rc.parking.clear();
      for (const auto& pt : p) rc.parking.push_back(Reader::as_vec2(pt, "reconfig.parking"));
    }
    if (r.has("floor")) {
      Reader f(j.at("reconfig").at("floor"), "reconfig.floor");
      rc.floor.min = Reader::as_vec2(f.at("min"), "reconfig.floor.min");
      rc.floor.max = Reader::as_vec2(f.at("max"), "reconfig.floor.max");
      f.finish();
    }
    r.finish();
  }
  top.finish();

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  const auto need = required_robots(c.morphology());
  if (c.roster.size() < need) {
    throw ConfigError("config: " + name + " needs " + std::to_string(need) + " robots, roster has " +
                      std::to_string(c.roster.size()));
  }
  for (std::size_t i = need; i < c.roster.size(); ++i) {
    out.warnings.push_back("robot '" + c.roster[i].id + "' is a spare");
  }
  return out;
}

inline LoadedConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(j);
}

inline json to_json(const MachineConfig& c) {
  using detail::arr;
  json j;
  j["v"] = 1;
  j["morphology"] = to_string(c.morphology());
  switch (c.morphology()) {
    case Morphology::BridgeXY:
      j["geometry"] = detail::bridge_json(c.geom<kinematics::BridgeGeometry>());
      break;
    case Morphology::PrinterBridge: {
      const auto& p = c.geom<PrinterBridgeGeometry>();
      j["geometry"] = detail::bridge_json(p.bridge);
      j["geometry"]["leadscrew"] = {{"pitch", p.screw.pitch},
                                    {"direction", p.screw.direction},
                                    {"z_min", p.screw.z_min},
                                    {"z_max", p.screw.z_max}};
      j["geometry"]["screw_mount"] = arr(p.screw_mount);
      break;
    }
    case Morphology::Wire2DWall: {
      const auto& w = c.geom<kinematics::WireGeometry2D>();
      j["geometry"] = {{"anchors", json::array({arr(w.anchors[0]), arr(w.anchors[1])})},
                       {"spool_radius", w.spool_radius},
                       {"workspace_margin", w.workspace_margin}};
      break;
    }
    case Morphology::Wire3DPrinter: {
      const auto& w = c.geom<Wire3DPrinterGeometry>();
      j["geometry"] = {
          {"anchors", json::array({arr(w.wires.anchors[0]), arr(w.wires.anchors[1]), arr(w.wires.anchors[2])})},
          {"spool_radius", w.wires.spool_radius},
          {"workspace_margin", w.wires.workspace_margin},
          {"working_side", w.wires.side == kinematics::WorkingSide::Below ? "below" : "above"},
          {"bed_origin", arr(w.bed_origin)}};
      break;
    }
  }
  j["roster"] = json::array();
  for (const auto& r : c.roster) {
    j["roster"].push_back({{"id", r.id},
                           {"wheel_track", r.params.wheel_track},
                           {"max_wheel_speed", r.params.max_wheel_speed},
                           {"body_radius", r.params.body_radius},
                           {"position_noise_std", r.params.position_noise_std}});
  }
  j["workspace"] = {{"min", arr(c.workspace.min)}, {"max", arr(c.workspace.max)}};
  j["limits"] = {{"max_tool_speed", c.max_tool_speed}, {"sync_tol", c.sync_tol}};
  j["planning"] = {{"dt_plan", c.dt_plan},
                   {"home", arr(c.home)},
                   {"barrier_angle_deg", c.barrier_angle_deg},
                   {"chord_tol", c.chord_tol},
                   {"default_feed", c.default_feed}};
  j["sim"] = {{"dt_sim", c.dt_sim}, {"noise_std", c.noise_std}, {"stall_timeout", c.stall_timeout}};
  j["control"] = {{"k_heading", c.control.k_heading},
                  {"k_distance", c.control.k_distance},
                  {"v_cap", c.control.v_cap},
                  {"arrival_tol", c.control.arrival_tol},
                  {"angular_tol", c.control.angular_tol}};
  json parking = json::array();
  for (const auto& p : c.reconfig.parking) parking.push_back(arr(p));
  j["reconfig"] = {{"dock", arr(c.reconfig.dock)},
                   {"parking", parking},
                   {"swap_duration", c.reconfig.swap_duration},
                   {"floor", {{"min", arr(c.reconfig.floor.min)}, {"max", arr(c.reconfig.floor.max)}}}};
  return j;
}

// Ready-to-use machine of the given morphology with exactly the robots it
// needs. Geometry values are plausible toio-scale defaults.
inline MachineConfig default_config(Morphology m) {
  MachineConfig c;
  kinematics::BridgeGeometry bridge;
  bridge.rail_x = -50.0;
  bridge.bridge_span = 400.0;
  bridge.carriage_min = 40.0;
  bridge.carriage_max = 360.0;
  switch (m) {
    case Morphology::BridgeXY:
      c.geometry = bridge;
      c.workspace = {{0.0, 0.0, -5.0}, {300.0, 300.0, 50.0}};
      break;
    case Morphology::PrinterBridge: {
      PrinterBridgeGeometry p;
      p.bridge = bridge;
      p.screw_mount = {150.0, -60.0};
      c.geometry = p;
      c.workspace = {{0.0, 0.0, 0.0}, {300.0, 300.0, 100.0}};
      break;
    }
    case Morphology::Wire2DWall: {
      kinematics::WireGeometry2D w;
      w.anchors = {Vec2{-300.0, 600.0}, Vec2{300.0, 600.0}};
      c.geometry = w;
      c.workspace = {{-250.0, 0.0, -5.0}, {250.0, 500.0, 50.0}};
      break;
    }
    case Morphology::Wire3DPrinter: {
      Wire3DPrinterGeometry w;
      w.wires.anchors = {Vec3{-250.0, -200.0, 500.0}, Vec3{250.0, -200.0, 500.0}, Vec3{0.0, 250.0, 500.0}};
      c.geometry = w;
      c.workspace = {{-100.0, -100.0, 0.0}, {100.0, 100.0, 150.0}};
      break;
    }
  }
  for (std::size_t i = 0; i < required_robots(m); ++i) c.roster.push_back({"r" + std::to_string(i + 1), {}});
  c.reconfig.dock = {-100.0, -100.0};
  c.reconfig.parking = {{-200.0, -100.0}, {-250.0, -100.0}, {-300.0, -100.0}, {-350.0, -100.0}};
  c.reconfig.floor = {{-400.0, -400.0}, {600.0, 700.0}};
  return c;
}

}  // namespace swarmfab::config
