#pragma once

// Machine configuration: morphology, geometry, robot roster and limits, plus
// the morphology-level IK/FK that maps a tool position to per-robot
// setpoints and back.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swarmfab/error.hpp"
#include "swarmfab/geometry.hpp"
#include "swarmfab/kinematics.hpp"
#include "swarmfab/robot.hpp"

namespace swarmfab {

enum class Morphology { BridgeXY, Wire2DWall, Wire3DPrinter, PrinterBridge };

inline constexpr std::array<Morphology, 4> kAllMorphologies{
    Morphology::BridgeXY, Morphology::Wire2DWall, Morphology::Wire3DPrinter, Morphology::PrinterBridge};

inline const char* to_string(Morphology m) {
  switch (m) {
    case Morphology::BridgeXY: return "bridge_xy";
    case Morphology::Wire2DWall: return "wire2d_wall";
    case Morphology::Wire3DPrinter: return "wire3d_printer";
    case Morphology::PrinterBridge: return "printer_bridge";
  }
  return "?";
}

inline std::optional<Morphology> parse_morphology(std::string_view s) {
  for (auto m : kAllMorphologies) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

// Active role slots in roster order.
inline std::vector<robot::Role> role_slots(Morphology m) {
  using robot::Role;
  switch (m) {
    case Morphology::BridgeXY: return {Role::BridgeLeft, Role::BridgeRight, Role::Carriage};
    case Morphology::Wire2DWall: return {Role::Spool1, Role::Spool2};
    case Morphology::Wire3DPrinter: return {Role::Spool1, Role::Spool2, Role::Spool3, Role::Table};
    case Morphology::PrinterBridge: return {Role::BridgeLeft, Role::BridgeRight, Role::Carriage, Role::Leadscrew};
  }
  return {};
}

inline std::size_t required_robots(Morphology m) { return role_slots(m).size(); }

// Attachment each role carries in a given morphology.
inline std::string attachment_for(Morphology m, robot::Role r) {
  using robot::Role;
  switch (r) {
    case Role::BridgeLeft:
    case Role::BridgeRight: return "bridge";
    case Role::Carriage: return m == Morphology::PrinterBridge ? "extruder" : "pen";
    case Role::Table: return "table";
    case Role::Spool1:
    case Role::Spool2:
    case Role::Spool3: return "spool";
    case Role::Leadscrew: return "leadscrew";
    case Role::Idle: return "";
  }
  return "";
}

// printer_bridge: gantry carries the extruder in x-y, a table robot turns the
// lead screw that sets the nozzle height above the bed.
struct PrinterBridgeGeometry {
  kinematics::BridgeGeometry bridge;
  kinematics::LeadScrew screw;
  Vec2 screw_mount{150.0, -60.0};
};

// wire3d_printer: tool coordinates are relative to the bed, which sits on
// the table robot; bed_origin is the bed's world position.
struct Wire3DPrinterGeometry {
  kinematics::WireGeometry3D wires;
  Vec3 bed_origin{};
};

using Geometry = std::variant<kinematics::BridgeGeometry, kinematics::WireGeometry2D, Wire3DPrinterGeometry,
                              PrinterBridgeGeometry>;

struct RosterEntry {
  std::string id;
  robot::RobotParams params;
  bool operator==(const RosterEntry&) const = default;
};

struct ReconfigSettings {
  Vec2 dock{-100.0, -100.0};
  std::vector<Vec2> parking;
  double swap_duration = 10.0;  // s
  Box2 floor{{-1000.0, -1000.0}, {1000.0, 1000.0}};
};

struct MachineConfig {
  Geometry geometry = kinematics::BridgeGeometry{};
  std::vector<RosterEntry> roster;
  Box3 workspace{{0.0, 0.0, 0.0}, {100.0, 100.0, 100.0}};
  double sync_tol = 1.0;          // mm
  double max_tool_speed = 200.0;  // mm/s
  double dt_plan = 0.1;           // s
  Vec3 home{};
  double barrier_angle_deg = 90.0;
  double chord_tol = 0.01;        // mm
  double default_feed = 20.0;     // mm/s
  double dt_sim = 0.01;           // s
  double noise_std = 0.0;         // mm
  double stall_timeout = 10.0;    // s
  robot::ControllerParams control;
  ReconfigSettings reconfig;

  Morphology morphology() const { return static_cast<Morphology>(geometry.index()); }

  template <class G>
  const G& geom() const { return std::get<G>(geometry); }

  void validate() const {
    std::visit([](const auto& g) { validate_geometry(g); }, geometry);
    if (!workspace.valid()) throw Error("workspace min must not exceed max");
    if (!(sync_tol > 0.0)) throw Error("sync_tol must be > 0");
    if (!(max_tool_speed > 0.0)) throw Error("max_tool_speed must be > 0");
    if (!(dt_plan > 0.0)) throw Error("dt_plan must be > 0");
    if (!(dt_sim > 0.0)) throw Error("dt_sim must be > 0");
    if (!(chord_tol > 0.0)) throw Error("chord_tol must be > 0");
    if (!(default_feed > 0.0)) throw Error("default_feed must be > 0");
    if (!(noise_std >= 0.0)) throw Error("noise_std must be >= 0");
    if (!(stall_timeout > 0.0)) throw Error("stall_timeout must be > 0");
    if (!(barrier_angle_deg > 0.0 && barrier_angle_deg <= 180.0)) throw Error("barrier_angle_deg must be in (0, 180]");
    if (!(reconfig.swap_duration >= 0.0)) throw Error("swap_duration must be >= 0");
    for (const auto& r : roster) r.params.validate();
    for (std::size_t i = 0; i < roster.size(); ++i) {
      for (std::size_t j = i + 1; j < roster.size(); ++j) {
        if (roster[i].id == roster[j].id) throw Error("duplicate robot id '" + roster[i].id + "'");
      }
    }
  }

 private:
  static void validate_geometry(const kinematics::BridgeGeometry& g) { g.validate(); }
  static void validate_geometry(const kinematics::WireGeometry2D& g) { g.validate(); }
  static void validate_geometry(const Wire3DPrinterGeometry& g) { g.wires.validate(); }
  static void validate_geometry(const PrinterBridgeGeometry& g) {
    g.bridge.validate();
    g.screw.validate();
  }
};

// ---------------------------------------------------------------------------
// Workspace test

enum class WorkspaceReason {
  Inside,
  OutsideWorkspaceBox,
  CarriageTravel,
  RailRange,
  AboveAnchors,
  OutsideLateral,
  NotBelowAnchorPlane,
  ScrewTravel,
};

inline const char* to_string(WorkspaceReason r) {
  switch (r) {
    case WorkspaceReason::Inside: return "Inside";
    case WorkspaceReason::OutsideWorkspaceBox: return "OutsideWorkspaceBox";
    case WorkspaceReason::CarriageTravel: return "CarriageTravel";
    case WorkspaceReason::RailRange: return "RailRange";
    case WorkspaceReason::AboveAnchors: return "AboveAnchors";
    case WorkspaceReason::OutsideLateral: return "OutsideLateral";
    case WorkspaceReason::NotBelowAnchorPlane: return "NotBelowAnchorPlane";
    case WorkspaceReason::ScrewTravel: return "ScrewTravel";
  }
  return "?";
}

struct Containment {
  bool inside = true;
  WorkspaceReason reason = WorkspaceReason::Inside;
  explicit operator bool() const { return inside; }
};

// The workspace box is inclusive; wire margins are strict.
inline Containment workspace_contains(const MachineConfig& m, Vec3 p) {
  auto out = [](WorkspaceReason r) { return Containment{false, r}; };
  if (!m.workspace.contains(p)) return out(WorkspaceReason::OutsideWorkspaceBox);

  auto bridge_check = [&](const kinematics::BridgeGeometry& g) -> std::optional<Containment> {
    const double offset = p.x - g.rail_x;
    if (offset < g.carriage_min || offset > g.carriage_max) return out(WorkspaceReason::CarriageTravel);
    if (p.y < g.y_min || p.y > g.y_max) return out(WorkspaceReason::RailRange);
    return std::nullopt;
  };

  switch (m.morphology()) {
    case Morphology::BridgeXY:
      if (auto c = bridge_check(m.geom<kinematics::BridgeGeometry>())) return *c;
      break;
    case Morphology::PrinterBridge: {
      const auto& g = m.geom<PrinterBridgeGeometry>();
      if (auto c = bridge_check(g.bridge)) return *c;
      if (p.z < g.screw.z_min || p.z > g.screw.z_max) return out(WorkspaceReason::ScrewTravel);
      break;
    }
    case Morphology::Wire2DWall:
      switch (kinematics::wall_reach(p.xy(), m.geom<kinematics::WireGeometry2D>())) {
        case kinematics::WallReach::AboveAnchors: return out(WorkspaceReason::AboveAnchors);
        case kinematics::WallReach::OutsideLateral: return out(WorkspaceReason::OutsideLateral);
        case kinematics::WallReach::Reachable: break;
      }
      break;
    case Morphology::Wire3DPrinter: {
      const auto& g = m.geom<Wire3DPrinterGeometry>();
      const Vec3 world = p + g.bed_origin;
      if (!(kinematics::working_depth(world, g.wires) > g.wires.workspace_margin)) {
        return out(WorkspaceReason::NotBelowAnchorPlane);
      }
      if (!g.wires.bounds.contains(world)) return out(WorkspaceReason::OutsideWorkspaceBox);
      break;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Setpoints

// Move targets are world (mat) positions, except the carriage of a bridge
// morphology whose target is (offset along the bridge, 0) in the bridge frame.
struct Setpoint {
  enum class Op { Move, Rotate, Stop };
  Op op = Op::Stop;
  Vec2 position;
  double theta = 0.0;

  static Setpoint move(Vec2 p) { return {Op::Move, p, 0.0}; }
  static Setpoint rotate(double t) { return {Op::Rotate, {}, t}; }
  static Setpoint stop() { return {}; }
  bool operator==(const Setpoint&) const = default;
};

// Where an actuator role sits while it works.
inline Vec2 mount_position(const MachineConfig& m, robot::Role role) {
  using robot::Role;
  const int spool = role == Role::Spool1 ? 0 : role == Role::Spool2 ? 1 : role == Role::Spool3 ? 2 : -1;
  switch (m.morphology()) {
    case Morphology::Wire2DWall:
      if (spool >= 0 && spool < 2) return m.geom<kinematics::WireGeometry2D>().anchors[spool];
      break;
    case Morphology::Wire3DPrinter:
      if (spool >= 0) return m.geom<Wire3DPrinterGeometry>().wires.anchors[spool].xy();
      break;
    case Morphology::PrinterBridge:
      if (role == Role::Leadscrew) return m.geom<PrinterBridgeGeometry>().screw_mount;
      break;
    case Morphology::BridgeXY:
      break;
  }
  return {};
}

// Robot setpoints (role-slot order) that put the tool at p.
inline std::vector<Setpoint> machine_ik(const MachineConfig& m, Vec3 p) {
  using kinematics::BridgeGeometry;
  switch (m.morphology()) {
    case Morphology::BridgeXY: {
      const auto s = kinematics::bridge_ik(p.xy(), m.geom<BridgeGeometry>());
      return {Setpoint::move(s.bridge1), Setpoint::move(s.bridge2), Setpoint::move({s.carriage_offset, 0.0})};
    }
    case Morphology::PrinterBridge: {
      const auto& g = m.geom<PrinterBridgeGeometry>();
      if (p.z < g.screw.z_min || p.z > g.screw.z_max) {
        throw kinematics::KinematicsError(kinematics::ErrorKind::OutOfWorkspace, "z outside lead screw travel");
      }
      const auto s = kinematics::bridge_ik(p.xy(), g.bridge);
      return {Setpoint::move(s.bridge1), Setpoint::move(s.bridge2), Setpoint::move({s.carriage_offset, 0.0}),
              Setpoint::rotate(kinematics::leadscrew_delta(p.z, g.screw))};
    }
    case Morphology::Wire2DWall: {
      const auto& g = m.geom<kinematics::WireGeometry2D>();
      const auto l = kinematics::wire2d_ik(p.xy(), g);
      return {Setpoint::rotate(kinematics::spool_delta(l[0], g.spool_radius)),
              Setpoint::rotate(kinematics::spool_delta(l[1], g.spool_radius))};
    }
    case Morphology::Wire3DPrinter: {
      const auto& g = m.geom<Wire3DPrinterGeometry>();
      const auto l = kinematics::wire3d_ik(p + g.bed_origin, g.wires);
      const double r = g.wires.spool_radius;
      return {Setpoint::rotate(kinematics::spool_delta(l[0], r)), Setpoint::rotate(kinematics::spool_delta(l[1], r)),
              Setpoint::rotate(kinematics::spool_delta(l[2], r)), Setpoint::move(g.bed_origin.xy())};
    }
  }
  return {};
}

// Tool position from robot world poses and accumulated rotations (role-slot
// order). pen_z is the commanded height for morphologies without a Z axis.
inline Vec3 machine_fk(const MachineConfig& m, std::span<const robot::Pose> world,
                       std::span<const double> rotation, double pen_z) {
  switch (m.morphology()) {
    case Morphology::BridgeXY: {
      const Vec2 b1 = world[0].position();
      const Vec2 t = kinematics::bridge_fk(b1, world[1].position(), world[2].x - b1.x, m.sync_tol);
      return {t.x, t.y, pen_z};
    }
    case Morphology::PrinterBridge: {
      const auto& g = m.geom<PrinterBridgeGeometry>();
      const Vec2 b1 = world[0].position();
      const Vec2 t = kinematics::bridge_fk(b1, world[1].position(), world[2].x - b1.x, m.sync_tol);
      return {t.x, t.y, kinematics::leadscrew_travel(rotation[3], g.screw)};
    }
    case Morphology::Wire2DWall: {
      const auto& g = m.geom<kinematics::WireGeometry2D>();
      const Vec2 p = kinematics::wire2d_fk({g.spool_radius * rotation[0], g.spool_radius * rotation[1]}, g);
      return {p.x, p.y, pen_z};
    }
    case Morphology::Wire3DPrinter: {
      const auto& g = m.geom<Wire3DPrinterGeometry>();
      const double r = g.wires.spool_radius;
      const Vec3 w = kinematics::wire3d_fk({r * rotation[0], r * rotation[1], r * rotation[2]}, g.wires);
      return w - Vec3{world[3].x, world[3].y, g.bed_origin.z};
    }
  }
  return {};
}

// Heading a role starts with: bridge robots and the table face along the
// rails, everything else faces +x.
inline double initial_heading(robot::Role r) {
  using robot::Role;
  return (r == Role::BridgeLeft || r == Role::BridgeRight || r == Role::Table) ? std::numbers::pi / 2.0 : 0.0;
}

}  // namespace swarmfab
