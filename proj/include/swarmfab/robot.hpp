#pragma once

// Differential-drive swarm robot used both as a mobile base and, when its
// role is an actuator, as a rotary motor turning a spool or lead screw.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include "swarmfab/error.hpp"
#include "swarmfab/geometry.hpp"

namespace swarmfab::robot {

struct RobotParams {
  double wheel_track = 26.0;       // mm
  double max_wheel_speed = 115.0;  // mm/s
  double body_radius = 16.0;       // mm
  double position_noise_std = 0.0; // mm per step, 0 = deterministic

  // Fastest in-place spin, rad/s.
  double max_spin_rate() const { return 2.0 * max_wheel_speed / wheel_track; }
  bool operator==(const RobotParams&) const = default;

  void validate() const {
    if (!(wheel_track > 0.0)) throw Error("wheel_track must be > 0");
    if (!(max_wheel_speed > 0.0)) throw Error("max_wheel_speed must be > 0");
    if (!(body_radius > 0.0)) throw Error("body_radius must be > 0");
    if (!(position_noise_std >= 0.0)) throw Error("position_noise_std must be >= 0");
  }
};

enum class Role { BridgeLeft, BridgeRight, Carriage, Table, Spool1, Spool2, Spool3, Leadscrew, Idle };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::BridgeLeft: return "bridge_left";
    case Role::BridgeRight: return "bridge_right";
    case Role::Carriage: return "carriage";
    case Role::Table: return "table";
    case Role::Spool1: return "extruder_spool_1";
    case Role::Spool2: return "extruder_spool_2";
    case Role::Spool3: return "extruder_spool_3";
    case Role::Leadscrew: return "leadscrew";
    case Role::Idle: return "idle";
  }
  return "?";
}

// Actuator roles stay in place and turn; the rest drive around.
inline bool is_actuator(Role r) {
  return r == Role::Spool1 || r == Role::Spool2 || r == Role::Spool3 || r == Role::Leadscrew;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi]

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose&) const = default;
};

struct WheelSpeeds {
  double left = 0.0;
  double right = 0.0;
  bool operator==(const WheelSpeeds&) const = default;
};

struct RobotState {
  std::string id;
  RobotParams params;
  Pose pose;
  WheelSpeeds wheels;
  double accumulated_rotation = 0.0;  // rad, integrated only for actuator roles
  Role role = Role::Idle;
  std::optional<std::string> attachment;

  bool operator==(const RobotState&) const = default;
};

struct MoveTo {
  Vec2 target;
  std::optional<double> final_heading;
};
struct RotateBy {
  double delta = 0.0;
};
struct SetWheels {
  WheelSpeeds speeds;
};
struct Stop {};

using RobotCommand = std::variant<MoveTo, RotateBy, SetWheels, Stop>;

struct ControllerParams {
  double k_heading = 4.0;    // 1/s
  double k_distance = 2.0;   // 1/s
  double v_cap = 115.0;      // mm/s
  double arrival_tol = 0.5;  // mm
  double angular_tol = 0.002;  // rad
};

// Exact integration of constant wheel speeds over dt: a straight line when
// the turn rate vanishes, otherwise a circular arc.
inline RobotState step_dynamics(const RobotState& state, double dt) {
  RobotState next = state;
  const double v = 0.5 * (state.wheels.left + state.wheels.right);
  const double w = (state.wheels.right - state.wheels.left) / state.params.wheel_track;
  const double th = state.pose.heading;
  if (std::abs(w) < 1e-9) {
    next.pose.x += v * std::cos(th) * dt;
    next.pose.y += v * std::sin(th) * dt;
  } else {
    const double r = v / w;
    next.pose.x += r * (std::sin(th + w * dt) - std::sin(th));
    next.pose.y -= r * (std::cos(th + w * dt) - std::cos(th));
    next.pose.heading = wrap_angle(th + w * dt);
  }
  if (is_actuator(state.role)) next.accumulated_rotation += w * dt;
  return next;
}

// Maps a body velocity to wheel speeds under the wheel speed cap. Turning
// takes priority: the forward speed gets whatever the turn leaves over.
inline WheelSpeeds to_wheels(double v, double w, const RobotParams& p) {
  const double half = 0.5 * p.wheel_track;
  const double w_max = p.max_spin_rate();
  w = std::clamp(w, -w_max, w_max);
  const double v_room = std::max(0.0, p.max_wheel_speed - std::abs(w) * half);
  v = std::clamp(v, -v_room, v_room);
  WheelSpeeds s{v - w * half, v + w * half};
  s.left = std::clamp(s.left, -p.max_wheel_speed, p.max_wheel_speed);
  s.right = std::clamp(s.right, -p.max_wheel_speed, p.max_wheel_speed);
  return s;
}

// Proportional go-to-point: turn toward the bearing, drive forward scaled by
// how well the robot already faces it.
inline WheelSpeeds goto_controller(const RobotState& state, Vec2 target, const ControllerParams& c) {
  const Vec2 to = target - state.pose.position();
  const double d = norm(to);
  if (d < c.arrival_tol) return {};
  const double err = wrap_angle(std::atan2(to.y, to.x) - state.pose.heading);
  const double w = c.k_heading * err;
  const double v = std::min(c.k_distance * d, c.v_cap) * std::max(0.0, std::cos(err));
  return to_wheels(v, w, state.params);
}

// Spin in place; positive remaining angle turns counter-clockwise.
inline WheelSpeeds rotate_controller(const RobotState& state, double remaining, const ControllerParams& c) {
  if (std::abs(remaining) < c.angular_tol) return {};
  return to_wheels(0.0, c.k_heading * remaining, state.params);
}

// Wheel speeds for one control period under the given command.
inline WheelSpeeds command_wheels(const RobotState& state, const RobotCommand& cmd, const ControllerParams& c) {
  struct Visitor {
    const RobotState& s;
    const ControllerParams& c;
    WheelSpeeds operator()(const MoveTo& m) const {
      const auto w = goto_controller(s, m.target, c);
      if (w != WheelSpeeds{} || !m.final_heading) return w;
      return rotate_controller(s, wrap_angle(*m.final_heading - s.pose.heading), c);
    }
    WheelSpeeds operator()(const RotateBy& r) const { return rotate_controller(s, r.delta, c); }
    WheelSpeeds operator()(const SetWheels& w) const {
      const double m = s.params.max_wheel_speed;
      return {std::clamp(w.speeds.left, -m, m), std::clamp(w.speeds.right, -m, m)};
    }
    WheelSpeeds operator()(const Stop&) const { return {}; }
  };
  return std::visit(Visitor{state, c}, cmd);
}

}  // namespace swarmfab::robot
