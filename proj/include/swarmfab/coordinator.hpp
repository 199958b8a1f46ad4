#pragma once

// Turns interpreted motion segments into a synchronized per-robot setpoint
// schedule for one machine, and plans transitions between machines.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "swarmfab/error.hpp"
#include "swarmfab/format.hpp"
#include "swarmfab/gcode.hpp"
#include "swarmfab/kinematics.hpp"
#include "swarmfab/machine.hpp"
#include "swarmfab/robot.hpp"

namespace swarmfab::coordinator {

using gcode::MotionSegment;
using gcode::SegmentKind;
using robot::Role;

enum class ErrorKind { InsufficientRobots, OutOfWorkspace, Kinematics, BrokenChain, TooManyTicks };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InsufficientRobots: return "InsufficientRobots";
    case ErrorKind::OutOfWorkspace: return "OutOfWorkspace";
    case ErrorKind::Kinematics: return "Kinematics";
    case ErrorKind::BrokenChain: return "BrokenChain";
    case ErrorKind::TooManyTicks: return "TooManyTicks";
  }
  return "?";
}

class PlanError : public Error {
 public:
  PlanError(ErrorKind kind, int source_line, const std::string& detail)
      : Error(std::string(to_string(kind)) + (source_line > 0 ? " at g-code line " + std::to_string(source_line) : "") +
              ": " + detail),
        kind_(kind),
        source_line_(source_line) {}

  ErrorKind kind() const { return kind_; }
  int source_line() const { return source_line_; }

 private:
  ErrorKind kind_;
  int source_line_;
};

struct InsufficientRobots : PlanError {
  InsufficientRobots(std::size_t needed, std::size_t have, Morphology m)
      : PlanError(ErrorKind::InsufficientRobots, 0,
                  std::string(to_string(m)) + " needs " + std::to_string(needed) + " robots, have " +
                      std::to_string(have)),
        needed(needed),
        have(have) {}
  std::size_t needed;
  std::size_t have;
};

struct PlanRobot {
  std::string id;
  Role role = Role::Idle;
  robot::RobotParams params;
  bool operator==(const PlanRobot&) const = default;
};

struct RoleMap {
  std::vector<PlanRobot> active;  // role-slot order
  std::vector<PlanRobot> spares;  // role Idle
};

// Roster order fills the morphology's role slots; the rest are spares.
inline RoleMap assign_roles(const MachineConfig& config) {
  const auto slots = role_slots(config.morphology());
  if (config.roster.size() < slots.size()) {
    throw InsufficientRobots(slots.size(), config.roster.size(), config.morphology());
  }
  RoleMap out;
  for (std::size_t i = 0; i < config.roster.size(); ++i) {
    const auto& r = config.roster[i];
    if (i < slots.size()) out.active.push_back({r.id, slots[i], r.params});
    else out.spares.push_back({r.id, Role::Idle, r.params});
  }
  return out;
}

struct PlanTick {
  double t = 0.0;                   // s
  std::vector<Setpoint> setpoints;  // one per Plan::robots entry
  Vec3 tool_target;
  bool extruding = false;
  double extrusion = 0.0;           // filament deposited on the way to this tick, mm
  int source_line = 0;
  std::size_t segment = 0;
  double layer_z = 0.0;             // end height of the owning segment
  bool operator==(const PlanTick&) const = default;
};

struct Plan {
  std::vector<PlanRobot> robots;
  std::vector<PlanTick> ticks;
  std::vector<std::size_t> barriers;  // sorted tick indices

  bool empty() const { return ticks.empty(); }
  double duration() const { return ticks.empty() ? 0.0 : ticks.back().t; }
  bool is_barrier(std::size_t k) const { return std::binary_search(barriers.begin(), barriers.end(), k); }
  bool operator==(const Plan&) const = default;
};

namespace detail {

inline std::vector<Setpoint> ik_or_throw(const MachineConfig& config, Vec3 p, int line) {
  try {
    return machine_ik(config, p);
  } catch (const kinematics::KinematicsError& e) {
    throw PlanError(ErrorKind::Kinematics, line, e.what());
  }
}

inline void require_inside(const MachineConfig& config, Vec3 p, int line) {
  if (auto c = workspace_contains(config, p); !c) {
    throw PlanError(ErrorKind::OutOfWorkspace, line,
                    std::string(to_string(c.reason)) + " at (" + fixed(p.x, 3) + ", " + fixed(p.y, 3) + ", " +
                        fixed(p.z, 3) + ")");
  }
}

// Time for one robot to cover the change between two setpoints.
inline double axis_time(const Setpoint& a, const Setpoint& b, const robot::RobotParams& p) {
  if (a.op == Setpoint::Op::Move && b.op == Setpoint::Op::Move) {
    return distance(a.position, b.position) / p.max_wheel_speed;
  }
  if (a.op == Setpoint::Op::Rotate && b.op == Setpoint::Op::Rotate) {
    return std::abs(b.theta - a.theta) / p.max_spin_rate();
  }
  return 0.0;
}

}  // namespace detail

// Segment duration limited by the feed, the tool speed cap, and the slowest
// robot axis as seen through the morphology's IK.
inline double time_parameterize(const MotionSegment& seg, const MachineConfig& config) {
  const int line = seg.source_line;
  detail::require_inside(config, seg.start, line);
  detail::require_inside(config, seg.end, line);
  const double len = seg.length();
  if (len == 0.0) return 0.0;
  double t = std::max(len / seg.feed, len / config.max_tool_speed);
  const auto roles = assign_roles(config);
  const auto a = detail::ik_or_throw(config, seg.start, line);
  const auto b = detail::ik_or_throw(config, seg.end, line);
  for (std::size_t i = 0; i < a.size(); ++i) {
    t = std::max(t, detail::axis_time(a[i], b[i], roles.active[i].params));
  }
  return t;
}

inline constexpr double kMaxSegmentTicks = 1e6;

// Samples the segment at (at most) dt_plan; the last tick is exactly the end.
// Tick times start at 0.
inline std::vector<PlanTick> plan_segment(const MotionSegment& seg, const MachineConfig& config,
                                          std::size_t segment_index = 0) {
  const double duration = time_parameterize(seg, config);
  const bool print = seg.kind == SegmentKind::Print;
  auto tick_at = [&](double t, Vec3 p, double extrusion) {
    detail::require_inside(config, p, seg.source_line);
    return PlanTick{t, detail::ik_or_throw(config, p, seg.source_line), p, print, extrusion,
                    seg.source_line, segment_index, seg.end.z};
  };

  if (seg.length() == 0.0) return {tick_at(0.0, seg.start, seg.extrusion_delta)};

  const double steps = std::ceil(duration / config.dt_plan - 1e-9);
  if (!(steps <= kMaxSegmentTicks)) {
    throw PlanError(ErrorKind::TooManyTicks, seg.source_line,
                    "segment needs " + fixed(duration, 1) + " s; robots are too slow for this job");
  }
  const auto n = static_cast<std::size_t>(std::max(1.0, steps));
  std::vector<PlanTick> out;
  out.reserve(n + 1);
  out.push_back(tick_at(0.0, seg.start, 0.0));
  const double piece = seg.extrusion_delta / static_cast<double>(n);
  double used = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n);
    const double e = k < n ? piece : seg.extrusion_delta - used;
    used += e;
    out.push_back(tick_at(k < n ? duration * s : duration, lerp(seg.start, seg.end, s), e));
  }
  return out;
}

// Concatenates segment plans on one clock. Barriers go at the final tick, at
// every extrusion on/off transition, and wherever the path turns by at least
// barrier_angle_deg.
inline Plan plan_program(std::span<const MotionSegment> segments, const MachineConfig& config) {
  Plan plan;
  plan.robots = assign_roles(config).active;
  if (segments.empty()) return plan;

  const double cos_limit = std::cos(config.barrier_angle_deg * std::numbers::pi / 180.0);
  std::optional<Vec3> prev_dir;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (i > 0 && seg.start != segments[i - 1].end) {
      throw PlanError(ErrorKind::BrokenChain, seg.source_line, "segment does not start where the previous ended");
    }
    auto ticks = plan_segment(seg, config, i);

    if (plan.ticks.empty()) {
      plan.ticks = std::move(ticks);
    } else {
      const std::size_t junction = plan.ticks.size() - 1;
      const double t0 = plan.ticks.back().t;
      if (segments[i - 1].kind != seg.kind) plan.barriers.push_back(junction);
      if (ticks.size() == 1) {
        ticks[0].t = t0 + config.dt_plan;
        plan.ticks.push_back(std::move(ticks[0]));
      } else {
        for (std::size_t k = 1; k < ticks.size(); ++k) {
          ticks[k].t += t0;
          plan.ticks.push_back(std::move(ticks[k]));
        }
      }
      if (seg.length() > 0.0 && prev_dir) {
        const Vec3 dir = (seg.end - seg.start) * (1.0 / seg.length());
        if (dot(dir, *prev_dir) <= cos_limit + 1e-9) plan.barriers.push_back(junction);
      }
    }
    if (seg.length() > 0.0) prev_dir = (seg.end - seg.start) * (1.0 / seg.length());
  }
  plan.barriers.push_back(plan.ticks.size() - 1);
  std::sort(plan.barriers.begin(), plan.barriers.end());
  plan.barriers.erase(std::unique(plan.barriers.begin(), plan.barriers.end()), plan.barriers.end());
  return plan;
}

// ---------------------------------------------------------------------------
// Reconfiguration

namespace detail {

inline Vec2 parking_spot(const MachineConfig& c, std::size_t idle_index) {
  if (idle_index < c.reconfig.parking.size()) return c.reconfig.parking[idle_index];
  const auto& f = c.reconfig.floor;
  return {f.min.x + 40.0 * static_cast<double>(idle_index + 1), f.min.y + 40.0};
}

// Where the machine's tool rests between jobs: home when reachable,
// otherwise the workspace centre.
inline Vec3 rest_point(const MachineConfig& c) {
  if (workspace_contains(c, c.home)) return c.home;
  return (c.workspace.min + c.workspace.max) * 0.5;
}

// World position of every rostered robot while the machine rests.
inline std::map<std::string, Vec2> rest_positions(const MachineConfig& c) {
  const auto roles = assign_roles(c);
  const Vec3 tool = rest_point(c);
  const auto sp = machine_ik(c, tool);
  std::map<std::string, Vec2> out;
  for (std::size_t i = 0; i < roles.active.size(); ++i) {
    const Role r = roles.active[i].role;
    Vec2 p = robot::is_actuator(r) ? mount_position(c, r) : sp[i].position;
    if (r == Role::Carriage) p = tool.xy();
    out[roles.active[i].id] = p;
  }
  for (std::size_t k = 0; k < roles.spares.size(); ++k) out[roles.spares[k].id] = parking_spot(c, k);
  return out;
}

}  // namespace detail

// Transition from one machine to another over a shared roster. Robots whose
// attachment changes visit the dock one at a time and pause there for
// swap_duration; robots leaving service go to parking spots; everyone else
// drives straight to their new post. All setpoints are world positions and
// every phase ends in a barrier. Identical machines give an empty plan.
inline Plan reconfigure(const MachineConfig& from, const MachineConfig& to) {
  const auto from_roles = assign_roles(from);
  std::map<std::string, Role> from_role;
  for (const auto& r : from_roles.active) from_role[r.id] = r.role;
  for (const auto& r : from_roles.spares) from_role[r.id] = r.role;

  const auto slots = role_slots(to.morphology());
  std::size_t shared = 0;
  for (const auto& r : to.roster) shared += from_role.count(r.id);
  if (to.roster.size() < slots.size() || shared < slots.size()) {
    throw InsufficientRobots(slots.size(), std::min(shared, to.roster.size()), to.morphology());
  }
  const auto to_roles = assign_roles(to);
  for (const auto& r : to_roles.active) {
    if (!from_role.count(r.id)) throw InsufficientRobots(slots.size(), shared, to.morphology());
  }
  std::map<std::string, Role> to_role;
  for (const auto& r : to_roles.active) to_role[r.id] = r.role;

  const auto start = detail::rest_positions(from);
  const auto goal = detail::rest_positions(to);

  Plan plan;
  struct Mover {
    Vec2 at;
    Vec2 goal;
    bool swap = false;
  };
  std::vector<Mover> movers;
  std::size_t idle_k = 0;
  for (const auto& r : from.roster) {
    const Role target = to_role.count(r.id) ? to_role[r.id] : Role::Idle;
    plan.robots.push_back({r.id, target, r.params});
    Mover m;
    m.at = start.at(r.id);
    m.goal = goal.count(r.id) && target != Role::Idle ? goal.at(r.id) : detail::parking_spot(to, idle_k++);
    m.swap = attachment_for(from.morphology(), from_role[r.id]) != attachment_for(to.morphology(), target);
    movers.push_back(m);
  }

  bool anything = false;
  for (const auto& m : movers) anything |= m.swap || m.at != m.goal;
  if (!anything) return Plan{};

  auto hold_all = [&]() {
    std::vector<Setpoint> sp;
    for (const auto& m : movers) sp.push_back(Setpoint::move(m.at));
    return sp;
  };
  auto push_tick = [&](std::vector<Setpoint> sp) {
    const double t = plan.ticks.empty() ? 0.0 : plan.ticks.back().t + to.dt_plan;
    PlanTick tick;
    tick.t = t;
    tick.setpoints = std::move(sp);
    plan.ticks.push_back(std::move(tick));
  };
  // Drives the selected robots to their targets at full speed.
  auto drive = [&](const std::vector<std::pair<std::size_t, Vec2>>& legs) {
    double duration = 0.0;
    for (const auto& [i, target] : legs) {
      duration = std::max(duration, distance(movers[i].at, target) / plan.robots[i].params.max_wheel_speed);
    }
    if (duration == 0.0) return;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / to.dt_plan - 1e-9)));
    std::vector<Vec2> origin;
    for (const auto& [i, target] : legs) origin.push_back(movers[i].at);
    for (std::size_t k = 1; k <= n; ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(n);
      auto sp = hold_all();
      for (std::size_t j = 0; j < legs.size(); ++j) {
        const auto [i, target] = legs[j];
        sp[i] = Setpoint::move(k == n ? target : origin[j] + (target - origin[j]) * s);
      }
      push_tick(std::move(sp));
    }
    for (const auto& [i, target] : legs) movers[i].at = target;
    plan.barriers.push_back(plan.ticks.size() - 1);
  };

  push_tick(hold_all());

  std::vector<std::pair<std::size_t, Vec2>> direct;
  for (std::size_t i = 0; i < movers.size(); ++i) {
    if (!movers[i].swap && movers[i].at != movers[i].goal) direct.push_back({i, movers[i].goal});
  }
  drive(direct);

  for (std::size_t i = 0; i < movers.size(); ++i) {
    if (!movers[i].swap) continue;
    drive({{i, to.reconfig.dock}});
    const auto pause = static_cast<std::size_t>(std::ceil(to.reconfig.swap_duration / to.dt_plan - 1e-9));
    for (std::size_t k = 0; k < pause; ++k) {
      auto sp = hold_all();
      sp[i] = Setpoint::stop();
      push_tick(std::move(sp));
    }
    if (pause > 0) plan.barriers.push_back(plan.ticks.size() - 1);
    drive({{i, movers[i].goal}});
  }

  if (plan.barriers.empty() || plan.barriers.back() != plan.ticks.size() - 1) {
    plan.barriers.push_back(plan.ticks.size() - 1);
  }
  std::sort(plan.barriers.begin(), plan.barriers.end());
  plan.barriers.erase(std::unique(plan.barriers.begin(), plan.barriers.end()), plan.barriers.end());
  return plan;
}

// Problems with a transition plan for `to`; empty when it is valid. An empty
// plan means nothing has to move and is always valid.
inline std::vector<std::string> validate_transition(const Plan& plan, const MachineConfig& to) {
  std::vector<std::string> problems;
  if (plan.empty()) return problems;
  const auto slots = role_slots(to.morphology());
  for (const Role r : slots) {
    const auto n = std::count_if(plan.robots.begin(), plan.robots.end(), [&](const auto& p) { return p.role == r; });
    if (n != 1) problems.push_back(std::string("role ") + robot::to_string(r) + " assigned " + std::to_string(n) + " times");
  }
  for (const auto& p : plan.robots) {
    if (p.role != Role::Idle && std::find(slots.begin(), slots.end(), p.role) == slots.end()) {
      problems.push_back(p.id + " has role " + robot::to_string(p.role) + " foreign to " + to_string(to.morphology()));
    }
  }
  for (std::size_t k = 0; k < plan.ticks.size(); ++k) {
    for (std::size_t i = 0; i < plan.ticks[k].setpoints.size(); ++i) {
      const auto& s = plan.ticks[k].setpoints[i];
      if (s.op == Setpoint::Op::Move && !to.reconfig.floor.contains(s.position)) {
        problems.push_back("tick " + std::to_string(k) + ": " + plan.robots[i].id + " leaves the floor area");
      }
    }
  }
  return problems;
}

// Appends `next` after `prefix` with a gap of `gap` seconds. Robots are
// matched by id; a robot absent from one part is held with stop.
inline Plan compose(const Plan& prefix, const Plan& next, double gap) {
  if (prefix.empty()) return next;
  Plan out;
  out.robots = prefix.robots;
  for (const auto& r : next.robots) {
    auto it = std::find_if(out.robots.begin(), out.robots.end(), [&](const auto& p) { return p.id == r.id; });
    if (it == out.robots.end()) out.robots.push_back(r);
    else it->role = r.role;
  }
  auto remap = [&](const Plan& part, PlanTick tick) {
    std::vector<Setpoint> sp(out.robots.size(), Setpoint::stop());
    for (std::size_t i = 0; i < part.robots.size(); ++i) {
      for (std::size_t j = 0; j < out.robots.size(); ++j) {
        if (out.robots[j].id == part.robots[i].id) sp[j] = tick.setpoints[i];
      }
    }
    tick.setpoints = std::move(sp);
    return tick;
  };
  for (const auto& t : prefix.ticks) out.ticks.push_back(remap(prefix, t));
  out.barriers = prefix.barriers;
  const double shift = prefix.duration() + gap;
  const std::size_t base = out.ticks.size();
  for (auto t : next.ticks) {
    t.t += shift;
    out.ticks.push_back(remap(next, std::move(t)));
  }
  for (auto b : next.barriers) out.barriers.push_back(base + b);
  return out;
}

// One line per robot per tick:
//   t=<s> id=<robot> op=move x=<mm> y=<mm> line=<src>
//   t=<s> id=<robot> op=rotate theta=<rad> line=<src>
//   t=<s> id=<robot> op=stop line=<src>
inline std::string serialize_command_stream(const Plan& plan) {
  std::string out;
  for (const auto& tick : plan.ticks) {
    const std::string t = fixed(tick.t);
    const std::string line = std::to_string(tick.source_line);
    for (std::size_t i = 0; i < plan.robots.size(); ++i) {
      const auto& s = tick.setpoints[i];
      out += "t=" + t + " id=" + plan.robots[i].id;
      switch (s.op) {
        case Setpoint::Op::Move: out += " op=move x=" + fixed(s.position.x) + " y=" + fixed(s.position.y); break;
        case Setpoint::Op::Rotate: out += " op=rotate theta=" + fixed(s.theta); break;
        case Setpoint::Op::Stop: out += " op=stop"; break;
      }
      out += " line=" + line + "\n";
    }
  }
  return out;
}

}  // namespace swarmfab::coordinator
