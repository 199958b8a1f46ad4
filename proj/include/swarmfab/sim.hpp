#pragma once

// Executes a Plan against simulated robots, records the tool tip through the
// morphology FK, and scores the result against the commanded path.
//
// Clock semantics: robots pursue the setpoints of the current tick and the
// clock moves on once every robot is within tolerance of it. At a barrier
// tick the robots additionally turn in place to face their next setpoint
// before anyone moves on (stop, realign, continue).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "swarmfab/coordinator.hpp"
#include "swarmfab/error.hpp"
#include "swarmfab/format.hpp"
#include "swarmfab/gcode.hpp"
#include "swarmfab/machine.hpp"
#include "swarmfab/robot.hpp"

namespace swarmfab::sim {

using coordinator::Plan;
using robot::Pose;
using robot::Role;

enum class ErrorKind { StallTimeout, KinematicsFault, InvalidArgument };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::StallTimeout: return "StallTimeout";
    case ErrorKind::KinematicsFault: return "KinematicsFault";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "?";
}

class SimError : public Error {
 public:
  SimError(ErrorKind kind, const std::string& detail)
      : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct TraceSample {
  double t = 0.0;
  std::vector<Pose> poses;         // world frame, plan robot order
  std::vector<double> rotations;   // accumulated actuator rotation, rad
  Vec3 tool;                       // from FK of the poses above
  Vec3 target;                     // tool target of the tick being pursued
  bool extruding = false;
  double extruded = 0.0;           // filament deposited so far, mm
  double layer_z = 0.0;
  std::size_t tick = 0;
  std::size_t segment = 0;
  bool operator==(const TraceSample&) const = default;
};

enum class EventKind { BarrierWait, SkewWarning, Overlap };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::BarrierWait: return "barrier_wait";
    case EventKind::SkewWarning: return "skew_warning";
    case EventKind::Overlap: return "overlap";
  }
  return "?";
}

struct TraceEvent {
  double t = 0.0;
  EventKind kind = EventKind::BarrierWait;
  std::string message;
  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  std::vector<std::string> robot_ids;
  std::vector<TraceSample> samples;
  std::vector<TraceEvent> events;
  double barrier_wait = 0.0;  // s
  MachineConfig config;
};

// World positions of the plan's robots. The carriage of a bridge machine is
// simulated in the bridge frame and carried by the bridge robots.
inline std::vector<Pose> world_poses(const MachineConfig& config, std::span<const robot::RobotState> states) {
  std::vector<Pose> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.pose);
  const auto m = config.morphology();
  if ((m == Morphology::BridgeXY || m == Morphology::PrinterBridge) && states.size() >= 3) {
    const Pose b1 = states[0].pose;
    const Pose b2 = states[1].pose;
    out[2].x = b1.x + states[2].pose.x;
    out[2].y = 0.5 * (b1.y + b2.y) + states[2].pose.y;
  }
  return out;
}

// Pairs of robots whose body circles intersect in a sample.
inline std::vector<TraceEvent> overlap_diagnostic(const Trace& trace, std::span<const coordinator::PlanRobot> roster) {
  std::vector<TraceEvent> out;
  for (const auto& s : trace.samples) {
    for (std::size_t i = 0; i < s.poses.size(); ++i) {
      for (std::size_t j = i + 1; j < s.poses.size(); ++j) {
        const double d = distance(s.poses[i].position(), s.poses[j].position());
        const double reach = roster[i].params.body_radius + roster[j].params.body_radius;
        if (d < reach) {
          out.push_back({s.t, EventKind::Overlap,
                         roster[i].id + " and " + roster[j].id + " overlap (centres " + fixed(d, 3) + " mm apart)"});
        }
      }
    }
  }
  return out;
}

struct SimOptions {
  double dt_sim = 0.01;
  std::uint64_t seed = 0;
};

inline Trace run(const Plan& plan, const MachineConfig& config, const SimOptions& opts) {
  if (!(opts.dt_sim > 0.0) || opts.dt_sim > config.dt_plan + 1e-12) {
    throw SimError(ErrorKind::InvalidArgument, "dt_sim must be in (0, dt_plan]");
  }
  Trace trace;
  trace.config = config;
  for (const auto& r : plan.robots) trace.robot_ids.push_back(r.id);
  if (plan.empty()) {
    TraceSample s;
    s.tool = config.home;
    s.target = config.home;
    trace.samples.push_back(std::move(s));
    return trace;
  }
  if (plan.robots.size() != role_slots(config.morphology()).size()) {
    throw SimError(ErrorKind::InvalidArgument, "plan does not match the machine's role slots");
  }

  const auto& ctl = config.control;
  const auto& ticks = plan.ticks;
  const std::size_t last = ticks.size() - 1;
  const std::size_t n = plan.robots.size();
  const bool bridge = config.morphology() == Morphology::BridgeXY || config.morphology() == Morphology::PrinterBridge;

  std::vector<robot::RobotState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = states[i];
    const auto& r = plan.robots[i];
    const auto& sp = ticks[0].setpoints[i];
    s.id = r.id;
    s.params = r.params;
    s.role = r.role;
    s.attachment = attachment_for(config.morphology(), r.role);
    if (sp.op == Setpoint::Op::Rotate) {
      const Vec2 m = mount_position(config, r.role);
      s.pose = {m.x, m.y, 0.0};
      s.accumulated_rotation = sp.theta;
    } else {
      s.pose = {sp.position.x, sp.position.y, initial_heading(r.role)};
    }
  }

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::size_t k = 0;
  double t = 0.0;
  double extruded = ticks[0].extrusion;
  bool skewed = false;

  auto record = [&]() {
    TraceSample s;
    s.t = t;
    s.poses = world_poses(config, states);
    s.rotations.reserve(n);
    for (const auto& st : states) s.rotations.push_back(st.accumulated_rotation);
    s.target = ticks[k].tool_target;
    try {
      s.tool = machine_fk(config, s.poses, s.rotations, s.target.z);
    } catch (const kinematics::KinematicsError& e) {
      throw SimError(ErrorKind::KinematicsFault, "t=" + fixed(t, 3) + ": " + e.what());
    }
    if (bridge) {
      const double skew = std::abs(s.poses[0].y - s.poses[1].y);
      const bool now = skew > 0.5 * config.sync_tol;
      if (now && !skewed) trace.events.push_back({t, EventKind::SkewWarning, "bridge skew " + fixed(skew, 3) + " mm"});
      skewed = now;
    }
    s.extruding = ticks[k].extruding;
    s.extruded = extruded;
    s.layer_z = ticks[k].layer_z;
    s.tick = k;
    s.segment = ticks[k].segment;
    trace.samples.push_back(std::move(s));
  };

  // Remaining error of robot i against tick k: mm for moves, rad for turns.
  auto error_of = [&](std::size_t i, std::size_t tick) {
    const auto& sp = ticks[tick].setpoints[i];
    switch (sp.op) {
      case Setpoint::Op::Move: return distance(states[i].pose.position(), sp.position);
      case Setpoint::Op::Rotate: return std::abs(sp.theta - states[i].accumulated_rotation);
      case Setpoint::Op::Stop: return 0.0;
    }
    return 0.0;
  };
  auto arrived = [&](std::size_t i, std::size_t tick) {
    const auto op = ticks[tick].setpoints[i].op;
    const double tol = op == Setpoint::Op::Rotate ? ctl.angular_tol : ctl.arrival_tol;
    return op == Setpoint::Op::Stop || error_of(i, tick) < tol;
  };
  auto all_arrived = [&](std::size_t tick) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!arrived(i, tick)) return false;
    }
    return true;
  };
  // Heading each robot should face before leaving barrier tick k; nullopt if it need not turn.
  // Frozen when realignment starts so position noise cannot move the goal.
  std::vector<std::optional<double>> facing(n);
  auto aim = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      facing[i].reset();
      if (k == last) continue;
      const auto& next = ticks[k + 1].setpoints[i];
      if (next.op != Setpoint::Op::Move) continue;
      const Vec2 to = next.position - states[i].pose.position();
      if (norm(to) >= ctl.arrival_tol) facing[i] = std::atan2(to.y, to.x);
    }
  };
  auto realign_error = [&](std::size_t i) -> double {
    return facing[i] ? wrap_angle(*facing[i] - states[i].pose.heading) : 0.0;
  };

  bool realigning = false;
  double barrier_entered = -1.0;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  double last_progress = 0.0;
  auto reset_progress = [&]() {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    last_progress = t;
  };

  record();

  while (true) {
    // Advance the clock through every tick that is already satisfied.
    bool finished = false;
    while (!realigning && all_arrived(k)) {
      if (plan.is_barrier(k) && k < last) {
        aim();
        bool aligned = true;
        for (std::size_t i = 0; i < n; ++i) aligned &= std::abs(realign_error(i)) < ctl.angular_tol;
        if (!aligned) {
          realigning = true;
          reset_progress();
          break;
        }
      }
      if (plan.is_barrier(k) && barrier_entered >= 0.0) {
        trace.barrier_wait += t - barrier_entered;
        trace.events.push_back({t, EventKind::BarrierWait,
                                "tick " + std::to_string(k) + " waited " + fixed(t - barrier_entered, 3) + " s"});
      }
      barrier_entered = -1.0;
      if (k == last) {
        finished = true;
        break;
      }
      ++k;
      extruded += ticks[k].extrusion;
      reset_progress();
    }
    if (finished) break;
    if (realigning) {
      bool aligned = true;
      for (std::size_t i = 0; i < n; ++i) aligned &= std::abs(realign_error(i)) < ctl.angular_tol;
      if (aligned) {
        realigning = false;
        if (barrier_entered >= 0.0) {
          trace.barrier_wait += t - barrier_entered;
          trace.events.push_back({t, EventKind::BarrierWait,
                                  "tick " + std::to_string(k) + " waited " + fixed(t - barrier_entered, 3) + " s"});
        }
        barrier_entered = -1.0;
        if (k < last) {
          ++k;
          extruded += ticks[k].extrusion;
        }
        reset_progress();
        continue;
      }
    }

    if (plan.is_barrier(k) && barrier_entered < 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (realigning || arrived(i, k)) {
          barrier_entered = t;
          break;
        }
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      auto& s = states[i];
      const auto& sp = ticks[k].setpoints[i];
      if (realigning) {
        s.wheels = sp.op == Setpoint::Op::Move ? robot::rotate_controller(s, realign_error(i), ctl) : robot::WheelSpeeds{};
        continue;
      }
      switch (sp.op) {
        case Setpoint::Op::Move: s.wheels = robot::goto_controller(s, sp.position, ctl); break;
        case Setpoint::Op::Rotate:
          s.wheels = robot::rotate_controller(s, sp.theta - s.accumulated_rotation, ctl);
          break;
        case Setpoint::Op::Stop: s.wheels = {}; break;
      }
    }
    for (auto& s : states) {
      s = robot::step_dynamics(s, opts.dt_sim);
      const double sigma = s.params.position_noise_std > 0.0 ? s.params.position_noise_std : config.noise_std;
      if (sigma > 0.0) {
        s.pose.x += sigma * gauss(rng);
        s.pose.y += sigma * gauss(rng);
      }
    }
    t += opts.dt_sim;
    record();

    for (std::size_t i = 0; i < n; ++i) {
      const double e = realigning ? std::abs(realign_error(i)) : error_of(i, k);
      if (e < best[i] - 1e-9) {
        best[i] = e;
        last_progress = t;
      }
    }
    if (t - last_progress > config.stall_timeout) {
      throw SimError(ErrorKind::StallTimeout, "no progress toward tick " + std::to_string(k) + " (g-code line " +
                                                  std::to_string(ticks[k].source_line) + ") for " +
                                                  fixed(config.stall_timeout, 3) + " s");
    }
  }

  auto overlaps = overlap_diagnostic(trace, plan.robots);
  trace.events.insert(trace.events.end(), overlaps.begin(), overlaps.end());
  return trace;
}

// ---------------------------------------------------------------------------
// Fidelity

struct SegmentDeviation {
  std::size_t segment = 0;
  int source_line = 0;
  double max_deviation = 0.0;
  double hausdorff = 0.0;
};

struct FidelityReport {
  double max_deviation = 0.0;   // mm
  double mean_deviation = 0.0;  // mm
  std::vector<SegmentDeviation> per_segment;
  double print_length = 0.0;    // mm travelled by the tool while extruding
  double travel_length = 0.0;   // mm travelled otherwise
  double extruded = 0.0;        // filament deposited, mm
  double duration = 0.0;        // simulated s
  double barrier_wait = 0.0;    // s
  std::size_t extruding_samples = 0;
};

namespace detail {

inline double polyline_distance(Vec3 p, std::span<const Vec3> pts) {
  if (pts.size() == 1) return distance(p, pts[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) best = std::min(best, point_segment_distance(p, pts[i - 1], pts[i]));
  return best;
}

}  // namespace detail

// Deviation of every extruding sample from the nearest point of the commanded
// print path. Per segment, also the Hausdorff distance between the segment
// and the samples attributed to it.
inline FidelityReport measure_fidelity(const Trace& trace, std::span<const gcode::MotionSegment> segments) {
  FidelityReport r;
  if (trace.samples.empty()) return r;
  r.duration = trace.samples.back().t;
  r.barrier_wait = trace.barrier_wait;
  r.extruded = trace.samples.back().extruded;

  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const double step = distance(trace.samples[i].tool, trace.samples[i - 1].tool);
    (trace.samples[i].extruding ? r.print_length : r.travel_length) += step;
  }

  std::vector<std::size_t> print;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].kind == gcode::SegmentKind::Print) print.push_back(i);
  }
  if (print.empty()) return r;

  double sum = 0.0;
  std::vector<std::vector<Vec3>> attributed(segments.size());
  for (const auto& s : trace.samples) {
    if (!s.extruding) continue;
    double d = std::numeric_limits<double>::infinity();
    for (auto i : print) d = std::min(d, point_segment_distance(s.tool, segments[i].start, segments[i].end));
    r.max_deviation = std::max(r.max_deviation, d);
    sum += d;
    ++r.extruding_samples;
    if (s.segment < segments.size()) attributed[s.segment].push_back(s.tool);
  }
  if (r.extruding_samples > 0) r.mean_deviation = sum / static_cast<double>(r.extruding_samples);

  constexpr int kDense = 64;
  for (auto i : print) {
    const auto& seg = segments[i];
    const auto& pts = attributed[i];
    SegmentDeviation sd{i, seg.source_line, 0.0, 0.0};
    if (!pts.empty()) {
      for (const auto& p : pts) sd.max_deviation = std::max(sd.max_deviation, point_segment_distance(p, seg.start, seg.end));
      double back = 0.0;
      for (int k = 0; k <= kDense; ++k) {
        const Vec3 q = lerp(seg.start, seg.end, static_cast<double>(k) / kDense);
        back = std::max(back, detail::polyline_distance(q, pts));
      }
      sd.hausdorff = std::max(sd.max_deviation, back);
    }
    r.per_segment.push_back(sd);
  }
  return r;
}

}  // namespace swarmfab::sim
