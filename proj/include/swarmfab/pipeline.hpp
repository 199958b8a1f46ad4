#pragma once

// Glue between the stages: g-code text -> segments -> plan -> trace.

#include <string_view>

#include "swarmfab/coordinator.hpp"
#include "swarmfab/gcode.hpp"
#include "swarmfab/machine.hpp"
#include "swarmfab/sim.hpp"

namespace swarmfab {

inline gcode::InterpreterState initial_state(const MachineConfig& config) {
  gcode::InterpreterState s;
  s.position = config.home;
  s.feed = config.default_feed;
  return s;
}

inline gcode::InterpretOptions interpret_options(const MachineConfig& config) {
  gcode::InterpretOptions o;
  o.home = config.home;
  o.chord_tol = config.chord_tol;
  return o;
}

inline gcode::Interpretation interpret_for(const MachineConfig& config, std::string_view text) {
  const auto commands = gcode::parse_program(text);
  return gcode::interpret(commands, initial_state(config), interpret_options(config));
}

struct JobResult {
  gcode::Interpretation program;
  coordinator::Plan plan;
  sim::Trace trace;
  sim::FidelityReport report;
};

inline JobResult run_job(const MachineConfig& config, std::string_view text, const sim::SimOptions& opts) {
  JobResult r;
  r.program = interpret_for(config, text);
  r.plan = coordinator::plan_program(r.program.segments, config);
  r.trace = sim::run(r.plan, config, opts);
  r.report = sim::measure_fidelity(r.trace, r.program.segments);
  return r;
}

}  // namespace swarmfab
