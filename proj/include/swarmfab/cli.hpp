#pragma once

// Command-line driver. Data goes to `out`, diagnostics to `err`.

#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarmfab/config_io.hpp"
#include "swarmfab/export.hpp"
#include "swarmfab/format.hpp"
#include "swarmfab/pipeline.hpp"

namespace swarmfab::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kGcode = 2, kIo = 3, kConfig = 4, kKinematics = 5, kStall = 6 };

class IoError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << data;
  f.flush();
  if (!f) throw IoError("error writing '" + path + "'");
}

inline config::LoadedConfig load_config(const std::string& path, std::ostream& err) {
  auto loaded = config::parse(read_file(path));
  for (const auto& w : loaded.warnings) err << "warning: " << path << ": " << w << "\n";
  return loaded;
}

inline std::string point(Vec3 p) { return "(" + fixed(p.x) + "," + fixed(p.y) + "," + fixed(p.z) + ")"; }

inline std::string segment_line(const gcode::MotionSegment& s) {
  return std::string(s.kind == gcode::SegmentKind::Print ? "print" : "travel") + " " + point(s.start) + " -> " +
         point(s.end) + " feed=" + fixed(s.feed) + " e=" + fixed(s.extrusion_delta) +
         " line=" + std::to_string(s.source_line);
}

inline void print_summary(std::ostream& out, const coordinator::Plan& plan) {
  out << "ticks=" << plan.ticks.size() << "\n";
  out << "duration_s=" << fixed(plan.duration()) << "\n";
  out << "barriers=" << plan.barriers.size() << "\n";
}

inline void print_report(std::ostream& out, const sim::FidelityReport& r, const sim::Trace& trace) {
  double hausdorff = 0.0;
  for (const auto& s : r.per_segment) hausdorff = std::max(hausdorff, s.hausdorff);
  out << "max_deviation_mm=" << fixed(r.max_deviation) << "\n";
  out << "mean_deviation_mm=" << fixed(r.mean_deviation) << "\n";
  out << "max_hausdorff_mm=" << fixed(hausdorff) << "\n";
  out << "print_length_mm=" << fixed(r.print_length) << "\n";
  out << "travel_length_mm=" << fixed(r.travel_length) << "\n";
  out << "extruded_mm=" << fixed(r.extruded) << "\n";
  out << "duration_s=" << fixed(r.duration) << "\n";
  out << "barrier_wait_s=" << fixed(r.barrier_wait) << "\n";
  out << "samples=" << trace.samples.size() << "\n";
  out << "extruding_samples=" << r.extruding_samples << "\n";
}

// Overlap events arrive per sample; report a count and the first one.
inline void print_warnings(std::ostream& err, const sim::Trace& trace) {
  std::size_t overlaps = 0;
  const sim::TraceEvent* first = nullptr;
  for (const auto& e : trace.events) {
    if (e.kind == sim::EventKind::SkewWarning) {
      err << "warning: t=" << fixed(e.t, 3) << " " << e.message << "\n";
    } else if (e.kind == sim::EventKind::Overlap) {
      if (!first) first = &e;
      ++overlaps;
    }
  }
  if (first) {
    err << "warning: " << overlaps << " overlapping samples, first at t=" << fixed(first->t, 3) << ": "
        << first->message << "\n";
  }
}

inline int cmd_parse(const std::string& gcode_path, std::ostream& out) {
  const auto program = gcode::interpret(gcode::parse_program(read_file(gcode_path)), gcode::InterpreterState{});
  for (const auto& s : program.segments) out << segment_line(s) << "\n";
  for (const auto& e : program.events) {
    out << "event " << e.letter << e.code << " line=" << e.source_line << " before_segment=" << e.segment_index
        << "\n";
  }
  return kOk;
}

inline int cmd_plan(const std::string& gcode_path, const std::string& config_path, const std::string& out_path,
                    std::ostream& out, std::ostream& err) {
  const auto text = read_file(gcode_path);
  const auto config = load_config(config_path, err).config;
  const auto program = interpret_for(config, text);
  const auto plan = coordinator::plan_program(program.segments, config);
  write_file(out_path, coordinator::serialize_command_stream(plan));
  print_summary(out, plan);
  return kOk;
}

struct SimulateFlags {
  std::string svg, csv, stream;
  std::optional<double> dt;
  std::uint64_t seed = 0;
  bool report = false;
};

inline int cmd_simulate(const std::string& gcode_path, const std::string& config_path, const SimulateFlags& f,
                        std::ostream& out, std::ostream& err) {
  const auto text = read_file(gcode_path);
  const auto config = load_config(config_path, err).config;
  sim::SimOptions opts;
  opts.dt_sim = f.dt.value_or(config.dt_sim);
  opts.seed = f.seed;
  if (!(opts.dt_sim > 0.0) || opts.dt_sim > config.dt_plan + 1e-12) {
    throw UsageError("--dt must be in (0, dt_plan] with dt_plan=" + fixed(config.dt_plan));
  }
  const auto job = run_job(config, text, opts);
  print_warnings(err, job.trace);
  if (!f.svg.empty()) write_file(f.svg, io::export_svg(job.trace));
  if (!f.csv.empty()) write_file(f.csv, io::export_csv(job.trace));
  if (!f.stream.empty()) write_file(f.stream, coordinator::serialize_command_stream(job.plan));
  if (f.report) print_report(out, job.report, job.trace);
  return kOk;
}

inline int cmd_machines_list(std::ostream& out) {
  for (auto m : kAllMorphologies) out << to_string(m) << ":" << required_robots(m) << "\n";
  return kOk;
}

inline int cmd_machines_init(const std::string& name, const std::string& out_path, std::ostream& out) {
  const auto m = parse_morphology(name);
  if (!m) throw UsageError("unknown morphology '" + name + "'");
  write_file(out_path, config::to_json(config::default_config(*m)).dump(2) + "\n");
  out << "wrote " << out_path << "\n";
  return kOk;
}

inline int cmd_reconfigure(const std::string& a, const std::string& b, const std::string& out_path,
                           std::ostream& out, std::ostream& err) {
  const auto from = load_config(a, err).config;
  const auto to = load_config(b, err).config;
  const auto plan = coordinator::reconfigure(from, to);
  for (const auto& problem : coordinator::validate_transition(plan, to)) err << "warning: " << problem << "\n";
  write_file(out_path, coordinator::serialize_command_stream(plan));
  out << to_string(from.morphology()) << " -> " << to_string(to.morphology()) << "\n";
  print_summary(out, plan);
  return kOk;
}

// Maps every failure to its exit code.
template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const gcode::GcodeError& e) {
    err << "error: g-code " << e.what() << "\n";
    return kGcode;
  } catch (const config::ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const coordinator::PlanError& e) {
    err << "error: " << e.what() << "\n";
    return kKinematics;
  } catch (const kinematics::KinematicsError& e) {
    err << "error: " << e.what() << "\n";
    return kKinematics;
  } catch (const sim::SimError& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case sim::ErrorKind::StallTimeout: return kStall;
      case sim::ErrorKind::KinematicsFault: return kKinematics;
      case sim::ErrorKind::InvalidArgument: return kUsage;
    }
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"swarmfab: plan and simulate g-code jobs on reconfigurable robot swarms", "swarmfab"};
  app.require_subcommand(1);

  std::string gcode_path, config_path, out_path, second_path, morph;
  SimulateFlags flags;
  double dt = 0.0;

  auto* parse = app.add_subcommand("parse", "Dump the motion segments of a g-code file");
  parse->add_option("gcode", gcode_path, "g-code file")->required();

  auto* plan = app.add_subcommand("plan", "Write the robot command stream for a job");
  plan->add_option("gcode", gcode_path, "g-code file")->required();
  plan->add_option("config", config_path, "machine config (JSON)")->required();
  plan->add_option("out", out_path, "command stream output")->required();

  auto* simulate = app.add_subcommand("simulate", "Plan and simulate a job");
  simulate->add_option("gcode", gcode_path, "g-code file")->required();
  simulate->add_option("config", config_path, "machine config (JSON)")->required();
  simulate->add_option("--svg", flags.svg, "write the simulated path as SVG");
  simulate->add_option("--csv", flags.csv, "write the robot trace as CSV");
  simulate->add_option("--stream", flags.stream, "write the command stream");
  auto* dt_opt = simulate->add_option("--dt", dt, "simulation step in seconds");
  simulate->add_option("--seed", flags.seed, "noise seed");
  simulate->add_flag("--report", flags.report, "print the fidelity report");

  auto* machines = app.add_subcommand("machines", "List or scaffold machine configs");
  machines->require_subcommand(1);
  auto* list = machines->add_subcommand("list", "Print the morphologies and their robot counts");
  auto* init = machines->add_subcommand("init", "Write a default config");
  init->add_option("morphology", morph, "morphology name")->required();
  init->add_option("out", out_path, "output path")->required();

  auto* reconf = app.add_subcommand("reconfigure", "Plan the transition between two machines");
  reconf->add_option("from", config_path, "current machine config")->required();
  reconf->add_option("to", second_path, "target machine config")->required();
  reconf->add_option("out", out_path, "command stream output")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }
  if (dt_opt->count() > 0) flags.dt = dt;

  return guarded(
      [&]() -> int {
        if (*parse) return cmd_parse(gcode_path, out);
        if (*plan) return cmd_plan(gcode_path, config_path, out_path, out, err);
        if (*simulate) return cmd_simulate(gcode_path, config_path, flags, out, err);
        if (*list) return cmd_machines_list(out);
        if (*init) return cmd_machines_init(morph, out_path, out);
        if (*reconf) return cmd_reconfigure(config_path, second_path, out_path, out, err);
        throw UsageError("no command");
      },
      err);
}

}  // namespace swarmfab::cli
