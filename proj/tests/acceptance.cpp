// Acceptance suite: one PASS/FAIL line per criterion.
// Exit status is 0 when the failing criteria are exactly the ones named by
// --expect-fail (none by default).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "corpus.hpp"
#include "oracles.hpp"
#include "swarmfab/cli.hpp"

using namespace swarmfab;
using gcode::MotionSegment;

namespace {

const std::string kSamples = SWARMFAB_SAMPLES;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream o;
  o << std::scientific << std::setprecision(3) << v;
  return o.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sample(const std::string& name) { return cli::read_file(kSamples + "/" + name); }

// Robot poses and rotations that realise a set of setpoints.
void realise(const MachineConfig& m, const std::vector<Setpoint>& sp, std::vector<robot::Pose>& poses,
             std::vector<double>& rot) {
  const auto roles = role_slots(m.morphology());
  const bool bridge = m.morphology() == Morphology::BridgeXY || m.morphology() == Morphology::PrinterBridge;
  poses.assign(sp.size(), {});
  rot.assign(sp.size(), 0.0);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (sp[i].op == Setpoint::Op::Rotate) {
      const Vec2 at = mount_position(m, roles[i]);
      poses[i] = {at.x, at.y, 0};
      rot[i] = sp[i].theta;
    } else {
      poses[i] = {sp[i].position.x, sp[i].position.y, 0};
    }
  }
  if (bridge) {
    poses[2].x = poses[0].x + sp[2].position.x;
    poses[2].y = 0.5 * (poses[0].y + poses[1].y);
  }
}

Outcome kinematics_round_trip() {
  std::mt19937_64 rng(1001);
  std::ostringstream d;
  bool ok = true;
  const auto t0 = std::chrono::steady_clock::now();
  for (auto morph : kAllMorphologies) {
    const auto m = config::default_config(morph);
    const double tol = morph == Morphology::Wire3DPrinter ? 1e-7 : 1e-9;
    std::uniform_real_distribution<double> x(m.workspace.min.x, m.workspace.max.x),
        y(m.workspace.min.y, m.workspace.max.y), z(m.workspace.min.z, m.workspace.max.z);
    double worst = 0;
    std::vector<robot::Pose> poses;
    std::vector<double> rot;
    for (int k = 0; k < 10000;) {
      const Vec3 p{x(rng), y(rng), z(rng)};
      if (!workspace_contains(m, p).inside) continue;
      ++k;
      realise(m, machine_ik(m, p), poses, rot);
      worst = std::max(worst, distance(machine_fk(m, poses, rot, p.z), p));
    }
    ok &= worst <= tol;
    d << to_string(morph) << " worst=" << sci(worst) << " ";
  }
  const double elapsed = seconds_since(t0);
  ok &= elapsed < 5.0;
  d << "time=" << fixed(elapsed, 3) << "s";
  return {ok, d.str()};
}

Outcome trilateration_oracle() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  int checked = 0;
  while (checked < 1000) {
    kinematics::WireGeometry3D g;
    for (auto& a : g.anchors) a = {800 * u(rng) - 400, 800 * u(rng) - 400, 500 + 40 * u(rng)};
    if (g.anchor_area() < 20000) continue;
    const Vec3 p{200 * u(rng) - 100, 200 * u(rng) - 100, 300 * u(rng)};
    if (kinematics::working_depth(p, g) < 50) continue;
    const auto L = kinematics::wire3d_ik(p, g);
    const auto q = kinematics::wire3d_fk(L, g);
    std::array<oracle::P3, 3> anchors;
    for (int i = 0; i < 3; ++i) anchors[i] = {g.anchors[i].x, g.anchors[i].y, g.anchors[i].z};
    const auto o = oracle::trilaterate(anchors, L, 5000 + checked, 20);
    worst = std::max(worst, oracle::dist({q.x, q.y, q.z}, o));
    ++checked;
  }
  return {worst <= 1e-6, "instances=1000 worst=" + sci(worst)};
}

Outcome gcode_corpus() {
  const auto& programs = corpus::programs();
  std::size_t bad = 0;
  std::string first;
  for (const auto& c : programs) {
    gcode::InterpretOptions opt;
    opt.chord_tol = c.chord_tol;
    const auto r = gcode::interpret(gcode::parse_program(c.text), gcode::InterpreterState{}, opt);
    bool ok = r.segments.size() == c.segments.size() && r.events.size() == c.events;
    for (std::size_t i = 0; ok && i < c.segments.size(); ++i) {
      const auto& g = c.segments[i];
      const auto& s = r.segments[i];
      ok = std::abs(s.start.x - g.x0) <= 1e-9 && std::abs(s.start.y - g.y0) <= 1e-9 &&
           std::abs(s.start.z - g.z0) <= 1e-9 && std::abs(s.end.x - g.x1) <= 1e-9 &&
           std::abs(s.end.y - g.y1) <= 1e-9 && std::abs(s.end.z - g.z1) <= 1e-9 &&
           std::abs(s.feed - g.feed) <= 1e-9 && std::abs(s.extrusion_delta - g.e) <= 1e-9 &&
           s.source_line == g.line;
      if (i > 0) ok &= s.start == r.segments[i - 1].end;
    }
    double sum = 0;
    for (const auto& s : r.segments) sum += s.extrusion_delta;
    ok &= std::abs(sum - c.total_e) <= 1e-9 && std::abs(r.final_state.extrusion_total - c.total_e) <= 1e-9;
    if (!ok) {
      ++bad;
      if (first.empty()) first = " first=" + c.name;
    }
  }
  return {programs.size() >= 15 && bad == 0,
          "programs=" + std::to_string(programs.size()) + " mismatched=" + std::to_string(bad) + first};
}

Outcome arc_flattening() {
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad_count = 0, bad_dev = 0;
  double worst_ratio = 0;
  for (double tol : {0.005, 0.05, 0.5}) {
    for (int k = 0; k < 500; ++k) {
      const double r = 1.0 + 99.0 * u(rng);
      const double a0 = 2 * std::numbers::pi * u(rng);
      const double sweep = 0.05 + (2 * std::numbers::pi - 0.1) * u(rng);
      const bool cw = u(rng) < 0.5;
      const double dir = cw ? -1 : 1;
      const Vec2 c{200 * u(rng) - 100, 200 * u(rng) - 100};
      const Vec2 s{c.x + r * std::cos(a0), c.y + r * std::sin(a0)};
      const Vec2 e{c.x + r * std::cos(a0 + dir * sweep), c.y + r * std::sin(a0 + dir * sweep)};
      gcode::GcodeCommand cmd;
      cmd.code = cw ? 2 : 3;
      cmd.params = {{'X', e.x}, {'Y', e.y}, {'I', c.x - s.x}, {'J', c.y - s.y}};
      gcode::InterpreterState st;
      st.position = {s.x, s.y, 0};
      const auto segs = gcode::flatten_arc(cmd, st, tol, 1e-6);
      bad_count += segs.size() != oracle::stated_arc_count(sweep, r, tol);
      std::vector<oracle::P2> pts{{s.x, s.y}};
      for (const auto& g : segs) pts.push_back({g.end.x, g.end.y});
      const double dev = oracle::arc_polyline_deviation(pts, {c.x, c.y}, r, a0, sweep, dir);
      bad_dev += dev > tol + 1e-9;
      worst_ratio = std::max(worst_ratio, dev / tol);
    }
  }
  return {bad_count == 0 && bad_dev == 0, "arcs=1500 count_mismatch=" + std::to_string(bad_count) +
                                              " over_tol=" + std::to_string(bad_dev) +
                                              " worst_dev/tol=" + fixed(worst_ratio, 4)};
}

double point_polyline(Vec3 p, const std::vector<MotionSegment>& segs) {
  double best = 1e300;
  for (const auto& s : segs) best = std::min(best, point_segment_distance(p, s.start, s.end));
  return best;
}

Outcome plan_invariants() {
  std::size_t plans = 0, violations = 0;
  double worst_cover = 0;
  std::string first;
  for (auto morph : kAllMorphologies) {
    const auto m = config::default_config(morph);
    const bool bridge = morph == Morphology::BridgeXY || morph == Morphology::PrinterBridge;
    const Vec3 shift = bridge ? Vec3{100, 100, 10} : morph == Morphology::Wire2DWall ? Vec3{0, 200, 0} : Vec3{0, 0, 20};
    for (const auto& c : corpus::programs()) {
      gcode::InterpretOptions opt;
      opt.chord_tol = c.chord_tol;
      auto segs = gcode::interpret(gcode::parse_program(c.text), gcode::InterpreterState{}, opt).segments;
      for (auto& s : segs) {
        s.start = s.start + shift;
        s.end = s.end + shift;
      }
      const auto plan = coordinator::plan_program(segs, m);
      ++plans;
      std::size_t v = 0;
      for (std::size_t k = 0; k < plan.ticks.size(); ++k) {
        const auto& t = plan.ticks[k];
        v += !workspace_contains(m, t.tool_target).inside;
        if (bridge) v += t.setpoints[0].position.y != t.setpoints[1].position.y;
        // ticks lie on the commanded polyline
        const double off = point_polyline(t.tool_target, segs);
        worst_cover = std::max(worst_cover, off);
        v += off > 1e-9;
        if (k > 0) {
          const double step = distance(t.tool_target, plan.ticks[k - 1].tool_target);
          const double dt = t.t - plan.ticks[k - 1].t;
          const auto& s = segs[t.segment];
          v += !(dt > 0);
          v += step > std::min(s.feed, m.max_tool_speed) * dt + 1e-9;
        }
      }
      // the commanded polyline lies on the tick polyline
      for (std::size_t i = 0; i < segs.size(); ++i) {
        std::vector<MotionSegment> pieces;
        for (std::size_t k = 1; k < plan.ticks.size(); ++k) {
          if (plan.ticks[k].segment == i) {
            pieces.push_back({plan.ticks[k - 1].tool_target, plan.ticks[k].tool_target, 1, 0, {}, 0});
          }
        }
        if (pieces.empty()) pieces.push_back({segs[i].start, segs[i].start, 1, 0, {}, 0});
        for (int j = 0; j <= 64; ++j) {
          const double off = point_polyline(lerp(segs[i].start, segs[i].end, j / 64.0), pieces);
          worst_cover = std::max(worst_cover, off);
          v += off > 1e-9;
        }
      }
      if (v > 0 && first.empty()) first = std::string(" first=") + to_string(morph) + "/" + c.name;
      violations += v;
    }
  }
  return {violations == 0, "plans=" + std::to_string(plans) + " violations=" + std::to_string(violations) +
                               " worst_hausdorff=" + sci(worst_cover) + first};
}

Outcome drawing_fidelity() {
  bool ok = true;
  std::ostringstream d;
  const std::pair<Morphology, const char*> jobs[] = {{Morphology::BridgeXY, "square.gcode"},
                                                     {Morphology::Wire2DWall, "wall_square.gcode"}};
  for (const auto& [morph, file] : jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto job = run_job(config::default_config(morph), sample(file), {});
    const double elapsed = seconds_since(t0);
    ok &= job.report.mean_deviation < 0.5 && job.report.max_deviation < 1.5 && elapsed < 10.0;
    d << to_string(morph) << " mean=" << fixed(job.report.mean_deviation, 4)
      << " max=" << fixed(job.report.max_deviation, 4) << " time=" << fixed(elapsed, 3) << "s ";
  }
  return {ok, d.str()};
}

Outcome three_layer_print() {
  const auto m = config::default_config(Morphology::Wire3DPrinter);
  try {
    const auto job = run_job(m, sample("cube3.gcode"), {});
    const auto svg = io::export_svg(job.trace);
    std::size_t groups = 0;
    for (auto p = svg.find("class=\"layer\""); p != std::string::npos; p = svg.find("class=\"layer\"", p + 1)) ++groups;
    const double want = job.program.final_state.extrusion_total;
    const double got = job.trace.samples.back().extruded;
    const bool ok = groups == 3 && want > 0 && std::abs(got - want) <= 0.01 * want;
    return {ok, "z_groups=" + std::to_string(groups) + " extruded=" + fixed(got) + " program_e=" + fixed(want)};
  } catch (const sim::SimError& e) {
    return {false, e.what()};
  }
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "swarmfab_acceptance";
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const char*> jobs[] = {{"bridge_xy.json", "square.gcode"},
                                                      {"wire2d_wall.json", "wall_square.gcode"},
                                                      {"wire3d_printer.json", "cube3.gcode"}};
  bool ok = true;
  int compared = 0;
  for (const auto& [cfg, gc] : jobs) {
    // with sensor noise so the seed actually matters
    auto j = config::to_json(config::parse(sample(cfg)).config);
    j["sim"]["noise_std"] = 0.005;
    const auto cfg_path = (dir / "noisy.json").string();
    cli::write_file(cfg_path, j.dump());
    std::string out[2][3];
    for (int run = 0; run < 2; ++run) {
      const std::string tag = (dir / ("run" + std::to_string(run))).string();
      std::ostringstream o, e;
      const int code = cli::run_cli({"simulate", kSamples + "/" + gc, cfg_path, "--seed", "1234", "--svg", tag + ".svg",
                                     "--csv", tag + ".csv", "--stream", tag + ".txt"},
                                    o, e);
      if (code != 0) return {false, std::string(cfg) + ": exit " + std::to_string(code) + " " + e.str()};
      out[run][0] = cli::read_file(tag + ".svg");
      out[run][1] = cli::read_file(tag + ".csv");
      out[run][2] = cli::read_file(tag + ".txt");
    }
    for (int f = 0; f < 3; ++f) {
      ok &= out[0][f] == out[1][f] && !out[0][f].empty();
      ++compared;
    }
  }
  std::filesystem::remove_all(dir);
  return {ok, "file_pairs=" + std::to_string(compared)};
}

// Seconds until goto reports arrival, or -1 if not within limit.
double goto_time(robot::RobotState s, Vec2 target, const robot::ControllerParams& c, double limit) {
  constexpr double dt = 0.01;
  for (double t = 0; t <= limit + 1e-12; t += dt) {
    s.wheels = robot::goto_controller(s, target, c);
    if (s.wheels == robot::WheelSpeeds{}) return t;
    s = robot::step_dynamics(s, dt);
  }
  return -1;
}

Outcome controller_convergence() {
  const robot::ControllerParams c;
  std::mt19937_64 rng(1009);
  std::uniform_real_distribution<double> u(0, 1);
  auto pose_at = [&](double d) {
    robot::RobotState s;
    const double bearing = 2 * std::numbers::pi * u(rng);
    s.pose = {d * std::cos(bearing), d * std::sin(bearing), 2 * std::numbers::pi * u(rng) - std::numbers::pi};
    return s;
  };
  int disk_ok = 0, ring_ok = 0, ring_n = 0;
  double worst_short = 1e300;
  for (int k = 0; k < 1000; ++k) {
    const double d = 1000.0 * std::sqrt(u(rng));
    const bool within = goto_time(pose_at(d), {0, 0}, c, 5 * d / c.v_cap) >= 0;
    disk_ok += within;
    if (!within) worst_short = std::min(worst_short, d);
  }
  for (int k = 0; k < 1000; ++k) {
    const double d = 100 + 900 * u(rng);
    ++ring_n;
    ring_ok += goto_time(pose_at(d), {0, 0}, c, 5 * d / c.v_cap) >= 0;
  }
  int rot_ok = 0;
  for (int k = 0; k < 1000; ++k) {
    robot::RobotState s;
    s.role = robot::Role::Spool1;
    const double goal = 8 * std::numbers::pi * (u(rng) - 0.5);
    for (int i = 0; i < 20000; ++i) {
      s.wheels = robot::rotate_controller(s, goal - s.accumulated_rotation, c);
      if (s.wheels == robot::WheelSpeeds{}) break;
      s = robot::step_dynamics(s, 0.01);
    }
    rot_ok += std::abs(goal - s.accumulated_rotation) < 0.002;
  }
  std::ostringstream d;
  d << "goto_within_envelope=" << disk_ok << "/1000";
  if (disk_ok < 1000) d << " (shortest_miss_d=" << fixed(worst_short, 1) << "mm)";
  d << " ring_100_1000=" << ring_ok << "/" << ring_n << " rotate=" << rot_ok << "/1000";
  return {disk_ok == 1000 && rot_ok == 1000, d.str()};
}

Outcome reconfiguration() {
  auto from = config::default_config(Morphology::BridgeXY);
  from.roster.push_back({"r4", {}});
  const auto to = config::default_config(Morphology::PrinterBridge);
  try {
    const auto plan = coordinator::reconfigure(from, to);
    const auto problems = coordinator::validate_transition(plan, to);
    const auto program = interpret_for(to, sample("square.gcode"));
    const auto job = coordinator::plan_program(program.segments, to);
    const auto both = coordinator::compose(plan, job, 1.0);
    std::string d = "transition_ticks=" + std::to_string(plan.ticks.size()) +
                    " problems=" + std::to_string(problems.size()) + " job_ticks=" + std::to_string(job.ticks.size());
    if (!problems.empty()) d += " first=" + problems.front();
    return {problems.empty() && !plan.empty() && !job.ticks.empty() && both.ticks.size() == plan.ticks.size() + job.ticks.size(),
            d};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swarmfab acceptance suite"};
  std::vector<int> expect_fail;
  app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{
      kinematics_round_trip, trilateration_oracle, gcode_corpus,  arc_flattening, plan_invariants,
      drawing_fidelity,      three_layer_print,    determinism,   controller_convergence, reconfiguration};

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    Outcome r;
    try {
      r = criteria[i]();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) failed.insert(n);
    std::cout << "criterion " << n << " " << (r.pass ? "PASS" : "FAIL") << " " << r.detail << std::endl;
  }
  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  std::cout << "passed " << criteria.size() - failed.size() << "/" << criteria.size();
  if (!expected.empty()) std::cout << " (expected failures:" << [&] {
      std::string s;
      for (int n : expected) s += " " + std::to_string(n);
      return s;
    }() << ")";
  std::cout << std::endl;
  return failed == expected ? 0 : 1;
}
