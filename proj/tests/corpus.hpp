#pragma once

// Hand-written g-code programs with their expected segment lists. All start
// from the origin with the default feed (20 mm/s) and home at the origin.

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace corpus {

struct Seg {
  double x0, y0, z0, x1, y1, z1;
  double feed;
  double e;  // > 0 means a print segment
  int line;
};

struct Case {
  std::string name;
  std::string text;
  double chord_tol = 0.01;
  std::vector<Seg> segments;
  std::size_t events = 0;
  double total_e = 0.0;
  bool lines_only = true;  // the straight-line walker can replay it
};

inline std::vector<Case> programs() {
  const double r2 = 10.0 * std::sqrt(0.5);  // 10 cos 45
  std::vector<Case> c;

  c.push_back({"absolute_lines", "G21\nG90\nG1 X10 Y0 F600\nG1 X10 Y10\n", 0.01,
               {{0, 0, 0, 10, 0, 0, 10, 0, 3}, {10, 0, 0, 10, 10, 0, 10, 0, 4}}});

  c.push_back({"relative_lines", "G91\nG1 X5 Y5 F1200\nG1 X-2 Z1\n", 0.01,
               {{0, 0, 0, 5, 5, 0, 20, 0, 2}, {5, 5, 0, 3, 5, 1, 20, 0, 3}}});

  c.push_back({"g92_rebind_x", "G1 X10 F600\nG92 X0\nG1 X5\n", 0.01,
               {{0, 0, 0, 10, 0, 0, 10, 0, 1}, {10, 0, 0, 15, 0, 0, 10, 0, 3}}});

  c.push_back({"g92_e_then_print", "G92 E0\nG1 X10 E5 F600\n", 0.01, {{0, 0, 0, 10, 0, 0, 10, 5, 2}}, 0, 5.0});

  c.push_back({"absolute_extrusion_with_retract", "M82\nG1 X10 E2 F600\nG1 X20 E5\nG1 X30 E4\n", 0.01,
               {{0, 0, 0, 10, 0, 0, 10, 2, 2}, {10, 0, 0, 20, 0, 0, 10, 3, 3}, {20, 0, 0, 30, 0, 0, 10, 0, 4}},
               0,
               5.0});

  c.push_back({"relative_extrusion_in_place", "M83\nG1 X10 E1 F600\nG1 X20 E1\nG1 E-0.5\nG1 E0.5\nG1 X30 E1\n", 0.01,
               {{0, 0, 0, 10, 0, 0, 10, 1, 2},
                {10, 0, 0, 20, 0, 0, 10, 1, 3},
                {20, 0, 0, 20, 0, 0, 10, 0.5, 5},
                {20, 0, 0, 30, 0, 0, 10, 1, 6}},
               0,
               3.5});

  c.push_back({"inch_switch", "G20\nG1 X1 Y2 F60\nG21\nG1 X30\n", 0.01,
               {{0, 0, 0, 25.4, 50.8, 0, 25.4, 0, 2}, {25.4, 50.8, 0, 30, 50.8, 0, 25.4, 0, 4}}});

  c.push_back({"metadata_codes", "M104 S200\nM109 S200\nG1 X1 F600\nM140 S60\nM999\n", 0.01,
               {{0, 0, 0, 1, 0, 0, 10, 0, 3}}, 4});

  c.push_back({"home_all", "G1 X10 Y10 F600\nG28\n", 0.01,
               {{0, 0, 0, 10, 10, 0, 10, 0, 1}, {10, 10, 0, 0, 0, 0, 10, 0, 2}}, 0, 0.0, false});

  c.push_back({"home_x_only", "G1 X10 Y10 Z5 F600\nG28 X0\n", 0.01,
               {{0, 0, 0, 10, 10, 5, 10, 0, 1}, {10, 10, 5, 0, 10, 5, 10, 0, 2}}, 0, 0.0, false});

  c.push_back({"arc_ij_ccw", "G1 X10 Y0 F600\nG3 X0 Y10 I-10 J0\n", 1.0,
               {{0, 0, 0, 10, 0, 0, 10, 0, 1}, {10, 0, 0, r2, r2, 0, 10, 0, 2}, {r2, r2, 0, 0, 10, 0, 10, 0, 2}},
               0, 0.0, false});

  c.push_back({"arc_ij_cw", "G1 X0 Y10 F600\nG2 X10 Y0 I0 J-10\n", 1.0,
               {{0, 0, 0, 0, 10, 0, 10, 0, 1}, {0, 10, 0, r2, r2, 0, 10, 0, 2}, {r2, r2, 0, 10, 0, 0, 10, 0, 2}},
               0, 0.0, false});

  c.push_back({"arc_r_short", "G1 X10 F600\nG3 X0 Y10 R10\n", 1.0,
               {{0, 0, 0, 10, 0, 0, 10, 0, 1}, {10, 0, 0, r2, r2, 0, 10, 0, 2}, {r2, r2, 0, 0, 10, 0, 10, 0, 2}},
               0, 0.0, false});

  {
    // full circle: 2 acos(0.9) = 0.90205 rad per chord -> 7 chords
    Case full{"arc_full_circle_extruding", "M83\nG1 X10 F600\nG3 X10 Y0 I-10 J0 E4\n", 1.0, {}, 0, 4.0, false};
    full.segments.push_back({0, 0, 0, 10, 0, 0, 10, 0, 2});
    double px = 10, py = 0;
    for (int k = 1; k <= 7; ++k) {
      const double a = 2 * std::numbers::pi * k / 7;
      const double x = k == 7 ? 10.0 : 10 * std::cos(a), y = k == 7 ? 0.0 : 10 * std::sin(a);
      full.segments.push_back({px, py, 0, x, y, 0, 10, k == 7 ? 4.0 - 6 * (4.0 / 7) : 4.0 / 7, 3});
      px = x;
      py = y;
    }
    c.push_back(full);
  }

  c.push_back({"helix_quarter", "G1 X10 F600\nG3 X0 Y10 Z2 I-10 J0\n", 1.0,
               {{0, 0, 0, 10, 0, 0, 10, 0, 1}, {10, 0, 0, r2, r2, 1, 10, 0, 2}, {r2, r2, 1, 0, 10, 2, 10, 0, 2}},
               0, 0.0, false});

  c.push_back({"mode_switching", "G90\nG1 X10 F600\nG91\nG1 Y10\nG90\nG1 X0\n", 0.01,
               {{0, 0, 0, 10, 0, 0, 10, 0, 2}, {10, 0, 0, 10, 10, 0, 10, 0, 4}, {10, 10, 0, 0, 10, 0, 10, 0, 6}}});

  c.push_back({"comments_and_blanks", "; header\n\n(pen up) G0 X5 ; move\nG1 Y5 F300 (slow)\n", 0.01,
               {{0, 0, 0, 5, 0, 0, 20, 0, 3}, {5, 0, 0, 5, 5, 0, 5, 0, 4}}, 0, 0.0, false});

  c.push_back({"g92_without_words", "G1 X10 Y5 F600\nG92\nG1 X1 Y1\n", 0.01,
               {{0, 0, 0, 10, 5, 0, 10, 0, 1}, {10, 5, 0, 11, 6, 0, 10, 0, 3}}});

  c.push_back({"inch_relative", "G20\nG91\nG1 X0.5 F120\n", 0.01, {{0, 0, 0, 12.7, 0, 0, 50.8, 0, 3}}});

  c.push_back({"g0_does_not_extrude", "M83\nG0 X5 E3\nG1 X6 E1 F600\n", 0.01,
               {{0, 0, 0, 5, 0, 0, 20, 0, 2}, {5, 0, 0, 6, 0, 0, 10, 1, 3}}, 0, 1.0});

  c.push_back({"g92_e_mid_print", "M82\nG1 X10 E4 F600\nG92 E0\nG1 X20 E2\n", 0.01,
               {{0, 0, 0, 10, 0, 0, 10, 4, 2}, {10, 0, 0, 20, 0, 0, 10, 2, 4}}, 0, 6.0});

  return c;
}

// Keeps gtest from dumping the struct bytes.
inline void PrintTo(const Case& c, std::ostream* os) { *os << c.name; }

}  // namespace corpus
