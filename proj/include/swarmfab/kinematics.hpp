#pragma once

// Kinematics of the machine morphologies: bridge X-Y gantry, two-wire wall
// plotter, three-wire 3D positioner, lead-screw Z and spool conversions.
//
// Wires are massless straight segments, the bridge is rigid and the carriage
// is a 1-D offset along it. Millimetres and radians throughout.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "swarmfab/error.hpp"
#include "swarmfab/format.hpp"
#include "swarmfab/geometry.hpp"

namespace swarmfab::kinematics {

enum class ErrorKind {
  OutOfWorkspace,
  BridgeSkewed,
  Unreachable,
  NoIntersection,
  IllConditioned,
  InvalidGeometry,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::OutOfWorkspace: return "OutOfWorkspace";
    case ErrorKind::BridgeSkewed: return "BridgeSkewed";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::NoIntersection: return "NoIntersection";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
  }
  return "?";
}

class KinematicsError : public Error {
 public:
  KinematicsError(ErrorKind kind, const std::string& detail)
      : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kIntersectionSlack = 1e-9;  // mm (mm^2 for squared terms)
inline constexpr double kMinAnchorArea = 1.0;       // mm^2
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Bridge gantry. Both bridge robots drive along +y rails; bridge robot 1
// runs on the line x = rail_x and robot 2 on x = rail_x + bridge_span. The
// carriage sits at carriage_offset along the bridge from robot 1.

struct BridgeGeometry {
  double rail_x = 0.0;
  double bridge_span = 400.0;
  double carriage_min = 0.0;
  double carriage_max = 400.0;
  double bridge_height = 0.0;
  double y_min = -kInf;
  double y_max = kInf;

  void validate() const {
    if (!(bridge_span > 0.0)) throw KinematicsError(ErrorKind::InvalidGeometry, "bridge_span must be > 0");
    if (!(carriage_min < carriage_max)) throw KinematicsError(ErrorKind::InvalidGeometry, "carriage_min < carriage_max");
    if (carriage_min < 0.0 || carriage_max > bridge_span) {
      throw KinematicsError(ErrorKind::InvalidGeometry, "carriage travel must lie within the bridge span");
    }
  }
};

struct BridgeSetpoints {
  Vec2 bridge1;
  Vec2 bridge2;
  double carriage_offset = 0.0;
};

inline BridgeSetpoints bridge_ik(Vec2 tool, const BridgeGeometry& g) {
  const double offset = tool.x - g.rail_x;
  if (offset < g.carriage_min || offset > g.carriage_max) {
    throw KinematicsError(ErrorKind::OutOfWorkspace,
                          "carriage offset " + fixed(offset) + " outside [" + fixed(g.carriage_min) + ", " +
                              fixed(g.carriage_max) + "]");
  }
  if (tool.y < g.y_min || tool.y > g.y_max) {
    throw KinematicsError(ErrorKind::OutOfWorkspace, "y " + fixed(tool.y) + " outside rail range");
  }
  return {{g.rail_x, tool.y}, {g.rail_x + g.bridge_span, tool.y}, offset};
}

// Tool position from the two bridge robots and the carriage offset.
inline Vec2 bridge_fk(Vec2 bridge1, Vec2 bridge2, double carriage_offset, double sync_tol) {
  const double skew = std::abs(bridge1.y - bridge2.y);
  if (skew > sync_tol) {
    throw KinematicsError(ErrorKind::BridgeSkewed, "bridge skew " + fixed(skew) + " exceeds " + fixed(sync_tol));
  }
  return {bridge1.x + carriage_offset, 0.5 * (bridge1.y + bridge2.y)};
}

// ---------------------------------------------------------------------------
// Two-wire wall plotter. Points are (x, z) on the wall; z is up.

struct WireGeometry2D {
  std::array<Vec2, 2> anchors{Vec2{0.0, 0.0}, Vec2{1000.0, 0.0}};
  double spool_radius = 10.0;
  double workspace_margin = 10.0;

  void validate() const {
    if (anchors[0] == anchors[1]) throw KinematicsError(ErrorKind::InvalidGeometry, "anchors must be distinct");
    if (!(spool_radius > 0.0)) throw KinematicsError(ErrorKind::InvalidGeometry, "spool_radius must be > 0");
    if (workspace_margin < 0.0) throw KinematicsError(ErrorKind::InvalidGeometry, "workspace_margin must be >= 0");
  }
};

enum class WallReach { Reachable, AboveAnchors, OutsideLateral };

// Strictly below the lower anchor by the margin; laterally between the anchors
// after the margin inset (inclusive, so a point directly under an anchor is
// reachable with zero margin).
inline WallReach wall_reach(Vec2 p, const WireGeometry2D& g) {
  const double top = std::min(g.anchors[0].y, g.anchors[1].y) - g.workspace_margin;
  if (!(p.y < top)) return WallReach::AboveAnchors;
  const double lo = std::min(g.anchors[0].x, g.anchors[1].x) + g.workspace_margin;
  const double hi = std::max(g.anchors[0].x, g.anchors[1].x) - g.workspace_margin;
  if (p.x < lo || p.x > hi) return WallReach::OutsideLateral;
  return WallReach::Reachable;
}

inline std::array<double, 2> wire2d_ik(Vec2 p, const WireGeometry2D& g) {
  switch (wall_reach(p, g)) {
    case WallReach::AboveAnchors:
      throw KinematicsError(ErrorKind::Unreachable, "point not below the anchors by the margin");
    case WallReach::OutsideLateral:
      throw KinematicsError(ErrorKind::Unreachable, "point outside the lateral reach of the wires");
    case WallReach::Reachable:
      break;
  }
  return {distance(p, g.anchors[0]), distance(p, g.anchors[1])};
}

// Two-circle intersection, returning the root below the anchor line.
inline Vec2 wire2d_fk(std::array<double, 2> lengths, const WireGeometry2D& g) {
  const auto [l1, l2] = lengths;
  if (!(l1 > 0.0) || !(l2 > 0.0)) throw KinematicsError(ErrorKind::NoIntersection, "wire lengths must be > 0");
  const Vec2 a1 = g.anchors[0];
  const Vec2 axis = g.anchors[1] - a1;
  const double d = norm(axis);
  if (l1 + l2 < d - kIntersectionSlack || std::abs(l1 - l2) > d + kIntersectionSlack) {
    throw KinematicsError(ErrorKind::NoIntersection, "wire circles do not intersect");
  }
  const Vec2 ex = axis * (1.0 / d);
  Vec2 down{-ex.y, ex.x};
  if (down.y > 0.0 || (down.y == 0.0 && down.x > 0.0)) down = down * -1.0;
  const double along = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d);
  const double h2 = l1 * l1 - along * along;
  const double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
  if (h <= kIntersectionSlack) {
    throw KinematicsError(ErrorKind::Unreachable, "wire tangency puts the tool on the anchor line");
  }
  return a1 + ex * along + down * h;
}

// ---------------------------------------------------------------------------
// Three-wire positioner.

enum class WorkingSide { Below, Above };

struct WireGeometry3D {
  std::array<Vec3, 3> anchors{Vec3{0.0, 0.0, 500.0}, Vec3{400.0, 0.0, 500.0}, Vec3{200.0, 350.0, 500.0}};
  double spool_radius = 10.0;
  double workspace_margin = 10.0;
  WorkingSide side = WorkingSide::Below;
  Box3 bounds{{-kInf, -kInf, -kInf}, {kInf, kInf, kInf}};

  double anchor_area() const {
    return 0.5 * norm(cross(anchors[1] - anchors[0], anchors[2] - anchors[0]));
  }

  // Unit normal of the anchor plane pointing into the working half-space.
  Vec3 working_normal() const {
    Vec3 n = cross(anchors[1] - anchors[0], anchors[2] - anchors[0]);
    n = n * (1.0 / norm(n));
    const bool up = n.z > 0.0;
    const bool want_up = side == WorkingSide::Above;
    return up == want_up ? n : n * -1.0;
  }

  void validate() const {
    if (!(anchor_area() >= kMinAnchorArea)) {
      throw KinematicsError(ErrorKind::IllConditioned, "anchor triangle area below 1 mm^2");
    }
    if (!(spool_radius > 0.0)) throw KinematicsError(ErrorKind::InvalidGeometry, "spool_radius must be > 0");
    if (workspace_margin < 0.0) throw KinematicsError(ErrorKind::InvalidGeometry, "workspace_margin must be >= 0");
  }
};

// Signed distance of p from the anchor plane, positive on the working side.
inline double working_depth(Vec3 p, const WireGeometry3D& g) {
  return dot(p - g.anchors[0], g.working_normal());
}

inline std::array<double, 3> wire3d_ik(Vec3 p, const WireGeometry3D& g) {
  if (!(working_depth(p, g) > g.workspace_margin)) {
    throw KinematicsError(ErrorKind::Unreachable, "point not on the working side of the anchor plane by the margin");
  }
  if (!g.bounds.contains(p)) throw KinematicsError(ErrorKind::Unreachable, "point outside the workspace box");
  return {distance(p, g.anchors[0]), distance(p, g.anchors[1]), distance(p, g.anchors[2])};
}

namespace detail {

inline double det3(const std::array<Vec3, 3>& r) { return dot(r[0], cross(r[1], r[2])); }

// Solves rows * x = b by Cramer's rule; returns false when singular.
inline bool solve3(const std::array<Vec3, 3>& rows, Vec3 b, Vec3& x) {
  const double det = det3(rows);
  if (!(std::abs(det) > 1e-12)) return false;
  const Vec3 c0{rows[0].x, rows[1].x, rows[2].x};
  const Vec3 c1{rows[0].y, rows[1].y, rows[2].y};
  const Vec3 c2{rows[0].z, rows[1].z, rows[2].z};
  auto col_det = [](Vec3 a, Vec3 bb, Vec3 c) { return dot(a, cross(bb, c)); };
  x = {col_det(b, c1, c2) / det, col_det(c0, b, c2) / det, col_det(c0, c1, b) / det};
  return true;
}

}  // namespace detail

// Trilateration. Solves in a frame with anchor 1 at the origin, anchor 2 on
// +x and anchor 3 in the xy-plane, picks the root on the working side, then
// applies one Gauss-Newton step on the residuals |p - A_i| - L_i.
inline Vec3 wire3d_fk(std::array<double, 3> lengths, const WireGeometry3D& g) {
  if (!(g.anchor_area() >= kMinAnchorArea)) {
    throw KinematicsError(ErrorKind::IllConditioned, "anchor triangle area below 1 mm^2");
  }
  const auto& a = g.anchors;
  const Vec3 a12 = a[1] - a[0];
  const Vec3 a13 = a[2] - a[0];
  const double d = norm(a12);
  const Vec3 ex = a12 * (1.0 / d);
  const double i = dot(ex, a13);
  const Vec3 ey_raw = a13 - ex * i;
  const double j = norm(ey_raw);
  const Vec3 ey = ey_raw * (1.0 / j);
  const Vec3 ez = cross(ex, ey);

  const auto [l1, l2, l3] = lengths;
  const double x = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d);
  const double y = (l1 * l1 - l3 * l3 + i * i + j * j) / (2.0 * j) - (i / j) * x;
  const double z2 = l1 * l1 - x * x - y * y;
  if (z2 < -kIntersectionSlack) throw KinematicsError(ErrorKind::NoIntersection, "spheres do not intersect");
  const double z = z2 > 0.0 ? std::sqrt(z2) : 0.0;
  const double sign = dot(ez, g.working_normal()) >= 0.0 ? 1.0 : -1.0;
  Vec3 p = a[0] + ex * x + ey * y + ez * (sign * z);

  std::array<Vec3, 3> jac;
  Vec3 residual;
  double* r[3] = {&residual.x, &residual.y, &residual.z};
  for (std::size_t k = 0; k < 3; ++k) {
    const Vec3 diff = p - a[k];
    const double len = norm(diff);
    if (!(len > 0.0)) return p;
    jac[k] = diff * (1.0 / len);
    *r[k] = lengths[k] - len;
  }
  Vec3 step;
  if (detail::solve3(jac, residual, step)) p = p + step;
  return p;
}

// ---------------------------------------------------------------------------
// Rotary conversions.

struct LeadScrew {
  double pitch = 8.0;  // mm per revolution
  int direction = 1;   // +1 or -1
  double z_min = 0.0;
  double z_max = 100.0;

  void validate() const {
    if (!(pitch > 0.0)) throw KinematicsError(ErrorKind::InvalidGeometry, "pitch must be > 0");
    if (direction != 1 && direction != -1) throw KinematicsError(ErrorKind::InvalidGeometry, "direction must be +1 or -1");
    if (!(z_min < z_max)) throw KinematicsError(ErrorKind::InvalidGeometry, "z_min < z_max");
  }
};

// Spool rotation for a change in wire length. Positive rotation pays out.
inline double spool_delta(double delta_length, double spool_radius) { return delta_length / spool_radius; }

inline double leadscrew_delta(double delta_z, const LeadScrew& s) {
  return s.direction * 2.0 * std::numbers::pi * delta_z / s.pitch;
}

// Inverse of leadscrew_delta.
inline double leadscrew_travel(double delta_theta, const LeadScrew& s) {
  return s.direction * s.pitch * delta_theta / (2.0 * std::numbers::pi);
}

}  // namespace swarmfab::kinematics
