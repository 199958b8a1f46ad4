#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swarmfab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr Vec2 xy() const { return {x, y}; }
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

// Linear interpolation; returns b exactly at s == 1.
inline Vec3 lerp(Vec3 a, Vec3 b, double s) {
  if (s >= 1.0) return b;
  return a + (b - a) * s;
}

// Closed interval box, inclusive on both ends.
struct Box3 {
  Vec3 min;
  Vec3 max;

  bool contains(Vec3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
};

struct Box2 {
  Vec2 min;
  Vec2 max;

  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::atan2(std::sin(a), std::cos(a));
  if (w <= -std::numbers::pi) w = std::numbers::pi;
  return w;
}

inline double point_segment_distance(Vec3 p, Vec3 a, Vec3 b) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * s);
}

}  // namespace swarmfab
