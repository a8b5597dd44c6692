#pragma once

#include <complex>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace thz {

using cd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    double n = norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return {x / n, y / n};
  }
};

inline Vec2 unit_from_bearing(double bearing) {
  return {std::cos(bearing), std::sin(bearing)};
}

inline double bearing_of(const Vec2& from, const Vec2& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Deterministic random stream shared by all modules.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Circularly symmetric complex Gaussian with total variance `power`.
inline cd complex_gaussian(Rng& rng, double power) {
  double s = std::sqrt(power / 2.0);
  return {s * gaussian(rng), s * gaussian(rng)};
}

inline cd unit_phasor(Rng& rng) {
  double ph = uniform(rng, 0.0, 2.0 * kPi);
  return {std::cos(ph), std::sin(ph)};
}

}  // namespace thz
