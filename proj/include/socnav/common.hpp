#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace socnav {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) {
    a += 2.0 * kPi;
  } else if (a > kPi) {
    a -= 2.0 * kPi;
  }
  return a;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  bool operator==(const Vec2&) const = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  double angle() const { return std::atan2(y, x); }
};

inline Vec2 rotate(Vec2 v, double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians in (-pi, pi]

  Vec2 position() const { return {x, y}; }

  // Maps a point given in this pose's local frame into the parent frame.
  Vec2 transform(Vec2 local) const {
    Vec2 r = rotate(local, theta);
    return {x + r.x, y + r.y};
  }

  // Maps a parent-frame point into this pose's local frame.
  Vec2 inverse_transform(Vec2 world) const {
    return rotate(world - position(), -theta);
  }
};

// splitmix64 finalizer, used to derive independent seeds from (seed, index).
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded RNG. Scalar draws are implemented on top of the raw 64-bit stream
// so sequences do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const auto span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  double angle() { return uniform(-kPi, kPi); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace socnav
