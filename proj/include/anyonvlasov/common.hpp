#pragma once

// Shared small types: 2D vectors, phase-space points, the library error
// taxonomy, and the thread-count knob.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace anyv {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

using Complex = std::complex<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  // counterclockwise quarter turn, u -> u^perp = (-u_y, u_x)
  Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// A point of 2D x 2D phase space.
struct PhasePoint {
  Vec2 x;
  Vec2 p;
};

// Error taxonomy. InvalidInput marks caller-contract violations (bad sizes,
// out-of-range parameters, unmet preconditions); NumericFailure marks solver
// breakdowns at runtime (non-bracketing, budget exhaustion, clipped domains).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct NumericFailure : Error {
  using Error::Error;
};

// Worker count for the few data-parallel hot loops. Controlled exclusively by
// the ANYONVLASOV_THREADS environment variable; defaults to 1 (serial).
// Results are independent of the value: work is split into fixed-size chunks
// whose partial results are combined in a fixed order.
int thread_count();

}  // namespace anyv
