#pragma once

#include <cmath>

namespace hproj {

// Chart-coordinate 2-vector. Used both for points of the plane and for
// tangent-vector components; the metric decides what the norm means.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
    friend Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.y / s}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2& operator+=(Vec2 v) { x += v.x; y += v.y; return *this; }
    Vec2& operator-=(Vec2 v) { x -= v.x; y -= v.y; return *this; }

    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }

// Counter-clockwise quarter turn (chart coordinates).
inline Vec2 rot90(Vec2 v) { return {-v.y, v.x}; }

inline bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a == kTwoPi) a = 0.0;
    return a;
}

// Reduce an angle to (-pi/2, pi/2] and report whether a half turn was removed.
// Lines are unoriented; theta and theta+pi parametrize the same line with
// opposite orientation.
inline double canonical_direction(double theta, bool* flipped) {
    double a = wrap_angle(theta + kPi / 2.0);  // now in [0, 2*pi), target (0, pi]
    bool flip = false;
    if (a > kPi || a == 0.0) {
        a = wrap_angle(a - kPi);
        flip = true;
    }
    if (flipped) *flipped = flip;
    return a - kPi / 2.0;
}

}  // namespace hproj
