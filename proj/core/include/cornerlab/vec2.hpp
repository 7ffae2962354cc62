#pragma once

#include <cmath>

namespace cornerlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
inline Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

// > 0 when (a,b,c) make a left turn
inline double orient(Vec2 a, Vec2 b, Vec2 c) {
    return cross(b - a, c - a);
}

// angle of v in [0, 2*pi)
inline double angle_of(Vec2 v) {
    double a = std::atan2(v.y, v.x);
    if (a < 0.0) a += 2.0 * M_PI;
    return a;
}

inline Vec2 unit(Vec2 v) {
    double n = norm(v);
    return {v.x / n, v.y / n};
}

inline Vec2 rotate(Vec2 v, double phi) {
    double c = std::cos(phi), s = std::sin(phi);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace cornerlab
