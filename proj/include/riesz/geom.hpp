#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace riesz {

// Points in R^d for d in {1,2}. The active dimension is carried by the
// owning object (KernelSpec, GridField, ...); the unused slot stays 0.
using Point = std::array<double, 2>;

inline Point point1(double x) { return {x, 0.0}; }
inline Point point2(double x, double y) { return {x, y}; }

inline Point add(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Point scale(const Point& a, double c) { return {c * a[0], c * a[1]}; }

inline double dot(const Point& a, const Point& b, int d) {
    double s = a[0] * b[0];
    if (d > 1) s += a[1] * b[1];
    return s;
}

inline double norm2(const Point& a, int d) { return dot(a, a, d); }
inline double norm(const Point& a, int d) { return std::sqrt(norm2(a, d)); }

inline double dist(const Point& a, const Point& b, int d) { return norm(sub(a, b), d); }

// Rotation by +pi/2, used by the 2D conservative flow term.
inline Point perp(const Point& a) { return {-a[1], a[0]}; }

// Minimal pairwise distance of a configuration; the quantity eta_N.
double min_pair_distance(const std::vector<Point>& pts, int d);

} // namespace riesz
