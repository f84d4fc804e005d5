#pragma once

#include <algorithm>
#include <cmath>

namespace crossflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline double distance2(const Vec2& a, const Vec2& b) { return (a - b).norm2(); }

/// Axis-aligned rectangle, min/max corners in meters.
struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }

    bool valid() const { return xmax > xmin && ymax > ymin; }

    /// Closed containment (boundary counts as inside).
    bool contains(const Vec2& p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }

    /// Half-open containment: left/bottom edges inclusive, right/top exclusive.
    bool contains_half_open(const Vec2& p) const {
        return p.x >= xmin && p.x < xmax && p.y >= ymin && p.y < ymax;
    }

    /// True if the rectangles overlap with positive area.
    bool intersects(const Rect& o) const {
        return xmin < o.xmax && o.xmin < xmax && ymin < o.ymax && o.ymin < ymax;
    }

    /// True if `o` lies fully inside this rectangle (boundaries may touch).
    bool contains_rect(const Rect& o) const {
        return o.xmin >= xmin && o.xmax <= xmax && o.ymin >= ymin && o.ymax <= ymax;
    }

    Rect translated(const Vec2& v) const {
        return {xmin + v.x, ymin + v.y, xmax + v.x, ymax + v.y};
    }

    bool operator==(const Rect& o) const {
        return xmin == o.xmin && ymin == o.ymin && xmax == o.xmax && ymax == o.ymax;
    }
};

/// Euclidean distance from a point to a rectangle (0 if inside).
inline double distance_to_rect(const Vec2& p, const Rect& r) {
    const double dx = std::max({r.xmin - p.x, 0.0, p.x - r.xmax});
    const double dy = std::max({r.ymin - p.y, 0.0, p.y - r.ymax});
    return std::sqrt(dx * dx + dy * dy);
}

/// Distance from an interior point to the boundary of a rectangle.
/// Negative if the point lies outside.
inline double distance_to_boundary(const Vec2& p, const Rect& r) {
    return std::min({p.x - r.xmin, r.xmax - p.x, p.y - r.ymin, r.ymax - p.y});
}

}  // namespace crossflow
