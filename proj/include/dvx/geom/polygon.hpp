#pragma once

#include <vector>

#include <Eigen/Core>

namespace dvx::geom {

using Vec2 = Eigen::Vector2d;

/// Convex polygon with counter-clockwise vertices. An empty vertex list is the
/// "no intersection" sentinel.
struct ConvexPolygon {
    std::vector<Vec2> vertices;

    bool empty() const { return vertices.size() < 3; }
    double area() const;
    /// Point membership; points within `eps` of the boundary count as inside.
    bool contains(const Vec2& p, double eps = 1e-9) const;
    /// Checks CCW convexity and the no-duplicate-vertex rule.
    bool valid(double eps = 1e-9) const;
};

/// Rectangle given by center, half extents along its own axes, and heading.
struct OrientedRect {
    Vec2 center = Vec2::Zero();
    Vec2 half_extents = Vec2::Ones();
    double yaw = 0.0;

    ConvexPolygon polygon() const;
};

/// Sutherland-Hodgman clip of `a` against `b`. Returns the empty polygon when the inputs are
/// disjoint, touch only along an edge or vertex, or either one has fewer than three vertices.
ConvexPolygon polygon_intersection(const ConvexPolygon& a, const ConvexPolygon& b);

double cross2(const Vec2& a, const Vec2& b);

}  // namespace dvx::geom
