#include "dvx/geom/polygon.hpp"

#include <cmath>

namespace dvx::geom {

namespace {

// vertices closer than this are merged
constexpr double kMergeEps = 1e-9;

std::vector<Vec2> merge_close(const std::vector<Vec2>& in) {
    std::vector<Vec2> out;
    out.reserve(in.size());
    for (const Vec2& v : in) {
        if (out.empty() || (v - out.back()).norm() > kMergeEps) {
            out.push_back(v);
        }
    }
    while (out.size() > 1 && (out.front() - out.back()).norm() <= kMergeEps) {
        out.pop_back();
    }
    return out;
}

}  // namespace

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double ConvexPolygon::area() const {
    if (empty()) {
        return 0.0;
    }
    double twice = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        twice += cross2(vertices[i], vertices[(i + 1) % n]);
    }
    return 0.5 * twice;
}

bool ConvexPolygon::contains(const Vec2& p, double eps) const {
    if (empty()) {
        return false;
    }
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        const Vec2 edge = b - a;
        const double len = edge.norm();
        // signed distance of p to the left of the edge
        if (cross2(edge, p - a) / len < -eps) {
            return false;
        }
    }
    return true;
}

bool ConvexPolygon::valid(double eps) const {
    if (empty()) {
        return false;
    }
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        const Vec2& c = vertices[(i + 2) % n];
        if ((b - a).norm() <= eps || cross2(b - a, c - b) < -eps) {
            return false;
        }
    }
    return true;
}

ConvexPolygon OrientedRect::polygon() const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const Vec2 ax(c * half_extents.x(), s * half_extents.x());
    const Vec2 ay(-s * half_extents.y(), c * half_extents.y());
    return {{center - ax - ay, center + ax - ay, center + ax + ay, center - ax + ay}};
}

ConvexPolygon polygon_intersection(const ConvexPolygon& a, const ConvexPolygon& b) {
    if (a.empty() || b.empty()) {
        return {};
    }
    std::vector<Vec2> subject = a.vertices;
    const std::size_t m = b.vertices.size();
    for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
        const Vec2& c0 = b.vertices[e];
        const Vec2& c1 = b.vertices[(e + 1) % m];
        const Vec2 edge = c1 - c0;
        auto side = [&](const Vec2& p) { return cross2(edge, p - c0); };

        std::vector<Vec2> clipped;
        clipped.reserve(subject.size() + 2);
        const std::size_t n = subject.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& cur = subject[i];
            const Vec2& prev = subject[(i + n - 1) % n];
            const double s_cur = side(cur);
            const double s_prev = side(prev);
            const bool in_cur = s_cur >= 0.0;
            const bool in_prev = s_prev >= 0.0;
            if (in_cur != in_prev) {
                const double t = s_prev / (s_prev - s_cur);
                clipped.push_back(prev + t * (cur - prev));
            }
            if (in_cur) {
                clipped.push_back(cur);
            }
        }
        subject = merge_close(clipped);
    }
    ConvexPolygon out{merge_close(subject)};
    if (out.empty() || out.area() <= 0.0) {
        return {};
    }
    return out;
}

}  // namespace dvx::geom
