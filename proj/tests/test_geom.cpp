#include <doctest.h>

#include <cmath>
#include <random>

#include "dvx/geom/box.hpp"
#include "dvx/geom/grid.hpp"
#include "dvx/geom/polygon.hpp"
#include "dvx/geom/pose.hpp"
#include "support/oracles.hpp"

using namespace dvx;
using namespace dvx::geom;

namespace {

constexpr double kPi = 3.141592653589793;

ConvexPolygon unit_square(double cx = 0.0, double cy = 0.0, double yaw = 0.0) {
    return OrientedRect{{cx, cy}, {0.5, 0.5}, yaw}.polygon();
}

PoseSE3 random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> a(-kPi, kPi), t(-10.0, 10.0);
    return PoseSE3::from_ypr(a(rng), 0.3 * a(rng) / kPi, 0.3 * a(rng) / kPi, {t(rng), t(rng), t(rng)});
}

}  // namespace

TEST_CASE("pose: rotation stays orthonormal") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        const PoseSE3 p = compose(random_pose(rng), random_pose(rng));
        const Eigen::Matrix3d e = p.rotation().transpose() * p.rotation() - Eigen::Matrix3d::Identity();
        CHECK(e.cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(p.rotation().determinant() - 1.0) < 1e-9);
    }
}

TEST_CASE("transform_points: identity, translation, quarter turn") {
    const PointCloud cloud{{1.0, -2.0, 0.5, 0.3}, {0.0, 0.0, 0.0, 0.5}};
    CHECK(transform_points(cloud, PoseSE3::identity()) == cloud);

    const auto moved = transform_points({{0.0, 0.0, 0.0, 0.5}}, PoseSE3(Eigen::Matrix3d::Identity(), {1, 2, 3}));
    CHECK(moved[0] == Point{1.0, 2.0, 3.0, 0.5});

    const auto turned = transform_points({{1.0, 0.0, 0.0, 0.0}}, PoseSE3::from_yaw(kPi / 2, Eigen::Vector3d::Zero()));
    CHECK(std::abs(turned[0].x) < 1e-12);
    CHECK(std::abs(turned[0].y - 1.0) < 1e-12);
    CHECK(std::abs(turned[0].z) < 1e-12);
}

TEST_CASE("compose / invert group laws") {
    CHECK(approx_equal(invert(PoseSE3::identity()), PoseSE3::identity(), 0.0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int k = 0; k < 50; ++k) {
        const PoseSE3 t = random_pose(rng);
        CHECK(approx_equal(compose(t, invert(t)), PoseSE3::identity(), 1e-9));
        CHECK(approx_equal(compose(invert(t), t), PoseSE3::identity(), 1e-9));

        PointCloud cloud(20);
        for (auto& p : cloud) p = {u(rng), u(rng), u(rng), 0.1};
        const auto back = transform_points(transform_points(cloud, t), invert(t));
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            CHECK(std::abs(back[i].x - cloud[i].x) < 1e-9);
            CHECK(std::abs(back[i].y - cloud[i].y) < 1e-9);
            CHECK(std::abs(back[i].z - cloud[i].z) < 1e-9);
            CHECK(back[i].intensity == cloud[i].intensity);
        }
    }
}

TEST_CASE("polygon_intersection: hand cases") {
    const auto sq = unit_square();
    CHECK(polygon_intersection(sq, sq).area() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(polygon_intersection(sq, unit_square(0.5, 0.0)).area() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(polygon_intersection(sq, unit_square(3.0, 0.0)).empty());
    // regular octagon: 2 (sqrt 2 - 1)
    CHECK(polygon_intersection(sq, unit_square(0, 0, kPi / 4)).area() == doctest::Approx(0.828427).epsilon(1e-5));
}

TEST_CASE("polygon_intersection: octagon against Monte-Carlo oracle") {
    const auto a = unit_square(), b = unit_square(0, 0, kPi / 4);
    const auto mc = oracle::mc_intersection_area(a.vertices, b.vertices, 1000000, 7);
    const double area = polygon_intersection(a, b).area();
    CHECK(std::abs(area - mc.value) < 3.0 * mc.sigma);
}

TEST_CASE("polygon_intersection: bounded by operands and symmetric") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> c(-2, 2), e(0.1, 2), y(-kPi, kPi);
    for (int k = 0; k < 200; ++k) {
        const auto a = OrientedRect{{c(rng), c(rng)}, {e(rng), e(rng)}, y(rng)}.polygon();
        const auto b = OrientedRect{{c(rng), c(rng)}, {e(rng), e(rng)}, y(rng)}.polygon();
        const double ab = polygon_intersection(a, b).area();
        const double ba = polygon_intersection(b, a).area();
        CHECK(ab <= std::min(a.area(), b.area()) + 1e-9);
        CHECK(std::abs(ab - ba) < 1e-9);
    }
}

TEST_CASE("rotated_iou: hand cases and grid-sampling oracle") {
    const Box3D a{0, 0, 0, 1, 1, 1, 0};
    CHECK(rotated_iou(a, a) == doctest::Approx(1.0));
    Box3D b = a;
    b.x = 0.5;
    CHECK(rotated_iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    Box3D r = a;
    r.yaw = kPi / 4;
    const double iou = rotated_iou(a, r);
    CHECK(iou == doctest::Approx(0.7071).epsilon(1e-3));
    CHECK(std::abs(iou - oracle::grid_iou(a, r, 1000)) < 0.01);

    Box3D degenerate = a;
    degenerate.w = 1e-7;
    CHECK(rotated_iou(a, degenerate) == 0.0);
}

TEST_CASE("rotated_iou: symmetric and rigid-motion invariant") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> c(-3, 3), e(0.5, 4), y(-kPi, kPi);
    for (int k = 0; k < 100; ++k) {
        const Box3D a{c(rng), c(rng), 0, 1, e(rng), e(rng), y(rng)};
        const Box3D b{c(rng), c(rng), 0, 1, e(rng), e(rng), y(rng)};
        CHECK(std::abs(rotated_iou(a, b) - rotated_iou(b, a)) < 1e-9);
        const PoseSE3 m = PoseSE3::from_yaw(y(rng), {c(rng), c(rng), 0.0});
        CHECK(std::abs(rotated_iou(transform_box(a, m), transform_box(b, m)) - rotated_iou(a, b)) < 1e-9);
    }
}

TEST_CASE("rasterize_mask: full, empty, half plane, monotone") {
    const GridSpec g = GridSpec::make(-4, 4, -2, 2, 0.5, 0.5);
    CHECK(rasterize_mask(OrientedRect{{0, 0}, {10, 10}, 0.3}.polygon(), g).all());
    CHECK(rasterize_mask(ConvexPolygon{}, g).none());

    // left half in y
    const auto half = rasterize_mask(OrientedRect{{0, -5}, {10, 5}, 0}.polygon(), g);
    CHECK(half.popcount() == g.cells() / 2);
    for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) {
            const auto c = g.cell_center(i, j);
            CHECK(half.at(i, j) == (c.y() < 0.0));
        }

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3, 3), e(0.2, 3), y(-kPi, kPi);
    for (int k = 0; k < 50; ++k) {
        const OrientedRect big{{u(rng), u(rng)}, {e(rng) + 0.5, e(rng) + 0.5}, y(rng)};
        OrientedRect small = big;
        small.half_extents *= 0.6;
        CHECK(rasterize_mask(small.polygon(), g).subset_of(rasterize_mask(big.polygon(), g)));
    }
}

TEST_CASE("rasterize_mask: intersection equals AND") {
    const GridSpec g = GridSpec::make(-10, 10, -6, 6, 0.4, 0.4);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-6, 6), e(1, 8), y(-kPi, kPi);
    for (int k = 0; k < 100; ++k) {
        const auto a = OrientedRect{{u(rng), u(rng)}, {e(rng), e(rng)}, y(rng)}.polygon();
        const auto b = OrientedRect{{u(rng), u(rng)}, {e(rng), e(rng)}, y(rng)}.polygon();
        CHECK(rasterize_mask(polygon_intersection(a, b), g) == (rasterize_mask(a, g) & rasterize_mask(b, g)));
    }
}

TEST_CASE("nms: duplicates, disjoint, brute force") {
    const Box3D a{0, 0, 0, 1, 2, 4, 0};
    std::vector<Box3D> dup{a, a};
    std::vector<double> s{0.9, 0.8};
    CHECK(nms(dup, s, 0.5) == std::vector<std::size_t>{0});
    Box3D far = a;
    far.x = 50;
    std::vector<Box3D> two{a, far};
    CHECK(nms(two, s, 0.5).size() == 2);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> c(-2, 2), e(1, 3), y(-kPi, kPi), sc(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Box3D> boxes;
        std::vector<double> scores;
        for (int k = 0; k < 5; ++k) {
            boxes.push_back({c(rng), c(rng), 0, 1, e(rng), e(rng), y(rng)});
            scores.push_back(trial % 4 == 0 ? 0.5 : sc(rng));  // every fourth trial: all tied
        }
        const auto kept = nms(boxes, scores, 0.3);
        CHECK(kept == oracle::brute_nms(boxes, scores, 0.3, [](const Box3D& x, const Box3D& y2) { return rotated_iou(x, y2); }));
        for (std::size_t i = 0; i < kept.size(); ++i)
            for (std::size_t j = i + 1; j < kept.size(); ++j) CHECK(rotated_iou(boxes[kept[i]], boxes[kept[j]]) < 0.3);
    }
}

TEST_CASE("points_in_box: hand cases and membership oracle") {
    const Box3D b{1.0, -1.0, 0.5, 1.5, 2.0, 4.0, 0.7};
    CHECK(points_in_box({{1.0, -1.0, 0.5, 0}}, b).size() == 1);
    const Point far{1.0 + 2 * 4.0 * std::cos(0.7), -1.0 + 2 * 4.0 * std::sin(0.7), 0.5, 0};
    CHECK(points_in_box({far}, b).empty());

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-4, 4), z(-1, 2);
    PointCloud cloud(1000);
    for (auto& p : cloud) p = {u(rng), u(rng), z(rng), 0};
    std::size_t expect = 0;
    for (const auto& p : cloud) {
        const double dx = p.x - b.x, dy = p.y - b.y;
        const double lx = std::cos(b.yaw) * dx + std::sin(b.yaw) * dy;
        const double ly = -std::sin(b.yaw) * dx + std::cos(b.yaw) * dy;
        expect += std::abs(lx) <= b.l / 2 && std::abs(ly) <= b.w / 2 && std::abs(p.z - b.z) <= b.h / 2;
    }
    CHECK(points_in_box(cloud, b).size() == expect);
    CHECK(expect > 50);
}
