#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvx/core/error.hpp"
#include "dvx/core/rng.hpp"
#include "dvx/geom/box.hpp"
#include "dvx/sim/scene.hpp"
#include "dvx/sim/scene_io.hpp"
#include "dvx/sim/sensor.hpp"

using namespace dvx;
using namespace dvx::geom;
using namespace dvx::sim;
namespace fs = std::filesystem;

namespace {

std::pair<SensorModel, SensorModel> sensors() { return {default_vehicle_sensor(), default_infra_sensor()}; }

Box3D grown(Box3D b, double m) {
    b.l += 2 * m;
    b.w += 2 * m;
    b.h += 2 * m;
    return b;
}

std::size_t count_in(const PointCloud& sensor_cloud, const PoseSE3& pose, const Box3D& world_box) {
    return points_in_box(transform_points(sensor_cloud, pose), grown(world_box, 0.01)).size();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("generate_scene: empty scene has only ground returns") {
    SceneSpec spec;
    spec.num_objects = 0;
    const ScenePair p = generate_scene(spec, sensors(), 11);
    CHECK(p.gt_boxes.empty());
    CHECK(!p.vehicle.cloud.empty());
    for (const auto* f : {&p.vehicle, &p.infra}) {
        for (const auto& pt : transform_points(f->cloud, f->pose)) CHECK(std::abs(pt.z) < 0.2);
    }
}

TEST_CASE("generate_scene: deterministic") {
    SceneSpec spec;
    const ScenePair a = generate_scene(spec, sensors(), 99, 3);
    const ScenePair b = generate_scene(spec, sensors(), 99, 3);
    CHECK(a.vehicle.cloud == b.vehicle.cloud);
    CHECK(a.infra.cloud == b.infra.cloud);
    CHECK(a.gt_boxes == b.gt_boxes);
    CHECK(a.infra.reported_pose.matrix() == b.infra.reported_pose.matrix());
    const ScenePair c = generate_scene(spec, sensors(), 100, 3);
    CHECK(!(a.vehicle.cloud == c.vehicle.cloud));
}

TEST_CASE("render_scene: a box in another box's shadow gets no points") {
    // infrastructure at the origin looking along +x; a tall wall hides the small box behind it,
    // the vehicle looks at the small box from the far side.
    const Box3D wall{10.0, 0.0, 3.0, 6.0, 10.0, 2.0, 0.0};
    const Box3D hidden{20.0, 0.0, 0.75, 1.5, 2.0, 2.0, 0.0};
    const PoseSE3 infra = PoseSE3::from_yaw(0.0, {0.0, 0.0, 1.0});
    const PoseSE3 vehicle = PoseSE3::from_yaw(3.141592653589793, {35.0, 0.0, 1.8});
    SceneSpec spec;
    const ScenePair p = render_scene({wall, hidden}, vehicle, infra, spec, sensors(), 5, true);
    CHECK(count_in(p.infra.cloud, p.infra.pose, hidden) == 0);
    CHECK(count_in(p.infra.cloud, p.infra.pose, wall) > 0);
    CHECK(count_in(p.vehicle.cloud, p.vehicle.pose, hidden) > 0);
}

TEST_CASE("inject_pose_noise: zero, deterministic, statistics") {
    const PoseSE3 base = PoseSE3::from_yaw(0.4, {3.0, -2.0, 5.0});
    CHECK(inject_pose_noise(base, 0.0, 0.0, 1).matrix() == base.matrix());
    CHECK(inject_pose_noise(base, 0.5, 0.1, 7).matrix() == inject_pose_noise(base, 0.5, 0.1, 7).matrix());

    const int n = 10000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dx = inject_pose_noise(base, 0.5, 0.0, derive_seed(3, "stat", k)).translation().x() - 3.0;
        s += dx;
        s2 += dx * dx;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(sd - 0.5) < 0.05 * 0.5);
}

TEST_CASE("fuse_early: concatenation and shared surface") {
    SceneSpec spec;
    ScenePair p = generate_scene(spec, sensors(), 21);
    const auto fused = fuse_early(p, false);
    CHECK(fused.size() == p.vehicle.cloud.size() + p.infra.cloud.size());

    ScenePair no_infra = p;
    no_infra.infra.cloud.clear();
    CHECK(fuse_early(no_infra, false) == p.vehicle.cloud);

    // infrastructure returns off a box land inside that box in the vehicle frame (true pose)
    const Box3D box{15.0, 4.0, 0.8, 1.6, 1.8, 4.2, 0.3};
    const PoseSE3 vehicle = PoseSE3::identity();
    const PoseSE3 infra = PoseSE3::from_yaw(-1.2, {10.0, 25.0, 5.0});
    const ScenePair q = render_scene({box}, vehicle, infra, spec, sensors(), 8, true);
    const PoseSE3 to_v = q.infra_to_vehicle(false);
    const auto world = transform_points(q.infra.cloud, q.infra.pose);
    std::size_t on_box = 0, inside = 0;
    const auto in_v = transform_points(q.infra.cloud, to_v);
    for (std::size_t k = 0; k < world.size(); ++k) {
        if (world[k].z > 0.05) {
            ++on_box;
            inside += point_in_box(in_v[k], grown(q.gt_boxes[0], 1e-6));
        }
    }
    CHECK(on_box > 0);
    CHECK(inside == on_box);
}

TEST_CASE("scene io: round trip and byte-identical rewrite") {
    const fs::path dir = fs::temp_directory_path() / "dvx_test_sim_io";
    fs::remove_all(dir);
    SceneSpec spec;
    const ScenePair p = generate_scene(spec, sensors(), 31, 4);
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    const std::string manifest = write_scene(dir / "a", p);
    write_scene(dir / "b", p);
    for (const auto& f : fs::directory_iterator(dir / "a")) {
        CHECK(slurp(f.path()) == slurp(dir / "b" / f.path().filename()));
    }
    const ScenePair back = read_scene(dir / "a" / manifest);
    CHECK(back.vehicle.cloud == quantize_points(p.vehicle.cloud));
    CHECK(back.infra.cloud == quantize_points(p.infra.cloud));
    CHECK(back.gt_boxes.size() == p.gt_boxes.size());
    CHECK(back.scene_id == 4);
    fs::remove_all(dir);
}

TEST_CASE("points file: corrupted input is a data error") {
    const fs::path f = fs::temp_directory_path() / "dvx_bad_points.bin";
    std::ofstream(f, std::ios::binary) << "DVPC";
    CHECK_THROWS_AS(read_points(f), Error);
    fs::remove(f);
}

TEST_CASE("assign_splits: exact 80/20 counts") {
    for (std::size_t n : {0u, 1u, 10u, 250u}) {
        std::vector<std::uint64_t> ids(n);
        for (std::size_t k = 0; k < n; ++k) ids[k] = k;
        const auto s = assign_splits(ids, 42);
        std::size_t val = 0;
        for (auto x : s) val += x == Split::Val;
        CHECK(val == n / 5);
    }
}
