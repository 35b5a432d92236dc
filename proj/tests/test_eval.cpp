#include <doctest.h>

#include <cmath>
#include <random>

#include "dvx/eval/ablation.hpp"
#include "dvx/eval/metrics.hpp"
#include "dvx/eval/runner.hpp"
#include "dvx/model/network.hpp"

using namespace dvx;
using namespace dvx::eval;
using geom::Box3D;

namespace {

Box3D car(double x, double y, double yaw = 0.0) { return {x, y, -0.8, 1.6, 1.9, 4.2, yaw}; }

std::vector<sim::ScenePair> scenes(int n, std::uint64_t seed) {
    std::vector<sim::ScenePair> out;
    for (int k = 0; k < n; ++k) {
        out.push_back(sim::generate_scene(sim::SceneSpec{}, {sim::default_vehicle_sensor(), sim::default_infra_sensor()},
                                          seed + k, k));
    }
    return out;
}

model::ModelConfig small(model::FusionKind f) {
    model::ModelConfig m;
    m.channels = 8;
    m.fusion = f;
    m.init_seed = 5;
    return m;
}

// Untrained detectors fire almost nowhere; bias the class logit so some boxes come out.
void bias_class(model::Detector<float>& net, float b) {
    net.params().get("head.cls.b").mutable_data()[0] = b;
}

void check_same(const ModeResult& a, const ModeResult& b) {
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t k = 0; k < a.results.size(); ++k) {
        CHECK(a.results[k].ap == b.results[k].ap);
        CHECK(a.results[k].num_det == b.results[k].num_det);
        CHECK(a.results[k].num_tp == b.results[k].num_tp);
    }
}

}  // namespace

TEST_CASE("average_precision: perfect, empty, hand-enumerated PR curve") {
    const std::vector<std::vector<Box3D>> gts{{car(0, 0), car(10, 5)}};
    const std::vector<std::vector<Detection>> exact{{{car(0, 0), 1.0}, {car(10, 5), 1.0}}};
    CHECK(*average_precision(exact, gts, 0.5).ap == doctest::Approx(1.0));

    const std::vector<std::vector<Detection>> none{{}};
    CHECK(*average_precision(none, gts, 0.5).ap == 0.0);

    // TP, FP, TP: precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1
    const std::vector<std::vector<Detection>> three{{{car(0, 0), 0.9}, {car(30, -5), 0.8}, {car(10, 5), 0.7}}};
    const ApResult r = average_precision(three, gts, 0.5);
    CHECK(*r.ap == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(r.num_tp == 2);
    CHECK(r.num_det == 3);
    CHECK(r.num_gt == 2);

    const std::vector<std::vector<Box3D>> no_gt{{}};
    CHECK(!average_precision(three, no_gt, 0.5).ap.has_value());
}

TEST_CASE("average_precision: duplicates are false positives, threshold matters") {
    const std::vector<std::vector<Box3D>> gts{{car(0, 0)}};
    const std::vector<std::vector<Detection>> dup{{{car(0, 0), 0.9}, {car(0.1, 0), 0.8}}};
    const ApResult r = average_precision(dup, gts, 0.5);
    CHECK(r.num_tp == 1);
    CHECK(*r.ap == doctest::Approx(1.0));
    // IoU 3.2 / 5.2
    const std::vector<std::vector<Detection>> shifted{{{car(1.0, 0), 0.9}}};
    CHECK(*average_precision(shifted, gts, 0.5).ap == doctest::Approx(1.0));
    CHECK(*average_precision(shifted, gts, 0.7).ap == 0.0);
}

TEST_CASE("average_precision: in [0,1] and rank-only") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-20, 20), s(0.01, 1.0), y(-3, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<Box3D>> gts(3);
        std::vector<std::vector<Detection>> dets(3), rescaled(3);
        for (int sc = 0; sc < 3; ++sc) {
            for (int k = 0; k < 5; ++k) gts[sc].push_back(car(u(rng), u(rng), y(rng)));
            for (int k = 0; k < 6; ++k) {
                const Box3D b = k < 4 ? gts[sc][k] : car(u(rng), u(rng), y(rng));
                Box3D jit = b;
                jit.x += 0.3 * s(rng);
                const double score = s(rng);
                dets[sc].push_back({jit, score});
                rescaled[sc].push_back({jit, 3.0 * std::pow(score, 2.0) + 1.0});
            }
        }
        for (double thr : {0.5, 0.7}) {
            const auto a = average_precision(dets, gts, thr);
            const auto b = average_precision(rescaled, gts, thr);
            CHECK(*a.ap >= 0.0);
            CHECK(*a.ap <= 1.0);
            CHECK(*a.ap == doctest::Approx(*b.ap).epsilon(1e-12));
        }
    }
}

TEST_CASE("modes: names, parsing, missing models") {
    for (const Mode m : all_modes()) CHECK(parse_mode(mode_name(m)) == m);
    CHECK_THROWS_AS(parse_mode("mid_fusion"), Error);
    const auto s = scenes(1, 5);
    CHECK(!run_mode(Mode::Early, ModelSet{}, s, EvalConfig{}).has_value());
}

TEST_CASE("modes: degenerate inputs reduce to the single-agent result") {
    auto s = scenes(3, 10);
    for (auto& p : s) p.infra.cloud.clear();
    model::Detector<float> single(small(model::FusionKind::None));
    bias_class(single, 1.0f);
    ModelSet models;
    models.single = &single;
    models.early = &single;
    EvalConfig cfg;
    const auto base = *run_mode(Mode::NoFusion, models, s, cfg);
    CHECK(base.results[0].num_det > 0);
    check_same(*run_mode(Mode::Late, models, s, cfg), base);
    check_same(*run_mode(Mode::Early, models, s, cfg), base);
}

TEST_CASE("modes: noise only touches the reported pose and is seeded") {
    const auto s = scenes(2, 20);
    NoiseConfig n{0.5, 0.03, 9};
    const auto a = apply_noise(s, n), b = apply_noise(s, n);
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(a[k].infra.pose.matrix() == s[k].infra.pose.matrix());
        CHECK(a[k].infra.reported_pose.matrix() == b[k].infra.reported_pose.matrix());
        CHECK(a[k].infra.reported_pose.matrix() != s[k].infra.reported_pose.matrix());
        CHECK(eval_ground_truth(a[k]).size() == eval_ground_truth(s[k]).size());
    }
}

TEST_CASE("generalization and ablation rows agree with run_mode") {
    const auto s = scenes(2, 30);
    model::Detector<float> daf(small(model::FusionKind::Daf));
    model::Detector<float> sum(small(model::FusionKind::Sum));
    bias_class(daf, 1.0f);
    bias_class(sum, 1.0f);
    ModelSet models;
    models.student = &daf;
    models.sum_student = &sum;
    EvalConfig cfg;

    const auto rows = run_generalization(models, s, cfg);
    const auto both = *run_mode(Mode::Div2xStudent, models, s, cfg);
    REQUIRE(rows.size() == cfg.iou_thresholds.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].both == both.results[k].ap);
        REQUIRE(rows[k].vehicle_only.has_value());
        REQUIRE(rows[k].infra_only.has_value());
        CHECK(*rows[k].average ==
              doctest::Approx((*rows[k].vehicle_only + *rows[k].infra_only + *rows[k].both) / 3.0).epsilon(1e-12));
    }

    const auto settings = ablation_settings();
    CHECK(settings.size() == 6);
    const auto ab = run_ablation(
        s,
        [&](const AblationSetting& st) -> const model::Detector<float>& {
            if (!st.dma && !st.pdd && !st.daf) return sum;
            return daf;
        },
        cfg);
    check_same(ab.front().result, *run_mode(Mode::IntermediateSum, models, s, cfg));
    check_same(ab.back().result, both);
}
