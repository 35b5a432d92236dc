#include "dvx/eval/runner.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dvx/core/error.hpp"
#include "dvx/core/parallel.hpp"
#include "dvx/core/rng.hpp"
#include "dvx/distill/train.hpp"
#include "dvx/geom/pose.hpp"
#include "dvx/model/targets.hpp"
#include "dvx/nn/ops.hpp"

namespace dvx::eval {

namespace {

constexpr Mode kModes[] = {Mode::NoFusion, Mode::Early, Mode::Late, Mode::IntermediateSum, Mode::Div2xStudent,
                           Mode::Div2xTeacher};

const char* condition_name(InputCondition c) {
    switch (c) {
        case InputCondition::Both: return "both";
        case InputCondition::VehicleOnly: return "vehicle_only";
        case InputCondition::InfraOnly: return "infra_only";
    }
    return "?";
}

std::vector<Detection> detect_single(const model::Detector<float>& net, const PointCloud& cloud, const EvalConfig& cfg) {
    const auto out = net.head(net.encode_cloud(cloud));
    return model::decode_detections(out, net.config().feature_grid(), cfg.score_thr, cfg.nms_thr);
}

std::vector<Detection> detect_pair(const model::Detector<float>& net, const PointCloud& vehicle,
                                   const PointCloud& infra_in_vehicle, const EvalConfig& cfg) {
    const auto b_v = net.encode_cloud(vehicle);
    const auto b_i = net.encode_cloud(infra_in_vehicle);
    const auto out = net.head(net.fuse(b_v, b_i));
    return model::decode_detections(out, net.config().feature_grid(), cfg.score_thr, cfg.nms_thr);
}

}  // namespace

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::NoFusion: return "no_fusion";
        case Mode::Early: return "early";
        case Mode::Late: return "late";
        case Mode::IntermediateSum: return "intermediate_sum";
        case Mode::Div2xStudent: return "div2x_student";
        case Mode::Div2xTeacher: return "div2x_teacher";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    std::string valid;
    for (const Mode m : kModes) {
        if (s == mode_name(m)) {
            return m;
        }
        valid += std::string(valid.empty() ? "" : ", ") + mode_name(m);
    }
    fail(ErrorKind::Usage, "unknown mode '" + s + "' (valid: " + valid + ")");
}

std::vector<Mode> all_modes() { return {std::begin(kModes), std::end(kModes)}; }

const model::Detector<float>* ModelSet::for_mode(Mode m) const {
    switch (m) {
        case Mode::NoFusion:
        case Mode::Late: return single;
        case Mode::Early: return early;
        case Mode::IntermediateSum: return sum_student;
        case Mode::Div2xStudent: return student;
        case Mode::Div2xTeacher: return teacher;
    }
    return nullptr;
}

std::optional<double> ModeResult::ap_at(double iou) const {
    for (std::size_t k = 0; k < iou_thresholds.size(); ++k) {
        if (std::abs(iou_thresholds[k] - iou) < 1e-12) {
            return results[k].ap;
        }
    }
    return std::nullopt;
}

std::vector<sim::ScenePair> apply_noise(std::span<const sim::ScenePair> scenes, const NoiseConfig& noise) {
    std::vector<sim::ScenePair> out(scenes.begin(), scenes.end());
    if (!noise.active()) {
        return out;
    }
    for (auto& s : out) {
        s.infra.reported_pose = sim::inject_pose_noise(s.infra.reported_pose, noise.sigma_t, noise.sigma_yaw,
                                                       derive_seed(noise.seed, "eval-pose-noise", s.scene_id));
    }
    return out;
}

std::vector<geom::Box3D> eval_ground_truth(const sim::ScenePair& pair) {
    return distill::observed_boxes(pair.gt_boxes, sim::fuse_early(pair, false));
}

std::vector<Detection> detect_scene(Mode mode, const ModelSet& models, const sim::ScenePair& pair, const EvalConfig& cfg,
                                    InputCondition condition) {
    const model::Detector<float>* net = models.for_mode(mode);
    if (!net) {
        fail(ErrorKind::Usage, std::string("no model loaded for mode ") + mode_name(mode));
    }
    nn::NoGradGuard guard;
    sim::ScenePair scene = pair;
    if (condition == InputCondition::VehicleOnly) {
        scene.infra.cloud.clear();
    } else if (condition == InputCondition::InfraOnly) {
        scene.vehicle.cloud.clear();
    }
    const PointCloud infra_v = geom::transform_points(scene.infra.cloud, scene.infra_to_vehicle(true));
    switch (mode) {
        case Mode::NoFusion:
            return detect_single(*net, scene.vehicle.cloud, cfg);
        case Mode::Early:
        case Mode::Div2xTeacher:
            return detect_single(*net, sim::fuse_early(scene, true), cfg);
        case Mode::Late: {
            std::vector<Detection> merged = detect_single(*net, scene.vehicle.cloud, cfg);
            if (!infra_v.empty()) {
                const auto from_infra = detect_single(*net, infra_v, cfg);
                merged.insert(merged.end(), from_infra.begin(), from_infra.end());
            }
            std::vector<geom::Box3D> boxes;
            std::vector<double> scores;
            for (const auto& d : merged) {
                boxes.push_back(d.box);
                scores.push_back(d.score);
            }
            std::vector<Detection> kept;
            for (const std::size_t k : geom::nms(boxes, scores, cfg.nms_thr)) {
                kept.push_back(merged[k]);
            }
            return kept;
        }
        case Mode::IntermediateSum:
        case Mode::Div2xStudent:
            return detect_pair(*net, scene.vehicle.cloud, infra_v, cfg);
    }
    return {};
}

std::optional<ModeResult> run_mode(Mode mode, const ModelSet& models, std::span<const sim::ScenePair> scenes,
                                   const EvalConfig& cfg, InputCondition condition) {
    if (!models.for_mode(mode)) {
        return std::nullopt;
    }
    const std::vector<sim::ScenePair> noisy = apply_noise(scenes, cfg.noise);
    std::vector<std::vector<Detection>> dets(noisy.size());
    std::vector<std::vector<geom::Box3D>> gts(noisy.size());
    parallel_for(noisy.size(), cfg.threads, [&](std::size_t k) {
        gts[k] = eval_ground_truth(noisy[k]);
        dets[k] = detect_scene(mode, models, noisy[k], cfg, condition);
    });
    ModeResult r;
    r.mode = mode;
    r.condition = condition;
    r.iou_thresholds = cfg.iou_thresholds;
    r.num_scenes = noisy.size();
    for (const double iou : cfg.iou_thresholds) {
        r.results.push_back(average_precision(dets, gts, iou));
    }
    return r;
}

std::vector<GeneralizationRow> run_generalization(const ModelSet& models, std::span<const sim::ScenePair> scenes,
                                                  const EvalConfig& cfg) {
    if (!models.student) {
        fail(ErrorKind::Usage, "generalization needs a student model");
    }
    const auto veh = run_mode(Mode::Div2xStudent, models, scenes, cfg, InputCondition::VehicleOnly);
    const auto inf = run_mode(Mode::Div2xStudent, models, scenes, cfg, InputCondition::InfraOnly);
    const auto both = run_mode(Mode::Div2xStudent, models, scenes, cfg, InputCondition::Both);
    std::vector<GeneralizationRow> rows;
    for (const double iou : cfg.iou_thresholds) {
        GeneralizationRow row;
        row.iou = iou;
        row.vehicle_only = veh->ap_at(iou);
        row.infra_only = inf->ap_at(iou);
        row.both = both->ap_at(iou);
        if (row.vehicle_only && row.infra_only && row.both) {
            row.average = (*row.vehicle_only + *row.infra_only + *row.both) / 3.0;
        }
        rows.push_back(row);
    }
    return rows;
}

std::string format_value(std::optional<double> v) {
    if (!v) {
        return "";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

void write_report(const std::filesystem::path& dir, std::span<const ModeResult> results, const ReportMeta& meta,
                  const EvalConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "results.csv");
    if (!csv) {
        fail(ErrorKind::Data, "cannot write report in " + dir.string());
    }
    csv << "mode,condition,iou,ap,num_gt,num_det,num_tp,mean_iou\n";
    nlohmann::ordered_json j;
    j["format"] = "dvx-eval-report";
    j["version"] = 1;
    j["seed"] = meta.seed;
    j["dataset"] = meta.dataset;
    j["checkpoints"] = meta.checkpoints;
    j["score_thr"] = cfg.score_thr;
    j["nms_thr"] = cfg.nms_thr;
    j["pose_noise"] = {{"sigma_t", cfg.noise.sigma_t}, {"sigma_yaw", cfg.noise.sigma_yaw}, {"seed", cfg.noise.seed}};
    j["modes"] = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json m;
        m["mode"] = mode_name(r.mode);
        m["condition"] = condition_name(r.condition);
        m["num_scenes"] = r.num_scenes;
        m["metrics"] = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < r.results.size(); ++k) {
            const ApResult& a = r.results[k];
            const std::string iou = format_value(r.iou_thresholds[k]);
            csv << mode_name(r.mode) << ',' << condition_name(r.condition) << ',' << iou << ',' << format_value(a.ap)
                << ',' << a.num_gt << ',' << a.num_det << ',' << a.num_tp << ',' << format_value(a.mean_iou) << '\n';
            nlohmann::ordered_json e;
            e["iou"] = iou;
            e["ap"] = a.ap ? nlohmann::ordered_json(format_value(a.ap)) : nlohmann::ordered_json(nullptr);
            e["num_gt"] = a.num_gt;
            e["num_det"] = a.num_det;
            e["num_tp"] = a.num_tp;
            e["mean_iou"] = format_value(a.mean_iou);
            m["metrics"].push_back(e);

            std::string tag = std::string(mode_name(r.mode));
            if (r.condition != InputCondition::Both) {
                tag += std::string("_") + condition_name(r.condition);
            }
            char thr[16];
            std::snprintf(thr, sizeof thr, "%.2f", r.iou_thresholds[k]);
            std::ofstream pr(dir / ("pr_" + tag + "_iou" + thr + ".csv"));
            pr << "rank,score,recall,precision\n";
            for (std::size_t n = 0; n < a.curve.size(); ++n) {
                pr << n << ',' << format_value(a.curve[n].score) << ',' << format_value(a.curve[n].recall) << ','
                   << format_value(a.curve[n].precision) << '\n';
            }
        }
        j["modes"].push_back(m);
    }
    std::ofstream js(dir / "report.json");
    js << j.dump(2) << '\n';
}

void write_generalization(const std::filesystem::path& path, std::span<const GeneralizationRow> rows) {
    std::ofstream os(path);
    if (!os) {
        fail(ErrorKind::Data, "cannot write " + path.string());
    }
    os << "iou,vehicle_only,infra_only,both,average\n";
    for (const auto& r : rows) {
        os << format_value(r.iou) << ',' << format_value(r.vehicle_only) << ',' << format_value(r.infra_only) << ','
           << format_value(r.both) << ',' << format_value(r.average) << '\n';
    }
}

}  // namespace dvx::eval
