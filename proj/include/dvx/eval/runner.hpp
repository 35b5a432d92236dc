#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvx/eval/metrics.hpp"
#include "dvx/model/network.hpp"
#include "dvx/sim/scene.hpp"

namespace dvx::eval {

enum class Mode { NoFusion, Early, Late, IntermediateSum, Div2xStudent, Div2xTeacher };

const char* mode_name(Mode m);
/// Throws a usage error listing the valid names.
Mode parse_mode(const std::string& s);
std::vector<Mode> all_modes();

/// Trained models available to the evaluator; a mode whose model is missing is skipped.
struct ModelSet {
    const model::Detector<float>* single = nullptr;   // no_fusion, late
    const model::Detector<float>* early = nullptr;    // early
    const model::Detector<float>* sum_student = nullptr;  // intermediate_sum
    const model::Detector<float>* student = nullptr;  // div2x_student
    const model::Detector<float>* teacher = nullptr;  // div2x_teacher

    const model::Detector<float>* for_mode(Mode m) const;
};

/// Extra noise folded into the reported infrastructure pose of every evaluated scene.
struct NoiseConfig {
    double sigma_t = 0.0;
    double sigma_yaw = 0.0;
    std::uint64_t seed = 0;

    bool active() const { return sigma_t > 0.0 || sigma_yaw > 0.0; }
};

struct EvalConfig {
    std::vector<double> iou_thresholds{0.5, 0.7};
    double score_thr = 0.3;
    double nms_thr = 0.3;
    NoiseConfig noise{};
    int threads = 1;
};

/// Which agents' clouds reach the model.
enum class InputCondition { Both, VehicleOnly, InfraOnly };

struct ModeResult {
    Mode mode = Mode::NoFusion;
    InputCondition condition = InputCondition::Both;
    std::vector<double> iou_thresholds;
    std::vector<ApResult> results;  // per threshold
    std::size_t num_scenes = 0;

    std::optional<double> ap_at(double iou) const;
};

/// Scenes with pose noise applied to the reported infrastructure pose.
std::vector<sim::ScenePair> apply_noise(std::span<const sim::ScenePair> scenes, const NoiseConfig& noise);

/// Evaluation ground truth: boxes holding at least one point of the true-pose fused cloud.
std::vector<geom::Box3D> eval_ground_truth(const sim::ScenePair& pair);

/// Detections of one mode on one scene (vehicle frame).
std::vector<Detection> detect_scene(Mode mode, const ModelSet& models, const sim::ScenePair& pair, const EvalConfig& cfg,
                                    InputCondition condition = InputCondition::Both);

/// Returns nullopt (and does nothing) when the mode's model is missing.
std::optional<ModeResult> run_mode(Mode mode, const ModelSet& models, std::span<const sim::ScenePair> scenes,
                                   const EvalConfig& cfg, InputCondition condition = InputCondition::Both);

struct GeneralizationRow {
    double iou = 0.0;
    std::optional<double> vehicle_only, infra_only, both, average;
};

/// Student AP with the infrastructure cloud emptied, the vehicle cloud emptied, and both present.
std::vector<GeneralizationRow> run_generalization(const ModelSet& models, std::span<const sim::ScenePair> scenes,
                                                  const EvalConfig& cfg);

struct ReportMeta {
    std::uint64_t seed = 0;
    std::string dataset;
    std::map<std::string, std::string> checkpoints;
};

/// results.csv (mode, iou, ap, num_gt, num_det, num_tp, mean_iou), report.json and one
/// pr_<mode>.csv per mode.
void write_report(const std::filesystem::path& dir, std::span<const ModeResult> results, const ReportMeta& meta,
                  const EvalConfig& cfg);
void write_generalization(const std::filesystem::path& path, std::span<const GeneralizationRow> rows);

/// Fixed-format number for report files; "" for absent values.
std::string format_value(std::optional<double> v);

}  // namespace dvx::eval
