#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "dvx/distill/augment.hpp"
#include "dvx/distill/losses.hpp"
#include "dvx/distill/masks.hpp"
#include "dvx/dma/instance_bank.hpp"
#include "dvx/model/network.hpp"
#include "dvx/sim/scene.hpp"

namespace dvx::distill {

struct TrainConfig {
    int epochs = 20;
    double lr = 1e-2;
    double momentum = 0.9;
    /// Global gradient-norm cap per step; 0 disables.
    double grad_clip = 10.0;
    double lambda_kd = 1.0;
    std::uint64_t seed = 42;

    bool use_dma = true;
    double tau_l = 0.2;
    double tau_h = 0.8;
    dma::DomainProbs dma_probs{};
    int dma_samples = 10;

    /// Student only: whether the distillation terms are used at all.
    bool use_pdd = true;
    MaskMode mask_mode = MaskMode::Geometric;
    /// Extra noise on the reported infrastructure pose seen by two-branch students in training.
    sim::PoseNoise train_pose_noise{0.25, 0.017453292519943295};

    SceneAugment augment{};
    FocalParams focal{};
    /// Gradient steps rejected for non-finite gradients before training is aborted.
    int max_rejected_steps = 0;

    void validate() const;
};

struct TrainLogRow {
    int epoch = 0;
    long step = 0;  // global step index
    double loss_detect = 0.0;
    double loss_da = 0.0;
    double loss_f = 0.0;
    double loss_p = 0.0;
    double total = 0.0;
};

using TrainLog = std::vector<TrainLogRow>;
using ProgressFn = std::function<void(const TrainLogRow&)>;

/// Early-fused (true pose) detector with loss_detect only; DMA on the fused cloud when enabled.
model::Detector<float> train_teacher(std::span<const sim::ScenePair> train, const model::ModelConfig& model_cfg,
                                     const TrainConfig& cfg, TrainLog* log = nullptr, const ProgressFn& progress = {});

/// Two-branch student (fusion kind from model_cfg) distilled from a frozen teacher. The infra
/// branch sees its cloud moved into the vehicle frame by the reported pose.
model::Detector<float> train_student(std::span<const sim::ScenePair> train, const model::Detector<float>& teacher,
                                     const model::ModelConfig& model_cfg, const TrainConfig& cfg, TrainLog* log = nullptr,
                                     const ProgressFn& progress = {});

/// Single-agent detector for the no-fusion and late-fusion baselines: each step trains on the
/// vehicle cloud or the (reported-pose) infrastructure cloud, chosen at random.
model::Detector<float> train_single(std::span<const sim::ScenePair> train, const model::ModelConfig& model_cfg,
                                    const TrainConfig& cfg, TrainLog* log = nullptr, const ProgressFn& progress = {});

/// Boxes that received at least one point of `cloud` (vehicle frame).
std::vector<geom::Box3D> observed_boxes(std::span<const geom::Box3D> boxes, const PointCloud& cloud);

void write_train_log(const std::filesystem::path& path, const TrainLog& log);

}  // namespace dvx::distill
