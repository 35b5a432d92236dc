#include "dvx/distill/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "dvx/core/error.hpp"
#include "dvx/core/rng.hpp"
#include "dvx/model/pillars.hpp"
#include "dvx/model/targets.hpp"
#include "dvx/nn/ops.hpp"
#include "dvx/nn/optim.hpp"

namespace dvx::distill {

using model::Detector;
using nn::Tensor;

void TrainConfig::validate() const {
    if (epochs < 0) fail(ErrorKind::Data, "epochs must be >= 0");
    if (!(lr > 0.0)) fail(ErrorKind::Data, "lr must be > 0");
    if (grad_clip < 0.0) fail(ErrorKind::Data, "grad_clip must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) fail(ErrorKind::Data, "momentum must be in [0, 1)");
    if (lambda_kd < 0.0) fail(ErrorKind::Data, "lambda_kd must be >= 0");
    if (!(0.0 < tau_l && tau_l < tau_h && tau_h < 1.0)) fail(ErrorKind::Data, "need 0 < tau_l < tau_h < 1");
    if (dma_samples < 0) fail(ErrorKind::Data, "dma_samples must be >= 0");
    const auto& pr = dma_probs;
    if (pr.fused < 0.0 || pr.vehicle < 0.0 || pr.infra < 0.0 || std::abs(pr.fused + pr.vehicle + pr.infra - 1.0) > 1e-9) {
        fail(ErrorKind::Data, "DMA probabilities must be non-negative and sum to 1");
    }
    if (augment.flip_prob < 0.0 || augment.flip_prob > 1.0 || augment.max_rotation < 0.0 ||
        !(0.0 < augment.min_scale && augment.min_scale <= augment.max_scale)) {
        fail(ErrorKind::Data, "bad augmentation ranges");
    }
    if (focal.alpha < 0.0 || focal.alpha > 1.0 || focal.gamma < 0.0) fail(ErrorKind::Data, "bad focal parameters");
    if (max_rejected_steps < 0) fail(ErrorKind::Data, "max_rejected_steps must be >= 0");
    if (train_pose_noise.sigma_t < 0.0 || train_pose_noise.sigma_yaw < 0.0) {
        fail(ErrorKind::Data, "train pose noise must be non-negative");
    }
}

std::vector<geom::Box3D> observed_boxes(std::span<const geom::Box3D> boxes, const PointCloud& cloud) {
    std::vector<geom::Box3D> out;
    for (const auto& b : boxes) {
        for (const Point& p : cloud) {
            if (geom::point_in_box(p, b)) {
                out.push_back(b);
                break;
            }
        }
    }
    return out;
}

namespace {

enum class Role { Teacher, Student, Single };

// One epoch's scene order: a seeded Fisher-Yates shuffle.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) {
        order[k] = k;
    }
    Rng rng(derive_seed(seed, "order", static_cast<std::uint64_t>(epoch)));
    for (std::size_t k = n; k > 1; --k) {
        std::swap(order[k - 1], order[rng.index(k)]);
    }
    return order;
}

struct StepInput {
    sim::ScenePair scene;        // augmented
    dma::AugmentedScene dma;     // after instance injection
    geom::PoseSE3 student_pose;  // infra -> vehicle as seen by the student
};

class Trainer {
public:
    Trainer(std::span<const sim::ScenePair> train, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
            Role role, const Detector<float>* teacher)
        : train_(train), cfg_(cfg), role_(role), teacher_(teacher), net_(model_cfg), bank_(cfg.tau_l, cfg.tau_h) {
        cfg_.validate();
        if (train_.empty() && cfg_.epochs > 0) {
            fail(ErrorKind::Data, "training set is empty");
        }
        if (role_ == Role::Student) {
            if (model_cfg.fusion == model::FusionKind::None) {
                fail(ErrorKind::Usage, "student needs a fusion kind (sum or daf)");
            }
            if (distilling() && !teacher_) {
                fail(ErrorKind::Usage, "student distillation needs a teacher");
            }
            if (teacher_ && !(teacher_->config().grid == model_cfg.grid &&
                              teacher_->config().channels == model_cfg.channels &&
                              teacher_->config().stride == model_cfg.stride)) {
                fail(ErrorKind::Data, "teacher and student architectures differ");
            }
        }
        if (cfg_.use_dma && role_ != Role::Single && cfg_.epochs > 0) {
            bank_ = dma::build_bank(train_, cfg_.tau_l, cfg_.tau_h);
        }
    }

    Detector<float> run(TrainLog* log, const ProgressFn& progress) {
        nn::Sgd<float> opt(static_cast<float>(cfg_.momentum));
        const long steps_per_epoch = static_cast<long>(train_.size());
        const long total_steps = steps_per_epoch * cfg_.epochs;
        const geom::GridSpec fgrid = net_.config().feature_grid();
        int rejected = 0;
        long step = 0;
        for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
            for (const std::size_t idx : epoch_order(train_.size(), cfg_.seed, epoch)) {
                const StepInput in = prepare(train_[idx], step);
                TrainLogRow row{epoch, step, 0, 0, 0, 0, 0};
                Tensor<float> loss = forward(in, fgrid, row);
                if (!std::isfinite(row.total)) {
                    fail(ErrorKind::Numeric, "training diverged: non-finite loss at step " + std::to_string(step));
                }
                net_.params().zero_grad();
                loss.backward();
                nn::clip_grad_norm(net_.params(), cfg_.grad_clip);
                const double lr = nn::cosine_lr(cfg_.lr, step, total_steps);
                if (!opt.step(net_.params(), static_cast<float>(lr))) {
                    if (++rejected > cfg_.max_rejected_steps) {
                        fail(ErrorKind::Numeric, "training diverged: non-finite gradient at step " + std::to_string(step));
                    }
                }
                net_.params().zero_grad();
                if (log) {
                    log->push_back(row);
                }
                if (progress) {
                    progress(row);
                }
                ++step;
            }
        }
        return std::move(net_);
    }

private:
    bool distilling() const { return cfg_.use_pdd && cfg_.lambda_kd > 0.0; }

    StepInput prepare(const sim::ScenePair& raw, long step) const {
        StepInput in;
        Rng rng(derive_seed(cfg_.seed, "augment", static_cast<std::uint64_t>(step)));
        in.scene = apply_augment(raw, draw_augment(cfg_.augment, rng));
        if (cfg_.use_dma && role_ != Role::Single && !bank_.empty()) {
            in.dma = dma::sample_and_inject(bank_, in.scene, cfg_.dma_probs, cfg_.dma_samples,
                                            derive_seed(cfg_.seed, "dma", static_cast<std::uint64_t>(step)),
                                            net_.config().grid);
        } else {
            in.dma = dma::passthrough(in.scene);
        }
        in.student_pose = in.scene.infra_to_vehicle(true);
        if (role_ == Role::Student &&
            (cfg_.train_pose_noise.sigma_t > 0.0 || cfg_.train_pose_noise.sigma_yaw > 0.0)) {
            // Noise on the infra pose relative to the vehicle; the vehicle pose is the identity here.
            in.student_pose = sim::inject_pose_noise(in.student_pose, cfg_.train_pose_noise.sigma_t,
                                                     cfg_.train_pose_noise.sigma_yaw,
                                                     derive_seed(cfg_.seed, "train-pose-noise", static_cast<std::uint64_t>(step)));
        }
        return in;
    }

    model::Targets targets_for(const std::vector<geom::Box3D>& gt, const PointCloud& seen,
                               const geom::GridSpec& fgrid) const {
        return model::encode_targets(observed_boxes(gt, seen), fgrid);
    }

    Tensor<float> forward(const StepInput& in, const geom::GridSpec& fgrid, TrainLogRow& row) {
        switch (role_) {
            case Role::Teacher: {
                const auto out = net_.head(net_.encode_cloud(in.dma.early));
                Tensor<float> loss = loss_detect(out, targets_for(in.dma.gt_boxes, in.dma.early, fgrid), cfg_.focal);
                row.loss_detect = row.total = loss.item();
                return loss;
            }
            case Role::Single: {
                Rng rng(derive_seed(cfg_.seed, "single-agent", static_cast<std::uint64_t>(row.step)));
                const PointCloud cloud = rng.bernoulli(0.5) ? in.dma.vehicle
                                                            : geom::transform_points(in.dma.infra, in.student_pose);
                const auto out = net_.head(net_.encode_cloud(cloud));
                Tensor<float> loss = loss_detect(out, targets_for(in.dma.gt_boxes, cloud, fgrid), cfg_.focal);
                row.loss_detect = row.total = loss.item();
                return loss;
            }
            case Role::Student:
                break;
        }
        const PointCloud infra_v = geom::transform_points(in.dma.infra, in.student_pose);
        const Tensor<float> b_v = net_.encode_cloud(in.dma.vehicle);
        const Tensor<float> b_i = net_.encode_cloud(infra_v);
        const Tensor<float> b_f = net_.fuse(b_v, b_i);
        const auto out = net_.head(b_f);
        PointCloud seen = in.dma.vehicle;
        seen.insert(seen.end(), infra_v.begin(), infra_v.end());
        const Tensor<float> detect = loss_detect(out, targets_for(in.dma.gt_boxes, seen, fgrid), cfg_.focal);
        row.loss_detect = detect.item();

        Tensor<float> da, f, p;
        if (teacher_ && cfg_.use_pdd) {
            Tensor<float> b_t;
            model::HeadOutput<float> t_out;
            {
                nn::NoGradGuard guard;
                b_t = teacher_->encode_cloud(in.dma.early);
                t_out = teacher_->head(b_t);
            }
            const MaskSet masks = make_masks(in, infra_v);
            // Without distillation the terms are still logged but kept out of the graph.
            std::unique_ptr<nn::NoGradGuard> guard;
            if (!distilling()) {
                guard = std::make_unique<nn::NoGradGuard>();
            }
            da = loss_da(b_t, b_v, b_i, masks);
            f = loss_f(b_t, b_f, masks);
            p = loss_p(t_out, out);
            row.loss_da = da.item();
            row.loss_f = f.item();
            row.loss_p = p.item();
        }
        row.total = total_loss(row.loss_detect, row.loss_da, row.loss_f, row.loss_p, distilling() ? cfg_.lambda_kd : 0.0);
        if (!distilling()) {
            return detect;
        }
        return total_loss(detect, da, f, p, cfg_.lambda_kd);
    }

    MaskSet make_masks(const StepInput& in, const PointCloud& infra_v) const {
        const model::ModelConfig& mc = net_.config();
        if (cfg_.mask_mode == MaskMode::Footprint) {
            return footprint_masks(in.dma.vehicle, infra_v, mc.grid, mc.stride);
        }
        const geom::GridSpec fgrid = mc.feature_grid();
        return geometric_masks(perception_rect(geom::PoseSE3::identity(), mc.grid),
                               perception_rect(in.scene.infra_to_vehicle(false), mc.grid), fgrid);
    }

    std::span<const sim::ScenePair> train_;
    TrainConfig cfg_;
    Role role_;
    const Detector<float>* teacher_;
    Detector<float> net_;
    dma::InstanceBank bank_;
};

}  // namespace

Detector<float> train_teacher(std::span<const sim::ScenePair> train, const model::ModelConfig& model_cfg,
                              const TrainConfig& cfg, TrainLog* log, const ProgressFn& progress) {
    if (model_cfg.fusion != model::FusionKind::None) {
        fail(ErrorKind::Usage, "the teacher is a single-branch model");
    }
    return Trainer(train, model_cfg, cfg, Role::Teacher, nullptr).run(log, progress);
}

Detector<float> train_student(std::span<const sim::ScenePair> train, const Detector<float>& teacher,
                              const model::ModelConfig& model_cfg, const TrainConfig& cfg, TrainLog* log,
                              const ProgressFn& progress) {
    return Trainer(train, model_cfg, cfg, Role::Student, &teacher).run(log, progress);
}

Detector<float> train_single(std::span<const sim::ScenePair> train, const model::ModelConfig& model_cfg,
                             const TrainConfig& cfg, TrainLog* log, const ProgressFn& progress) {
    if (model_cfg.fusion != model::FusionKind::None) {
        fail(ErrorKind::Usage, "the single-agent detector is a single-branch model");
    }
    return Trainer(train, model_cfg, cfg, Role::Single, nullptr).run(log, progress);
}

void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
    std::ofstream os(path);
    if (!os) {
        fail(ErrorKind::Data, "cannot write " + path.string());
    }
    os << "epoch,step,loss_detect,loss_da,loss_f,loss_p,total\n";
    char buf[256];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%d,%ld,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.step, r.loss_detect, r.loss_da,
                      r.loss_f, r.loss_p, r.total);
        os << buf;
    }
}

}  // namespace dvx::distill
