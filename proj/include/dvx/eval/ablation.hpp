#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dvx/distill/train.hpp"
#include "dvx/eval/runner.hpp"

namespace dvx::eval {

/// One row of the module on/off table.
struct AblationSetting {
    std::string name;
    bool dma = false;
    bool pdd = false;
    bool daf = false;

    /// Stable identifier, e.g. "sum_dma0_pdd1".
    std::string key() const;
};

/// baseline, +DMA, +PDD, +DAF, +PDD+DAF, all.
std::vector<AblationSetting> ablation_settings();

struct AblationRow {
    AblationSetting setting;
    ModeResult result;
};

using StudentProvider = std::function<const model::Detector<float>&(const AblationSetting&)>;

/// Model and training configuration of the student behind a setting.
model::ModelConfig ablation_model_config(const model::ModelConfig& base, const AblationSetting& s);
distill::TrainConfig ablation_train_config(const distill::TrainConfig& base, const AblationSetting& s);

/// Trains students on demand (and keeps them), sharing one frozen teacher.
class TrainingProvider {
public:
    TrainingProvider(std::vector<sim::ScenePair> train, const model::Detector<float>& teacher,
                     model::ModelConfig model_cfg, distill::TrainConfig train_cfg);
    const model::Detector<float>& operator()(const AblationSetting& s);

private:
    std::vector<sim::ScenePair> train_;
    const model::Detector<float>& teacher_;
    model::ModelConfig model_cfg_;
    distill::TrainConfig train_cfg_;
    std::map<std::string, std::unique_ptr<model::Detector<float>>> cache_;
};

/// Evaluates every setting's student on `val` (intermediate-fusion evaluation path).
std::vector<AblationRow> run_ablation(std::span<const sim::ScenePair> val, const StudentProvider& provider,
                                      const EvalConfig& cfg);

/// Columns: row, dma, pdd, daf, then ap@<iou> per threshold.
void write_ablation(const std::filesystem::path& path, std::span<const AblationRow> rows);

}  // namespace dvx::eval
