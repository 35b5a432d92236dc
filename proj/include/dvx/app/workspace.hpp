#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dvx/app/config.hpp"
#include "dvx/eval/ablation.hpp"
#include "dvx/eval/runner.hpp"
#include "dvx/model/network.hpp"
#include "dvx/sim/scene_io.hpp"

namespace dvx::app {

using Model = model::Detector<float>;

/// Writes <stem>.dvck plus the <stem>.json architecture sidecar.
void save_model(const std::filesystem::path& checkpoint, const Model& net, const std::string& role);
/// Reads a checkpoint and the sidecar next to it (same stem, .json).
std::unique_ptr<Model> load_model(const std::filesystem::path& checkpoint, std::string* role = nullptr);
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

/// Generates num_scenes scenes (scene k uses derive_seed(seed, "scene", k)) into out_dir with
/// an index.json holding the hash split.
sim::DatasetIndex simgen(const RunConfig& cfg, const std::filesystem::path& out_dir, int num_scenes);

using LogFn = std::function<void(const std::string&)>;

/// Named training roles.
enum class Role { Teacher, Student, Single, Early };
const char* role_name(Role r);
Role parse_role(const std::string& s);

/// Trains one model for the role (student: fusion from `fusion`; the teacher is needed when
/// the configuration distills).
Model train_role(Role role, const RunConfig& cfg, const std::vector<sim::ScenePair>& train, const Model* teacher,
                 model::FusionKind fusion, distill::TrainLog* log, const LogFn& progress);

/// Trains or reuses models under `dir`. A model is reused only when its stored key (the
/// effective configuration plus role and setting) matches, so stale files are retrained.
/// Freshly trained models leave <name>_log.csv next to the checkpoint.
class ModelCache {
public:
    ModelCache(std::filesystem::path dir, RunConfig cfg, std::vector<sim::ScenePair> train, LogFn log = {});

    const Model& teacher();
    const Model& early();
    const Model& single();
    const Model& student(const eval::AblationSetting& s);

    std::filesystem::path checkpoint_path(const std::string& name) const;

private:
    const Model& get(const std::string& name, const std::function<Model(distill::TrainLog*)>& make);

    std::filesystem::path dir_;
    RunConfig cfg_;
    std::vector<sim::ScenePair> train_;
    LogFn log_;
    std::map<std::string, std::unique_ptr<Model>> loaded_;
};

struct BenchmarkResult {
    std::vector<eval::ModeResult> clean;
    std::vector<eval::ModeResult> noisy;   // intermediate_sum and div2x_student under pose noise
    std::vector<eval::AblationRow> ablation;
};

struct BenchmarkOptions {
    bool noise = true;
    bool ablation = true;
    double noise_sigma_t = 0.5;
    double noise_sigma_yaw = 2.0 * 3.141592653589793 / 180.0;
};

/// Full reference pipeline on an existing dataset: every model trained (or reused from
/// `work_dir/models`), all modes evaluated on the validation split, reports written under
/// `work_dir/report*`.
BenchmarkResult run_benchmark(const RunConfig& cfg, const std::filesystem::path& data_dir,
                              const std::filesystem::path& work_dir, const BenchmarkOptions& opts, const LogFn& log = {});

}  // namespace dvx::app
