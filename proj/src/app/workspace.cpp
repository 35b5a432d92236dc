#include "dvx/app/workspace.hpp"

#include <fstream>
#include <sstream>

#include "dvx/core/error.hpp"
#include "dvx/core/parallel.hpp"
#include "dvx/core/rng.hpp"
#include "dvx/nn/checkpoint.hpp"

namespace dvx::app {

namespace fs = std::filesystem;

fs::path sidecar_path(const fs::path& checkpoint) {
    fs::path p = checkpoint;
    return p.replace_extension(".json");
}

void save_model(const fs::path& checkpoint, const Model& net, const std::string& role) {
    if (checkpoint.has_parent_path()) {
        fs::create_directories(checkpoint.parent_path());
    }
    nn::write_checkpoint(checkpoint, nn::to_entries(net.params()));
    model::write_architecture(sidecar_path(checkpoint), net.config(), role);
}

std::unique_ptr<Model> load_model(const fs::path& checkpoint, std::string* role) {
    if (!fs::exists(checkpoint)) {
        fail(ErrorKind::Data, "checkpoint not found: " + checkpoint.string());
    }
    const model::ModelConfig cfg = model::read_architecture(sidecar_path(checkpoint), role);
    auto net = std::make_unique<Model>(cfg);
    nn::load_entries(net->params(), nn::read_checkpoint(checkpoint));
    return net;
}

sim::DatasetIndex simgen(const RunConfig& cfg, const fs::path& out_dir, int num_scenes) {
    if (num_scenes < 0) {
        fail(ErrorKind::Usage, "num_scenes must be >= 0");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        fail(ErrorKind::Data, "cannot create output directory " + out_dir.string());
    }
    sim::SceneSpec spec = cfg.scene;
    const auto sensors = std::make_pair(cfg.vehicle_sensor, cfg.infra_sensor);
    std::vector<std::uint64_t> ids(static_cast<std::size_t>(num_scenes));
    std::vector<std::string> manifests(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        ids[k] = k;
    }
    parallel_for(ids.size(), cfg.threads, [&](std::size_t k) {
        sim::ScenePair pair = sim::generate_scene(spec, sensors, derive_seed(cfg.seed, "scene", ids[k]), ids[k]);
        manifests[k] = sim::write_scene(out_dir, pair);
    });
    sim::DatasetIndex index;
    index.seed = cfg.seed;
    const auto splits = sim::assign_splits(ids, cfg.seed);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        index.scenes.push_back({ids[k], manifests[k], splits[k]});
    }
    sim::write_index(out_dir, index);
    echo_config(out_dir, cfg);
    return index;
}

const char* role_name(Role r) {
    switch (r) {
        case Role::Teacher: return "teacher";
        case Role::Student: return "student";
        case Role::Single: return "single";
        case Role::Early: return "early";
    }
    return "?";
}

Role parse_role(const std::string& s) {
    for (const Role r : {Role::Teacher, Role::Student, Role::Single, Role::Early}) {
        if (s == role_name(r)) {
            return r;
        }
    }
    fail(ErrorKind::Usage, "unknown role '" + s + "' (valid: teacher, student, single, early)");
}

Model train_role(Role role, const RunConfig& cfg, const std::vector<sim::ScenePair>& train, const Model* teacher,
                 model::FusionKind fusion, distill::TrainLog* log, const LogFn& progress) {
    model::ModelConfig mc = cfg.model;
    distill::TrainConfig tc = cfg.train;
    long every = std::max<long>(1, static_cast<long>(train.size()));
    distill::ProgressFn cb;
    if (progress) {
        cb = [&, every](const distill::TrainLogRow& r) {
            if ((r.step + 1) % every == 0) {
                std::ostringstream os;
                os << role_name(role) << " epoch " << r.epoch + 1 << " step " << r.step + 1 << " detect "
                   << r.loss_detect << " da " << r.loss_da << " f " << r.loss_f << " p " << r.loss_p;
                progress(os.str());
            }
        };
    }
    switch (role) {
        case Role::Teacher:
            mc.fusion = model::FusionKind::None;
            return distill::train_teacher(train, mc, tc, log, cb);
        case Role::Early:
            // early-fusion baseline: the teacher recipe without instance mixing
            mc.fusion = model::FusionKind::None;
            tc.use_dma = false;
            return distill::train_teacher(train, mc, tc, log, cb);
        case Role::Single:
            mc.fusion = model::FusionKind::None;
            return distill::train_single(train, mc, tc, log, cb);
        case Role::Student:
            if (fusion == model::FusionKind::None) {
                fail(ErrorKind::Usage, "student role needs --fusion sum or daf");
            }
            mc.fusion = fusion;
            if (tc.use_pdd && tc.lambda_kd > 0.0 && !teacher) {
                fail(ErrorKind::Usage, "student role requires a teacher checkpoint");
            }
            if (!teacher) {
                // nothing to distill from; training without it is plain fused-detector training
                tc.use_pdd = false;
                Model dummy(cfg.model);
                return distill::train_student(train, dummy, mc, tc, log, cb);
            }
            return distill::train_student(train, *teacher, mc, tc, log, cb);
    }
    fail(ErrorKind::Usage, "bad role");
}

ModelCache::ModelCache(fs::path dir, RunConfig cfg, std::vector<sim::ScenePair> train, LogFn log)
    : dir_(std::move(dir)), cfg_(std::move(cfg)), train_(std::move(train)), log_(std::move(log)) {
    fs::create_directories(dir_);
}

fs::path ModelCache::checkpoint_path(const std::string& name) const { return dir_ / (name + ".dvck"); }

const Model& ModelCache::get(const std::string& name, const std::function<Model(distill::TrainLog*)>& make) {
    if (auto it = loaded_.find(name); it != loaded_.end()) {
        return *it->second;
    }
    nlohmann::ordered_json key = to_json(cfg_);
    key.erase("threads");
    key["model_name"] = name;
    key["num_train_scenes"] = train_.size();
    std::uint64_t ids = 0;
    for (const auto& s : train_) {
        ids = splitmix64(ids ^ s.scene_id);
    }
    key["train_ids_digest"] = ids;
    const std::string key_text = key.dump(1);
    const fs::path ckpt = checkpoint_path(name);
    const fs::path key_path = dir_ / (name + ".key.json");

    std::unique_ptr<Model> net;
    if (fs::exists(ckpt) && fs::exists(key_path)) {
        std::ifstream is(key_path);
        std::stringstream ss;
        ss << is.rdbuf();
        if (ss.str() == key_text) {
            net = load_model(ckpt);
            if (log_) log_("reusing " + ckpt.string());
        }
    }
    if (!net) {
        if (log_) log_("training " + name);
        distill::TrainLog train_log;
        net = std::make_unique<Model>(make(&train_log));
        save_model(ckpt, *net, name);
        distill::write_train_log(dir_ / (name + "_log.csv"), train_log);
        std::ofstream(key_path) << key_text;
    }
    return *loaded_.emplace(name, std::move(net)).first->second;
}

const Model& ModelCache::teacher() {
    return get("teacher", [&](distill::TrainLog* tl) { return train_role(Role::Teacher, cfg_, train_, nullptr, model::FusionKind::None, tl, log_); });
}

const Model& ModelCache::early() {
    return get("early", [&](distill::TrainLog* tl) { return train_role(Role::Early, cfg_, train_, nullptr, model::FusionKind::None, tl, log_); });
}

const Model& ModelCache::single() {
    return get("single", [&](distill::TrainLog* tl) { return train_role(Role::Single, cfg_, train_, nullptr, model::FusionKind::None, tl, log_); });
}

const Model& ModelCache::student(const eval::AblationSetting& s) {
    return get("student_" + s.key(), [&](distill::TrainLog* tl) {
        RunConfig c = cfg_;
        c.train = eval::ablation_train_config(cfg_.train, s);
        const Model* t = s.pdd ? &teacher() : nullptr;
        return train_role(Role::Student, c, train_, t, s.daf ? model::FusionKind::Daf : model::FusionKind::Sum, tl, log_);
    });
}

BenchmarkResult run_benchmark(const RunConfig& cfg, const fs::path& data_dir, const fs::path& work_dir,
                              const BenchmarkOptions& opts, const LogFn& log) {
    const auto train = sim::load_split(data_dir, sim::Split::Train, cfg.threads);
    const auto val = sim::load_split(data_dir, sim::Split::Val, cfg.threads);
    ModelCache cache(work_dir / "models", cfg, train, log);

    const auto settings = eval::ablation_settings();
    const eval::AblationSetting& baseline = settings.front();
    const eval::AblationSetting& all = settings.back();

    eval::ModelSet models;
    models.single = &cache.single();
    models.early = &cache.early();
    models.teacher = &cache.teacher();
    models.sum_student = &cache.student(baseline);
    models.student = &cache.student(all);

    eval::ReportMeta meta;
    meta.seed = cfg.seed;
    meta.dataset = fs::path(data_dir).filename().string();
    for (const std::string name : {"single", "early", "teacher"}) {
        meta.checkpoints[name] = name + ".dvck";
    }
    meta.checkpoints["intermediate_sum"] = "student_" + baseline.key() + ".dvck";
    meta.checkpoints["div2x_student"] = "student_" + all.key() + ".dvck";

    BenchmarkResult result;
    for (const eval::Mode m : eval::all_modes()) {
        if (log) log(std::string("evaluating ") + eval::mode_name(m));
        result.clean.push_back(*eval::run_mode(m, models, val, cfg.eval));
    }
    eval::write_report(work_dir / "report", result.clean, meta, cfg.eval);

    if (opts.noise) {
        eval::EvalConfig noisy = cfg.eval;
        noisy.noise.sigma_t = opts.noise_sigma_t;
        noisy.noise.sigma_yaw = opts.noise_sigma_yaw;
        for (const eval::Mode m : {eval::Mode::IntermediateSum, eval::Mode::Div2xStudent}) {
            if (log) log(std::string("evaluating ") + eval::mode_name(m) + " under pose noise");
            result.noisy.push_back(*eval::run_mode(m, models, val, noisy));
        }
        eval::write_report(work_dir / "report_noise", result.noisy, meta, noisy);
    }
    if (opts.ablation) {
        result.ablation = eval::run_ablation(
            val, [&](const eval::AblationSetting& s) -> const Model& { return cache.student(s); }, cfg.eval);
        eval::write_ablation(work_dir / "ablation.csv", result.ablation);
    }
    echo_config(work_dir, cfg);
    return result;
}

}  // namespace dvx::app
