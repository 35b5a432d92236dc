#include "dvx/eval/ablation.hpp"

#include <fstream>

#include "dvx/core/error.hpp"

namespace dvx::eval {

std::string AblationSetting::key() const {
    return std::string(daf ? "daf" : "sum") + "_dma" + (dma ? "1" : "0") + "_pdd" + (pdd ? "1" : "0");
}

std::vector<AblationSetting> ablation_settings() {
    return {
        {"baseline", false, false, false}, {"+DMA", true, false, false},    {"+PDD", false, true, false},
        {"+DAF", false, false, true},      {"+PDD+DAF", false, true, true}, {"all", true, true, true},
    };
}

model::ModelConfig ablation_model_config(const model::ModelConfig& base, const AblationSetting& s) {
    model::ModelConfig m = base;
    m.fusion = s.daf ? model::FusionKind::Daf : model::FusionKind::Sum;
    return m;
}

distill::TrainConfig ablation_train_config(const distill::TrainConfig& base, const AblationSetting& s) {
    distill::TrainConfig t = base;
    t.use_dma = s.dma;
    t.use_pdd = s.pdd;
    return t;
}

TrainingProvider::TrainingProvider(std::vector<sim::ScenePair> train, const model::Detector<float>& teacher,
                                   model::ModelConfig model_cfg, distill::TrainConfig train_cfg)
    : train_(std::move(train)), teacher_(teacher), model_cfg_(std::move(model_cfg)), train_cfg_(train_cfg) {}

const model::Detector<float>& TrainingProvider::operator()(const AblationSetting& s) {
    auto it = cache_.find(s.key());
    if (it == cache_.end()) {
        auto net = std::make_unique<model::Detector<float>>(distill::train_student(
            train_, teacher_, ablation_model_config(model_cfg_, s), ablation_train_config(train_cfg_, s)));
        it = cache_.emplace(s.key(), std::move(net)).first;
    }
    return *it->second;
}

std::vector<AblationRow> run_ablation(std::span<const sim::ScenePair> val, const StudentProvider& provider,
                                      const EvalConfig& cfg) {
    std::vector<AblationRow> rows;
    for (const auto& s : ablation_settings()) {
        const model::Detector<float>& net = provider(s);
        ModelSet models;
        models.student = &net;
        auto r = run_mode(Mode::Div2xStudent, models, val, cfg);
        rows.push_back({s, std::move(*r)});
    }
    return rows;
}

void write_ablation(const std::filesystem::path& path, std::span<const AblationRow> rows) {
    std::ofstream os(path);
    if (!os) {
        fail(ErrorKind::Data, "cannot write " + path.string());
    }
    os << "row,dma,pdd,daf";
    if (!rows.empty()) {
        for (const double iou : rows.front().result.iou_thresholds) {
            os << ",ap@" << format_value(iou);
        }
    }
    os << '\n';
    for (const auto& r : rows) {
        os << r.setting.name << ',' << r.setting.dma << ',' << r.setting.pdd << ',' << r.setting.daf;
        for (const auto& a : r.result.results) {
            os << ',' << format_value(a.ap);
        }
        os << '\n';
    }
}

}  // namespace dvx::eval
