// dvx: command-line driver for scene generation, training, evaluation and reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dvx/app/config.hpp"
#include "dvx/app/workspace.hpp"
#include "dvx/core/error.hpp"
#include "dvx/eval/ablation.hpp"
#include "dvx/eval/runner.hpp"
#include "dvx/sim/scene_io.hpp"

namespace fs = std::filesystem;
using namespace dvx;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON run configuration (defaults for absent keys)")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "override a config field, e.g. --set train.epochs=5 (repeatable)");
    cmd->add_option("--threads", c.threads, "worker thread cap")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

app::RunConfig resolve(const Common& c) {
    nlohmann::ordered_json doc = app::to_json(app::RunConfig{});
    if (!c.config.empty()) {
        doc = app::to_json(app::load_config(c.config));
    }
    for (const auto& s : c.sets) {
        app::apply_override(doc, s);
    }
    if (c.threads) doc["threads"] = *c.threads;
    if (c.seed) doc["seed"] = *c.seed;
    return app::from_json(doc);
}

app::LogFn logger(const Common& c) {
    if (c.quiet) return {};
    return [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); };
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_iou_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || !(v > 0.0 && v <= 1.0)) {
            fail(ErrorKind::Usage, "--iou: bad threshold '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) fail(ErrorKind::Usage, "--iou: empty list");
    return out;
}

sim::Split parse_split(const std::string& s) {
    if (s == "train") return sim::Split::Train;
    if (s == "val") return sim::Split::Val;
    fail(ErrorKind::Usage, "unknown split '" + s + "' (valid: train, val)");
}

void require_dataset(const fs::path& dir) {
    if (!fs::exists(dir / "index.json")) {
        fail(ErrorKind::Data, "no dataset index at " + (dir / "index.json").string());
    }
}

fs::path log_path_for(const fs::path& ckpt) {
    fs::path p = ckpt;
    return p.replace_filename(p.stem().string() + "_log.csv");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"dvx: two-agent LiDAR detection with cross-domain distillation"};
    cli.require_subcommand(1);
    cli.set_help_all_flag("--help-all", "help for every command");

    // simgen
    Common simgen_c;
    std::string simgen_out;
    int num_scenes = 250;
    auto* simgen = cli.add_subcommand("simgen", "generate a synthetic two-agent dataset");
    add_common(simgen, simgen_c);
    simgen->add_option("--out", simgen_out, "output directory")->required();
    simgen->add_option("--num-scenes", num_scenes, "scene count")->check(CLI::NonNegativeNumber);

    // train
    Common train_c;
    std::string role = "teacher", train_data, train_out, teacher_ckpt, fusion = "daf";
    auto* train = cli.add_subcommand("train", "train one model");
    add_common(train, train_c);
    train->add_option("--role", role, "teacher | student | single | early")
        ->check(CLI::IsMember({"teacher", "student", "single", "early"}));
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--out", train_out, "checkpoint path (.dvck); sidecar and log are written next to it")->required();
    train->add_option("--teacher-ckpt", teacher_ckpt, "teacher checkpoint (student role)");
    train->add_option("--fusion", fusion, "student fusion: sum | daf")->check(CLI::IsMember({"sum", "daf"}));

    // eval
    Common eval_c;
    std::string eval_data, eval_out, modes_arg, iou_arg, split_arg = "val";
    std::map<std::string, std::string> ckpts;
    auto* evalc = cli.add_subcommand("eval", "evaluate checkpoints in one or more modes");
    add_common(evalc, eval_c);
    evalc->add_option("--data", eval_data, "dataset directory")->required();
    evalc->add_option("--out", eval_out, "report directory")->required();
    evalc->add_option("--modes", modes_arg, "comma list (default: every mode with a checkpoint)");
    evalc->add_option("--iou", iou_arg, "comma list of IoU thresholds (default 0.5,0.7)");
    evalc->add_option("--split", split_arg, "train | val");
    for (const char* name : {"single", "early", "sum", "student", "teacher"}) {
        evalc->add_option(std::string("--") + name, ckpts[name], std::string(name) + " checkpoint");
    }

    // ablate
    Common ablate_c;
    std::string ablate_data, ablate_out;
    auto* ablate = cli.add_subcommand("ablate", "train and evaluate the module ablation grid");
    add_common(ablate, ablate_c);
    ablate->add_option("--data", ablate_data, "dataset directory")->required();
    ablate->add_option("--out", ablate_out, "work directory (models are cached under models/)")->required();

    // generalize
    Common gen_c;
    std::string gen_data, gen_out, gen_student;
    auto* gen = cli.add_subcommand("generalize", "student AP with one agent's cloud removed");
    add_common(gen, gen_c);
    gen->add_option("--data", gen_data, "dataset directory")->required();
    gen->add_option("--student", gen_student, "student checkpoint")->required();
    gen->add_option("--out", gen_out, "report directory")->required();

    // benchmark
    Common bench_c;
    std::string bench_data, bench_out;
    bool no_noise = false, no_ablation = false;
    auto* bench = cli.add_subcommand("benchmark", "train every model and write all reports");
    add_common(bench, bench_c);
    bench->add_option("--data", bench_data, "dataset directory")->required();
    bench->add_option("--out", bench_out, "work directory")->required();
    bench->add_flag("--no-noise", no_noise, "skip the pose-noise evaluation");
    bench->add_flag("--no-ablation", no_ablation, "skip the ablation grid");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
    }

    try {
        if (simgen->parsed()) {
            const auto cfg = resolve(simgen_c);
            const auto index = app::simgen(cfg, simgen_out, num_scenes);
            std::size_t n_train = 0;
            for (const auto& e : index.scenes) n_train += e.split == sim::Split::Train;
            std::printf("wrote %zu scenes (%zu train, %zu val) to %s\n", index.scenes.size(), n_train,
                        index.scenes.size() - n_train, simgen_out.c_str());
        } else if (train->parsed()) {
            const auto cfg = resolve(train_c);
            const app::Role r = app::parse_role(role);
            std::unique_ptr<app::Model> teacher;
            if (r == app::Role::Student) {
                if (teacher_ckpt.empty() && cfg.train.use_pdd && cfg.train.lambda_kd > 0.0) {
                    fail(ErrorKind::Usage, "student role requires --teacher-ckpt");
                }
                if (!teacher_ckpt.empty()) teacher = app::load_model(teacher_ckpt);
            } else if (!teacher_ckpt.empty()) {
                std::fprintf(stderr, "warning: --teacher-ckpt is ignored for role %s\n", role.c_str());
            }
            require_dataset(train_data);
            const auto scenes = sim::load_split(train_data, sim::Split::Train, cfg.threads);
            distill::TrainLog log;
            const app::Model net = app::train_role(r, cfg, scenes, teacher.get(), model::parse_fusion(fusion), &log,
                                                   logger(train_c));
            const fs::path out(train_out);
            app::save_model(out, net, role);
            distill::write_train_log(log_path_for(out), log);
            app::echo_config(out.has_parent_path() ? out.parent_path() : fs::path("."), cfg);
            std::printf("wrote %s (%zu log rows)\n", out.string().c_str(), log.size());
        } else if (evalc->parsed()) {
            auto cfg = resolve(eval_c);
            if (!iou_arg.empty()) cfg.eval.iou_thresholds = parse_iou_list(iou_arg);
            const sim::Split split = parse_split(split_arg);
            std::vector<eval::Mode> modes;
            for (const auto& m : split_list(modes_arg)) modes.push_back(eval::parse_mode(m));
            require_dataset(eval_data);

            std::map<std::string, std::unique_ptr<app::Model>> loaded;
            eval::ReportMeta meta;
            meta.seed = cfg.seed;
            meta.dataset = fs::path(eval_data).filename().string();
            for (const auto& [name, path] : ckpts) {
                if (!path.empty()) {
                    loaded[name] = app::load_model(path);
                    meta.checkpoints[name] = fs::path(path).filename().string();
                }
            }
            eval::ModelSet models;
            auto ptr = [&](const char* n) { return loaded.count(n) ? loaded[n].get() : nullptr; };
            models.single = ptr("single");
            models.early = ptr("early");
            models.sum_student = ptr("sum");
            models.student = ptr("student");
            models.teacher = ptr("teacher");
            if (modes.empty()) {
                for (const auto m : eval::all_modes()) {
                    if (models.for_mode(m)) modes.push_back(m);
                }
            }
            if (modes.empty()) fail(ErrorKind::Usage, "no checkpoints given");
            for (const auto m : modes) {
                if (!models.for_mode(m)) {
                    fail(ErrorKind::Usage, std::string("mode ") + eval::mode_name(m) + " needs a checkpoint");
                }
            }
            const auto scenes = sim::load_split(eval_data, split, cfg.threads);
            std::vector<eval::ModeResult> results;
            for (const auto m : modes) {
                results.push_back(*eval::run_mode(m, models, scenes, cfg.eval));
                for (std::size_t k = 0; k < results.back().iou_thresholds.size(); ++k) {
                    std::printf("%-18s AP@%.2f %s\n", eval::mode_name(m), results.back().iou_thresholds[k],
                                eval::format_value(results.back().results[k].ap).c_str());
                }
            }
            eval::write_report(eval_out, results, meta, cfg.eval);
            app::echo_config(eval_out, cfg);
        } else if (ablate->parsed()) {
            const auto cfg = resolve(ablate_c);
            require_dataset(ablate_data);
            const auto train_set = sim::load_split(ablate_data, sim::Split::Train, cfg.threads);
            const auto val = sim::load_split(ablate_data, sim::Split::Val, cfg.threads);
            app::ModelCache cache(fs::path(ablate_out) / "models", cfg, train_set, logger(ablate_c));
            const auto rows = eval::run_ablation(
                val, [&](const eval::AblationSetting& s) -> const app::Model& { return cache.student(s); }, cfg.eval);
            eval::write_ablation(fs::path(ablate_out) / "ablation.csv", rows);
            app::echo_config(ablate_out, cfg);
            for (const auto& row : rows) {
                std::printf("%-10s", row.setting.name.c_str());
                for (std::size_t k = 0; k < row.result.iou_thresholds.size(); ++k) {
                    std::printf("  AP@%.2f %s", row.result.iou_thresholds[k],
                                eval::format_value(row.result.results[k].ap).c_str());
                }
                std::printf("\n");
            }
        } else if (gen->parsed()) {
            const auto cfg = resolve(gen_c);
            require_dataset(gen_data);
            const auto student = app::load_model(gen_student);
            eval::ModelSet models;
            models.student = student.get();
            const auto val = sim::load_split(gen_data, sim::Split::Val, cfg.threads);
            const auto rows = eval::run_generalization(models, val, cfg.eval);
            fs::create_directories(gen_out);
            eval::write_generalization(fs::path(gen_out) / "generalization.csv", rows);
            app::echo_config(gen_out, cfg);
            for (const auto& r : rows) {
                std::printf("AP@%.2f vehicle_only %s infra_only %s both %s average %s\n", r.iou,
                            eval::format_value(r.vehicle_only).c_str(), eval::format_value(r.infra_only).c_str(),
                            eval::format_value(r.both).c_str(), eval::format_value(r.average).c_str());
            }
        } else if (bench->parsed()) {
            const auto cfg = resolve(bench_c);
            require_dataset(bench_data);
            app::BenchmarkOptions opts;
            opts.noise = !no_noise;
            opts.ablation = !no_ablation;
            const auto res = app::run_benchmark(cfg, bench_data, bench_out, opts, logger(bench_c));
            auto print = [](const char* tag, const std::vector<eval::ModeResult>& rs) {
                for (const auto& r : rs) {
                    std::printf("%s %-18s", tag, eval::mode_name(r.mode));
                    for (std::size_t k = 0; k < r.iou_thresholds.size(); ++k) {
                        std::printf("  AP@%.2f %s", r.iou_thresholds[k], eval::format_value(r.results[k].ap).c_str());
                    }
                    std::printf("\n");
                }
            };
            print("clean", res.clean);
            print("noisy", res.noisy);
            for (const auto& row : res.ablation) {
                std::printf("ablation %-10s AP@0.70 %s\n", row.setting.name.c_str(),
                            eval::format_value(row.result.ap_at(0.7)).c_str());
            }
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ErrorKind::Data);
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ErrorKind::Data);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ErrorKind::Data);
    }
    return 0;
}
