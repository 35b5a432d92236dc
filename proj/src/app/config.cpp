#include "dvx/app/config.hpp"

#include <fstream>

#include "dvx/core/error.hpp"

namespace dvx::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json interval(const sim::Interval& i) { return ordered_json::array({i.lo, i.hi}); }
sim::Interval interval(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
double num(const json& j) { return j.get<double>(); }

ordered_json sensor_json(const sim::SensorModel& s) {
    ordered_json j;
    j["beams"] = s.beams;
    j["fov"] = s.fov;
    j["azimuth_step"] = s.azimuth_step;
    j["max_range"] = s.max_range;
    j["range_noise_sigma"] = s.range_noise_sigma;
    j["dropout_prob"] = s.dropout_prob;
    j["elevation_min"] = s.elevation_min;
    j["elevation_max"] = s.elevation_max;
    return j;
}

sim::SensorModel sensor_from(const json& j) {
    sim::SensorModel s;
    s.beams = j.at("beams");
    s.fov = j.at("fov");
    s.azimuth_step = j.at("azimuth_step");
    s.max_range = j.at("max_range");
    s.range_noise_sigma = j.at("range_noise_sigma");
    s.dropout_prob = j.at("dropout_prob");
    s.elevation_min = j.at("elevation_min");
    s.elevation_max = j.at("elevation_max");
    return s;
}

ordered_json noise_json(double t, double yaw) { return {{"sigma_t", t}, {"sigma_yaw", yaw}}; }

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) {
        return !(a.is_number_float() && b.is_number_integer());
    }
    return a.type() == b.type();
}

// Overlays `user` onto `base` in place; unknown keys and kind changes are usage errors.
void merge_strict(ordered_json& base, const json& user, const std::string& path) {
    if (!user.is_object()) {
        fail(ErrorKind::Usage, "config: '" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
    }
    for (const auto& [key, value] : user.items()) {
        const std::string here = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) {
            fail(ErrorKind::Usage, "config: unknown key '" + here + "'");
        }
        ordered_json& slot = base[key];
        if (slot.is_object()) {
            merge_strict(slot, value, here);
        } else if (!same_kind(value, slot)) {
            fail(ErrorKind::Usage, "config: '" + here + "' has the wrong type");
        } else {
            slot = value;
        }
    }
}

}  // namespace

void RunConfig::validate() const {
    if (threads < 1) {
        fail(ErrorKind::Usage, "threads must be >= 1");
    }
    scene.validate();
    vehicle_sensor.validate();
    infra_sensor.validate();
    model.validate();
    train.validate();
    if (eval.iou_thresholds.empty()) {
        fail(ErrorKind::Usage, "eval.iou needs at least one threshold");
    }
    for (const double t : eval.iou_thresholds) {
        if (!(t > 0.0 && t <= 1.0)) {
            fail(ErrorKind::Usage, "IoU thresholds must lie in (0, 1]");
        }
    }
    if (!(eval.score_thr >= 0.0 && eval.score_thr <= 1.0) || !(eval.nms_thr > 0.0 && eval.nms_thr <= 1.0)) {
        fail(ErrorKind::Usage, "eval score_thr must be in [0, 1] and nms_thr in (0, 1]");
    }
    if (eval.noise.sigma_t < 0.0 || eval.noise.sigma_yaw < 0.0) {
        fail(ErrorKind::Usage, "eval pose noise must be non-negative");
    }
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;

    const sim::SceneSpec& s = c.scene;
    ordered_json scene;
    scene["num_objects"] = s.num_objects;
    scene["length"] = interval(s.length);
    scene["width"] = interval(s.width);
    scene["height"] = interval(s.height);
    scene["placement_center"] = {s.placement_region.center.x(), s.placement_region.center.y()};
    scene["placement_half_extents"] = {s.placement_region.half_extents.x(), s.placement_region.half_extents.y()};
    scene["placement_yaw"] = s.placement_region.yaw;
    scene["vehicle_mount_height"] = s.vehicle_mount_height;
    scene["infra_mount_height"] = s.infra_mount_height;
    scene["infra_pitch_down"] = s.infra_pitch_down;
    scene["infra_x"] = interval(s.infra_x);
    scene["infra_abs_y"] = interval(s.infra_abs_y);
    scene["infra_yaw_jitter"] = s.infra_yaw_jitter;
    scene["pose_noise"] = noise_json(s.pose_noise.sigma_t, s.pose_noise.sigma_yaw);
    scene["ground_return_prob"] = s.world.ground_return_prob;
    j["scene"] = scene;

    j["sensors"] = {{"vehicle", sensor_json(c.vehicle_sensor)}, {"infra", sensor_json(c.infra_sensor)}};

    const geom::GridSpec& g = c.model.grid;
    j["model"] = {{"x_range", {g.x_min, g.x_max}},
                  {"y_range", {g.y_min, g.y_max}},
                  {"z_range", {g.z_min, g.z_max}},
                  {"cell_size", {g.cell_x, g.cell_y}},
                  {"channels", c.model.channels},
                  {"stride", c.model.stride},
                  {"init_seed", c.model.init_seed}};

    const distill::TrainConfig& t = c.train;
    j["dma"] = {{"enabled", t.use_dma},
                {"tau_l", t.tau_l},
                {"tau_h", t.tau_h},
                {"probs", {t.dma_probs.fused, t.dma_probs.vehicle, t.dma_probs.infra}},
                {"samples", t.dma_samples}};
    j["train"] = {{"epochs", t.epochs},
                  {"lr", t.lr},
                  {"momentum", t.momentum},
                  {"grad_clip", t.grad_clip},
                  {"lambda_kd", t.lambda_kd},
                  {"pdd", t.use_pdd},
                  {"mask_mode", distill::mask_mode_name(t.mask_mode)},
                  {"pose_noise", noise_json(t.train_pose_noise.sigma_t, t.train_pose_noise.sigma_yaw)},
                  {"augment",
                   {{"enabled", t.augment.enabled},
                    {"flip_prob", t.augment.flip_prob},
                    {"max_rotation", t.augment.max_rotation},
                    {"min_scale", t.augment.min_scale},
                    {"max_scale", t.augment.max_scale}}},
                  {"focal", {{"alpha", t.focal.alpha}, {"gamma", t.focal.gamma}}},
                  {"max_rejected_steps", t.max_rejected_steps}};
    j["eval"] = {{"iou", c.eval.iou_thresholds},
                 {"score_thr", c.eval.score_thr},
                 {"nms_thr", c.eval.nms_thr},
                 {"pose_noise", {{"sigma_t", c.eval.noise.sigma_t},
                                 {"sigma_yaw", c.eval.noise.sigma_yaw},
                                 {"seed", c.eval.noise.seed}}}};
    return j;
}

RunConfig from_json(const json& doc) {
    ordered_json merged = to_json(RunConfig{});
    merge_strict(merged, doc, "");
    RunConfig c;
    try {
        const auto& j = merged;
        c.seed = j.at("seed");
        c.threads = j.at("threads");

        const auto& s = j.at("scene");
        c.scene.num_objects = s.at("num_objects");
        c.scene.length = interval(s.at("length"));
        c.scene.width = interval(s.at("width"));
        c.scene.height = interval(s.at("height"));
        c.scene.placement_region.center = {num(s.at("placement_center").at(0)), num(s.at("placement_center").at(1))};
        c.scene.placement_region.half_extents = {num(s.at("placement_half_extents").at(0)),
                                                 num(s.at("placement_half_extents").at(1))};
        c.scene.placement_region.yaw = s.at("placement_yaw");
        c.scene.vehicle_mount_height = s.at("vehicle_mount_height");
        c.scene.infra_mount_height = s.at("infra_mount_height");
        c.scene.infra_pitch_down = s.at("infra_pitch_down");
        c.scene.infra_x = interval(s.at("infra_x"));
        c.scene.infra_abs_y = interval(s.at("infra_abs_y"));
        c.scene.infra_yaw_jitter = s.at("infra_yaw_jitter");
        c.scene.pose_noise = {num(s.at("pose_noise").at("sigma_t")), num(s.at("pose_noise").at("sigma_yaw"))};
        c.scene.world.ground_return_prob = s.at("ground_return_prob");

        c.vehicle_sensor = sensor_from(j.at("sensors").at("vehicle"));
        c.infra_sensor = sensor_from(j.at("sensors").at("infra"));

        const auto& m = j.at("model");
        c.model.grid = geom::GridSpec::make(m.at("x_range").at(0), m.at("x_range").at(1), m.at("y_range").at(0),
                                            m.at("y_range").at(1), m.at("cell_size").at(0), m.at("cell_size").at(1),
                                            m.at("z_range").at(0), m.at("z_range").at(1));
        c.model.channels = m.at("channels");
        c.model.stride = m.at("stride");
        c.model.init_seed = m.at("init_seed");

        const auto& d = j.at("dma");
        c.train.use_dma = d.at("enabled");
        c.train.tau_l = d.at("tau_l");
        c.train.tau_h = d.at("tau_h");
        if (d.at("probs").size() != 3) {
            fail(ErrorKind::Usage, "config: dma.probs needs three entries (fused, vehicle, infra)");
        }
        c.train.dma_probs = {num(d.at("probs").at(0)), num(d.at("probs").at(1)), num(d.at("probs").at(2))};
        c.train.dma_samples = d.at("samples");

        const auto& t = j.at("train");
        c.train.epochs = t.at("epochs");
        c.train.lr = t.at("lr");
        c.train.momentum = t.at("momentum");
        c.train.grad_clip = t.at("grad_clip");
        c.train.lambda_kd = t.at("lambda_kd");
        c.train.use_pdd = t.at("pdd");
        c.train.mask_mode = distill::parse_mask_mode(t.at("mask_mode"));
        c.train.train_pose_noise = {num(t.at("pose_noise").at("sigma_t")), num(t.at("pose_noise").at("sigma_yaw"))};
        const auto& a = t.at("augment");
        c.train.augment = {a.at("enabled").get<bool>(), num(a.at("flip_prob")), num(a.at("max_rotation")),
                           num(a.at("min_scale")), num(a.at("max_scale"))};
        c.train.focal = {num(t.at("focal").at("alpha")), num(t.at("focal").at("gamma"))};
        c.train.max_rejected_steps = t.at("max_rejected_steps");
        c.train.seed = c.seed;

        const auto& e = j.at("eval");
        c.eval.iou_thresholds = e.at("iou").get<std::vector<double>>();
        c.eval.score_thr = e.at("score_thr");
        c.eval.nms_thr = e.at("nms_thr");
        c.eval.noise = {num(e.at("pose_noise").at("sigma_t")), num(e.at("pose_noise").at("sigma_yaw")),
                        e.at("pose_noise").at("seed").get<std::uint64_t>()};
        c.eval.threads = c.threads;
    } catch (const json::exception& ex) {
        fail(ErrorKind::Usage, std::string("config: ") + ex.what());
    } catch (const Error& ex) {
        fail(ErrorKind::Usage, std::string("config: ") + ex.what());
    }
    try {
        c.validate();
    } catch (const Error& ex) {
        fail(ErrorKind::Usage, std::string("config: ") + ex.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        fail(ErrorKind::Usage, "cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::exception& ex) {
        fail(ErrorKind::Usage, "config " + path.string() + " is not valid JSON: " + ex.what());
    }
    return from_json(doc);
}

void apply_override(ordered_json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        fail(ErrorKind::Usage, "override '" + assignment + "' must look like key.path=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    ordered_json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object()) {
            fail(ErrorKind::Usage, "override path '" + path + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

void echo_config(const std::filesystem::path& dir, const RunConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "effective_config.json");
    if (!os) {
        fail(ErrorKind::Data, "cannot write " + (dir / "effective_config.json").string());
    }
    os << to_json(cfg).dump(2) << '\n';
}

}  // namespace dvx::app
