#include "dvx/model/network.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dvx/core/error.hpp"
#include "dvx/model/pillars.hpp"
#include "dvx/nn/ops.hpp"

namespace dvx::model {

using nn::Shape;
using nn::Tensor;

const char* fusion_name(FusionKind f) {
    switch (f) {
        case FusionKind::None: return "none";
        case FusionKind::Sum: return "sum";
        case FusionKind::Daf: return "daf";
    }
    return "?";
}

FusionKind parse_fusion(const std::string& s) {
    if (s == "none") return FusionKind::None;
    if (s == "sum") return FusionKind::Sum;
    if (s == "daf") return FusionKind::Daf;
    fail(ErrorKind::Usage, "unknown fusion kind '" + s + "' (expected none, sum, daf)");
}

geom::GridSpec desk_grid() { return geom::GridSpec::make(-40.0, 40.0, -20.0, 20.0, 0.8, 0.8, -3.5, 1.5); }

geom::GridSpec paper_grid() { return geom::GridSpec::make(-100.0, 100.0, -40.0, 40.0, 0.4, 0.4, -3.5, 1.5); }

void ModelConfig::validate() const {
    grid.validate();
    if (channels < 8) {
        fail(ErrorKind::Data, "model channels must be >= 8, got " + std::to_string(channels));
    }
    if (stride != 1 && stride != 2) {
        fail(ErrorKind::Data, "model stride must be 1 or 2, got " + std::to_string(stride));
    }
}

template <typename T>
Detector<T>::Detector(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int c = cfg_.channels;
    add_conv("enc.c1", 1, kPillarChannels, c);
    add_conv("enc.c2", 3, c, c);
    add_conv("enc.c3", 3, c, c);
    if (cfg_.fusion == FusionKind::Daf) {
        add_conv("daf.offset", 3, 2 * c, 2, true);
        add_conv("daf.dom.c3", 3, 2 * c, 2 * c);
        add_conv("daf.dom.c1a", 1, 2 * c, 2 * c);
        add_conv("daf.dom.c1b", 1, 2 * c, 2 * c);
        add_conv("daf.sp.c3", 3, 2 * c, 1);
        add_conv("daf.sp.c5", 5, 2 * c, 1);
        add_conv("daf.fuse", 1, 2 * c, c);
    }
    add_conv("head.c", 3, c, c);
    add_conv("head.cls", 1, c, 1);
    add_conv("head.reg", 1, c, 8);
}

template <typename T>
void Detector<T>::add_conv(const std::string& name, int k, int cin, int cout, bool zero_kernel) {
    if (zero_kernel) {
        params_.zeros(name + ".w", {k, k, cin, cout});
    } else {
        params_.conv_kernel(name + ".w", k, cin, cout, cfg_.init_seed);
    }
    params_.zeros(name + ".b", {cout});
}

template <typename T>
Tensor<T> Detector<T>::conv(const std::string& name, const Tensor<T>& x, int stride) const {
    return nn::conv2d(x, params_.get(name + ".w"), params_.get(name + ".b"), stride);
}

template <typename T>
Tensor<T> Detector<T>::encode(const Tensor<T>& pillars) const {
    if (pillars.rank() != 3 || pillars.dim(0) != cfg_.grid.height || pillars.dim(1) != cfg_.grid.width ||
        pillars.dim(2) != kPillarChannels) {
        fail(ErrorKind::Data, "encode: expected pillars [" + std::to_string(cfg_.grid.height) + "x" +
                                  std::to_string(cfg_.grid.width) + "x6], got " + nn::shape_str(pillars.shape()));
    }
    std::vector<T> v(pillars.data().begin(), pillars.data().end());
    for (std::size_t k = kCount; k < v.size(); k += kPillarChannels) {
        v[k] = std::log1p(v[k]);
    }
    const Tensor<T> x = Tensor<T>::from(pillars.shape(), std::move(v));
    Tensor<T> h = nn::relu(conv("enc.c1", x));
    h = nn::relu(conv("enc.c2", h, cfg_.stride));
    return nn::relu(conv("enc.c3", h));
}

template <typename T>
Tensor<T> Detector<T>::encode_cloud(const PointCloud& cloud) const {
    return encode(pillarize<T>(cloud, cfg_.grid));
}

template <typename T>
HeadOutput<T> Detector<T>::head(const Tensor<T>& feature) const {
    const Tensor<T> h = nn::relu(conv("head.c", feature));
    return {conv("head.cls", h), conv("head.reg", h)};
}

template <typename T>
Tensor<T> Detector<T>::daf_offset(const Tensor<T>& b_v, const Tensor<T>& b_i) const {
    return conv("daf.offset", nn::concat(b_v, b_i, 2));
}

template <typename T>
Tensor<T> Detector<T>::daf_warp(const Tensor<T>& b_i, const Tensor<T>& offsets) {
    return nn::bilinear_sample(b_i, offsets);
}

template <typename T>
Tensor<T> Detector<T>::daf_domain_attention(const Tensor<T>& b_cat) const {
    const Shape& s = b_cat.shape();
    const Tensor<T> x = nn::reshape(b_cat, {s[0], s[1], s[2] * s[3]});
    Tensor<T> h = nn::relu(conv("daf.dom.c3", x));
    h = nn::relu(conv("daf.dom.c1a", h));
    h = conv("daf.dom.c1b", h);
    return nn::softmax(nn::reshape(nn::add(x, h), s), 3);
}

template <typename T>
Tensor<T> Detector<T>::daf_spatial_attention(const Tensor<T>& b_cat) const {
    const Shape& s = b_cat.shape();
    const Tensor<T> x = nn::reshape(b_cat, {s[0], s[1], s[2] * s[3]});
    const Tensor<T> path = nn::add(conv("daf.sp.c3", x), conv("daf.sp.c5", x));
    return nn::add(nn::reshape(path, {s[0], s[1]}), nn::max_trailing(b_cat, 2));
}

template <typename T>
Tensor<T> Detector<T>::daf_fuse(const Tensor<T>& b_v, const Tensor<T>& b_i_warped, const Tensor<T>& a_d,
                                const Tensor<T>& a_s) const {
    const Tensor<T> b_cat = nn::stack_last(b_v, b_i_warped);
    const Tensor<T> weighted = nn::scale_cells(nn::mul(a_d, b_cat), a_s);
    return conv("daf.fuse", nn::reshape(weighted, {b_v.dim(0), b_v.dim(1), 2 * b_v.dim(2)}));
}

template <typename T>
Tensor<T> Detector<T>::fuse(const Tensor<T>& b_v, const Tensor<T>& b_i, DafTrace<T>* trace) const {
    switch (cfg_.fusion) {
        case FusionKind::None:
            fail(ErrorKind::Usage, "fuse() called on a single-branch model");
        case FusionKind::Sum:
            return nn::add(b_v, b_i);
        case FusionKind::Daf: {
            const Tensor<T> offsets = daf_offset(b_v, b_i);
            const Tensor<T> warped = daf_warp(b_i, offsets);
            const Tensor<T> b_cat = nn::stack_last(b_v, warped);
            const Tensor<T> a_d = daf_domain_attention(b_cat);
            const Tensor<T> a_s = daf_spatial_attention(b_cat);
            if (trace) {
                *trace = {offsets, warped, a_d, a_s};
            }
            return daf_fuse(b_v, warped, a_d, a_s);
        }
    }
    fail(ErrorKind::Usage, "bad fusion kind");
}

void write_architecture(const std::filesystem::path& path, const ModelConfig& cfg, const std::string& role) {
    const geom::GridSpec& g = cfg.grid;
    nlohmann::ordered_json j;
    j["format"] = "dvx-architecture";
    j["version"] = 1;
    j["role"] = role;
    j["fusion"] = fusion_name(cfg.fusion);
    j["channels"] = cfg.channels;
    j["stride"] = cfg.stride;
    j["init_seed"] = cfg.init_seed;
    j["grid"] = {{"x_range", {g.x_min, g.x_max}}, {"y_range", {g.y_min, g.y_max}}, {"z_range", {g.z_min, g.z_max}},
                 {"cell_size", {g.cell_x, g.cell_y}}};
    std::ofstream os(path);
    if (!os) {
        fail(ErrorKind::Data, "cannot write " + path.string());
    }
    os << j.dump(2) << '\n';
}

ModelConfig read_architecture(const std::filesystem::path& path, std::string* role) {
    std::ifstream is(path);
    if (!is) {
        fail(ErrorKind::Data, "cannot open architecture file " + path.string());
    }
    try {
        const auto j = nlohmann::json::parse(is);
        if (j.at("format") != "dvx-architecture") {
            fail(ErrorKind::Data, path.string() + " is not an architecture file");
        }
        ModelConfig cfg;
        const auto& g = j.at("grid");
        cfg.grid = geom::GridSpec::make(g.at("x_range")[0], g.at("x_range")[1], g.at("y_range")[0],
                                        g.at("y_range")[1], g.at("cell_size")[0], g.at("cell_size")[1],
                                        g.at("z_range")[0], g.at("z_range")[1]);
        cfg.channels = j.at("channels");
        cfg.stride = j.at("stride");
        cfg.init_seed = j.at("init_seed");
        cfg.fusion = parse_fusion(j.at("fusion"));
        if (role) {
            *role = j.at("role");
        }
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Data, "malformed architecture file " + path.string() + ": " + e.what());
    }
}

template class Detector<float>;
template class Detector<double>;

}  // namespace dvx::model
