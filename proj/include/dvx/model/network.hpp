#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dvx/core/point_cloud.hpp"
#include "dvx/geom/grid.hpp"
#include "dvx/nn/params.hpp"
#include "dvx/nn/tensor.hpp"

namespace dvx::model {

/// How a two-branch model merges its vehicle and infrastructure features.
enum class FusionKind { None, Sum, Daf };

const char* fusion_name(FusionKind f);
FusionKind parse_fusion(const std::string& s);

/// x in [-40, 40], y in [-20, 20], z in [-3.5, 1.5], 0.8 m cells: 100 x 50 pillars.
geom::GridSpec desk_grid();
/// x in [-100, 100], y in [-40, 40], z in [-3.5, 1.5], 0.4 m cells: 500 x 200 pillars.
geom::GridSpec paper_grid();

struct ModelConfig {
    geom::GridSpec grid = desk_grid();
    int channels = 32;
    int stride = 2;
    FusionKind fusion = FusionKind::None;
    std::uint64_t init_seed = 0;

    void validate() const;
    geom::GridSpec feature_grid() const { return grid.downsampled(stride); }
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct HeadOutput {
    nn::Tensor<T> cls;  // H x W x 1 logits
    nn::Tensor<T> reg;  // H x W x 8: dx, dy, z, log h, log w, log l, sin, cos
};

/// Intermediate tensors of one DAF pass, kept for inspection and tests.
template <typename T>
struct DafTrace {
    nn::Tensor<T> offsets;      // H x W x 2, (row, col) cells
    nn::Tensor<T> warped;       // H x W x C
    nn::Tensor<T> domain_att;   // H x W x C x 2
    nn::Tensor<T> spatial_att;  // H x W
};

/// Pillar encoder + optional fusion block + anchor-free head. A two-branch model runs the same
/// encoder parameters over both agents' pillars, so the branches share weights by construction.
template <typename T>
class Detector {
public:
    explicit Detector(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    nn::ParamStore<T>& params() { return params_; }
    const nn::ParamStore<T>& params() const { return params_; }

    /// Pillars H0 x W0 x 6 -> feature H x W x C. The count channel is log1p-compressed first.
    nn::Tensor<T> encode(const nn::Tensor<T>& pillars) const;
    nn::Tensor<T> encode_cloud(const PointCloud& cloud) const;

    HeadOutput<T> head(const nn::Tensor<T>& feature) const;

    /// Merges vehicle and (already projected) infrastructure features per the configured kind.
    nn::Tensor<T> fuse(const nn::Tensor<T>& b_v, const nn::Tensor<T>& b_i, DafTrace<T>* trace = nullptr) const;

    // DAF stages, exposed individually.
    nn::Tensor<T> daf_offset(const nn::Tensor<T>& b_v, const nn::Tensor<T>& b_i) const;
    static nn::Tensor<T> daf_warp(const nn::Tensor<T>& b_i, const nn::Tensor<T>& offsets);
    nn::Tensor<T> daf_domain_attention(const nn::Tensor<T>& b_cat) const;
    nn::Tensor<T> daf_spatial_attention(const nn::Tensor<T>& b_cat) const;
    nn::Tensor<T> daf_fuse(const nn::Tensor<T>& b_v, const nn::Tensor<T>& b_i_warped, const nn::Tensor<T>& a_d,
                           const nn::Tensor<T>& a_s) const;

private:
    nn::Tensor<T> conv(const std::string& name, const nn::Tensor<T>& x, int stride = 1) const;
    void add_conv(const std::string& name, int k, int cin, int cout, bool zero_kernel = false);

    ModelConfig cfg_;
    nn::ParamStore<T> params_;
};

/// Architecture sidecar written next to checkpoints.
void write_architecture(const std::filesystem::path& path, const ModelConfig& cfg, const std::string& role);
ModelConfig read_architecture(const std::filesystem::path& path, std::string* role = nullptr);

}  // namespace dvx::model
