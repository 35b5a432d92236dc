#include "dvx/model/offset_recovery.hpp"

#include <cmath>
#include <vector>

#include "dvx/core/error.hpp"
#include "dvx/core/rng.hpp"
#include "dvx/model/network.hpp"
#include "dvx/nn/ops.hpp"
#include "dvx/nn/optim.hpp"

namespace dvx::model {

namespace {

struct Blob {
    double r, c, amp;
    int ch;
};

// Sum of Gaussian blobs, evaluated at continuous (row, col) so the shifted copy has no border.
nn::Tensor<double> field(const std::vector<Blob>& blobs, const OffsetRecoveryConfig& cfg, double dr, double dc) {
    std::vector<double> v(static_cast<std::size_t>(cfg.height) * cfg.width * cfg.channels, 0.0);
    const double inv = 1.0 / (2.0 * cfg.blob_sigma * cfg.blob_sigma);
    for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
            for (const Blob& b : blobs) {
                const double y = r + dr - b.r;
                const double x = c + dc - b.c;
                v[(static_cast<std::size_t>(r) * cfg.width + c) * cfg.channels + b.ch] += b.amp * std::exp(-(x * x + y * y) * inv);
            }
        }
    }
    return nn::Tensor<double>::from({cfg.height, cfg.width, cfg.channels}, std::move(v));
}

struct Eval {
    double error, row, col;
};

Eval offset_error(const nn::Tensor<double>& offsets, const OffsetRecoveryConfig& cfg) {
    double err = 0.0, row = 0.0, col = 0.0;
    long n = 0;
    for (int r = cfg.margin; r < cfg.height - cfg.margin; ++r) {
        for (int c = cfg.margin; c < cfg.width - cfg.margin; ++c) {
            const double dr = offsets.at({r, c, 0});
            const double dc = offsets.at({r, c, 1});
            err += std::hypot(dr + cfg.shift_row, dc + cfg.shift_col);
            row += dr;
            col += dc;
            ++n;
        }
    }
    return {err / n, row / n, col / n};
}

}  // namespace

OffsetRecoveryResult run_offset_recovery(const OffsetRecoveryConfig& cfg) {
    if (cfg.height <= 2 * cfg.margin || cfg.width <= 2 * cfg.margin || cfg.channels < 1 || cfg.steps < 0) {
        fail(ErrorKind::Usage, "offset recovery: bad configuration");
    }
    Rng rng(derive_seed(cfg.seed, "offset-recovery"));
    std::vector<Blob> blobs;
    for (int k = 0; k < cfg.blobs; ++k) {
        Blob b;
        b.r = rng.uniform(-2.0 * cfg.blob_sigma, cfg.height + 2.0 * cfg.blob_sigma);
        b.c = rng.uniform(-2.0 * cfg.blob_sigma, cfg.width + 2.0 * cfg.blob_sigma);
        b.amp = rng.uniform(0.5, 1.5);
        b.ch = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.channels)));
        blobs.push_back(b);
    }
    const nn::Tensor<double> a = field(blobs, cfg, 0.0, 0.0);
    const nn::Tensor<double> b = field(blobs, cfg, cfg.shift_row, cfg.shift_col);

    ModelConfig mc;
    mc.channels = cfg.channels;
    mc.fusion = FusionKind::Daf;
    mc.init_seed = cfg.seed;
    Detector<double> net(mc);

    std::vector<double> weights(static_cast<std::size_t>(cfg.height) * cfg.width, 0.0);
    long cells = 0;
    for (int r = cfg.margin; r < cfg.height - cfg.margin; ++r) {
        for (int c = cfg.margin; c < cfg.width - cfg.margin; ++c) {
            weights[static_cast<std::size_t>(r) * cfg.width + c] = 1.0;
            ++cells;
        }
    }
    const double norm = 1.0 / (static_cast<double>(cells) * cfg.channels);
    const auto w = nn::Tensor<double>::from({cfg.height, cfg.width}, weights);

    auto loss_of = [&](nn::Tensor<double>* offsets_out) {
        const nn::Tensor<double> offsets = net.daf_offset(a, b);
        if (offsets_out) *offsets_out = offsets;
        const nn::Tensor<double> d = nn::sub(Detector<double>::daf_warp(b, offsets), a);
        return nn::scale(nn::sum(nn::scale_cells(nn::mul(d, d), w)), norm);
    };

    OffsetRecoveryResult res;
    nn::Sgd<double> opt(cfg.momentum);
    for (int step = 0; step <= cfg.steps; ++step) {
        net.params().zero_grad();
        nn::Tensor<double> offsets;
        const nn::Tensor<double> loss = loss_of(&offsets);
        if (step == 0) {
            res.initial_loss = loss.item();
            res.initial_error = offset_error(offsets, cfg).error;
        }
        if (step == cfg.steps) {
            const Eval e = offset_error(offsets, cfg);
            res.final_loss = loss.item();
            res.final_error = e.error;
            res.mean_row = e.row;
            res.mean_col = e.col;
            break;
        }
        if (!std::isfinite(loss.item())) {
            fail(ErrorKind::Numeric, "offset recovery diverged");
        }
        loss.backward();
        opt.step(net.params(), cfg.lr);
    }
    return res;
}

}  // namespace dvx::model
