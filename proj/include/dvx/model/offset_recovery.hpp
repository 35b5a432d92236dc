#pragma once

#include <cstdint>

namespace dvx::model {

/// Constructed misregistration: a smooth random feature A and a copy B displaced so that
/// B(p) = A(p + shift). Only the DAF offset conv is trained, on the squared error between
/// daf_warp(B, offset(A, B)) and A over interior cells. The ideal offset is -shift everywhere.
struct OffsetRecoveryConfig {
    int height = 24;
    int width = 24;
    int channels = 8;
    double shift_row = 2.0;
    double shift_col = 0.0;
    int blobs = 24;
    double blob_sigma = 2.5;  // cells
    int steps = 1000;
    double lr = 0.2;
    double momentum = 0.9;
    int margin = 3;  // cells excluded at every border from loss and error
    std::uint64_t seed = 42;
};

struct OffsetRecoveryResult {
    double initial_error = 0.0;  // mean |offset - (-shift)| in cells before training
    double final_error = 0.0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double mean_row = 0.0;  // mean predicted offset over the interior after training
    double mean_col = 0.0;
};

OffsetRecoveryResult run_offset_recovery(const OffsetRecoveryConfig& cfg);

}  // namespace dvx::model
