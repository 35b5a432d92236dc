#pragma once

#include <span>

#include "dvx/distill/masks.hpp"
#include "dvx/model/network.hpp"
#include "dvx/model/targets.hpp"
#include "dvx/nn/tensor.hpp"

namespace dvx::distill {

struct FocalParams {
    double alpha = 0.25;
    double gamma = 2.0;
};

/// Cells where the teacher's sigmoid score reaches this value take part in loss_p.
constexpr double kPredictionDistillThreshold = 0.3;

/// masked_l1(B_t, B_v, M~_v) + masked_l1(B_t, B_i, M~_i). The teacher tensor must not require
/// a gradient.
template <typename T>
nn::Tensor<T> loss_da(const nn::Tensor<T>& b_t, const nn::Tensor<T>& b_v, const nn::Tensor<T>& b_i, const MaskSet& masks);

/// masked_l1(B_t, B_f, M) over the overlap mask.
template <typename T>
nn::Tensor<T> loss_f(const nn::Tensor<T>& b_t, const nn::Tensor<T>& b_f, const MaskSet& masks);

/// (1/K) sum over teacher-confident cells of |sigmoid(c_t) - sigmoid(c_s)| + |r_t - r_s|_1;
/// 0 when K = 0.
template <typename T>
nn::Tensor<T> loss_p(const model::HeadOutput<T>& teacher, const model::HeadOutput<T>& student,
                     double threshold = kPredictionDistillThreshold);

/// Focal classification loss over all cells plus L1 regression at positive cells, both divided
/// by max(1, number of positives).
template <typename T>
nn::Tensor<T> loss_detect(const model::HeadOutput<T>& out, const model::Targets& targets, const FocalParams& focal = {});

/// detect + lambda * (da + f + p). Undefined components count as absent.
template <typename T>
nn::Tensor<T> total_loss(const nn::Tensor<T>& detect, const nn::Tensor<T>& da, const nn::Tensor<T>& f,
                         const nn::Tensor<T>& p, double lambda_kd);

inline double total_loss(double detect, double da, double f, double p, double lambda_kd) {
    return detect + lambda_kd * (da + f + p);
}

}  // namespace dvx::distill
