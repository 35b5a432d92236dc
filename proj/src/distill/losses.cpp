#include "dvx/distill/losses.hpp"

#include <algorithm>

#include "dvx/core/error.hpp"
#include "dvx/nn/ops.hpp"

namespace dvx::distill {

using nn::Tensor;

namespace {

template <typename T>
void require_detached(const Tensor<T>& t, const char* op) {
    if (t.requires_grad()) {
        fail(ErrorKind::Usage, std::string(op) + ": teacher tensor must be detached");
    }
}

}  // namespace

template <typename T>
Tensor<T> loss_da(const Tensor<T>& b_t, const Tensor<T>& b_v, const Tensor<T>& b_i, const MaskSet& masks) {
    require_detached(b_t, "loss_da");
    return nn::add(nn::masked_l1(b_t, b_v, masks.vehicle_only), nn::masked_l1(b_t, b_i, masks.infra_only));
}

template <typename T>
Tensor<T> loss_f(const Tensor<T>& b_t, const Tensor<T>& b_f, const MaskSet& masks) {
    require_detached(b_t, "loss_f");
    return nn::masked_l1(b_t, b_f, masks.overlap);
}

template <typename T>
Tensor<T> loss_p(const model::HeadOutput<T>& teacher, const model::HeadOutput<T>& student, double threshold) {
    require_detached(teacher.cls, "loss_p");
    require_detached(teacher.reg, "loss_p");
    if (teacher.cls.shape() != student.cls.shape() || teacher.reg.shape() != student.reg.shape()) {
        fail(ErrorKind::Data, "loss_p: teacher/student head shapes differ");
    }
    const Tensor<T> t_score = nn::sigmoid(teacher.cls);
    std::vector<T> w(t_score.numel());
    std::size_t k = 0;
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (static_cast<double>(t_score.data()[c]) >= threshold) {
            w[c] = T(1);
            ++k;
        }
    }
    if (k == 0) {
        return Tensor<T>::scalar(T(0));
    }
    const T inv_k = T(1) / static_cast<T>(k);
    return nn::add(nn::weighted_l1<T>(nn::sigmoid(student.cls), t_score, w, inv_k),
                   nn::weighted_l1<T>(student.reg, teacher.reg, w, inv_k));
}

template <typename T>
Tensor<T> loss_detect(const model::HeadOutput<T>& out, const model::Targets& targets, const FocalParams& focal) {
    const std::size_t cells = out.cls.numel();
    if (targets.cls.size() != cells || targets.reg.size() != out.reg.numel()) {
        fail(ErrorKind::Data, "loss_detect: targets do not match head output " + nn::shape_str(out.cls.shape()));
    }
    const T norm = static_cast<T>(std::max<std::size_t>(targets.positives.size(), 1));
    std::vector<T> cls(targets.cls.begin(), targets.cls.end());
    Tensor<T> loss = nn::sigmoid_focal_loss<T>(out.cls, cls, static_cast<T>(focal.alpha), static_cast<T>(focal.gamma), norm);
    if (targets.positives.empty()) {
        return loss;
    }
    std::vector<T> reg(targets.reg.begin(), targets.reg.end());
    const Tensor<T> reg_target = Tensor<T>::from(out.reg.shape(), std::move(reg));
    return nn::add(loss, nn::weighted_l1<T>(out.reg, reg_target, cls, T(1) / norm));
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& detect, const Tensor<T>& da, const Tensor<T>& f, const Tensor<T>& p,
                     double lambda_kd) {
    if (lambda_kd < 0.0) {
        fail(ErrorKind::Data, "lambda_kd must be non-negative");
    }
    Tensor<T> kd;
    for (const Tensor<T>* term : {&da, &f, &p}) {
        if (term->defined()) {
            kd = kd.defined() ? nn::add(kd, *term) : *term;
        }
    }
    if (!kd.defined()) {
        return detect;
    }
    return nn::add(detect, nn::scale(kd, static_cast<T>(lambda_kd)));
}

#define DVX_INSTANTIATE_LOSSES(T)                                                                                   \
    template Tensor<T> loss_da<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const MaskSet&);           \
    template Tensor<T> loss_f<T>(const Tensor<T>&, const Tensor<T>&, const MaskSet&);                              \
    template Tensor<T> loss_p<T>(const model::HeadOutput<T>&, const model::HeadOutput<T>&, double);                \
    template Tensor<T> loss_detect<T>(const model::HeadOutput<T>&, const model::Targets&, const FocalParams&);     \
    template Tensor<T> total_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);

DVX_INSTANTIATE_LOSSES(float)
DVX_INSTANTIATE_LOSSES(double)
#undef DVX_INSTANTIATE_LOSSES

}  // namespace dvx::distill
