#include "dvx/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "dvx/core/error.hpp"

namespace dvx::nn {

template <typename T>
bool Sgd<T>::step(ParamStore<T>& params, T lr) {
    if (!(lr > T(0))) {
        fail(ErrorKind::Usage, "sgd: learning rate must be positive");
    }
    auto& ps = params.params();
    for (const auto& p : ps) {
        if (!p.tensor.has_grad()) {
            continue;
        }
        for (const T g : p.tensor.grad()) {
            if (!std::isfinite(g)) {
                return false;
            }
        }
    }
    if (velocity_.size() != ps.size()) {
        velocity_.assign(ps.size(), {});
    }
    for (std::size_t k = 0; k < ps.size(); ++k) {
        Tensor<T>& t = ps[k].tensor;
        auto& v = velocity_[k];
        if (v.size() != t.numel()) {
            v.assign(t.numel(), T(0));
        }
        const bool has = t.has_grad();
        auto g = t.grad();
        auto data = t.mutable_data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = momentum_ * v[i] + (has ? g[i] : T(0));
            data[i] -= lr * v[i];
        }
    }
    return true;
}

template <typename T>
double clip_grad_norm(ParamStore<T>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params.params()) {
        if (p.tensor.has_grad()) {
            for (const T g : p.tensor.grad()) {
                sq += static_cast<double>(g) * static_cast<double>(g);
            }
        }
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && std::isfinite(norm) && norm > max_norm) {
        const T s = static_cast<T>(max_norm / norm);
        for (auto& p : params.params()) {
            if (p.tensor.has_grad()) {
                for (T& g : p.tensor.mutable_grad()) {
                    g *= s;
                }
            }
        }
    }
    return norm;
}

double cosine_lr(double base_lr, long step, long total_steps) {
    if (total_steps <= 0) {
        return base_lr;
    }
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

template double clip_grad_norm<float>(ParamStore<float>&, double);
template double clip_grad_norm<double>(ParamStore<double>&, double);
template class Sgd<float>;
template class Sgd<double>;

}  // namespace dvx::nn
