#pragma once

#include <vector>

#include "dvx/nn/params.hpp"

namespace dvx::nn {

/// Heavy-ball SGD: v <- mu v + g; p <- p - lr v.
template <typename T>
class Sgd {
public:
    explicit Sgd(T momentum = T(0.9)) : momentum_(momentum) {}

    /// Applies one step to every parameter. Parameters without a gradient count as zero
    /// gradient. If any gradient entry is non-finite nothing is changed and false is returned.
    bool step(ParamStore<T>& params, T lr);

    T momentum() const { return momentum_; }

private:
    T momentum_;
    std::vector<std::vector<T>> velocity_;
};

/// Rescales all gradients so their joint L2 norm is at most max_norm. Returns the norm before
/// clipping (non-finite if any entry is). max_norm <= 0 disables clipping.
template <typename T>
double clip_grad_norm(ParamStore<T>& params, double max_norm);

/// Cosine decay from base_lr at step 0 to 0 at total_steps.
double cosine_lr(double base_lr, long step, long total_steps);

}  // namespace dvx::nn
