#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvx/core/error.hpp"
#include "dvx/nn/tensor.hpp"

namespace dvx::nn {

template <typename T>
struct NamedParam {
    std::string name;
    Tensor<T> tensor;
};

/// Ordered set of learnable tensors. Names are unique; order is insertion order, which is
/// also the checkpoint order.
template <typename T>
class ParamStore {
public:
    /// Conv kernel [k, k, cin, cout], Kaiming-uniform over fan-in k*k*cin. The draw is seeded by
    /// (seed, name) so it does not depend on creation order.
    Tensor<T> conv_kernel(const std::string& name, int k, int cin, int cout, std::uint64_t seed);
    Tensor<T> zeros(const std::string& name, Shape shape);
    Tensor<T> add(const std::string& name, Tensor<T> t);

    const std::vector<NamedParam<T>>& params() const { return params_; }
    std::vector<NamedParam<T>>& params() { return params_; }
    Tensor<T> get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::size_t size() const { return params_.size(); }
    std::size_t numel() const;

    void zero_grad();
    void set_requires_grad(bool r);

    /// Copies values from `other` by name; both stores must hold the same names and shapes.
    template <typename U>
    void copy_from(const ParamStore<U>& other);

private:
    std::vector<NamedParam<T>> params_;
};

template <typename T>
template <typename U>
void ParamStore<T>::copy_from(const ParamStore<U>& other) {
    for (auto& p : params_) {
        const Tensor<U> src = other.get(p.name);
        if (src.shape() != p.tensor.shape()) {
            fail(ErrorKind::Data, "copy_from: shape mismatch for " + p.name);
        }
        auto dst = p.tensor.mutable_data();
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] = static_cast<T>(src.data()[k]);
        }
    }
}

}  // namespace dvx::nn
