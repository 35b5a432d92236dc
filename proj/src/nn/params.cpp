#include "dvx/nn/params.hpp"

#include <cmath>

#include "dvx/core/error.hpp"
#include "dvx/core/rng.hpp"

namespace dvx::nn {

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, Tensor<T> t) {
    if (contains(name)) {
        fail(ErrorKind::Data, "duplicate parameter name " + name);
    }
    t.set_requires_grad(true);
    params_.push_back({name, t});
    return t;
}

template <typename T>
Tensor<T> ParamStore<T>::conv_kernel(const std::string& name, int k, int cin, int cout, std::uint64_t seed) {
    const double bound = std::sqrt(6.0 / static_cast<double>(k * k * cin));
    Rng rng(derive_seed(seed, name));
    std::vector<T> v(static_cast<std::size_t>(k) * k * cin * cout);
    for (T& x : v) {
        x = static_cast<T>(rng.uniform(-bound, bound));
    }
    return add(name, Tensor<T>::from({k, k, cin, cout}, std::move(v)));
}

template <typename T>
Tensor<T> ParamStore<T>::zeros(const std::string& name, Shape shape) {
    return add(name, Tensor<T>::zeros(std::move(shape)));
}

template <typename T>
Tensor<T> ParamStore<T>::get(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) {
            return p.tensor;
        }
    }
    fail(ErrorKind::Data, "unknown parameter " + name);
}

template <typename T>
bool ParamStore<T>::contains(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) {
            return true;
        }
    }
    return false;
}

template <typename T>
std::size_t ParamStore<T>::numel() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += p.tensor.numel();
    }
    return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
    for (auto& p : params_) {
        p.tensor.zero_grad();
    }
}

template <typename T>
void ParamStore<T>::set_requires_grad(bool r) {
    for (auto& p : params_) {
        p.tensor.set_requires_grad(r);
    }
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace dvx::nn
