#include "dvx/nn/kernels.hpp"

namespace dvx::nn::kernels::scalar {

template <typename T>
void gemv_t_acc(int n_in, int n_out, const T* x, const T* w, T* y) {
    for (int i = 0; i < n_in; ++i) {
        const T xi = x[i];
        if (xi == T(0)) {
            continue;
        }
        const T* row = w + static_cast<long>(i) * n_out;
        for (int o = 0; o < n_out; ++o) {
            y[o] += xi * row[o];
        }
    }
}

template <typename T>
void gemv_acc(int n_in, int n_out, const T* w, const T* g, T* gx) {
    for (int i = 0; i < n_in; ++i) {
        const T* row = w + static_cast<long>(i) * n_out;
        T acc = 0;
        for (int o = 0; o < n_out; ++o) {
            acc += row[o] * g[o];
        }
        gx[i] += acc;
    }
}

template <typename T>
void ger_acc(int n_in, int n_out, const T* x, const T* g, T* gw) {
    for (int i = 0; i < n_in; ++i) {
        const T xi = x[i];
        if (xi == T(0)) {
            continue;
        }
        T* row = gw + static_cast<long>(i) * n_out;
        for (int o = 0; o < n_out; ++o) {
            row[o] += xi * g[o];
        }
    }
}

template void gemv_t_acc<float>(int, int, const float*, const float*, float*);
template void gemv_t_acc<double>(int, int, const double*, const double*, double*);
template void gemv_acc<float>(int, int, const float*, const float*, float*);
template void gemv_acc<double>(int, int, const double*, const double*, double*);
template void ger_acc<float>(int, int, const float*, const float*, float*);
template void ger_acc<double>(int, int, const double*, const double*, double*);

}  // namespace dvx::nn::kernels::scalar
