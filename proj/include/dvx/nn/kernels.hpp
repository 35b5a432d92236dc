#pragma once

// Inner loops of the convolution forward and backward passes.
//
// Every kernel exists as a portable scalar reference and, on x86-64, as an AVX2/FMA variant
// compiled separately and picked at runtime from the CPU's feature flags. Both variants share
// one signature so the dispatch table is a pair of function pointers per kernel.

#include <string_view>

namespace dvx::nn::kernels {

enum class Backend { Scalar, Avx2 };

/// Weight matrices are row-major n_in x n_out.
template <typename T>
struct KernelTable {
    /// y[o] += sum_i x[i] * w[i, o]
    void (*gemv_t_acc)(int n_in, int n_out, const T* x, const T* w, T* y);
    /// gx[i] += sum_o w[i, o] * g[o]
    void (*gemv_acc)(int n_in, int n_out, const T* w, const T* g, T* gx);
    /// gw[i, o] += x[i] * g[o]
    void (*ger_acc)(int n_in, int n_out, const T* x, const T* g, T* gw);
};

bool avx2_supported();
Backend active_backend();
/// Forces a backend; requesting Avx2 on a machine without it throws dvx::Error.
void set_backend(Backend b);
/// Restores the default choice (Avx2 when supported).
void reset_backend();
std::string_view backend_name(Backend b);

template <typename T>
const KernelTable<T>& table();

template <typename T>
const KernelTable<T>& table_for(Backend b);

namespace scalar {
template <typename T>
void gemv_t_acc(int n_in, int n_out, const T* x, const T* w, T* y);
template <typename T>
void gemv_acc(int n_in, int n_out, const T* w, const T* g, T* gx);
template <typename T>
void ger_acc(int n_in, int n_out, const T* x, const T* g, T* gw);
}  // namespace scalar

namespace avx2 {
void gemv_t_acc_f32(int n_in, int n_out, const float* x, const float* w, float* y);
void gemv_acc_f32(int n_in, int n_out, const float* w, const float* g, float* gx);
void ger_acc_f32(int n_in, int n_out, const float* x, const float* g, float* gw);
void gemv_t_acc_f64(int n_in, int n_out, const double* x, const double* w, double* y);
void gemv_acc_f64(int n_in, int n_out, const double* w, const double* g, double* gx);
void ger_acc_f64(int n_in, int n_out, const double* x, const double* g, double* gw);
}  // namespace avx2

}  // namespace dvx::nn::kernels
