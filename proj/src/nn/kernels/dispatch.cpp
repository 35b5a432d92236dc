#include <atomic>

#include "dvx/core/error.hpp"
#include "dvx/nn/kernels.hpp"

namespace dvx::nn::kernels {

namespace {

#if defined(DVX_HAVE_AVX2)
constexpr bool kAvx2Built = true;
#else
constexpr bool kAvx2Built = false;
#endif

Backend default_backend() { return avx2_supported() ? Backend::Avx2 : Backend::Scalar; }

std::atomic<Backend>& current() {
    static std::atomic<Backend> b{default_backend()};
    return b;
}

template <typename T>
constexpr KernelTable<T> kScalar{&scalar::gemv_t_acc<T>, &scalar::gemv_acc<T>, &scalar::ger_acc<T>};

#if defined(DVX_HAVE_AVX2)
constexpr KernelTable<float> kAvx2F32{&avx2::gemv_t_acc_f32, &avx2::gemv_acc_f32, &avx2::ger_acc_f32};
constexpr KernelTable<double> kAvx2F64{&avx2::gemv_t_acc_f64, &avx2::gemv_acc_f64, &avx2::ger_acc_f64};
#endif

}  // namespace

bool avx2_supported() {
#if defined(DVX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported()) {
        fail(ErrorKind::Usage, kAvx2Built ? "CPU lacks AVX2/FMA" : "built without AVX2 kernels");
    }
    current().store(b, std::memory_order_relaxed);
}

void reset_backend() { current().store(default_backend(), std::memory_order_relaxed); }

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

template <typename T>
const KernelTable<T>& table_for(Backend b) {
#if defined(DVX_HAVE_AVX2)
    if (b == Backend::Avx2) {
        if constexpr (std::is_same_v<T, float>) {
            return kAvx2F32;
        } else {
            return kAvx2F64;
        }
    }
#endif
    return kScalar<T>;
}

template <typename T>
const KernelTable<T>& table() {
    return table_for<T>(active_backend());
}

template const KernelTable<float>& table_for<float>(Backend);
template const KernelTable<double>& table_for<double>(Backend);
template const KernelTable<float>& table<float>();
template const KernelTable<double>& table<double>();

}  // namespace dvx::nn::kernels
