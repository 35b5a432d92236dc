// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "dvx/nn/kernels.hpp"

namespace dvx::nn::kernels::avx2 {

namespace {

inline float hsum(__m256 v) {
    const __m128 lo = _mm256_castps256_ps128(v);
    const __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_add_ps(s, _mm_movehl_ps(s, s));
    s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
    return _mm_cvtss_f32(s);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
    return _mm_cvtsd_f64(s);
}

}  // namespace

void gemv_t_acc_f32(int n_in, int n_out, const float* x, const float* w, float* y) {
    int o = 0;
    for (; o + 32 <= n_out; o += 32) {
        __m256 a0 = _mm256_loadu_ps(y + o);
        __m256 a1 = _mm256_loadu_ps(y + o + 8);
        __m256 a2 = _mm256_loadu_ps(y + o + 16);
        __m256 a3 = _mm256_loadu_ps(y + o + 24);
        for (int i = 0; i < n_in; ++i) {
            if (x[i] == 0.0f) {
                continue;
            }
            const __m256 xi = _mm256_set1_ps(x[i]);
            const float* row = w + static_cast<long>(i) * n_out + o;
            a0 = _mm256_fmadd_ps(xi, _mm256_loadu_ps(row), a0);
            a1 = _mm256_fmadd_ps(xi, _mm256_loadu_ps(row + 8), a1);
            a2 = _mm256_fmadd_ps(xi, _mm256_loadu_ps(row + 16), a2);
            a3 = _mm256_fmadd_ps(xi, _mm256_loadu_ps(row + 24), a3);
        }
        _mm256_storeu_ps(y + o, a0);
        _mm256_storeu_ps(y + o + 8, a1);
        _mm256_storeu_ps(y + o + 16, a2);
        _mm256_storeu_ps(y + o + 24, a3);
    }
    for (; o + 8 <= n_out; o += 8) {
        __m256 a = _mm256_loadu_ps(y + o);
        for (int i = 0; i < n_in; ++i) {
            if (x[i] == 0.0f) {
                continue;
            }
            a = _mm256_fmadd_ps(_mm256_set1_ps(x[i]), _mm256_loadu_ps(w + static_cast<long>(i) * n_out + o), a);
        }
        _mm256_storeu_ps(y + o, a);
    }
    for (; o < n_out; ++o) {
        float a = y[o];
        for (int i = 0; i < n_in; ++i) {
            a += x[i] * w[static_cast<long>(i) * n_out + o];
        }
        y[o] = a;
    }
}

void gemv_acc_f32(int n_in, int n_out, const float* w, const float* g, float* gx) {
    for (int i = 0; i < n_in; ++i) {
        const float* row = w + static_cast<long>(i) * n_out;
        __m256 acc = _mm256_setzero_ps();
        int o = 0;
        for (; o + 8 <= n_out; o += 8) {
            acc = _mm256_fmadd_ps(_mm256_loadu_ps(row + o), _mm256_loadu_ps(g + o), acc);
        }
        float tail = 0.0f;
        for (; o < n_out; ++o) {
            tail += row[o] * g[o];
        }
        gx[i] += hsum(acc) + tail;
    }
}

void ger_acc_f32(int n_in, int n_out, const float* x, const float* g, float* gw) {
    for (int i = 0; i < n_in; ++i) {
        if (x[i] == 0.0f) {
            continue;
        }
        const __m256 xi = _mm256_set1_ps(x[i]);
        float* row = gw + static_cast<long>(i) * n_out;
        int o = 0;
        for (; o + 8 <= n_out; o += 8) {
            _mm256_storeu_ps(row + o, _mm256_fmadd_ps(xi, _mm256_loadu_ps(g + o), _mm256_loadu_ps(row + o)));
        }
        for (; o < n_out; ++o) {
            row[o] += x[i] * g[o];
        }
    }
}

void gemv_t_acc_f64(int n_in, int n_out, const double* x, const double* w, double* y) {
    int o = 0;
    for (; o + 16 <= n_out; o += 16) {
        __m256d a0 = _mm256_loadu_pd(y + o);
        __m256d a1 = _mm256_loadu_pd(y + o + 4);
        __m256d a2 = _mm256_loadu_pd(y + o + 8);
        __m256d a3 = _mm256_loadu_pd(y + o + 12);
        for (int i = 0; i < n_in; ++i) {
            if (x[i] == 0.0) {
                continue;
            }
            const __m256d xi = _mm256_set1_pd(x[i]);
            const double* row = w + static_cast<long>(i) * n_out + o;
            a0 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(row), a0);
            a1 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(row + 4), a1);
            a2 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(row + 8), a2);
            a3 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(row + 12), a3);
        }
        _mm256_storeu_pd(y + o, a0);
        _mm256_storeu_pd(y + o + 4, a1);
        _mm256_storeu_pd(y + o + 8, a2);
        _mm256_storeu_pd(y + o + 12, a3);
    }
    for (; o + 4 <= n_out; o += 4) {
        __m256d a = _mm256_loadu_pd(y + o);
        for (int i = 0; i < n_in; ++i) {
            if (x[i] == 0.0) {
                continue;
            }
            a = _mm256_fmadd_pd(_mm256_set1_pd(x[i]), _mm256_loadu_pd(w + static_cast<long>(i) * n_out + o), a);
        }
        _mm256_storeu_pd(y + o, a);
    }
    for (; o < n_out; ++o) {
        double a = y[o];
        for (int i = 0; i < n_in; ++i) {
            a += x[i] * w[static_cast<long>(i) * n_out + o];
        }
        y[o] = a;
    }
}

void gemv_acc_f64(int n_in, int n_out, const double* w, const double* g, double* gx) {
    for (int i = 0; i < n_in; ++i) {
        const double* row = w + static_cast<long>(i) * n_out;
        __m256d acc = _mm256_setzero_pd();
        int o = 0;
        for (; o + 4 <= n_out; o += 4) {
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + o), _mm256_loadu_pd(g + o), acc);
        }
        double tail = 0.0;
        for (; o < n_out; ++o) {
            tail += row[o] * g[o];
        }
        gx[i] += hsum(acc) + tail;
    }
}

void ger_acc_f64(int n_in, int n_out, const double* x, const double* g, double* gw) {
    for (int i = 0; i < n_in; ++i) {
        if (x[i] == 0.0) {
            continue;
        }
        const __m256d xi = _mm256_set1_pd(x[i]);
        double* row = gw + static_cast<long>(i) * n_out;
        int o = 0;
        for (; o + 4 <= n_out; o += 4) {
            _mm256_storeu_pd(row + o, _mm256_fmadd_pd(xi, _mm256_loadu_pd(g + o), _mm256_loadu_pd(row + o)));
        }
        for (; o < n_out; ++o) {
            row[o] += x[i] * g[o];
        }
    }
}

}  // namespace dvx::nn::kernels::avx2
