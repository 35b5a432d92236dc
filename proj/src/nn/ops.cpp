#include "dvx/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "dvx/core/error.hpp"
#include "dvx/nn/kernels.hpp"

namespace dvx::nn {

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        fail(ErrorKind::Data, std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

// grad buffer of the k-th parent, or nullptr when that parent does not want one
template <typename T>
T* parent_grad(Node<T>& out, std::size_t k) {
    Node<T>* p = out.parents[k].get();
    return p->requires_grad ? p->ensure_grad() : nullptr;
}

template <typename T>
const std::vector<T>& parent_value(Node<T>& out, std::size_t k) {
    return out.parents[k]->value;
}

int normalize_axis(int axis, int rank, const char* op) {
    if (axis < 0) {
        axis += rank;
    }
    if (axis < 0 || axis >= rank) {
        fail(ErrorKind::Data, std::string(op) + ": axis out of range");
    }
    return axis;
}

struct AxisSplit {
    std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
    AxisSplit r;
    for (int k = 0; k < axis; ++k) {
        r.outer *= static_cast<std::size_t>(s[k]);
    }
    r.n = static_cast<std::size_t>(s[axis]);
    for (std::size_t k = static_cast<std::size_t>(axis) + 1; k < s.size(); ++k) {
        r.inner *= static_cast<std::size_t>(s[k]);
    }
    return r;
}

template <typename T>
T softplus(T x) {
    return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    std::vector<T> v(a.numel());
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = av[k] + bv[k];
    }
    return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& out) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (T* g = parent_grad(out, p)) {
                for (std::size_t k = 0; k < out.grad.size(); ++k) {
                    g[k] += out.grad[k];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "sub");
    std::vector<T> v(a.numel());
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = av[k] - bv[k];
    }
    return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                g[k] += out.grad[k];
            }
        }
        if (T* g = parent_grad(out, 1)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                g[k] -= out.grad[k];
            }
        }
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mul");
    std::vector<T> v(a.numel());
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = av[k] * bv[k];
    }
    return make_result<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& out) {
        const auto& av = parent_value(out, 0);
        const auto& bv = parent_value(out, 1);
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                g[k] += out.grad[k] * bv[k];
            }
        }
        if (T* g = parent_grad(out, 1)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                g[k] += out.grad[k] * av[k];
            }
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    std::vector<T> v(a.data().begin(), a.data().end());
    for (T& x : v) {
        x *= s;
    }
    return make_result<T>(a.shape(), std::move(v), {a}, [s](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                g[k] += s * out.grad[k];
            }
        }
    });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> v(a.data().begin(), a.data().end());
    for (T& x : v) {
        x = x > T(0) ? x : T(0);
    }
    return make_result<T>(a.shape(), std::move(v), {a}, [](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                if (out.value[k] > T(0)) {
                    g[k] += out.grad[k];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    const auto av = a.data();
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = T(1) / (T(1) + std::exp(-av[k]));
    }
    return make_result<T>(a.shape(), std::move(v), {a}, [](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                const T y = out.value[k];
                g[k] += out.grad[k] * y * (T(1) - y);
            }
        }
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    T s = 0;
    for (const T x : a.data()) {
        s += x;
    }
    return make_result<T>({}, {s}, {a}, [](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            const std::size_t n = out.parents[0]->value.size();
            for (std::size_t k = 0; k < n; ++k) {
                g[k] += out.grad[0];
            }
        }
    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        fail(ErrorKind::Data, "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    std::vector<T> v(a.data().begin(), a.data().end());
    return make_result<T>(std::move(shape), std::move(v), {a}, [](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t k = 0; k < out.grad.size(); ++k) {
                g[k] += out.grad[k];
            }
        }
    });
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, int axis) {
    if (a.rank() != b.rank()) {
        fail(ErrorKind::Data, "concat: rank mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    axis = normalize_axis(axis, a.rank(), "concat");
    for (int k = 0; k < a.rank(); ++k) {
        if (k != axis && a.shape()[k] != b.shape()[k]) {
            fail(ErrorKind::Data, "concat: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
        }
    }
    const AxisSplit sa = split_at(a.shape(), axis);
    const AxisSplit sb = split_at(b.shape(), axis);
    Shape shape = a.shape();
    shape[axis] += b.shape()[axis];
    const std::size_t ca = sa.n * sa.inner;
    const std::size_t cb = sb.n * sb.inner;
    std::vector<T> v(a.numel() + b.numel());
    for (std::size_t o = 0; o < sa.outer; ++o) {
        std::copy_n(a.data().begin() + o * ca, ca, v.begin() + o * (ca + cb));
        std::copy_n(b.data().begin() + o * cb, cb, v.begin() + o * (ca + cb) + ca);
    }
    return make_result<T>(std::move(shape), std::move(v), {a, b}, [outer = sa.outer, ca, cb](Node<T>& out) {
        T* ga = parent_grad(out, 0);
        T* gb = parent_grad(out, 1);
        for (std::size_t o = 0; o < outer; ++o) {
            const T* src = out.grad.data() + o * (ca + cb);
            if (ga) {
                for (std::size_t k = 0; k < ca; ++k) {
                    ga[o * ca + k] += src[k];
                }
            }
            if (gb) {
                for (std::size_t k = 0; k < cb; ++k) {
                    gb[o * cb + k] += src[ca + k];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> stack_last(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "stack_last");
    Shape shape = a.shape();
    shape.push_back(2);
    const std::size_t n = a.numel();
    std::vector<T> v(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        v[2 * k] = a.data()[k];
        v[2 * k + 1] = b.data()[k];
    }
    return make_result<T>(std::move(shape), std::move(v), {a, b}, [n](Node<T>& out) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (T* g = parent_grad(out, p)) {
                for (std::size_t k = 0; k < n; ++k) {
                    g[k] += out.grad[2 * k + p];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, int axis, int begin, int end) {
    axis = normalize_axis(axis, a.rank(), "slice");
    const AxisSplit s = split_at(a.shape(), axis);
    if (begin < 0 || end > static_cast<int>(s.n) || begin >= end) {
        fail(ErrorKind::Data, "slice: bad range [" + std::to_string(begin) + ", " + std::to_string(end) + ") on " +
                                  shape_str(a.shape()));
    }
    Shape shape = a.shape();
    shape[axis] = end - begin;
    const std::size_t len = static_cast<std::size_t>(end - begin) * s.inner;
    const std::size_t off = static_cast<std::size_t>(begin) * s.inner;
    const std::size_t row = s.n * s.inner;
    std::vector<T> v(s.outer * len);
    for (std::size_t o = 0; o < s.outer; ++o) {
        std::copy_n(a.data().begin() + o * row + off, len, v.begin() + o * len);
    }
    return make_result<T>(std::move(shape), std::move(v), {a}, [outer = s.outer, len, off, row](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t o = 0; o < outer; ++o) {
                for (std::size_t k = 0; k < len; ++k) {
                    g[o * row + off + k] += out.grad[o * len + k];
                }
            }
        }
    });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
    axis = normalize_axis(axis, a.rank(), "softmax");
    const AxisSplit s = split_at(a.shape(), axis);
    std::vector<T> v(a.numel());
    const auto av = a.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.n * s.inner + i;
            T m = av[base];
            for (std::size_t k = 1; k < s.n; ++k) {
                m = std::max(m, av[base + k * s.inner]);
            }
            T z = 0;
            for (std::size_t k = 0; k < s.n; ++k) {
                const T e = std::exp(av[base + k * s.inner] - m);
                v[base + k * s.inner] = e;
                z += e;
            }
            for (std::size_t k = 0; k < s.n; ++k) {
                v[base + k * s.inner] /= z;
            }
        }
    }
    return make_result<T>(a.shape(), std::move(v), {a}, [s](Node<T>& out) {
        T* g = parent_grad(out, 0);
        if (!g) {
            return;
        }
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = o * s.n * s.inner + i;
                T dot = 0;
                for (std::size_t k = 0; k < s.n; ++k) {
                    const std::size_t idx = base + k * s.inner;
                    dot += out.grad[idx] * out.value[idx];
                }
                for (std::size_t k = 0; k < s.n; ++k) {
                    const std::size_t idx = base + k * s.inner;
                    g[idx] += out.value[idx] * (out.grad[idx] - dot);
                }
            }
        }
    });
}

template <typename T>
Tensor<T> max_trailing(const Tensor<T>& a, int axes) {
    if (axes < 1 || axes > a.rank()) {
        fail(ErrorKind::Data, "max_trailing: bad axis count for " + shape_str(a.shape()));
    }
    const Shape shape(a.shape().begin(), a.shape().end() - axes);
    const std::size_t groups = shape_numel(shape);
    const std::size_t m = a.numel() / std::max<std::size_t>(groups, 1);
    std::vector<T> v(groups);
    std::vector<std::size_t> arg(groups);
    const auto av = a.data();
    for (std::size_t gi = 0; gi < groups; ++gi) {
        std::size_t best = gi * m;
        for (std::size_t k = 1; k < m; ++k) {
            if (av[gi * m + k] > av[best]) {
                best = gi * m + k;
            }
        }
        arg[gi] = best;
        v[gi] = av[best];
    }
    return make_result<T>(shape, std::move(v), {a}, [arg = std::move(arg)](Node<T>& out) {
        if (T* g = parent_grad(out, 0)) {
            for (std::size_t gi = 0; gi < arg.size(); ++gi) {
                g[arg[gi]] += out.grad[gi];
            }
        }
    });
}

template <typename T>
Tensor<T> scale_cells(const Tensor<T>& x, const Tensor<T>& s) {
    if (x.rank() < 2 || s.rank() != 2 || x.dim(0) != s.dim(0) || x.dim(1) != s.dim(1)) {
        fail(ErrorKind::Data, "scale_cells: shapes " + shape_str(x.shape()) + " and " + shape_str(s.shape()));
    }
    const std::size_t cells = s.numel();
    const std::size_t per = x.numel() / cells;
    std::vector<T> v(x.numel());
    const auto xv = x.data();
    const auto sv = s.data();
    for (std::size_t c = 0; c < cells; ++c) {
        for (std::size_t k = 0; k < per; ++k) {
            v[c * per + k] = xv[c * per + k] * sv[c];
        }
    }
    return make_result<T>(x.shape(), std::move(v), {x, s}, [cells, per](Node<T>& out) {
        const auto& xv = parent_value(out, 0);
        const auto& sv = parent_value(out, 1);
        T* gx = parent_grad(out, 0);
        T* gs = parent_grad(out, 1);
        for (std::size_t c = 0; c < cells; ++c) {
            T acc = 0;
            for (std::size_t k = 0; k < per; ++k) {
                const std::size_t idx = c * per + k;
                if (gx) {
                    gx[idx] += out.grad[idx] * sv[c];
                }
                acc += out.grad[idx] * xv[idx];
            }
            if (gs) {
                gs[c] += acc;
            }
        }
    });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, int stride) {
    if (input.rank() != 3 || kernel.rank() != 4 || kernel.dim(0) != kernel.dim(1) || kernel.dim(0) % 2 == 0 ||
        kernel.dim(2) != input.dim(2) || (bias.defined() && (bias.rank() != 1 || bias.dim(0) != kernel.dim(3))) ||
        stride < 1 || stride > 2) {
        fail(ErrorKind::Data, "conv2d: incompatible shapes input " + shape_str(input.shape()) + ", kernel " +
                                  shape_str(kernel.shape()) +
                                  (bias.defined() ? ", bias " + shape_str(bias.shape()) : std::string()) +
                                  ", stride " + std::to_string(stride));
    }
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int k = kernel.dim(0), cout = kernel.dim(3);
    const int pad = k / 2;
    const int oh = (h + stride - 1) / stride;
    const int ow = (w + stride - 1) / stride;
    const auto& kt = kernels::table<T>();

    std::vector<T> v(static_cast<std::size_t>(oh) * ow * cout, T(0));
    const T* x = input.data().data();
    const T* wt = kernel.data().data();
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            T* y = v.data() + (static_cast<std::size_t>(i) * ow + j) * cout;
            if (bias.defined()) {
                std::copy_n(bias.data().begin(), cout, y);
            }
            for (int di = 0; di < k; ++di) {
                const int ii = i * stride + di - pad;
                if (ii < 0 || ii >= h) {
                    continue;
                }
                for (int dj = 0; dj < k; ++dj) {
                    const int jj = j * stride + dj - pad;
                    if (jj < 0 || jj >= w) {
                        continue;
                    }
                    kt.gemv_t_acc(cin, cout, x + (static_cast<std::size_t>(ii) * w + jj) * cin,
                                  wt + static_cast<std::size_t>(di * k + dj) * cin * cout, y);
                }
            }
        }
    }
    std::vector<Tensor<T>> inputs = {input, kernel};
    if (bias.defined()) {
        inputs.push_back(bias);
    }
    return make_result<T>({oh, ow, cout}, std::move(v), std::move(inputs),
                          [h, w, cin, k, cout, pad, oh, ow, stride](Node<T>& out) {
                              const auto& kt = kernels::table<T>();
                              T* gx = parent_grad(out, 0);
                              T* gw = parent_grad(out, 1);
                              T* gb = out.parents.size() > 2 ? parent_grad(out, 2) : nullptr;
                              const T* x = out.parents[0]->value.data();
                              const T* wt = out.parents[1]->value.data();
                              for (int i = 0; i < oh; ++i) {
                                  for (int j = 0; j < ow; ++j) {
                                      const T* g = out.grad.data() + (static_cast<std::size_t>(i) * ow + j) * cout;
                                      bool any = false;
                                      for (int c = 0; c < cout; ++c) {
                                          any = any || g[c] != T(0);
                                      }
                                      if (!any) {
                                          continue;
                                      }
                                      if (gb) {
                                          for (int c = 0; c < cout; ++c) {
                                              gb[c] += g[c];
                                          }
                                      }
                                      for (int di = 0; di < k; ++di) {
                                          const int ii = i * stride + di - pad;
                                          if (ii < 0 || ii >= h) {
                                              continue;
                                          }
                                          for (int dj = 0; dj < k; ++dj) {
                                              const int jj = j * stride + dj - pad;
                                              if (jj < 0 || jj >= w) {
                                                  continue;
                                              }
                                              const std::size_t px = (static_cast<std::size_t>(ii) * w + jj) * cin;
                                              const std::size_t tap = static_cast<std::size_t>(di * k + dj) * cin * cout;
                                              if (gx) {
                                                  kt.gemv_acc(cin, cout, wt + tap, g, gx + px);
                                              }
                                              if (gw) {
                                                  kt.ger_acc(cin, cout, x + px, g, gw + tap);
                                              }
                                          }
                                      }
                                  }
                              }
                          });
}

template <typename T>
Tensor<T> bilinear_sample(const Tensor<T>& feature, const Tensor<T>& offsets) {
    if (feature.rank() != 3 || offsets.rank() != 3 || offsets.dim(2) != 2 || offsets.dim(0) != feature.dim(0) ||
        offsets.dim(1) != feature.dim(1)) {
        fail(ErrorKind::Data, "bilinear_sample: shapes " + shape_str(feature.shape()) + " and " + shape_str(offsets.shape()));
    }
    const int h = feature.dim(0), w = feature.dim(1), c = feature.dim(2);

    struct Tap {
        int r0, r1, c0, c1;
        T fr, fc;
        bool free_r, free_c;  // false where the sample position was clamped
    };
    std::vector<Tap> taps(static_cast<std::size_t>(h) * w);
    std::vector<T> v(feature.numel());
    const auto f = feature.data();
    const auto off = offsets.data();
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const std::size_t cell = static_cast<std::size_t>(i) * w + j;
            T r = T(i) + off[2 * cell];
            T q = T(j) + off[2 * cell + 1];
            Tap t{};
            t.free_r = r >= T(0) && r <= T(h - 1);
            t.free_c = q >= T(0) && q <= T(w - 1);
            r = std::clamp(r, T(0), T(h - 1));
            q = std::clamp(q, T(0), T(w - 1));
            t.r0 = static_cast<int>(std::floor(r));
            t.c0 = static_cast<int>(std::floor(q));
            t.r1 = std::min(t.r0 + 1, h - 1);
            t.c1 = std::min(t.c0 + 1, w - 1);
            t.fr = r - T(t.r0);
            t.fc = q - T(t.c0);
            taps[cell] = t;
            const T w00 = (T(1) - t.fr) * (T(1) - t.fc), w01 = (T(1) - t.fr) * t.fc;
            const T w10 = t.fr * (T(1) - t.fc), w11 = t.fr * t.fc;
            const T* f00 = f.data() + (static_cast<std::size_t>(t.r0) * w + t.c0) * c;
            const T* f01 = f.data() + (static_cast<std::size_t>(t.r0) * w + t.c1) * c;
            const T* f10 = f.data() + (static_cast<std::size_t>(t.r1) * w + t.c0) * c;
            const T* f11 = f.data() + (static_cast<std::size_t>(t.r1) * w + t.c1) * c;
            T* y = v.data() + cell * c;
            for (int ch = 0; ch < c; ++ch) {
                y[ch] = w00 * f00[ch] + w01 * f01[ch] + w10 * f10[ch] + w11 * f11[ch];
            }
        }
    }
    return make_result<T>(feature.shape(), std::move(v), {feature, offsets},
                          [h, w, c, taps = std::move(taps)](Node<T>& out) {
                              T* gf = parent_grad(out, 0);
                              T* go = parent_grad(out, 1);
                              const auto& f = out.parents[0]->value;
                              for (int i = 0; i < h; ++i) {
                                  for (int j = 0; j < w; ++j) {
                                      const std::size_t cell = static_cast<std::size_t>(i) * w + j;
                                      const Tap& t = taps[cell];
                                      const T* g = out.grad.data() + cell * c;
                                      const std::size_t i00 = (static_cast<std::size_t>(t.r0) * w + t.c0) * c;
                                      const std::size_t i01 = (static_cast<std::size_t>(t.r0) * w + t.c1) * c;
                                      const std::size_t i10 = (static_cast<std::size_t>(t.r1) * w + t.c0) * c;
                                      const std::size_t i11 = (static_cast<std::size_t>(t.r1) * w + t.c1) * c;
                                      if (gf) {
                                          const T w00 = (T(1) - t.fr) * (T(1) - t.fc), w01 = (T(1) - t.fr) * t.fc;
                                          const T w10 = t.fr * (T(1) - t.fc), w11 = t.fr * t.fc;
                                          for (int ch = 0; ch < c; ++ch) {
                                              gf[i00 + ch] += w00 * g[ch];
                                              gf[i01 + ch] += w01 * g[ch];
                                              gf[i10 + ch] += w10 * g[ch];
                                              gf[i11 + ch] += w11 * g[ch];
                                          }
                                      }
                                      if (go) {
                                          T dr = 0, dc = 0;
                                          for (int ch = 0; ch < c; ++ch) {
                                              const T a00 = f[i00 + ch], a01 = f[i01 + ch];
                                              const T a10 = f[i10 + ch], a11 = f[i11 + ch];
                                              dr += g[ch] * ((T(1) - t.fc) * (a10 - a00) + t.fc * (a11 - a01));
                                              dc += g[ch] * ((T(1) - t.fr) * (a01 - a00) + t.fr * (a11 - a10));
                                          }
                                          if (t.free_r) {
                                              go[2 * cell] += dr;
                                          }
                                          if (t.free_c) {
                                              go[2 * cell + 1] += dc;
                                          }
                                      }
                                  }
                              }
                          });
}

template <typename T>
Tensor<T> weighted_l1(const Tensor<T>& a, const Tensor<T>& b, std::span<const T> cell_weights, T scale_factor) {
    require_same_shape(a, b, "weighted_l1");
    if (a.rank() < 2) {
        fail(ErrorKind::Data, "weighted_l1: expected [H, W, ...], got " + shape_str(a.shape()));
    }
    const std::size_t cells = static_cast<std::size_t>(a.dim(0)) * static_cast<std::size_t>(a.dim(1));
    if (cell_weights.size() != cells) {
        fail(ErrorKind::Data, "weighted_l1: weight count does not match " + shape_str(a.shape()));
    }
    const std::size_t per = a.numel() / std::max<std::size_t>(cells, 1);
    const auto av = a.data();
    const auto bv = b.data();
    T total = 0;
    for (std::size_t cidx = 0; cidx < cells; ++cidx) {
        if (cell_weights[cidx] == T(0)) {
            continue;
        }
        T acc = 0;
        for (std::size_t k = 0; k < per; ++k) {
            acc += std::abs(av[cidx * per + k] - bv[cidx * per + k]);
        }
        total += cell_weights[cidx] * acc;
    }
    std::vector<T> weights(cell_weights.begin(), cell_weights.end());
    return make_result<T>({}, {scale_factor * total}, {a, b},
                          [weights = std::move(weights), per, scale_factor](Node<T>& out) {
                              const auto& av = parent_value(out, 0);
                              const auto& bv = parent_value(out, 1);
                              T* ga = parent_grad(out, 0);
                              T* gb = parent_grad(out, 1);
                              const T g = out.grad[0] * scale_factor;
                              for (std::size_t cidx = 0; cidx < weights.size(); ++cidx) {
                                  if (weights[cidx] == T(0)) {
                                      continue;
                                  }
                                  for (std::size_t k = 0; k < per; ++k) {
                                      const std::size_t idx = cidx * per + k;
                                      const T d = av[idx] - bv[idx];
                                      const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                                      if (ga) {
                                          ga[idx] += g * weights[cidx] * s;
                                      }
                                      if (gb) {
                                          gb[idx] -= g * weights[cidx] * s;
                                      }
                                  }
                              }
                          });
}

template <typename T>
Tensor<T> masked_l1(const Tensor<T>& a, const Tensor<T>& b, const geom::BitMask2D& mask) {
    if (a.rank() < 2 || mask.height() != a.dim(0) || mask.width() != a.dim(1)) {
        fail(ErrorKind::Data, "masked_l1: mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                                  " does not match " + shape_str(a.shape()));
    }
    std::vector<T> w(mask.bits().begin(), mask.bits().end());
    const T hw = static_cast<T>(mask.size());
    return weighted_l1<T>(a, b, w, T(1) / hw);
}

template <typename T>
Tensor<T> sigmoid_focal_loss(const Tensor<T>& logits, std::span<const T> targets, T alpha, T gamma, T normalizer) {
    if (targets.size() != logits.numel()) {
        fail(ErrorKind::Data, "sigmoid_focal_loss: target count does not match " + shape_str(logits.shape()));
    }
    const auto x = logits.data();
    T total = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const T p = T(1) / (T(1) + std::exp(-x[k]));
        if (targets[k] > T(0.5)) {
            total += alpha * std::pow(T(1) - p, gamma) * softplus(-x[k]);
        } else {
            total += (T(1) - alpha) * std::pow(p, gamma) * softplus(x[k]);
        }
    }
    std::vector<T> t(targets.begin(), targets.end());
    return make_result<T>({}, {total / normalizer}, {logits},
                          [t = std::move(t), alpha, gamma, normalizer](Node<T>& out) {
                              T* g = parent_grad(out, 0);
                              if (!g) {
                                  return;
                              }
                              const auto& x = parent_value(out, 0);
                              const T scale_factor = out.grad[0] / normalizer;
                              for (std::size_t k = 0; k < x.size(); ++k) {
                                  const T p = T(1) / (T(1) + std::exp(-x[k]));
                                  T d;
                                  if (t[k] > T(0.5)) {
                                      // log p = -softplus(-x)
                                      d = alpha * std::pow(T(1) - p, gamma) * (gamma * p * (-softplus(-x[k])) - (T(1) - p));
                                  } else {
                                      d = (T(1) - alpha) * std::pow(p, gamma) * (p - gamma * (T(1) - p) * (-softplus(x[k])));
                                  }
                                  g[k] += scale_factor * d;
                              }
                          });
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& a) {
    std::vector<To> v(a.numel());
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = static_cast<To>(a.data()[k]);
    }
    return Tensor<To>::from(a.shape(), std::move(v), false);
}

#define DVX_INSTANTIATE_OPS(T)                                                                         \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                                  \
    template Tensor<T> relu<T>(const Tensor<T>&);                                                      \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                   \
    template Tensor<T> sum<T>(const Tensor<T>&);                                                       \
    template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                            \
    template Tensor<T> concat<T>(const Tensor<T>&, const Tensor<T>&, int);                             \
    template Tensor<T> stack_last<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> slice<T>(const Tensor<T>&, int, int, int);                                      \
    template Tensor<T> softmax<T>(const Tensor<T>&, int);                                              \
    template Tensor<T> max_trailing<T>(const Tensor<T>&, int);                                         \
    template Tensor<T> scale_cells<T>(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);           \
    template Tensor<T> bilinear_sample<T>(const Tensor<T>&, const Tensor<T>&);                         \
    template Tensor<T> weighted_l1<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>, T);      \
    template Tensor<T> masked_l1<T>(const Tensor<T>&, const Tensor<T>&, const geom::BitMask2D&);       \
    template Tensor<T> sigmoid_focal_loss<T>(const Tensor<T>&, std::span<const T>, T, T, T);

DVX_INSTANTIATE_OPS(float)
DVX_INSTANTIATE_OPS(double)
#undef DVX_INSTANTIATE_OPS

template Tensor<float> cast<float, double>(const Tensor<double>&);
template Tensor<double> cast<double, float>(const Tensor<float>&);
template Tensor<float> cast<float, float>(const Tensor<float>&);
template Tensor<double> cast<double, double>(const Tensor<double>&);

}  // namespace dvx::nn
