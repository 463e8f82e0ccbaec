#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "urbdiff/nn/autodiff.hpp"

namespace urbdiff::nn {

// Targets for the 2-class loss; not part of the differentiable graph.
struct LabelBatch {
    int n = 0, h = 0, w = 0;
    std::vector<std::uint8_t> data;  // n*h*w values in {0,1}

    std::int64_t size() const { return static_cast<std::int64_t>(n) * h * w; }
};

namespace detail {

inline std::int64_t idx4(int c1, int c2, int c3, int i0, int i1, int i2, int i3) {
    return ((static_cast<std::int64_t>(i0) * c1 + i1) * c2 + i2) * c3 + i3;
}

template <class T>
void require_rank4(const TensorT<T>& t, const char* op) {
    if (t.rank() != 4) throw ShapeError(std::string(op) + ": expected rank-4 tensor, got " +
                                        shape_string(t.shape));
}

}  // namespace detail

// --- conv2d: 3x3 kernel, stride 1, pad 1 (spatial size preserved) ----------

template <class T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
    detail::require_rank4(x->value, "conv2d");
    detail::require_rank4(w->value, "conv2d");
    const int N = x->value.dim(0), Ci = x->value.dim(1), H = x->value.dim(2),
              W = x->value.dim(3);
    const int Co = w->value.dim(0);
    if (w->value.dim(1) != Ci)
        throw ShapeError("conv2d: input has " + std::to_string(Ci) + " channels, kernel expects " +
                         std::to_string(w->value.dim(1)));
    if (w->value.dim(2) != 3 || w->value.dim(3) != 3)
        throw ShapeError("conv2d: kernel must be 3x3");
    if (b->value.rank() != 1 || b->value.dim(0) != Co)
        throw ShapeError("conv2d: bias shape mismatch");

    TensorT<T> out({N, Co, H, W});
    const T* xd = x->value.data.data();
    const T* wd = w->value.data.data();
    const T* bd = b->value.data.data();
    T* yd = out.data.data();
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Co; ++co)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    double acc = bd[co];
                    for (int ci = 0; ci < Ci; ++ci)
                        for (int ki = 0; ki < 3; ++ki) {
                            const int si = i + ki - 1;
                            if (si < 0 || si >= H) continue;
                            for (int kj = 0; kj < 3; ++kj) {
                                const int sj = j + kj - 1;
                                if (sj < 0 || sj >= W) continue;
                                acc += static_cast<double>(
                                           xd[detail::idx4(Ci, H, W, n, ci, si, sj)]) *
                                       wd[detail::idx4(Ci, 3, 3, co, ci, ki, kj)];
                            }
                        }
                    yd[detail::idx4(Co, H, W, n, co, i, j)] = static_cast<T>(acc);
                }
    check_finite(out, "conv2d");

    auto node = make_var(std::move(out));
    node->parents = {x, w, b};
    node->requires_grad = any_requires_grad(node->parents);
    if (node->requires_grad) {
        node->backward_fn = [x, w, b, N, Ci, Co, H, W](NodeT<T>& self) {
            const T* gy = self.grad.data.data();
            const T* xd = x->value.data.data();
            const T* wd = w->value.data.data();
            if (x->requires_grad) {
                x->ensure_grad();
                T* gx = x->grad.data.data();
                for (int n = 0; n < N; ++n)
                    for (int ci = 0; ci < Ci; ++ci)
                        for (int i = 0; i < H; ++i)
                            for (int j = 0; j < W; ++j) {
                                double acc = 0.0;
                                for (int co = 0; co < Co; ++co)
                                    for (int ki = 0; ki < 3; ++ki) {
                                        const int oi = i - ki + 1;
                                        if (oi < 0 || oi >= H) continue;
                                        for (int kj = 0; kj < 3; ++kj) {
                                            const int oj = j - kj + 1;
                                            if (oj < 0 || oj >= W) continue;
                                            acc += static_cast<double>(gy[detail::idx4(
                                                       Co, H, W, n, co, oi, oj)]) *
                                                   wd[detail::idx4(Ci, 3, 3, co, ci, ki, kj)];
                                        }
                                    }
                                gx[detail::idx4(Ci, H, W, n, ci, i, j)] += static_cast<T>(acc);
                            }
            }
            if (w->requires_grad) {
                w->ensure_grad();
                T* gw = w->grad.data.data();
                for (int co = 0; co < Co; ++co)
                    for (int ci = 0; ci < Ci; ++ci)
                        for (int ki = 0; ki < 3; ++ki)
                            for (int kj = 0; kj < 3; ++kj) {
                                double acc = 0.0;
                                for (int n = 0; n < N; ++n)
                                    for (int i = 0; i < H; ++i) {
                                        const int si = i + ki - 1;
                                        if (si < 0 || si >= H) continue;
                                        for (int j = 0; j < W; ++j) {
                                            const int sj = j + kj - 1;
                                            if (sj < 0 || sj >= W) continue;
                                            acc += static_cast<double>(gy[detail::idx4(
                                                       Co, H, W, n, co, i, j)]) *
                                                   xd[detail::idx4(Ci, H, W, n, ci, si, sj)];
                                        }
                                    }
                                gw[detail::idx4(Ci, 3, 3, co, ci, ki, kj)] += static_cast<T>(acc);
                            }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                T* gb = b->grad.data.data();
                for (int co = 0; co < Co; ++co) {
                    double acc = 0.0;
                    for (int n = 0; n < N; ++n)
                        for (int i = 0; i < H; ++i)
                            for (int j = 0; j < W; ++j)
                                acc += gy[detail::idx4(Co, H, W, n, co, i, j)];
                    gb[co] += static_cast<T>(acc);
                }
            }
        };
    }
    return node;
}

// --- conv1x1: per-pixel linear map (the final classifier head) -------------

template <class T>
VarT<T> conv1x1(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
    detail::require_rank4(x->value, "conv1x1");
    const int N = x->value.dim(0), Ci = x->value.dim(1), H = x->value.dim(2),
              W = x->value.dim(3);
    if (w->value.rank() != 2 || w->value.dim(1) != Ci)
        throw ShapeError("conv1x1: weight must be (Cout, " + std::to_string(Ci) + ")");
    const int Co = w->value.dim(0);
    if (b->value.rank() != 1 || b->value.dim(0) != Co)
        throw ShapeError("conv1x1: bias shape mismatch");

    TensorT<T> out({N, Co, H, W});
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Co; ++co) {
            T* yd = out.data.data() + (static_cast<std::int64_t>(n) * Co + co) * hw;
            for (std::int64_t p = 0; p < hw; ++p) {
                double acc = b->value.data[co];
                for (int ci = 0; ci < Ci; ++ci)
                    acc += static_cast<double>(
                               x->value.data[(static_cast<std::int64_t>(n) * Ci + ci) * hw + p]) *
                           w->value.data[co * Ci + ci];
                yd[p] = static_cast<T>(acc);
            }
        }
    check_finite(out, "conv1x1");

    auto node = make_var(std::move(out));
    node->parents = {x, w, b};
    node->requires_grad = any_requires_grad(node->parents);
    if (node->requires_grad) {
        node->backward_fn = [x, w, b, N, Ci, Co, H, W](NodeT<T>& self) {
            const std::int64_t hw = static_cast<std::int64_t>(H) * W;
            const T* gy = self.grad.data.data();
            if (x->requires_grad) {
                x->ensure_grad();
                for (int n = 0; n < N; ++n)
                    for (int ci = 0; ci < Ci; ++ci) {
                        T* gx = x->grad.data.data() + (static_cast<std::int64_t>(n) * Ci + ci) * hw;
                        for (std::int64_t p = 0; p < hw; ++p) {
                            double acc = 0.0;
                            for (int co = 0; co < Co; ++co)
                                acc += static_cast<double>(
                                           gy[(static_cast<std::int64_t>(n) * Co + co) * hw + p]) *
                                       w->value.data[co * Ci + ci];
                            gx[p] += static_cast<T>(acc);
                        }
                    }
            }
            if (w->requires_grad) {
                w->ensure_grad();
                for (int co = 0; co < Co; ++co)
                    for (int ci = 0; ci < Ci; ++ci) {
                        double acc = 0.0;
                        for (int n = 0; n < N; ++n)
                            for (std::int64_t p = 0; p < hw; ++p)
                                acc += static_cast<double>(
                                           gy[(static_cast<std::int64_t>(n) * Co + co) * hw + p]) *
                                       x->value.data[(static_cast<std::int64_t>(n) * Ci + ci) * hw +
                                                     p];
                        w->grad.data[co * Ci + ci] += static_cast<T>(acc);
                    }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (int co = 0; co < Co; ++co) {
                    double acc = 0.0;
                    for (int n = 0; n < N; ++n)
                        for (std::int64_t p = 0; p < hw; ++p)
                            acc += gy[(static_cast<std::int64_t>(n) * Co + co) * hw + p];
                    b->grad.data[co] += static_cast<T>(acc);
                }
            }
        };
    }
    return node;
}

// --- conv_transpose2d: 2x2 kernel, stride 2 (doubles spatial size) ---------
// Kernel size equals stride, so every output position receives exactly one
// tap; the op is the adjoint of a stride-2 2x2 convolution.

template <class T>
VarT<T> conv_transpose2d(const VarT<T>& x, const VarT<T>& w) {
    detail::require_rank4(x->value, "conv_transpose2d");
    const int N = x->value.dim(0), Ci = x->value.dim(1), h = x->value.dim(2),
              ww = x->value.dim(3);
    if (w->value.rank() != 4 || w->value.dim(0) != Ci)
        throw ShapeError("conv_transpose2d: weight must be (" + std::to_string(Ci) +
                         ", Cout, 2, 2)");
    if (w->value.dim(2) != 2 || w->value.dim(3) != 2)
        throw ShapeError("conv_transpose2d: kernel must be 2x2");
    const int Co = w->value.dim(1);
    const int H = 2 * h, W = 2 * ww;

    TensorT<T> out({N, Co, H, W});
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Co; ++co)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < ww; ++j)
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj) {
                            double acc = 0.0;
                            for (int ci = 0; ci < Ci; ++ci)
                                acc += static_cast<double>(
                                           x->value.data[detail::idx4(Ci, h, ww, n, ci, i, j)]) *
                                       w->value.data[detail::idx4(Co, 2, 2, ci, co, di, dj)];
                            out.data[detail::idx4(Co, H, W, n, co, 2 * i + di, 2 * j + dj)] =
                                static_cast<T>(acc);
                        }
    check_finite(out, "conv_transpose2d");

    auto node = make_var(std::move(out));
    node->parents = {x, w};
    node->requires_grad = any_requires_grad(node->parents);
    if (node->requires_grad) {
        node->backward_fn = [x, w, N, Ci, Co, h, ww](NodeT<T>& self) {
            const int H = 2 * h, W = 2 * ww;
            const T* gy = self.grad.data.data();
            if (x->requires_grad) {
                x->ensure_grad();
                for (int n = 0; n < N; ++n)
                    for (int ci = 0; ci < Ci; ++ci)
                        for (int i = 0; i < h; ++i)
                            for (int j = 0; j < ww; ++j) {
                                double acc = 0.0;
                                for (int co = 0; co < Co; ++co)
                                    for (int di = 0; di < 2; ++di)
                                        for (int dj = 0; dj < 2; ++dj)
                                            acc += static_cast<double>(gy[detail::idx4(
                                                       Co, H, W, n, co, 2 * i + di, 2 * j + dj)]) *
                                                   w->value.data[detail::idx4(Co, 2, 2, ci, co, di,
                                                                              dj)];
                                x->grad.data[detail::idx4(Ci, h, ww, n, ci, i, j)] +=
                                    static_cast<T>(acc);
                            }
            }
            if (w->requires_grad) {
                w->ensure_grad();
                for (int ci = 0; ci < Ci; ++ci)
                    for (int co = 0; co < Co; ++co)
                        for (int di = 0; di < 2; ++di)
                            for (int dj = 0; dj < 2; ++dj) {
                                double acc = 0.0;
                                for (int n = 0; n < N; ++n)
                                    for (int i = 0; i < h; ++i)
                                        for (int j = 0; j < ww; ++j)
                                            acc += static_cast<double>(
                                                       x->value.data[detail::idx4(Ci, h, ww, n, ci,
                                                                                  i, j)]) *
                                                   gy[detail::idx4(Co, H, W, n, co, 2 * i + di,
                                                                   2 * j + dj)];
                                w->grad.data[detail::idx4(Co, 2, 2, ci, co, di, dj)] +=
                                    static_cast<T>(acc);
                            }
            }
        };
    }
    return node;
}

// --- maxpool 2x2 stride 2 --------------------------------------------------

template <class T>
VarT<T> maxpool2x2(const VarT<T>& x) {
    detail::require_rank4(x->value, "maxpool2x2");
    const int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2),
              W = x->value.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw ShapeError("maxpool2x2: spatial dims must be even, got " +
                         shape_string(x->value.shape));
    const int Ho = H / 2, Wo = W / 2;

    TensorT<T> out({N, C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(out.data.size());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < Ho; ++i)
                for (int j = 0; j < Wo; ++j) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::int64_t best_idx = -1;
                    // row-major scan; ties keep the first hit
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj) {
                            const std::int64_t idx =
                                detail::idx4(C, H, W, n, c, 2 * i + di, 2 * j + dj);
                            const T v = x->value.data[idx];
                            if (v > best) {
                                best = v;
                                best_idx = idx;
                            }
                        }
                    const std::int64_t o = detail::idx4(C, Ho, Wo, n, c, i, j);
                    out.data[o] = best;
                    (*argmax)[o] = best_idx;
                }
    check_finite(out, "maxpool2x2");

    auto node = make_var(std::move(out));
    node->parents = {x};
    node->requires_grad = x->requires_grad;
    if (node->requires_grad) {
        node->backward_fn = [x, argmax](NodeT<T>& self) {
            x->ensure_grad();
            for (std::size_t o = 0; o < self.grad.data.size(); ++o)
                x->grad.data[(*argmax)[o]] += self.grad.data[o];
        };
    }
    return node;
}

// --- relu ------------------------------------------------------------------

template <class T>
VarT<T> relu(const VarT<T>& x) {
    TensorT<T> out = x->value;
    for (T& v : out.data)
        if (v < T(0)) v = T(0);

    auto node = make_var(std::move(out));
    node->parents = {x};
    node->requires_grad = x->requires_grad;
    if (node->requires_grad) {
        node->backward_fn = [x](NodeT<T>& self) {
            x->ensure_grad();
            for (std::size_t i = 0; i < self.grad.data.size(); ++i)
                if (x->value.data[i] > T(0)) x->grad.data[i] += self.grad.data[i];
        };
    }
    return node;
}

// --- log_softmax over the channel axis -------------------------------------

template <class T>
VarT<T> log_softmax(const VarT<T>& x) {
    detail::require_rank4(x->value, "log_softmax");
    const int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2),
              W = x->value.dim(3);
    if (C < 2) throw ShapeError("log_softmax: need at least 2 channels");

    TensorT<T> out(x->value.shape);
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    for (int n = 0; n < N; ++n)
        for (std::int64_t p = 0; p < hw; ++p) {
            double m = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < C; ++c)
                m = std::max(m, static_cast<double>(
                                    x->value.data[(static_cast<std::int64_t>(n) * C + c) * hw + p]));
            double sum = 0.0;
            for (int c = 0; c < C; ++c)
                sum += std::exp(
                    static_cast<double>(
                        x->value.data[(static_cast<std::int64_t>(n) * C + c) * hw + p]) -
                    m);
            const double lse = m + std::log(sum);
            for (int c = 0; c < C; ++c) {
                const std::int64_t i = (static_cast<std::int64_t>(n) * C + c) * hw + p;
                out.data[i] = static_cast<T>(static_cast<double>(x->value.data[i]) - lse);
            }
        }
    check_finite(out, "log_softmax");

    auto node = make_var(std::move(out));
    node->parents = {x};
    node->requires_grad = x->requires_grad;
    if (node->requires_grad) {
        auto saved = std::make_shared<TensorT<T>>(node->value);
        node->backward_fn = [x, saved, N, C, hw](NodeT<T>& self) {
            x->ensure_grad();
            for (int n = 0; n < N; ++n)
                for (std::int64_t p = 0; p < hw; ++p) {
                    double gsum = 0.0;
                    for (int c = 0; c < C; ++c)
                        gsum += self.grad.data[(static_cast<std::int64_t>(n) * C + c) * hw + p];
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t i = (static_cast<std::int64_t>(n) * C + c) * hw + p;
                        x->grad.data[i] += static_cast<T>(
                            static_cast<double>(self.grad.data[i]) -
                            std::exp(static_cast<double>(saved->data[i])) * gsum);
                    }
                }
        };
    }
    return node;
}

// --- elementwise helpers for the bottleneck difference ---------------------

template <class T>
VarT<T> sub(const VarT<T>& a, const VarT<T>& b) {
    if (!a->value.same_shape(b->value))
        throw ShapeError("sub: shape mismatch " + shape_string(a->value.shape) + " vs " +
                         shape_string(b->value.shape));
    TensorT<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = a->value.data[i] - b->value.data[i];

    auto node = make_var(std::move(out));
    node->parents = {a, b};
    node->requires_grad = any_requires_grad(node->parents);
    if (node->requires_grad) {
        node->backward_fn = [a, b](NodeT<T>& self) {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < self.grad.data.size(); ++i)
                    a->grad.data[i] += self.grad.data[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < self.grad.data.size(); ++i)
                    b->grad.data[i] -= self.grad.data[i];
            }
        };
    }
    return node;
}

template <class T>
VarT<T> abs_op(const VarT<T>& x) {
    TensorT<T> out = x->value;
    for (T& v : out.data) v = std::abs(v);

    auto node = make_var(std::move(out));
    node->parents = {x};
    node->requires_grad = x->requires_grad;
    if (node->requires_grad) {
        node->backward_fn = [x](NodeT<T>& self) {
            x->ensure_grad();
            for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
                const T v = x->value.data[i];
                if (v > T(0)) x->grad.data[i] += self.grad.data[i];
                else if (v < T(0)) x->grad.data[i] -= self.grad.data[i];
            }
        };
    }
    return node;
}

// Per-pixel L2 over channels: (N,C,H,W) -> (N,1,H,W). Zero vector maps to
// zero output with zero gradient.
template <class T>
VarT<T> channel_l2(const VarT<T>& x) {
    detail::require_rank4(x->value, "channel_l2");
    const int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2),
              W = x->value.dim(3);
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;

    TensorT<T> out({N, 1, H, W});
    for (int n = 0; n < N; ++n)
        for (std::int64_t p = 0; p < hw; ++p) {
            double acc = 0.0;
            for (int c = 0; c < C; ++c) {
                const double v =
                    x->value.data[(static_cast<std::int64_t>(n) * C + c) * hw + p];
                acc += v * v;
            }
            out.data[n * hw + p] = static_cast<T>(std::sqrt(acc));
        }
    check_finite(out, "channel_l2");

    auto node = make_var(std::move(out));
    node->parents = {x};
    node->requires_grad = x->requires_grad;
    if (node->requires_grad) {
        auto saved = std::make_shared<TensorT<T>>(node->value);
        node->backward_fn = [x, saved, N, C, hw](NodeT<T>& self) {
            x->ensure_grad();
            for (int n = 0; n < N; ++n)
                for (std::int64_t p = 0; p < hw; ++p) {
                    const double y = saved->data[n * hw + p];
                    if (y <= 0.0) continue;
                    const double g = self.grad.data[n * hw + p] / y;
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t i = (static_cast<std::int64_t>(n) * C + c) * hw + p;
                        x->grad.data[i] += static_cast<T>(g * x->value.data[i]);
                    }
                }
        };
    }
    return node;
}

// --- weighted negative log-likelihood over a 2-class log-prob map ----------
// loss = -(sum of w_t * logp[t]) / (sum of w_t), gradient flows to logp.

template <class T>
VarT<T> nll_weighted(const VarT<T>& logp, const LabelBatch& target, double w0, double w1) {
    detail::require_rank4(logp->value, "nll_weighted");
    const int N = logp->value.dim(0), C = logp->value.dim(1), H = logp->value.dim(2),
              W = logp->value.dim(3);
    if (C != 2) throw ShapeError("nll_weighted: expected 2 channels, got " + std::to_string(C));
    if (target.n != N || target.h != H || target.w != W)
        throw ShapeError("nll_weighted: target dims mismatch");
    if (w0 < 0.0 || w1 < 0.0) throw ConfigError("nll_weighted: weights must be nonnegative");

    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    double weight_sum = 0.0;
    double loss = 0.0;
    for (int n = 0; n < N; ++n)
        for (std::int64_t p = 0; p < hw; ++p) {
            const std::uint8_t t = target.data[n * hw + p];
            if (t > 1) throw LabelError("nll_weighted: target value " + std::to_string(int(t)) +
                                        " outside {0,1}");
            const double wt = t ? w1 : w0;
            weight_sum += wt;
            loss -= wt * static_cast<double>(
                             logp->value.data[(static_cast<std::int64_t>(n) * 2 + t) * hw + p]);
        }
    if (weight_sum <= 0.0) throw ConfigError("nll_weighted: total weight is zero");
    loss /= weight_sum;
    if (!std::isfinite(loss)) throw NumericFault("nll_weighted: non-finite loss");

    TensorT<T> out({1});
    out.data[0] = static_cast<T>(loss);
    auto node = make_var(std::move(out));
    node->scalar = loss;
    node->parents = {logp};
    node->requires_grad = logp->requires_grad;
    if (node->requires_grad) {
        auto labels = std::make_shared<LabelBatch>(target);
        node->backward_fn = [logp, labels, w0, w1, weight_sum, N, hw](NodeT<T>& self) {
            logp->ensure_grad();
            const double g = self.grad.data[0];
            for (int n = 0; n < N; ++n)
                for (std::int64_t p = 0; p < hw; ++p) {
                    const std::uint8_t t = labels->data[n * hw + p];
                    const double wt = t ? w1 : w0;
                    logp->grad.data[(static_cast<std::int64_t>(n) * 2 + t) * hw + p] -=
                        static_cast<T>(g * wt / weight_sum);
                }
        };
    }
    return node;
}

// Fixed-coefficient projection to a scalar; the gradcheck harness uses this
// to reduce any op output to one double-precision number.
template <class T>
VarT<T> project(const VarT<T>& x, const TensorT<T>& coeffs) {
    if (!x->value.same_shape(coeffs))
        throw ShapeError("project: coefficient shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < coeffs.data.size(); ++i)
        acc += static_cast<double>(x->value.data[i]) * coeffs.data[i];

    TensorT<T> out({1});
    out.data[0] = static_cast<T>(acc);
    auto node = make_var(std::move(out));
    node->scalar = acc;
    node->parents = {x};
    node->requires_grad = x->requires_grad;
    if (node->requires_grad) {
        auto saved = std::make_shared<TensorT<T>>(coeffs);
        node->backward_fn = [x, saved](NodeT<T>& self) {
            x->ensure_grad();
            const T g = self.grad.data[0];
            for (std::size_t i = 0; i < saved->data.size(); ++i)
                x->grad.data[i] += g * saved->data[i];
        };
    }
    return node;
}

}  // namespace urbdiff::nn
