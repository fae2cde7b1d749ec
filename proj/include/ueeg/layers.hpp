#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ueeg/ops.hpp"
#include "ueeg/rng.hpp"
#include "ueeg/tensor.hpp"

namespace ueeg {

enum class Mode { Train, Eval };

template <typename T>
struct Context {
    Tape<T>* tape = nullptr;
    Mode mode = Mode::Eval;
    RngStream* rng = nullptr;  // dropout masks
};

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>*>>;

// Glorot-uniform, limit sqrt(6 / (fan_in + fan_out)); biases stay zero
template <typename T>
void glorot_init(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out,
                 RngStream& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.mutable_data())
        v = static_cast<T>(rng.uniform(-limit, limit));
}

namespace nn {

// ---------------------------------------------------------------------------
// convolution primitives (cross-correlation, stride 1)
// ---------------------------------------------------------------------------

namespace detail {

// valid cross-correlation of x (B,C,H,W) with k (F,C,kh,kw) plus bias (F)
template <typename T>
Tensor<T> conv2d_valid(const Tensor<T>& x, const Tensor<T>& k,
                       const Tensor<T>& bias, Tape<T>* tape) {
    std::size_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2],
                W = x.shape()[3];
    std::size_t F = k.shape()[0], kh = k.shape()[2], kw = k.shape()[3];
    if (k.shape()[1] != C)
        throw Error(ErrorCode::ShapeMismatch,
                    "conv kernel channels " + std::to_string(k.shape()[1]) +
                        " != input channels " + std::to_string(C));
    if (kh > H || kw > W)
        throw Error(ErrorCode::KernelLargerThanInput,
                    "kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                        " exceeds input " + std::to_string(H) + "x" +
                        std::to_string(W));
    std::size_t OH = H - kh + 1, OW = W - kw + 1;
    Tensor<T> y({B, F, OH, OW});
    const T* px = x.ptr();
    const T* pk = k.ptr();
    const T* pb = bias.ptr();
    T* py = y.mutable_ptr();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t f = 0; f < F; ++f) {
            T* yplane = py + (b * F + f) * OH * OW;
            for (std::size_t i = 0; i < OH * OW; ++i) yplane[i] = pb[f];
            for (std::size_t c = 0; c < C; ++c) {
                const T* xplane = px + (b * C + c) * H * W;
                const T* kplane = pk + (f * C + c) * kh * kw;
                for (std::size_t r = 0; r < kh; ++r) {
                    for (std::size_t s = 0; s < kw; ++s) {
                        T kv = kplane[r * kw + s];
                        if (kv == T(0)) continue;
                        for (std::size_t oh = 0; oh < OH; ++oh) {
                            const T* xrow = xplane + (oh + r) * W + s;
                            T* yrow = yplane + oh * OW;
                            for (std::size_t ow = 0; ow < OW; ++ow)
                                yrow[ow] += kv * xrow[ow];
                        }
                    }
                }
            }
        }
    }
    ops::detail::maybe_record(tape, y, {x, k, bias},
                              [y, x, k, bias, B, C, H, W, F, kh, kw, OH,
                               OW](Tape<T>& t) {
        const Tensor<T>* g = t.grad(y);
        const T* pg = g->ptr();
        const T* px = x.ptr();
        const T* pk = k.ptr();
        if (x.requires_grad()) {
            Tensor<T> dx(x.shape());
            T* pdx = dx.mutable_ptr();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t f = 0; f < F; ++f) {
                    const T* gplane = pg + (b * F + f) * OH * OW;
                    for (std::size_t c = 0; c < C; ++c) {
                        T* xplane = pdx + (b * C + c) * H * W;
                        const T* kplane = pk + (f * C + c) * kh * kw;
                        for (std::size_t r = 0; r < kh; ++r)
                            for (std::size_t s = 0; s < kw; ++s) {
                                T kv = kplane[r * kw + s];
                                if (kv == T(0)) continue;
                                for (std::size_t oh = 0; oh < OH; ++oh) {
                                    const T* grow = gplane + oh * OW;
                                    T* xrow = xplane + (oh + r) * W + s;
                                    for (std::size_t ow = 0; ow < OW; ++ow)
                                        xrow[ow] += kv * grow[ow];
                                }
                            }
                    }
                }
            t.accumulate(x, dx);
        }
        if (k.requires_grad()) {
            Tensor<T> dk(k.shape());
            T* pdk = dk.mutable_ptr();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t f = 0; f < F; ++f) {
                    const T* gplane = pg + (b * F + f) * OH * OW;
                    for (std::size_t c = 0; c < C; ++c) {
                        const T* xplane = px + (b * C + c) * H * W;
                        T* kplane = pdk + (f * C + c) * kh * kw;
                        for (std::size_t r = 0; r < kh; ++r)
                            for (std::size_t s = 0; s < kw; ++s) {
                                T acc = T(0);
                                for (std::size_t oh = 0; oh < OH; ++oh) {
                                    const T* grow = gplane + oh * OW;
                                    const T* xrow = xplane + (oh + r) * W + s;
                                    for (std::size_t ow = 0; ow < OW; ++ow)
                                        acc += grow[ow] * xrow[ow];
                                }
                                kplane[r * kw + s] += acc;
                            }
                    }
                }
            t.accumulate(k, dk);
        }
        if (bias.requires_grad()) {
            Tensor<T> db(bias.shape());
            T* pdb = db.mutable_ptr();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t f = 0; f < F; ++f) {
                    const T* gplane = pg + (b * F + f) * OH * OW;
                    T acc = T(0);
                    for (std::size_t i = 0; i < OH * OW; ++i) acc += gplane[i];
                    pdb[f] += acc;
                }
            t.accumulate(bias, db);
        }
    });
    return y;
}

// valid depthwise cross-correlation: x (B,C,H,W), k (C,M,kh,kw) -> (B,C*M,...)
template <typename T>
Tensor<T> depthwise_valid(const Tensor<T>& x, const Tensor<T>& k,
                          const Tensor<T>& bias, Tape<T>* tape) {
    std::size_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2],
                W = x.shape()[3];
    std::size_t M = k.shape()[1], kh = k.shape()[2], kw = k.shape()[3];
    if (k.shape()[0] != C)
        throw Error(ErrorCode::ShapeMismatch, "depthwise kernel channel mismatch");
    if (kh > H || kw > W)
        throw Error(ErrorCode::KernelLargerThanInput,
                    "depthwise kernel exceeds input");
    std::size_t OH = H - kh + 1, OW = W - kw + 1;
    Tensor<T> y({B, C * M, OH, OW});
    const T* px = x.ptr();
    const T* pk = k.ptr();
    const T* pb = bias.ptr();
    T* py = y.mutable_ptr();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            const T* xplane = px + (b * C + c) * H * W;
            for (std::size_t m = 0; m < M; ++m) {
                std::size_t oc = c * M + m;
                T* yplane = py + (b * C * M + oc) * OH * OW;
                const T* kplane = pk + (c * M + m) * kh * kw;
                for (std::size_t i = 0; i < OH * OW; ++i) yplane[i] = pb[oc];
                for (std::size_t r = 0; r < kh; ++r)
                    for (std::size_t s = 0; s < kw; ++s) {
                        T kv = kplane[r * kw + s];
                        if (kv == T(0)) continue;
                        for (std::size_t oh = 0; oh < OH; ++oh) {
                            const T* xrow = xplane + (oh + r) * W + s;
                            T* yrow = yplane + oh * OW;
                            for (std::size_t ow = 0; ow < OW; ++ow)
                                yrow[ow] += kv * xrow[ow];
                        }
                    }
            }
        }
    ops::detail::maybe_record(tape, y, {x, k, bias},
                              [y, x, k, bias, B, C, H, W, M, kh, kw, OH,
                               OW](Tape<T>& t) {
        const Tensor<T>* g = t.grad(y);
        const T* pg = g->ptr();
        const T* px = x.ptr();
        const T* pk = k.ptr();
        Tensor<T> dx(x.shape()), dk(k.shape()), db(bias.shape());
        T* pdx = dx.mutable_ptr();
        T* pdk = dk.mutable_ptr();
        T* pdb = db.mutable_ptr();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const T* xplane = px + (b * C + c) * H * W;
                T* dxplane = pdx + (b * C + c) * H * W;
                for (std::size_t m = 0; m < M; ++m) {
                    std::size_t oc = c * M + m;
                    const T* gplane = pg + (b * C * M + oc) * OH * OW;
                    const T* kplane = pk + (c * M + m) * kh * kw;
                    T* dkplane = pdk + (c * M + m) * kh * kw;
                    for (std::size_t r = 0; r < kh; ++r)
                        for (std::size_t s = 0; s < kw; ++s) {
                            T kv = kplane[r * kw + s];
                            T acc = T(0);
                            for (std::size_t oh = 0; oh < OH; ++oh) {
                                const T* grow = gplane + oh * OW;
                                const T* xrow = xplane + (oh + r) * W + s;
                                T* dxrow = dxplane + (oh + r) * W + s;
                                for (std::size_t ow = 0; ow < OW; ++ow) {
                                    acc += grow[ow] * xrow[ow];
                                    dxrow[ow] += kv * grow[ow];
                                }
                            }
                            dkplane[r * kw + s] += acc;
                        }
                    T bacc = T(0);
                    for (std::size_t i = 0; i < OH * OW; ++i) bacc += gplane[i];
                    pdb[oc] += bacc;
                }
            }
        if (x.requires_grad()) t.accumulate(x, dx);
        if (k.requires_grad()) t.accumulate(k, dk);
        if (bias.requires_grad()) t.accumulate(bias, db);
    });
    return y;
}

inline std::pair<std::size_t, std::size_t> same_pad_amounts(std::size_t k) {
    return {(k - 1) / 2, k - 1 - (k - 1) / 2};
}

}  // namespace detail

enum class Pad { Valid, Same };

// 2D convolution layer; padding mode is fixed per spatial axis at build time
template <typename T>
struct Conv2d {
    Tensor<T> kernel;  // (F, C, kh, kw)
    Tensor<T> bias;    // (F)
    Pad pad_h = Pad::Valid;
    Pad pad_w = Pad::Valid;

    Conv2d() = default;
    Conv2d(std::size_t in_ch, std::size_t filters, std::size_t kh, std::size_t kw,
           RngStream& rng, Pad ph = Pad::Valid, Pad pw = Pad::Valid)
        : kernel({filters, in_ch, kh, kw}, true),
          bias({filters}, true), pad_h(ph), pad_w(pw) {
        glorot_init(kernel, in_ch * kh * kw, filters * kh * kw, rng);
    }

    Tensor<T> forward(Context<T>& ctx, const Tensor<T>& x) const {
        if (x.rank() != 4)
            throw Error(ErrorCode::ShapeMismatch, "conv2d expects (B,C,H,W)");
        Tensor<T> in = x;
        std::size_t kh = kernel.shape()[2], kw = kernel.shape()[3];
        std::vector<std::size_t> before{0, 0, 0, 0}, after{0, 0, 0, 0};
        if (pad_h == Pad::Same) {
            auto [b, a] = detail::same_pad_amounts(kh);
            before[2] = b;
            after[2] = a;
        }
        if (pad_w == Pad::Same) {
            auto [b, a] = detail::same_pad_amounts(kw);
            before[3] = b;
            after[3] = a;
        }
        if (before[2] || after[2] || before[3] || after[3])
            in = ops::pad(in, before, after, ctx.tape);
        return detail::conv2d_valid(in, kernel, bias, ctx.tape);
    }

    NamedParams<T> params(const std::string& prefix) {
        return {{prefix + ".kernel", &kernel}, {prefix + ".bias", &bias}};
    }
};

// 1D convolution over (B,C,L); realized internally on a (B,C,1,L) view
template <typename T>
struct Conv1d {
    Tensor<T> kernel;  // (F, C, k)
    Tensor<T> bias;
    Pad pad = Pad::Valid;

    Conv1d() = default;
    Conv1d(std::size_t in_ch, std::size_t filters, std::size_t k, RngStream& rng,
           Pad p = Pad::Valid)
        : kernel({filters, in_ch, k}, true), bias({filters}, true), pad(p) {
        glorot_init(kernel, in_ch * k, filters * k, rng);
    }

    Tensor<T> forward(Context<T>& ctx, const Tensor<T>& x) const {
        if (x.rank() != 3)
            throw Error(ErrorCode::ShapeMismatch, "conv1d expects (B,C,L)");
        std::size_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
        std::size_t F = kernel.shape()[0], k = kernel.shape()[2];
        auto x4 = ops::reshape(x, {B, C, std::size_t(1), L}, ctx.tape);
        auto k4 = ops::reshape(kernel, {F, C, std::size_t(1), k}, ctx.tape);
        if (pad == Pad::Same) {
            auto [b, a] = detail::same_pad_amounts(k);
            x4 = ops::pad(x4, {0, 0, 0, b}, {0, 0, 0, a}, ctx.tape);
        }
        auto y4 = detail::conv2d_valid(x4, k4, bias, ctx.tape);
        return ops::reshape(y4, {B, F, y4.shape()[3]}, ctx.tape);
    }

    NamedParams<T> params(const std::string& prefix) {
        return {{prefix + ".kernel", &kernel}, {prefix + ".bias", &bias}};
    }
};

// depthwise 2D convolution with depth multiplier M; no cross-channel summation
template <typename T>
struct DepthwiseConv2d {
    Tensor<T> kernel;  // (C, M, kh, kw)
    Tensor<T> bias;    // (C*M)
    Pad pad_h = Pad::Valid;
    Pad pad_w = Pad::Valid;

    DepthwiseConv2d() = default;
    DepthwiseConv2d(std::size_t in_ch, std::size_t multiplier, std::size_t kh,
                    std::size_t kw, RngStream& rng, Pad ph = Pad::Valid,
                    Pad pw = Pad::Valid)
        : kernel({in_ch, multiplier, kh, kw}, true),
          bias({in_ch * multiplier}, true), pad_h(ph), pad_w(pw) {
        glorot_init(kernel, kh * kw, multiplier * kh * kw, rng);
    }

    Tensor<T> forward(Context<T>& ctx, const Tensor<T>& x) const {
        if (x.rank() != 4)
            throw Error(ErrorCode::ShapeMismatch, "depthwise expects (B,C,H,W)");
        Tensor<T> in = x;
        std::size_t kh = kernel.shape()[2], kw = kernel.shape()[3];
        std::vector<std::size_t> before{0, 0, 0, 0}, after{0, 0, 0, 0};
        if (pad_h == Pad::Same) {
            auto [b, a] = detail::same_pad_amounts(kh);
            before[2] = b;
            after[2] = a;
        }
        if (pad_w == Pad::Same) {
            auto [b, a] = detail::same_pad_amounts(kw);
            before[3] = b;
            after[3] = a;
        }
        if (before[2] || after[2] || before[3] || after[3])
            in = ops::pad(in, before, after, ctx.tape);
        return detail::depthwise_valid(in, kernel, bias, ctx.tape);
    }

    NamedParams<T> params(const std::string& prefix) {
        return {{prefix + ".kernel", &kernel}, {prefix + ".bias", &bias}};
    }
};

template <typename T>
struct Dense {
    Tensor<T> weight;  // (D, U)
    Tensor<T> bias;    // (U)

    Dense() = default;
    Dense(std::size_t in_dim, std::size_t out_dim, RngStream& rng)
        : weight({in_dim, out_dim}, true), bias({out_dim}, true) {
        glorot_init(weight, in_dim, out_dim, rng);
    }

    Tensor<T> forward(Context<T>& ctx, const Tensor<T>& x) const {
        if (x.rank() != 2 || x.shape()[1] != weight.shape()[0])
            throw Error(ErrorCode::ShapeMismatch,
                        "dense input " + shape_str(x.shape()) +
                            " incompatible with weight " +
                            shape_str(weight.shape()));
        return ops::add(ops::matmul(x, weight, ctx.tape), bias, ctx.tape);
    }

    NamedParams<T> params(const std::string& prefix) {
        return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
    }
};

// Batch normalization over the batch axis (and spatial axes for rank-4 input).
// Biased variance in the normalizer; running stats momentum 0.9; eps 1e-5.
template <typename T>
struct BatchNorm {
    Tensor<T> gamma, beta;
    Tensor<T> running_mean, running_var;  // state, not trainable
    T eps = T(1e-5);
    T momentum = T(0.9);

    BatchNorm() = default;
    explicit BatchNorm(std::size_t features)
        : gamma(Tensor<T>::ones({features}, true)),
          beta(Tensor<T>::zeros({features}, true)),
          running_mean(Tensor<T>::zeros({features})),
          running_var(Tensor<T>::ones({features})) {}

    Tensor<T> forward(Context<T>& ctx, const Tensor<T>& x) {
        if (x.rank() != 2 && x.rank() != 4)
            throw Error(ErrorCode::ShapeMismatch, "batchnorm expects rank 2 or 4");
        std::size_t B = x.shape()[0];
        std::size_t C = x.shape()[1];
        if (C != gamma.numel())
            throw Error(ErrorCode::ShapeMismatch, "batchnorm feature mismatch");
        std::size_t spatial = x.numel() / (B * C);
        std::size_t n = B * spatial;
        const T* px = x.ptr();

        std::vector<T> mean_v(C), var_v(C);
        bool train = ctx.mode == Mode::Train;
        if (train) {
            if (B < 2)
                throw Error(ErrorCode::BatchTooSmall,
                            "batchnorm train mode requires batch size >= 2");
            for (std::size_t c = 0; c < C; ++c) {
                T m = T(0);
                for (std::size_t b = 0; b < B; ++b) {
                    const T* plane = px + (b * C + c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) m += plane[i];
                }
                m /= static_cast<T>(n);
                T v = T(0);
                for (std::size_t b = 0; b < B; ++b) {
                    const T* plane = px + (b * C + c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) {
                        T d = plane[i] - m;
                        v += d * d;
                    }
                }
                v /= static_cast<T>(n);
                mean_v[c] = m;
                var_v[c] = v;
            }
            T* rm = running_mean.mutable_ptr();
            T* rv = running_var.mutable_ptr();
            for (std::size_t c = 0; c < C; ++c) {
                rm[c] = momentum * rm[c] + (T(1) - momentum) * mean_v[c];
                rv[c] = momentum * rv[c] + (T(1) - momentum) * var_v[c];
            }
        } else {
            mean_v.assign(running_mean.ptr(), running_mean.ptr() + C);
            var_v.assign(running_var.ptr(), running_var.ptr() + C);
        }

        Tensor<T> y(x.shape());
        std::vector<T> inv_std(C);
        for (std::size_t c = 0; c < C; ++c)
            inv_std[c] = T(1) / std::sqrt(var_v[c] + eps);
        const T* pg = gamma.ptr();
        const T* pbeta = beta.ptr();
        T* py = y.mutable_ptr();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const T* xin = px + (b * C + c) * spatial;
                T* yo = py + (b * C + c) * spatial;
                for (std::size_t i = 0; i < spatial; ++i)
                    yo[i] = pg[c] * (xin[i] - mean_v[c]) * inv_std[c] + pbeta[c];
            }

        Tensor<T> gamma_cap = gamma, beta_cap = beta, x_cap = x;
        ops::detail::maybe_record(
            ctx.tape, y, {x, gamma, beta},
            [y, x_cap, gamma_cap, beta_cap, mean_v, inv_std, B, C, spatial, n,
             train](Tape<T>& t) {
                const Tensor<T>* g = t.grad(y);
                const T* pg = g->ptr();
                const T* px = x_cap.ptr();
                const T* pgam = gamma_cap.ptr();
                Tensor<T> dgamma(gamma_cap.shape()), dbeta(beta_cap.shape());
                T* pdg = dgamma.mutable_ptr();
                T* pdb = dbeta.mutable_ptr();
                Tensor<T> dx(x_cap.shape());
                T* pdx = dx.mutable_ptr();
                for (std::size_t c = 0; c < C; ++c) {
                    T sum_g = T(0), sum_gx = T(0);
                    for (std::size_t b = 0; b < B; ++b) {
                        const T* grow = pg + (b * C + c) * spatial;
                        const T* xrow = px + (b * C + c) * spatial;
                        for (std::size_t i = 0; i < spatial; ++i) {
                            T xhat = (xrow[i] - mean_v[c]) * inv_std[c];
                            sum_g += grow[i];
                            sum_gx += grow[i] * xhat;
                        }
                    }
                    pdg[c] = sum_gx;
                    pdb[c] = sum_g;
                    T nn = static_cast<T>(n);
                    for (std::size_t b = 0; b < B; ++b) {
                        const T* grow = pg + (b * C + c) * spatial;
                        const T* xrow = px + (b * C + c) * spatial;
                        T* dxrow = pdx + (b * C + c) * spatial;
                        for (std::size_t i = 0; i < spatial; ++i) {
                            if (train) {
                                T xhat = (xrow[i] - mean_v[c]) * inv_std[c];
                                dxrow[i] = pgam[c] * inv_std[c] / nn *
                                           (nn * grow[i] - sum_g - xhat * sum_gx);
                            } else {
                                dxrow[i] = pgam[c] * inv_std[c] * grow[i];
                            }
                        }
                    }
                }
                if (x_cap.requires_grad()) t.accumulate(x_cap, dx);
                if (gamma_cap.requires_grad()) t.accumulate(gamma_cap, dgamma);
                if (beta_cap.requires_grad()) t.accumulate(beta_cap, dbeta);
            });
        return y;
    }

    NamedParams<T> params(const std::string& prefix) {
        return {{prefix + ".gamma", &gamma}, {prefix + ".beta", &beta}};
    }
    NamedParams<T> state(const std::string& prefix) {
        return {{prefix + ".running_mean", &running_mean},
                {prefix + ".running_var", &running_var}};
    }
};

// max pooling; gradient routes to the first (lowest flat index) maximum
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t ph, std::size_t pw,
                    std::size_t sh = 0, std::size_t sw = 0,
                    Tape<T>* tape = nullptr) {
    if (x.rank() != 4)
        throw Error(ErrorCode::ShapeMismatch, "maxpool2d expects (B,C,H,W)");
    if (sh == 0) sh = ph;
    if (sw == 0) sw = pw;
    std::size_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2],
                W = x.shape()[3];
    if (ph > H || pw > W)
        throw Error(ErrorCode::WindowLargerThanInput,
                    "pool window " + std::to_string(ph) + "x" +
                        std::to_string(pw) + " exceeds input " +
                        std::to_string(H) + "x" + std::to_string(W));
    std::size_t OH = (H - ph) / sh + 1, OW = (W - pw) / sw + 1;
    Tensor<T> y({B, C, OH, OW});
    std::vector<std::size_t> argmax(y.numel());
    const T* px = x.ptr();
    T* py = y.mutable_ptr();
    std::size_t oi = 0;
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            const T* plane = px + (b * C + c) * H * W;
            std::size_t plane_off = (b * C + c) * H * W;
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    T best = plane[oh * sh * W + ow * sw];
                    std::size_t best_idx = oh * sh * W + ow * sw;
                    for (std::size_t r = 0; r < ph; ++r)
                        for (std::size_t s = 0; s < pw; ++s) {
                            std::size_t idx = (oh * sh + r) * W + ow * sw + s;
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    py[oi] = best;
                    argmax[oi] = plane_off + best_idx;
                    ++oi;
                }
        }
    ops::detail::maybe_record(tape, y, {x}, [y, x, argmax](Tape<T>& t) {
        const Tensor<T>* g = t.grad(y);
        Tensor<T> dx(x.shape());
        const T* pg = g->ptr();
        T* pdx = dx.mutable_ptr();
        for (std::size_t i = 0; i < argmax.size(); ++i) pdx[argmax[i]] += pg[i];
        t.accumulate(x, dx);
    });
    return y;
}

// inverted dropout: train scales survivors by 1/(1-p); eval is the identity
template <typename T>
Tensor<T> dropout(Context<T>& ctx, const Tensor<T>& x, double p_drop) {
    if (p_drop < 0.0 || p_drop >= 1.0)
        throw Error(ErrorCode::InvalidProbability,
                    "dropout probability must be in [0,1)");
    if (ctx.mode == Mode::Eval || p_drop == 0.0) return x;
    if (!ctx.rng)
        throw Error(ErrorCode::InvalidSpec, "train-mode dropout needs an rng");
    Tensor<T> mask(x.shape());
    T scale = static_cast<T>(1.0 / (1.0 - p_drop));
    T* pm = mask.mutable_ptr();
    for (std::size_t i = 0; i < mask.numel(); ++i)
        pm[i] = ctx.rng->next_double() < p_drop ? T(0) : scale;
    return ops::mul(x, mask, ctx.tape);
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

// gate convention:
//   z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
//   r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
//   hcand = tanh(x_t Wh + (r_t * h_{t-1}) Uh + bh)
//   h_t = (1 - z_t) * h_{t-1} + z_t * hcand
template <typename T>
struct Gru {
    Tensor<T> Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
    std::size_t hidden = 0;

    Gru() = default;
    Gru(std::size_t in_dim, std::size_t hidden_size, RngStream& rng)
        : hidden(hidden_size) {
        auto mk = [&](std::size_t rows, std::size_t cols) {
            Tensor<T> w({rows, cols}, true);
            glorot_init(w, rows, cols, rng);
            return w;
        };
        Wz = mk(in_dim, hidden);
        Uz = mk(hidden, hidden);
        bz = Tensor<T>::zeros({hidden}, true);
        Wr = mk(in_dim, hidden);
        Ur = mk(hidden, hidden);
        br = Tensor<T>::zeros({hidden}, true);
        Wh = mk(in_dim, hidden);
        Uh = mk(hidden, hidden);
        bh = Tensor<T>::zeros({hidden}, true);
    }

    // one step: x_t (B,D), h (B,H) -> h_t (B,H)
    Tensor<T> step(Context<T>& ctx, const Tensor<T>& xt,
                   const Tensor<T>& h) const {
        Tape<T>* tp = ctx.tape;
        auto z = ops::sigmoid(
            ops::add(ops::add(ops::matmul(xt, Wz, tp), ops::matmul(h, Uz, tp), tp),
                     bz, tp),
            tp);
        auto r = ops::sigmoid(
            ops::add(ops::add(ops::matmul(xt, Wr, tp), ops::matmul(h, Ur, tp), tp),
                     br, tp),
            tp);
        auto rh = ops::mul(r, h, tp);
        auto hcand = ops::tanh(
            ops::add(ops::add(ops::matmul(xt, Wh, tp), ops::matmul(rh, Uh, tp), tp),
                     bh, tp),
            tp);
        auto one_minus_z = ops::sub(Tensor<T>::ones(z.shape()), z, tp);
        return ops::add(ops::mul(one_minus_z, h, tp), ops::mul(z, hcand, tp), tp);
    }

    // x (B,T,D), h0 zeros -> (outputs (B,T,H), final hidden (B,H))
    std::pair<Tensor<T>, Tensor<T>> forward(Context<T>& ctx,
                                            const Tensor<T>& x) const {
        if (x.rank() != 3)
            throw Error(ErrorCode::ShapeMismatch, "gru expects (B,T,D)");
        std::size_t B = x.shape()[0], Tsteps = x.shape()[1], D = x.shape()[2];
        if (Tsteps < 1)
            throw Error(ErrorCode::EmptySequence, "gru needs at least one step");
        Tensor<T> h = Tensor<T>::zeros({B, hidden});
        std::vector<Tensor<T>> outs;
        outs.reserve(Tsteps);
        for (std::size_t t = 0; t < Tsteps; ++t) {
            auto xt = ops::reshape(ops::slice(x, {0, t, 0}, {B, 1, D}, ctx.tape),
                                   {B, D}, ctx.tape);
            h = step(ctx, xt, h);
            outs.push_back(
                ops::reshape(h, {B, std::size_t(1), hidden}, ctx.tape));
        }
        Tensor<T> seq = outs.size() == 1 ? outs[0]
                                         : ops::concat(outs, 1, ctx.tape);
        return {seq, h};
    }

    NamedParams<T> params(const std::string& p) {
        return {{p + ".Wz", &Wz}, {p + ".Uz", &Uz}, {p + ".bz", &bz},
                {p + ".Wr", &Wr}, {p + ".Ur", &Ur}, {p + ".br", &br},
                {p + ".Wh", &Wh}, {p + ".Uh", &Uh}, {p + ".bh", &bh}};
    }
};

template <typename T>
Tensor<T> flatten(const Tensor<T>& x, Tape<T>* tape = nullptr) {
    return ops::reshape(x, {x.shape()[0], x.numel() / x.shape()[0]}, tape);
}

}  // namespace nn
}  // namespace ueeg
