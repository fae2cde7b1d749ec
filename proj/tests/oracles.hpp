// Independent brute-force oracles used only by tests. These are deliberately
// naive (quadruple loops, per-step recurrences) and share no code with the
// library implementations they check.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// valid cross-correlation, x (B,C,H,W) row-major, k (F,C,kh,kw), bias (F)
template <typename T>
std::vector<T> conv2d(const std::vector<T>& x, std::size_t B, std::size_t C,
                      std::size_t H, std::size_t W, const std::vector<T>& k,
                      std::size_t F, std::size_t kh, std::size_t kw,
                      const std::vector<T>& bias) {
    std::size_t OH = H - kh + 1, OW = W - kw + 1;
    std::vector<T> y(B * F * OH * OW);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    T acc = bias[f];
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t r = 0; r < kh; ++r)
                            for (std::size_t s = 0; s < kw; ++s)
                                acc += x[((b * C + c) * H + oh + r) * W + ow + s] *
                                       k[((f * C + c) * kh + r) * kw + s];
                    y[((b * F + f) * OH + oh) * OW + ow] = acc;
                }
    return y;
}

// valid 1D cross-correlation, x (B,C,L), k (F,C,kl)
template <typename T>
std::vector<T> conv1d(const std::vector<T>& x, std::size_t B, std::size_t C,
                      std::size_t L, const std::vector<T>& k, std::size_t F,
                      std::size_t kl, const std::vector<T>& bias) {
    std::size_t OL = L - kl + 1;
    std::vector<T> y(B * F * OL);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t o = 0; o < OL; ++o) {
                T acc = bias[f];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t s = 0; s < kl; ++s)
                        acc += x[(b * C + c) * L + o + s] *
                               k[(f * C + c) * kl + s];
                y[(b * F + f) * OL + o] = acc;
            }
    return y;
}

// depthwise as a loop of independent single-channel conv2d calls
template <typename T>
std::vector<T> depthwise_conv2d(const std::vector<T>& x, std::size_t B,
                                std::size_t C, std::size_t H, std::size_t W,
                                const std::vector<T>& k, std::size_t M,
                                std::size_t kh, std::size_t kw,
                                const std::vector<T>& bias) {
    std::size_t OH = H - kh + 1, OW = W - kw + 1;
    std::vector<T> y(B * C * M * OH * OW);
    for (std::size_t c = 0; c < C; ++c) {
        // channel c as a 1-channel image batch
        std::vector<T> xc(B * H * W);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < H * W; ++i)
                xc[b * H * W + i] = x[(b * C + c) * H * W + i];
        std::vector<T> kc(M * kh * kw);
        std::vector<T> bc(M);
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t i = 0; i < kh * kw; ++i)
                kc[m * kh * kw + i] = k[(c * M + m) * kh * kw + i];
            bc[m] = bias[c * M + m];
        }
        auto yc = conv2d(xc, B, 1, H, W, kc, M, kh, kw, bc);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t i = 0; i < OH * OW; ++i)
                    y[((b * C * M + c * M + m)) * OH * OW + i] =
                        yc[(b * M + m) * OH * OW + i];
    }
    return y;
}

// single GRU cell step on raw vectors; W (D,H) row-major, U (H,H), b (H)
template <typename T>
std::vector<T> gru_cell(const std::vector<T>& xt, const std::vector<T>& h,
                        std::size_t D, std::size_t H, const std::vector<T>& Wz,
                        const std::vector<T>& Uz, const std::vector<T>& bz,
                        const std::vector<T>& Wr, const std::vector<T>& Ur,
                        const std::vector<T>& br, const std::vector<T>& Wh,
                        const std::vector<T>& Uh, const std::vector<T>& bh) {
    auto affine = [&](const std::vector<T>& W, const std::vector<T>& U,
                      const std::vector<T>& b, const std::vector<T>& hh) {
        std::vector<T> out(H);
        for (std::size_t j = 0; j < H; ++j) {
            T acc = b[j];
            for (std::size_t i = 0; i < D; ++i) acc += xt[i] * W[i * H + j];
            for (std::size_t i = 0; i < H; ++i) acc += hh[i] * U[i * H + j];
            out[j] = acc;
        }
        return out;
    };
    auto sig = [](T v) { return T(1) / (T(1) + std::exp(-v)); };
    std::vector<T> z = affine(Wz, Uz, bz, h);
    std::vector<T> r = affine(Wr, Ur, br, h);
    for (auto& v : z) v = sig(v);
    for (auto& v : r) v = sig(v);
    std::vector<T> rh(H);
    for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * h[j];
    // hcand needs x W + (r*h) U + b
    std::vector<T> hc(H);
    for (std::size_t j = 0; j < H; ++j) {
        T acc = bh[j];
        for (std::size_t i = 0; i < D; ++i) acc += xt[i] * Wh[i * H + j];
        for (std::size_t i = 0; i < H; ++i) acc += rh[i] * Uh[i * H + j];
        hc[j] = std::tanh(acc);
    }
    std::vector<T> hn(H);
    for (std::size_t j = 0; j < H; ++j)
        hn[j] = (T(1) - z[j]) * h[j] + z[j] * hc[j];
    return hn;
}

}  // namespace oracle
