#pragma once

#include <cmath>
#include <cstddef>

#include "ueeg/ops.hpp"
#include "ueeg/tensor.hpp"

namespace ueeg {

// Mean over the batch of -log softmax(logits)[label], computed through
// log-sum-exp; a fused op so tiny probabilities never hit a bare log.
template <typename T>
Tensor<T> categorical_cross_entropy(const Tensor<T>& logits,
                                    const Tensor<T>& onehot,
                                    Tape<T>* tape = nullptr) {
    if (logits.rank() != 2 || logits.shape() != onehot.shape())
        throw Error(ErrorCode::ShapeMismatch,
                    "cross entropy expects matching (B,K) logits and one-hot");
    std::size_t B = logits.shape()[0], K = logits.shape()[1];
    const T* pl = logits.ptr();
    const T* py = onehot.ptr();
    // validate one label per row
    for (std::size_t b = 0; b < B; ++b) {
        T s = T(0);
        for (std::size_t k = 0; k < K; ++k) {
            T v = py[b * K + k];
            if (v != T(0) && v != T(1))
                throw Error(ErrorCode::LabelOutOfRange,
                            "one-hot labels must be 0/1");
            s += v;
        }
        if (s != T(1))
            throw Error(ErrorCode::LabelOutOfRange,
                        "each row needs exactly one label");
    }
    Tensor<T> probs(logits.shape());  // softmax, reused by the backward pass
    T* pp = probs.mutable_ptr();
    T total = T(0);
    for (std::size_t b = 0; b < B; ++b) {
        const T* row = pl + b * K;
        T mx = row[0];
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        T z = T(0);
        for (std::size_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
        T logz = std::log(z) + mx;
        for (std::size_t k = 0; k < K; ++k) {
            pp[b * K + k] = std::exp(row[k] - logz);
            if (py[b * K + k] == T(1)) total += logz - row[k];
        }
    }
    Tensor<T> loss = Tensor<T>::scalar(total / static_cast<T>(B));
    ops::detail::maybe_record(tape, loss, {logits, onehot},
                              [loss, logits, onehot, probs, B, K](Tape<T>& t) {
        const Tensor<T>* g = t.grad(loss);
        T gscale = g->data()[0] / static_cast<T>(B);
        Tensor<T> dl(logits.shape());
        const T* pp = probs.ptr();
        const T* py = onehot.ptr();
        T* pd = dl.mutable_ptr();
        for (std::size_t i = 0; i < dl.numel(); ++i)
            pd[i] = gscale * (pp[i] - py[i]);
        if (logits.requires_grad()) t.accumulate(logits, dl);
    });
    return loss;
}

// Elementwise binary cross-entropy; predictions clamped to [1e-7, 1-1e-7]
template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& pred, const Tensor<T>& target,
                               Tape<T>* tape = nullptr) {
    if (pred.shape() != target.shape())
        throw Error(ErrorCode::ShapeMismatch, "bce shapes differ");
    const T lo = T(1e-7), hi = T(1) - T(1e-7);
    const T* pp = pred.ptr();
    const T* pt = target.ptr();
    std::size_t n = pred.numel();
    T total = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        T p = std::min(std::max(pp[i], lo), hi);
        total += -(pt[i] * std::log(p) + (T(1) - pt[i]) * std::log(T(1) - p));
    }
    Tensor<T> loss = Tensor<T>::scalar(total / static_cast<T>(n));
    ops::detail::maybe_record(tape, loss, {pred, target},
                              [loss, pred, target, lo, hi, n](Tape<T>& t) {
        const Tensor<T>* g = t.grad(loss);
        T gscale = g->data()[0] / static_cast<T>(n);
        Tensor<T> dp(pred.shape());
        const T* pp = pred.ptr();
        const T* pt = target.ptr();
        T* pd = dp.mutable_ptr();
        for (std::size_t i = 0; i < n; ++i) {
            T p = pp[i];
            if (p <= lo || p >= hi) {
                pd[i] = T(0);  // clamped region is flat
            } else {
                pd[i] = gscale * (-pt[i] / p + (T(1) - pt[i]) / (T(1) - p));
            }
        }
        if (pred.requires_grad()) t.accumulate(pred, dp);
    });
    return loss;
}

}  // namespace ueeg
