#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ueeg/tensor.hpp"

namespace ueeg {
namespace ops {

// ---------------------------------------------------------------------------
// broadcasting helpers (right-aligned, size-1 stretch, left-pad with 1s)
// ---------------------------------------------------------------------------

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            throw Error(ErrorCode::ShapeMismatch,
                        "cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        out[i] = std::max(da, db);
    }
    return out;
}

// flat strides of `shape` padded to rank r, with 0 stride on broadcast dims
inline std::vector<std::size_t> broadcast_strides(const Shape& shape,
                                                  const Shape& out, std::size_t r) {
    std::vector<std::size_t> st(r, 0);
    std::size_t stride = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
        std::size_t oi = i + (r - shape.size());
        st[oi] = (shape[i] == 1 && out[oi] != 1) ? 0 : stride;
        stride *= shape[i];
    }
    return st;
}

// sum `g` (shaped like `out`) down to `target` shape; inverse of broadcasting
template <typename T>
Tensor<T> reduce_to(const Tensor<T>& g, const Shape& target) {
    if (g.shape() == target) return g;
    std::size_t r = g.rank();
    Tensor<T> res(target);
    auto st = broadcast_strides(target, g.shape(), r);
    const Shape& os = g.shape();
    std::vector<std::size_t> idx(r, 0);
    const T* gp = g.ptr();
    T* rp = res.mutable_ptr();
    for (std::size_t flat = 0; flat < g.numel(); ++flat) {
        std::size_t ti = 0;
        for (std::size_t d = 0; d < r; ++d) ti += idx[d] * st[d];
        rp[ti] += gp[flat];
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < os[d]) break;
            idx[d] = 0;
        }
    }
    return res;
}

enum class Elementwise { Add, Sub, Mul, Div, Relu, Sigmoid, Tanh, Exp, Log, Neg };

namespace detail {

template <typename T, typename F>
Tensor<T> broadcast_binary(const Tensor<T>& a, const Tensor<T>& b, F&& f) {
    Shape os = broadcast_shape(a.shape(), b.shape());
    std::size_t r = os.size();
    Tensor<T> out(os);
    auto sa = broadcast_strides(a.shape(), os, r);
    auto sb = broadcast_strides(b.shape(), os, r);
    std::vector<std::size_t> idx(r, 0);
    const T* pa = a.ptr();
    const T* pb = b.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t flat = 0; flat < out.numel(); ++flat) {
        std::size_t ia = 0, ib = 0;
        for (std::size_t d = 0; d < r; ++d) {
            ia += idx[d] * sa[d];
            ib += idx[d] * sb[d];
        }
        po[flat] = f(pa[ia], pb[ib]);
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < os[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

// dL/da for a binary broadcast op, given per-element partials w.r.t. a
template <typename T, typename F>
Tensor<T> broadcast_binary_grad(const Tensor<T>& g, const Tensor<T>& a,
                                const Tensor<T>& b, F&& partial) {
    Shape os = g.shape();
    std::size_t r = os.size();
    Tensor<T> full(os);
    auto sa = broadcast_strides(a.shape(), os, r);
    auto sb = broadcast_strides(b.shape(), os, r);
    std::vector<std::size_t> idx(r, 0);
    const T* pa = a.ptr();
    const T* pb = b.ptr();
    const T* pg = g.ptr();
    T* pf = full.mutable_ptr();
    for (std::size_t flat = 0; flat < g.numel(); ++flat) {
        std::size_t ia = 0, ib = 0;
        for (std::size_t d = 0; d < r; ++d) {
            ia += idx[d] * sa[d];
            ib += idx[d] * sb[d];
        }
        pf[flat] = pg[flat] * partial(pa[ia], pb[ib]);
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < os[d]) break;
            idx[d] = 0;
        }
    }
    return reduce_to(full, a.shape());
}

template <typename T>
void maybe_record(Tape<T>* tape, const Tensor<T>& out,
                  std::vector<Tensor<T>> parents,
                  typename Tape<T>::BackwardFn fn) {
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (!tape || !any) return;
    const_cast<Tensor<T>&>(out).set_requires_grad(true);
    tape->record(out, std::move(parents), std::move(fn));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    Tensor<T> out = detail::broadcast_binary(a, b, [](T x, T y) { return x + y; });
    detail::maybe_record(tape, out, {a, b}, [out, a, b](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        if (a.requires_grad()) t.accumulate(a, reduce_to(*g, a.shape()));
        if (b.requires_grad()) t.accumulate(b, reduce_to(*g, b.shape()));
    });
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    Tensor<T> out = detail::broadcast_binary(a, b, [](T x, T y) { return x - y; });
    detail::maybe_record(tape, out, {a, b}, [out, a, b](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        if (a.requires_grad()) t.accumulate(a, reduce_to(*g, a.shape()));
        if (b.requires_grad()) {
            Tensor<T> neg(g->shape());
            const T* pg = g->ptr();
            T* pn = neg.mutable_ptr();
            for (std::size_t i = 0; i < neg.numel(); ++i) pn[i] = -pg[i];
            t.accumulate(b, reduce_to(neg, b.shape()));
        }
    });
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    Tensor<T> out = detail::broadcast_binary(a, b, [](T x, T y) { return x * y; });
    detail::maybe_record(tape, out, {a, b}, [out, a, b](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        if (a.requires_grad())
            t.accumulate(a, detail::broadcast_binary_grad(*g, a, b,
                                                          [](T, T y) { return y; }));
        if (b.requires_grad())
            t.accumulate(b, detail::broadcast_binary_grad(*g, b, a,
                                                          [](T, T y) { return y; }));
    });
    return out;
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    for (T v : b.data())
        if (v == T(0))
            throw Error(ErrorCode::DomainError, "division by zero");
    Tensor<T> out = detail::broadcast_binary(a, b, [](T x, T y) { return x / y; });
    detail::maybe_record(tape, out, {a, b}, [out, a, b](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        if (a.requires_grad())
            t.accumulate(a, detail::broadcast_binary_grad(
                                *g, a, b, [](T, T y) { return T(1) / y; }));
        if (b.requires_grad())
            t.accumulate(b, detail::broadcast_binary_grad(
                                *g, b, a, [](T y, T x) { return -x / (y * y); }));
    });
    return out;
}

namespace detail {

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary(const Tensor<T>& a, Tape<T>* tape, Fwd&& fwd, Bwd&& bwd) {
    Tensor<T> out(a.shape());
    const T* pa = a.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t i = 0; i < out.numel(); ++i) po[i] = fwd(pa[i]);
    maybe_record(tape, out, {a}, [out, a, bwd](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        Tensor<T> da(a.shape());
        const T* pg = g->ptr();
        const T* px = a.ptr();
        const T* py = out.ptr();
        T* pd = da.mutable_ptr();
        for (std::size_t i = 0; i < da.numel(); ++i)
            pd[i] = pg[i] * bwd(px[i], py[i]);
        t.accumulate(a, da);
    });
    return out;
}

}  // namespace detail

template <typename T>
Tensor<T> relu(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    return detail::unary(a, tape, [](T x) { return x > T(0) ? x : T(0); },
                         [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    auto sig = [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        T e = std::exp(x);
        return e / (T(1) + e);
    };
    return detail::unary(a, tape, sig, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    return detail::unary(a, tape, [](T x) { return std::tanh(x); },
                         [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    return detail::unary(a, tape, [](T x) { return std::exp(x); },
                         [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    for (T v : a.data())
        if (v <= T(0))
            throw Error(ErrorCode::DomainError, "log of non-positive value");
    return detail::unary(a, tape, [](T x) { return std::log(x); },
                         [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    return detail::unary(a, tape, [](T x) { return -x; },
                         [](T, T) { return T(-1); });
}

// a * c with a compile-time-free scalar constant
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c, Tape<T>* tape = nullptr) {
    return detail::unary(a, tape, [c](T x) { return x * c; },
                         [c](T, T) { return c; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c, Tape<T>* tape = nullptr) {
    return detail::unary(a, tape, [c](T x) { return x + c; },
                         [](T, T) { return T(1); });
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

namespace detail {

// C (m x n) = A (m x k) * B (k x n), accumulate into C
template <typename T>
void gemm_acc(const T* A, const T* B, T* C, std::size_t m, std::size_t k,
              std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = A + i * k;
        T* crow = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            T a = arow[p];
            if (a == T(0)) continue;
            const T* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

// C (m x n) += A (k x m)^T * B (k x n)
template <typename T>
void gemm_at_b(const T* A, const T* B, T* C, std::size_t k, std::size_t m,
               std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const T* arow = A + p * m;
        const T* brow = B + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            T a = arow[i];
            if (a == T(0)) continue;
            T* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

// C (m x n) += A (m x k) * B (n x k)^T
template <typename T>
void gemm_a_bt(const T* A, const T* B, T* C, std::size_t m, std::size_t k,
               std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = A + i * k;
        T* crow = C + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = B + j * k;
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    if (a.rank() != 2 || b.rank() != 2)
        throw Error(ErrorCode::ShapeMismatch,
                    "matmul expects rank-2 operands, got " + shape_str(a.shape()) +
                        " and " + shape_str(b.shape()));
    std::size_t m = a.shape()[0], k = a.shape()[1];
    std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw Error(ErrorCode::ShapeMismatch,
                    "matmul inner dimensions differ: " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
    Tensor<T> out({m, n});
    detail::gemm_acc(a.ptr(), b.ptr(), out.mutable_ptr(), m, k, n);
    detail::maybe_record(tape, out, {a, b}, [out, a, b, m, k, n](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        if (a.requires_grad()) {
            Tensor<T> da(a.shape());
            detail::gemm_a_bt(g->ptr(), b.ptr(), da.mutable_ptr(), m, n, k);
            t.accumulate(a, da);
        }
        if (b.requires_grad()) {
            Tensor<T> db(b.shape());
            detail::gemm_at_b(a.ptr(), g->ptr(), db.mutable_ptr(), m, k, n);
            t.accumulate(b, db);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

enum class Reduce { Sum, Mean, Max };

constexpr std::size_t kAllAxes = static_cast<std::size_t>(-1);

template <typename T>
Tensor<T> reduce(Reduce kind, const Tensor<T>& a, std::size_t axis = kAllAxes,
                 Tape<T>* tape = nullptr) {
    if (axis != kAllAxes && axis >= a.rank())
        throw Error(ErrorCode::AxisOutOfRange,
                    "axis " + std::to_string(axis) + " out of range for rank " +
                        std::to_string(a.rank()));
    std::size_t outer = 1, mid, inner = 1;
    Shape out_shape;
    if (axis == kAllAxes) {
        mid = a.numel();
        out_shape = {1};
    } else {
        for (std::size_t d = 0; d < axis; ++d) outer *= a.shape()[d];
        mid = a.shape()[axis];
        for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.shape()[d];
        for (std::size_t d = 0; d < a.rank(); ++d)
            if (d != axis) out_shape.push_back(a.shape()[d]);
        if (out_shape.empty()) out_shape = {1};
    }
    Tensor<T> out(out_shape);
    std::vector<std::size_t> argmax;
    if (kind == Reduce::Max) argmax.assign(out.numel(), 0);
    const T* pa = a.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            std::size_t oi = o * inner + in;
            if (kind == Reduce::Max) {
                T best = pa[o * mid * inner + in];
                std::size_t best_j = 0;
                for (std::size_t j = 1; j < mid; ++j) {
                    T v = pa[(o * mid + j) * inner + in];
                    if (v > best) {
                        best = v;
                        best_j = j;
                    }
                }
                po[oi] = best;
                argmax[oi] = best_j;
            } else {
                T acc = T(0);
                for (std::size_t j = 0; j < mid; ++j)
                    acc += pa[(o * mid + j) * inner + in];
                po[oi] = kind == Reduce::Mean ? acc / static_cast<T>(mid) : acc;
            }
        }
    }
    detail::maybe_record(tape, out, {a},
                         [out, a, kind, outer, mid, inner, argmax](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        Tensor<T> da(a.shape());
        const T* pg = g->ptr();
        T* pd = da.mutable_ptr();
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                std::size_t oi = o * inner + in;
                if (kind == Reduce::Max) {
                    pd[(o * mid + argmax[oi]) * inner + in] += pg[oi];
                } else {
                    T v = kind == Reduce::Mean ? pg[oi] / static_cast<T>(mid)
                                               : pg[oi];
                    for (std::size_t j = 0; j < mid; ++j)
                        pd[(o * mid + j) * inner + in] += v;
                }
            }
        }
        t.accumulate(a, da);
    });
    return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a, std::size_t axis = kAllAxes,
              Tape<T>* tape = nullptr) {
    return reduce(Reduce::Sum, a, axis, tape);
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, std::size_t axis = kAllAxes,
               Tape<T>* tape = nullptr) {
    return reduce(Reduce::Mean, a, axis, tape);
}

template <typename T>
Tensor<T> max(const Tensor<T>& a, std::size_t axis = kAllAxes,
              Tape<T>* tape = nullptr) {
    return reduce(Reduce::Max, a, axis, tape);
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape, Tape<T>* tape = nullptr) {
    if (numel_of(new_shape) != a.numel())
        throw Error(ErrorCode::ShapeMismatch,
                    "reshape " + shape_str(a.shape()) + " -> " +
                        shape_str(new_shape) + " changes element count");
    Tensor<T> out(new_shape, a.data());
    detail::maybe_record(tape, out, {a}, [out, a](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        t.accumulate(a, Tensor<T>(a.shape(), g->data()));
    });
    return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes,
                  Tape<T>* tape = nullptr) {
    std::size_t r = a.rank();
    if (axes.size() != r)
        throw Error(ErrorCode::ShapeMismatch, "permutation rank mismatch");
    Shape os(r);
    for (std::size_t d = 0; d < r; ++d) {
        if (axes[d] >= r)
            throw Error(ErrorCode::AxisOutOfRange, "bad permutation axis");
        os[d] = a.shape()[axes[d]];
    }
    std::vector<std::size_t> in_strides(r, 1);
    for (std::size_t d = r - 1; d-- > 0;)
        in_strides[d] = in_strides[d + 1] * a.shape()[d + 1];
    Tensor<T> out(os);
    std::vector<std::size_t> idx(r, 0);
    const T* pa = a.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t flat = 0; flat < out.numel(); ++flat) {
        std::size_t src = 0;
        for (std::size_t d = 0; d < r; ++d) src += idx[d] * in_strides[axes[d]];
        po[flat] = pa[src];
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < os[d]) break;
            idx[d] = 0;
        }
    }
    detail::maybe_record(tape, out, {a}, [out, a, axes](Tape<T>& t) {
        std::vector<std::size_t> inv(axes.size());
        for (std::size_t d = 0; d < axes.size(); ++d) inv[axes[d]] = d;
        const Tensor<T>* g = t.grad(out);
        t.accumulate(a, permute(*g, inv));
    });
    return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a, Tape<T>* tape = nullptr) {
    if (a.rank() != 2)
        throw Error(ErrorCode::ShapeMismatch, "transpose expects rank 2");
    return permute(a, {1, 0}, tape);
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, const std::vector<std::size_t>& starts,
                const std::vector<std::size_t>& sizes, Tape<T>* tape = nullptr) {
    std::size_t r = a.rank();
    if (starts.size() != r || sizes.size() != r)
        throw Error(ErrorCode::ShapeMismatch, "slice spec rank mismatch");
    for (std::size_t d = 0; d < r; ++d)
        if (sizes[d] == 0 || starts[d] + sizes[d] > a.shape()[d])
            throw Error(ErrorCode::BoundsError,
                        "slice out of bounds on axis " + std::to_string(d));
    std::vector<std::size_t> st(r, 1);
    for (std::size_t d = r - 1; d-- > 0;) st[d] = st[d + 1] * a.shape()[d + 1];
    Tensor<T> out(sizes);
    std::vector<std::size_t> idx(r, 0);
    const T* pa = a.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t flat = 0; flat < out.numel(); ++flat) {
        std::size_t src = 0;
        for (std::size_t d = 0; d < r; ++d) src += (starts[d] + idx[d]) * st[d];
        po[flat] = pa[src];
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < sizes[d]) break;
            idx[d] = 0;
        }
    }
    detail::maybe_record(tape, out, {a}, [out, a, starts, sizes, st](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        Tensor<T> da(a.shape());
        std::size_t r = a.rank();
        std::vector<std::size_t> idx(r, 0);
        const T* pg = g->ptr();
        T* pd = da.mutable_ptr();
        for (std::size_t flat = 0; flat < g->numel(); ++flat) {
            std::size_t dst = 0;
            for (std::size_t d = 0; d < r; ++d) dst += (starts[d] + idx[d]) * st[d];
            pd[dst] += pg[flat];
            for (std::size_t d = r; d-- > 0;) {
                if (++idx[d] < sizes[d]) break;
                idx[d] = 0;
            }
        }
        t.accumulate(a, da);
    });
    return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis,
                 Tape<T>* tape = nullptr) {
    if (parts.empty())
        throw Error(ErrorCode::ShapeMismatch, "concat of zero tensors");
    std::size_t r = parts[0].rank();
    if (axis >= r)
        throw Error(ErrorCode::AxisOutOfRange, "concat axis out of range");
    Shape os = parts[0].shape();
    std::size_t total = parts[0].shape()[axis];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].rank() != r)
            throw Error(ErrorCode::ShapeMismatch, "concat rank mismatch");
        for (std::size_t d = 0; d < r; ++d)
            if (d != axis && parts[i].shape()[d] != os[d])
                throw Error(ErrorCode::ShapeMismatch,
                            "concat shapes disagree off-axis");
        total += parts[i].shape()[axis];
    }
    os[axis] = total;
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= os[d];
    for (std::size_t d = axis + 1; d < r; ++d) inner *= os[d];
    Tensor<T> out(os);
    T* po = out.mutable_ptr();
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::size_t mid = p.shape()[axis];
        const T* pp = p.ptr();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy(pp + o * mid * inner, pp + (o + 1) * mid * inner,
                      po + (o * total + offset) * inner);
        offset += mid;
    }
    detail::maybe_record(tape, out, parts,
                         [out, parts, axis, outer, inner, total](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        const T* pg = g->ptr();
        std::size_t offset = 0;
        for (const auto& p : parts) {
            std::size_t mid = p.shape()[axis];
            if (p.requires_grad()) {
                Tensor<T> dp(p.shape());
                T* pd = dp.mutable_ptr();
                for (std::size_t o = 0; o < outer; ++o)
                    std::copy(pg + (o * total + offset) * inner,
                              pg + (o * total + offset + mid) * inner,
                              pd + o * mid * inner);
                t.accumulate(p, dp);
            }
            offset += mid;
        }
    });
    return out;
}

// zero padding, per-axis (before, after)
template <typename T>
Tensor<T> pad(const Tensor<T>& a, const std::vector<std::size_t>& before,
              const std::vector<std::size_t>& after, Tape<T>* tape = nullptr) {
    std::size_t r = a.rank();
    if (before.size() != r || after.size() != r)
        throw Error(ErrorCode::ShapeMismatch, "pad spec rank mismatch");
    Shape os(r);
    for (std::size_t d = 0; d < r; ++d) os[d] = before[d] + a.shape()[d] + after[d];
    std::vector<std::size_t> st(r, 1);
    for (std::size_t d = r - 1; d-- > 0;) st[d] = st[d + 1] * os[d + 1];
    Tensor<T> out(os);
    std::vector<std::size_t> idx(r, 0);
    const T* pa = a.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t flat = 0; flat < a.numel(); ++flat) {
        std::size_t dst = 0;
        for (std::size_t d = 0; d < r; ++d) dst += (before[d] + idx[d]) * st[d];
        po[dst] = pa[flat];
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < a.shape()[d]) break;
            idx[d] = 0;
        }
    }
    detail::maybe_record(tape, out, {a}, [out, a, before](Tape<T>& t) {
        const Tensor<T>* g = t.grad(out);
        t.accumulate(a, slice(*g, before, a.shape()));
    });
    return out;
}

// ---------------------------------------------------------------------------
// softmax
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, std::size_t axis, Tape<T>* tape = nullptr) {
    if (axis >= a.rank())
        throw Error(ErrorCode::AxisOutOfRange, "softmax axis out of range");
    if (!a.all_finite())
        throw Error(ErrorCode::NonFiniteInput, "softmax input not finite");
    std::size_t outer = 1, mid = a.shape()[axis], inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= a.shape()[d];
    for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.shape()[d];
    Tensor<T> out(a.shape());
    const T* pa = a.ptr();
    T* po = out.mutable_ptr();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            T mx = pa[o * mid * inner + in];
            for (std::size_t j = 1; j < mid; ++j)
                mx = std::max(mx, pa[(o * mid + j) * inner + in]);
            T z = T(0);
            for (std::size_t j = 0; j < mid; ++j) {
                T e = std::exp(pa[(o * mid + j) * inner + in] - mx);
                po[(o * mid + j) * inner + in] = e;
                z += e;
            }
            for (std::size_t j = 0; j < mid; ++j)
                po[(o * mid + j) * inner + in] /= z;
        }
    }
    detail::maybe_record(tape, out, {a}, [out, a, outer, mid, inner](Tape<T>& t) {
        // dx = y * (g - sum_j g_j y_j)
        const Tensor<T>* g = t.grad(out);
        Tensor<T> da(a.shape());
        const T* pg = g->ptr();
        const T* py = out.ptr();
        T* pd = da.mutable_ptr();
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                T dot = T(0);
                for (std::size_t j = 0; j < mid; ++j) {
                    std::size_t i = (o * mid + j) * inner + in;
                    dot += pg[i] * py[i];
                }
                for (std::size_t j = 0; j < mid; ++j) {
                    std::size_t i = (o * mid + j) * inner + in;
                    pd[i] = py[i] * (pg[i] - dot);
                }
            }
        }
        t.accumulate(a, da);
    });
    return out;
}

// dispatcher matching the framework's nominal elementwise surface
template <typename T>
Tensor<T> elementwise(Elementwise kind, const Tensor<T>& a,
                      const Tensor<T>* b = nullptr, Tape<T>* tape = nullptr) {
    auto need_b = [&]() -> const Tensor<T>& {
        if (!b)
            throw Error(ErrorCode::ShapeMismatch,
                        "binary elementwise kind requires two operands");
        return *b;
    };
    switch (kind) {
        case Elementwise::Add: return add(a, need_b(), tape);
        case Elementwise::Sub: return sub(a, need_b(), tape);
        case Elementwise::Mul: return mul(a, need_b(), tape);
        case Elementwise::Div: return div(a, need_b(), tape);
        case Elementwise::Relu: return relu(a, tape);
        case Elementwise::Sigmoid: return sigmoid(a, tape);
        case Elementwise::Tanh: return tanh(a, tape);
        case Elementwise::Exp: return exp(a, tape);
        case Elementwise::Log: return log(a, tape);
        case Elementwise::Neg: return neg(a, tape);
    }
    throw Error(ErrorCode::InvalidSpec, "unknown elementwise kind");
}

// ---------------------------------------------------------------------------
// gradient check
// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::size_t coords_checked = 0;
    bool passed(double tol = 1e-4) const { return max_rel_err < tol; }
};

// central-difference check of df/dx for scalar-valued f; 64-bit only
inline GradCheckReport grad_check(
    const std::function<Tensor<double>(const Tensor<double>&, Tape<double>&)>& f,
    Tensor<double> x, double eps = 1e-5) {
    x.set_requires_grad(true);
    Tape<double> tape;
    Tensor<double> y = f(x, tape);
    if (y.numel() != 1)
        throw Error(ErrorCode::NonScalarOutput,
                    "grad_check target must be scalar-valued");
    tape.backward(y);
    const Tensor<double>* g = tape.grad(x);
    Tensor<double> analytic = g ? *g : Tensor<double>::zeros(x.shape());

    GradCheckReport rep;
    std::vector<double>& xs = x.mutable_data();
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double orig = xs[i];
        xs[i] = orig + eps;
        Tape<double> t1;
        double fp = f(x, t1).item();
        xs[i] = orig - eps;
        Tape<double> t2;
        double fm = f(x, t2).item();
        xs[i] = orig;
        double numeric = (fp - fm) / (2.0 * eps);
        double a = analytic.data()[i];
        double abs_err = std::abs(a - numeric);
        double rel = abs_err / std::max({1.0, std::abs(a), std::abs(numeric)});
        rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        ++rep.coords_checked;
    }
    return rep;
}

}  // namespace ops

// free-function form of the tape walk
template <typename T>
void backward(Tape<T>& tape, const Tensor<T>& loss) {
    tape.backward(loss);
}

}  // namespace ueeg
