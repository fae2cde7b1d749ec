#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ueeg/error.hpp"

namespace ueeg {

using Shape = std::vector<std::size_t>;

inline std::size_t numel_of(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

// Dense row-major N-d tensor. The handle has value semantics; the buffer is
// shared and treated as immutable once it leaves the op that produced it.
// The only sanctioned in-place writers are weight init and optimizer steps
// (single-owner by the concurrency contract).
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, bool requires_grad = false)
        : impl_(std::make_shared<Impl>()) {
        impl_->shape = std::move(shape);
        impl_->data.assign(numel_of(impl_->shape), T(0));
        impl_->requires_grad = requires_grad;
    }

    Tensor(Shape shape, std::vector<T> data, bool requires_grad = false)
        : impl_(std::make_shared<Impl>()) {
        if (numel_of(shape) != data.size())
            throw Error(ErrorCode::ShapeMismatch,
                        "data length " + std::to_string(data.size()) +
                            " does not match shape " + shape_str(shape));
        impl_->shape = std::move(shape);
        impl_->data = std::move(data);
        impl_->requires_grad = requires_grad;
    }

    Tensor(Shape shape, std::initializer_list<T> data, bool requires_grad = false)
        : Tensor(std::move(shape), std::vector<T>(data), requires_grad) {}

    static Tensor scalar(T value, bool requires_grad = false) {
        return Tensor({1}, {value}, requires_grad);
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return Tensor(std::move(shape), requires_grad);
    }

    static Tensor full(Shape shape, T value, bool requires_grad = false) {
        Tensor t(std::move(shape), requires_grad);
        for (auto& x : t.impl_->data) x = value;
        return t;
    }

    static Tensor ones(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), T(1), requires_grad);
    }

    bool defined() const { return static_cast<bool>(impl_); }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }
    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

    const std::vector<T>& data() const { return impl_->data; }
    // in-place access for init / optimizer steps only
    std::vector<T>& mutable_data() { return impl_->data; }

    const T* ptr() const { return impl_->data.data(); }
    T* mutable_ptr() { return impl_->data.data(); }

    T item() const {
        if (numel() != 1)
            throw Error(ErrorCode::NonScalarOutput,
                        "item() on tensor of shape " + shape_str(shape()));
        return impl_->data[0];
    }

    // identity key for tape bookkeeping
    const void* id() const { return impl_.get(); }

    bool all_finite() const {
        for (T x : impl_->data)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    bool same_buffer(const Tensor& other) const { return impl_ == other.impl_; }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(numel());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<U>(impl_->data[i]);
        return Tensor<U>(shape(), std::move(out), requires_grad());
    }

private:
    struct Impl {
        Shape shape;
        std::vector<T> data;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

// Reverse-mode tape. Ops append one node per produced tensor; backward walks
// the record in reverse creation order (creation order is topological by
// construction) and routes each output gradient to its parents.
template <typename T>
class Tape {
public:
    using BackwardFn = std::function<void(Tape&)>;

    void record(const Tensor<T>& output, std::vector<Tensor<T>> parents,
                BackwardFn fn) {
        nodes_.push_back(Node{output, std::move(parents), std::move(fn)});
        produced_.insert(output.id());
    }

    bool produced(const Tensor<T>& t) const {
        return produced_.count(t.id()) != 0;
    }

    void backward(const Tensor<T>& loss) {
        if (loss.numel() != 1)
            throw Error(ErrorCode::NotScalarLoss,
                        "backward requires a scalar loss, got " +
                            shape_str(loss.shape()));
        if (!produced(loss))
            throw Error(ErrorCode::DetachedLoss,
                        "loss tensor was not produced on this tape");
        grads_.clear();
        grads_[loss.id()] = Tensor<T>::ones(loss.shape());
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (grads_.count(it->output.id()) == 0) continue;  // not an ancestor path
            it->backward(*this);
        }
    }

    // gradient of t if it participated in the last backward pass
    const Tensor<T>* grad(const Tensor<T>& t) const {
        auto it = grads_.find(t.id());
        return it == grads_.end() ? nullptr : &it->second;
    }

    bool has_grad(const Tensor<T>& t) const { return grads_.count(t.id()) != 0; }

    // accumulate `delta` into the gradient slot of `t`
    void accumulate(const Tensor<T>& t, const Tensor<T>& delta) {
        if (t.shape() != delta.shape())
            throw Error(ErrorCode::ShapeMismatch,
                        "gradient shape " + shape_str(delta.shape()) +
                            " does not match tensor shape " + shape_str(t.shape()));
        auto it = grads_.find(t.id());
        if (it == grads_.end()) {
            grads_.emplace(t.id(), delta);
        } else {
            Tensor<T> sum(it->second.shape());
            const T* a = it->second.ptr();
            const T* b = delta.ptr();
            T* o = sum.mutable_ptr();
            for (std::size_t i = 0; i < sum.numel(); ++i) o[i] = a[i] + b[i];
            it->second = sum;
        }
    }

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_grads() const { return grads_.size(); }

    void clear() {
        nodes_.clear();
        grads_.clear();
        produced_.clear();
    }

private:
    struct Node {
        Tensor<T> output;
        std::vector<Tensor<T>> parents;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    std::unordered_map<const void*, Tensor<T>> grads_;
    std::unordered_set<const void*> produced_;
};

}  // namespace ueeg
