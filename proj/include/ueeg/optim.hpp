#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ueeg/tensor.hpp"

namespace ueeg {

// Parameters are updated in place; the optimizer owns its accumulators and
// pairs them with parameters positionally, so the parameter list order must
// stay fixed for the lifetime of a run.
template <typename T>
class Adam {
public:
    explicit Adam(T lr = T(0.001), T beta1 = T(0.9), T beta2 = T(0.999),
                  T eps = T(1e-8))
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Tensor<T>*>& params,
              const std::vector<const Tensor<T>*>& grads) {
        ensure_state(params);
        ++t_;
        T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
        T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!grads[i]) continue;  // parameter untouched by this loss
            check_shapes(*params[i], *grads[i]);
            T* p = params[i]->mutable_ptr();
            const T* g = grads[i]->ptr();
            T* m = m_[i].data();
            T* v = v_[i].data();
            for (std::size_t j = 0; j < params[i]->numel(); ++j) {
                m[j] = beta1_ * m[j] + (T(1) - beta1_) * g[j];
                v[j] = beta2_ * v[j] + (T(1) - beta2_) * g[j] * g[j];
                T mhat = m[j] / bc1;
                T vhat = v[j] / bc2;
                p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    std::size_t steps() const { return t_; }

private:
    void ensure_state(const std::vector<Tensor<T>*>& params) {
        if (!m_.empty()) return;
        for (auto* p : params) {
            m_.emplace_back(p->numel(), T(0));
            v_.emplace_back(p->numel(), T(0));
        }
    }
    static void check_shapes(const Tensor<T>& p, const Tensor<T>& g) {
        if (p.shape() != g.shape())
            throw Error(ErrorCode::ShapeMismatch,
                        "gradient shape does not match parameter shape");
    }
    T lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

// AdaDelta; canonical form has no learning rate, the configured lr scales the
// native update (theta += lr * dx)
template <typename T>
class AdaDelta {
public:
    explicit AdaDelta(T lr = T(0.001), T rho = T(0.95), T eps = T(1e-6))
        : lr_(lr), rho_(rho), eps_(eps) {}

    void step(const std::vector<Tensor<T>*>& params,
              const std::vector<const Tensor<T>*>& grads) {
        ensure_state(params);
        ++t_;
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!grads[i]) continue;
            if (params[i]->shape() != grads[i]->shape())
                throw Error(ErrorCode::ShapeMismatch,
                            "gradient shape does not match parameter shape");
            T* p = params[i]->mutable_ptr();
            const T* g = grads[i]->ptr();
            T* eg = eg2_[i].data();
            T* ed = edx2_[i].data();
            for (std::size_t j = 0; j < params[i]->numel(); ++j) {
                eg[j] = rho_ * eg[j] + (T(1) - rho_) * g[j] * g[j];
                T dx = -std::sqrt(ed[j] + eps_) / std::sqrt(eg[j] + eps_) * g[j];
                ed[j] = rho_ * ed[j] + (T(1) - rho_) * dx * dx;
                p[j] += lr_ * dx;
            }
        }
    }

    std::size_t steps() const { return t_; }

private:
    void ensure_state(const std::vector<Tensor<T>*>& params) {
        if (!eg2_.empty()) return;
        for (auto* p : params) {
            eg2_.emplace_back(p->numel(), T(0));
            edx2_.emplace_back(p->numel(), T(0));
        }
    }
    T lr_, rho_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<T>> eg2_, edx2_;
};

}  // namespace ueeg
