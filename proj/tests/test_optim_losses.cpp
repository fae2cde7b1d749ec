#include "doctest.h"

#include <cmath>

#include "ueeg/losses.hpp"
#include "ueeg/optim.hpp"
#include "ueeg/rng.hpp"

using namespace ueeg;
using ueeg::ops::kAllAxes;

TEST_CASE("adam") {
    SUBCASE("zero gradient leaves parameters bit-identical") {
        Tensor<double> p({3}, {1.0, -2.0, 0.5});
        auto before = p.data();
        Tensor<double> g = Tensor<double>::zeros({3});
        Adam<double> opt(0.001);
        for (int i = 0; i < 10; ++i) opt.step({&p}, {&g});
        CHECK(p.data() == before);
    }
    SUBCASE("hand-computed first step") {
        Tensor<double> p({1}, {0.0});
        Tensor<double> g({1}, {1.0});
        Adam<double> opt(0.001);
        opt.step({&p}, {&g});
        // mhat = vhat = 1, update = lr / (1 + eps)
        CHECK(p.data()[0] == doctest::Approx(-0.000999999990).epsilon(1e-9));
        CHECK(p.data()[0] < -0.000999);
    }
    SUBCASE("constant gradient keeps per-step updates near lr") {
        Tensor<double> p({1}, {0.0});
        Tensor<double> g({1}, {1.0});
        Adam<double> opt(0.001);
        double prev = 0.0;
        for (int s = 0; s < 2; ++s) {
            opt.step({&p}, {&g});
            double delta = std::abs(p.data()[0] - prev);
            prev = p.data()[0];
            CHECK(delta >= 0.0009);
            CHECK(delta <= 0.001);
        }
    }
    SUBCASE("shape mismatch") {
        Tensor<double> p({2}, {0.0, 0.0});
        Tensor<double> g({3}, {1.0, 1.0, 1.0});
        Adam<double> opt;
        CHECK_THROWS_AS(opt.step({&p}, {&g}), Error);
    }
}

TEST_CASE("adadelta") {
    SUBCASE("zero gradient leaves parameters bit-identical") {
        Tensor<double> p({2}, {3.0, -1.0});
        auto before = p.data();
        Tensor<double> g = Tensor<double>::zeros({2});
        AdaDelta<double> opt(0.001);
        for (int i = 0; i < 5; ++i) opt.step({&p}, {&g});
        CHECK(p.data() == before);
    }
    SUBCASE("hand-computed first step") {
        Tensor<double> p({1}, {0.0});
        Tensor<double> g({1}, {1.0});
        AdaDelta<double> opt(0.001, 0.95, 1e-6);
        opt.step({&p}, {&g});
        // E[g^2] = 0.05; dx = -sqrt(1e-6)/sqrt(0.05 + 1e-6)
        double dx = -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
        CHECK(p.data()[0] == doctest::Approx(0.001 * dx).epsilon(1e-12));
    }
    SUBCASE("update is linear in lr on step one") {
        Tensor<double> p1({1}, {0.0}), p2({1}, {0.0});
        Tensor<double> g({1}, {0.7});
        AdaDelta<double> o1(0.001), o2(0.002);
        o1.step({&p1}, {&g});
        o2.step({&p2}, {&g});
        CHECK(p2.data()[0] == doctest::Approx(2.0 * p1.data()[0]).epsilon(1e-14));
    }
}

TEST_CASE("categorical cross entropy") {
    SUBCASE("uniform logits give ln K") {
        Tensor<double> logits = Tensor<double>::zeros({1, 4});
        Tensor<double> y({1, 4}, {1.0, 0.0, 0.0, 0.0});
        CHECK(categorical_cross_entropy(logits, y).item() ==
              doctest::Approx(std::log(4.0)));
    }
    SUBCASE("confident-correct limit") {
        Tensor<double> logits({1, 2}, {20.0, -20.0});
        Tensor<double> y({1, 2}, {1.0, 0.0});
        CHECK(categorical_cross_entropy(logits, y).item() < 1e-8);
    }
    SUBCASE("closed-form softmax") {
        Tensor<double> logits({1, 2}, {0.0, std::log(3.0)});
        Tensor<double> y({1, 2}, {1.0, 0.0});
        CHECK(categorical_cross_entropy(logits, y).item() ==
              doctest::Approx(std::log(4.0)));
    }
    SUBCASE("label validation") {
        Tensor<double> logits = Tensor<double>::zeros({1, 3});
        Tensor<double> two({1, 3}, {1.0, 1.0, 0.0});
        CHECK_THROWS_AS(categorical_cross_entropy(logits, two), Error);
    }
    SUBCASE("loss is non-negative and decreases along the negative gradient") {
        RngStream rng(21, "ce");
        Tensor<double> logits({4, 3}, true);
        for (auto& v : logits.mutable_data()) v = rng.uniform(-2, 2);
        Tensor<double> y = Tensor<double>::zeros({4, 3});
        for (std::size_t b = 0; b < 4; ++b)
            y.mutable_data()[b * 3 + b % 3] = 1.0;
        Tape<double> tape;
        auto loss = categorical_cross_entropy(logits, y, &tape);
        CHECK(loss.item() >= 0.0);
        tape.backward(loss);
        const Tensor<double>* g = tape.grad(logits);
        REQUIRE(g);
        Tensor<double> moved(logits.shape(), logits.data());
        for (std::size_t i = 0; i < moved.numel(); ++i)
            moved.mutable_data()[i] -= 0.01 * g->data()[i];
        CHECK(categorical_cross_entropy(moved, y).item() < loss.item());
    }
    SUBCASE("gradient matches finite differences") {
        RngStream rng(5, "cefd");
        Tensor<double> y = Tensor<double>::zeros({3, 4});
        for (std::size_t b = 0; b < 3; ++b)
            y.mutable_data()[b * 4 + (b + 1) % 4] = 1.0;
        Tensor<double> logits({3, 4});
        for (auto& v : logits.mutable_data()) v = rng.uniform(-2, 2);
        auto rep = ops::grad_check(
            [y](const Tensor<double>& t, Tape<double>& tp) {
                return categorical_cross_entropy(t, y, &tp);
            },
            logits);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("binary cross entropy") {
    SUBCASE("p = t = 0.5 gives ln 2") {
        Tensor<double> half = Tensor<double>::full({10}, 0.5);
        CHECK(binary_cross_entropy(half, half).item() ==
              doctest::Approx(std::log(2.0)));
    }
    SUBCASE("exact 0/1 predictions hit the clamp floor") {
        Tensor<double> p({2}, {0.0, 1.0});
        Tensor<double> t({2}, {0.0, 1.0});
        double loss = binary_cross_entropy(p, t).item();
        CHECK(loss > 0.0);
        CHECK(loss <= -std::log(1.0 - 1e-7) + 1e-12);
    }
    SUBCASE("hand evaluation") {
        Tensor<double> p({1}, {0.75});
        Tensor<double> t({1}, {1.0});
        CHECK(binary_cross_entropy(p, t).item() ==
              doctest::Approx(-std::log(0.75)));
    }
    SUBCASE("gradient matches finite differences away from the clamp") {
        RngStream rng(8, "bce");
        Tensor<double> p({6});
        Tensor<double> t({6});
        for (auto& v : p.mutable_data()) v = rng.uniform(0.1, 0.9);
        for (auto& v : t.mutable_data()) v = rng.next_double() < 0.5 ? 0.0 : 1.0;
        auto rep = ops::grad_check(
            [t](const Tensor<double>& x, Tape<double>& tp) {
                return binary_cross_entropy(x, t, &tp);
            },
            p);
        CHECK(rep.max_rel_err < 1e-4);
    }
}
