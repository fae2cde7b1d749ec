#include "doctest.h"

#include <algorithm>
#include <vector>

#include "ueeg/classical.hpp"
#include "ueeg/rng.hpp"

using namespace ueeg;

namespace {

// two well-separated 2D blobs, n points per class
void blobs(std::size_t n_per, std::uint64_t seed, std::vector<float>& x,
           std::vector<std::uint32_t>& y) {
    RngStream rng(seed, "blobs");
    x.clear();
    y.clear();
    for (std::size_t i = 0; i < 2 * n_per; ++i) {
        std::uint32_t cls = i % 2;
        float cx = cls ? 10.0f : 0.0f;
        x.push_back(cx + static_cast<float>(rng.normal()));
        x.push_back(cx + static_cast<float>(rng.normal()));
        y.push_back(cls);
    }
}

}  // namespace

TEST_CASE("knn basics") {
    SUBCASE("k=1 on an exact training point returns its label") {
        Knn knn(1);
        knn.fit({0, 0, 5, 5, 9, 1}, 2, {2, 0, 1});
        float q[2] = {5, 5};
        CHECK(knn.predict_one(q) == 0);
    }
    SUBCASE("two 3-point clusters, k=3, query near the first") {
        // {(0,0): class 0} x3, {(10,10): class 1} x3
        std::vector<float> x = {0, 0, 0.1f, 0, 0, 0.1f,
                                10, 10, 10.1f, 10, 10, 10.1f};
        std::vector<std::uint32_t> y = {0, 0, 0, 1, 1, 1};
        Knn knn(3);
        knn.fit(x, 2, y);
        float q[2] = {1, 1};
        CHECK(knn.predict_one(q) == 0);
    }
    SUBCASE("k = N returns the global majority everywhere") {
        std::vector<float> x = {0, 0, 1, 1, 2, 2, 50, 50, 60, 60};
        std::vector<std::uint32_t> y = {1, 1, 1, 0, 0};
        Knn knn(5);
        knn.fit(x, 2, y);
        for (float qx : {-5.0f, 55.0f, 500.0f}) {
            float q[2] = {qx, qx};
            CHECK(knn.predict_one(q) == 1);
        }
    }
    SUBCASE("k=1 scores 100% on its own distinct training set") {
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(20, 3, x, y);
        Knn knn(1);
        knn.fit(x, 2, y);
        auto pred = knn.predict(x, 2);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(pred[i] == y[i]);
    }
}

TEST_CASE("knn tie-breaks") {
    SUBCASE("equal distances prefer the lower training index") {
        Knn a(1);
        a.fit({0, 0, 2, 0}, 2, {1, 0});
        float q[2] = {1, 0};
        CHECK(a.predict_one(q) == 1);  // index 0 wins the distance tie
        Knn b(1);
        b.fit({2, 0, 0, 0}, 2, {0, 1});  // same points, swapped order
        CHECK(b.predict_one(q) == 0);
    }
    SUBCASE("vote ties prefer the smaller class id") {
        Knn knn(2);
        knn.fit({0, 0, 2, 0}, 2, {1, 0});
        float q[2] = {1, 0};
        CHECK(knn.predict_one(q) == 0);
    }
    SUBCASE("prediction invariant under training permutation away from ties") {
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(15, 9, x, y);
        Knn a(5);
        a.fit(x, 2, y);
        // reverse the training order
        std::vector<float> xr;
        std::vector<std::uint32_t> yr;
        for (std::size_t i = y.size(); i-- > 0;) {
            xr.push_back(x[i * 2]);
            xr.push_back(x[i * 2 + 1]);
            yr.push_back(y[i]);
        }
        Knn b(5);
        b.fit(xr, 2, yr);
        RngStream rng(4, "q");
        for (int t = 0; t < 50; ++t) {
            float q[2] = {static_cast<float>(rng.uniform(-3, 13)),
                          static_cast<float>(rng.uniform(-3, 13))};
            CHECK(a.predict_one(q) == b.predict_one(q));
        }
    }
}

TEST_CASE("knn error contracts") {
    Knn knn(5);
    CHECK_THROWS_AS(knn.fit({0, 0, 1, 1}, 2, {0, 1}), Error);  // k > N
    try {
        Knn(7).fit({0, 0}, 2, {0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::KExceedsTrainingSize);
    }
    Knn fitted(1);
    fitted.fit({0, 0, 1, 1}, 2, {0, 1});
    CHECK_THROWS_AS(fitted.predict({0, 0, 0}, 3), Error);
    try {
        fitted.predict({0}, 3);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("random forest") {
    SUBCASE("separable blobs reach perfect training accuracy") {
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(20, 0, x, y);
        RandomForest rf(100, 0);
        rf.fit(x, 2, y);
        auto pred = rf.predict(x, 2);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(pred[i] == y[i]);
    }
    SUBCASE("single-class data always predicts that class") {
        std::vector<float> x = {0, 1, 2, 3, 4, 5, 6, 7};
        std::vector<std::uint32_t> y = {3, 3, 3, 3};
        RandomForest rf(10, 1);
        rf.fit(x, 2, y);
        float q[2] = {100, -3};
        CHECK(rf.predict_one(q) == 3);
        for (const auto& t : rf.trees()) {
            CHECK(t.nodes.size() == 1);  // degenerate single-leaf trees
            CHECK(t.nodes[0].leaf);
        }
    }
    SUBCASE("same seed twice gives bit-identical predictions") {
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(25, 5, x, y);
        RandomForest a(50, 123), b(50, 123);
        a.fit(x, 2, y);
        b.fit(x, 2, y);
        RngStream rng(2, "q");
        std::vector<float> q;
        for (int i = 0; i < 80; ++i)
            q.push_back(static_cast<float>(rng.uniform(-5, 15)));
        CHECK(a.predict(q, 2) == b.predict(q, 2));
        // and identical tree structure
        REQUIRE(a.trees().size() == b.trees().size());
        for (std::size_t t = 0; t < a.trees().size(); ++t)
            CHECK(a.trees()[t].nodes.size() == b.trees()[t].nodes.size());
    }
    SUBCASE("one-tree forest equals that tree") {
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(15, 8, x, y);
        RandomForest rf(1, 77);
        rf.fit(x, 2, y);
        RngStream rng(6, "q");
        for (int i = 0; i < 40; ++i) {
            float q[2] = {static_cast<float>(rng.uniform(-5, 15)),
                          static_cast<float>(rng.uniform(-5, 15))};
            CHECK(rf.predict_one(q) == rf.trees()[0].predict_one(q));
        }
    }
    SUBCASE("training points recalled on separable data across 20 seeds") {
        int hits = 0, total = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::vector<float> x;
            std::vector<std::uint32_t> y;
            blobs(15, seed + 100, x, y);
            RandomForest rf(100, seed);
            rf.fit(x, 2, y);
            auto pred = rf.predict(x, 2);
            for (std::size_t i = 0; i < y.size(); ++i) {
                total++;
                if (pred[i] == y[i]) hits++;
            }
        }
        CHECK(double(hits) / double(total) >= 0.95);
    }
    SUBCASE("error contracts") {
        RandomForest rf(10, 0);
        CHECK_THROWS_AS(rf.fit({0, 0}, 2, {0}), Error);  // one sample
        try {
            RandomForest(5, 0).fit({1, 2}, 2, {0});
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateData);
        }
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(5, 2, x, y);
        rf.fit(x, 2, y);
        CHECK_THROWS_AS(rf.predict({0, 0, 0}, 3), Error);
    }
    SUBCASE("leaves are consistent with their subtree votes") {
        // every internal node routes; every leaf holds a valid class id
        std::vector<float> x;
        std::vector<std::uint32_t> y;
        blobs(20, 4, x, y);
        RandomForest rf(20, 9);
        rf.fit(x, 2, y);
        for (const auto& t : rf.trees())
            for (const auto& n : t.nodes) {
                if (n.leaf) {
                    CHECK(n.cls <= 1);
                } else {
                    CHECK(n.left < t.nodes.size());
                    CHECK(n.right < t.nodes.size());
                    CHECK(n.feature < 2);
                }
            }
    }
}
