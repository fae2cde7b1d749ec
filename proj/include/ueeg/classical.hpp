#pragma once

#include <cstdint>
#include <vector>

#include "ueeg/error.hpp"

namespace ueeg {

// k-nearest-neighbours with Euclidean metric and uniform vote weighting.
// Ties: equal distances prefer the lower training index; equal vote counts
// prefer the smaller class id.
class Knn {
public:
    explicit Knn(std::size_t k = 5) : k_(k) {}

    void fit(std::vector<float> embeddings, std::size_t dim,
             std::vector<std::uint32_t> labels);
    std::uint32_t predict_one(const float* query) const;
    std::vector<std::uint32_t> predict(const std::vector<float>& queries,
                                       std::size_t dim) const;

    std::size_t k() const { return k_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return labels_.size(); }

private:
    std::size_t k_;
    std::size_t dim_ = 0;
    std::vector<float> data_;
    std::vector<std::uint32_t> labels_;
};

// one CART-style tree: Gini splits over sqrt(D) sampled features, grown to
// purity or zero gain, leaves vote their majority class
struct DecisionTree {
    struct Node {
        bool leaf = true;
        std::uint32_t cls = 0;       // leaf majority class
        std::size_t feature = 0;
        float threshold = 0;
        std::size_t left = 0, right = 0;
    };
    std::vector<Node> nodes;

    std::uint32_t predict_one(const float* x) const;
};

// 100 bootstrap-resampled trees, per-tree seed = forest seed + tree index,
// unlimited depth; prediction is the across-tree majority (ties -> smallest
// class id)
class RandomForest {
public:
    explicit RandomForest(std::size_t n_trees = 100, std::uint64_t seed = 0)
        : n_trees_(n_trees), seed_(seed) {}

    void fit(const std::vector<float>& embeddings, std::size_t dim,
             const std::vector<std::uint32_t>& labels);
    std::uint32_t predict_one(const float* query) const;
    std::vector<std::uint32_t> predict(const std::vector<float>& queries,
                                       std::size_t dim) const;

    std::size_t dim() const { return dim_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }

private:
    std::size_t n_trees_;
    std::uint64_t seed_;
    std::size_t dim_ = 0;
    std::size_t num_classes_ = 0;
    std::vector<DecisionTree> trees_;
};

}  // namespace ueeg
