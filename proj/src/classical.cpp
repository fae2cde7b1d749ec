#include "ueeg/classical.hpp"

#include <algorithm>
#include <cmath>

#include "ueeg/rng.hpp"

namespace ueeg {

// ---------------------------------------------------------------------------
// KNN
// ---------------------------------------------------------------------------

void Knn::fit(std::vector<float> embeddings, std::size_t dim,
              std::vector<std::uint32_t> labels) {
    if (dim == 0 || labels.empty() || embeddings.size() != labels.size() * dim)
        throw Error(ErrorCode::DimensionMismatch,
                    "knn fit: embeddings do not form (N," +
                        std::to_string(dim) + ")");
    if (k_ == 0 || k_ > labels.size())
        throw Error(ErrorCode::KExceedsTrainingSize,
                    "k = " + std::to_string(k_) + " with " +
                        std::to_string(labels.size()) + " training points");
    dim_ = dim;
    data_ = std::move(embeddings);
    labels_ = std::move(labels);
}

std::uint32_t Knn::predict_one(const float* query) const {
    if (dim_ == 0)
        throw Error(ErrorCode::DimensionMismatch, "knn not fitted");
    std::vector<std::pair<double, std::size_t>> dist(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        double acc = 0;
        const float* r = data_.data() + i * dim_;
        for (std::size_t j = 0; j < dim_; ++j) {
            double d = double(r[j]) - double(query[j]);
            acc += d * d;
        }
        dist[i] = {acc, i};  // index second: equal distances sort low-first
    }
    std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
    std::vector<std::size_t> votes;
    for (std::size_t i = 0; i < k_; ++i) {
        std::uint32_t c = labels_[dist[i].second];
        if (c >= votes.size()) votes.resize(c + 1, 0);
        votes[c]++;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c;  // ties keep the smaller id
    return static_cast<std::uint32_t>(best);
}

std::vector<std::uint32_t> Knn::predict(const std::vector<float>& queries,
                                        std::size_t dim) const {
    if (dim != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "knn query dimension " + std::to_string(dim) +
                        " != fitted dimension " + std::to_string(dim_));
    if (queries.size() % dim != 0)
        throw Error(ErrorCode::DimensionMismatch,
                    "knn query payload not a multiple of the dimension");
    std::vector<std::uint32_t> out(queries.size() / dim);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = predict_one(queries.data() + i * dim);
    return out;
}

// ---------------------------------------------------------------------------
// decision tree / random forest
// ---------------------------------------------------------------------------

std::uint32_t DecisionTree::predict_one(const float* x) const {
    std::size_t n = 0;
    while (!nodes[n].leaf)
        n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left
                                                      : nodes[n].right;
    return nodes[n].cls;
}

namespace {

struct TreeBuilder {
    const std::vector<float>& x;
    const std::vector<std::uint32_t>& y;
    std::size_t dim;
    std::size_t num_classes;
    std::size_t n_features;  // candidates per node, sqrt(D)
    RngStream& rng;
    DecisionTree& tree;

    double gini(const std::vector<std::size_t>& counts, std::size_t total) {
        if (total == 0) return 0.0;
        double g = 1.0;
        for (auto c : counts) {
            double p = double(c) / double(total);
            g -= p * p;
        }
        return g;
    }

    std::uint32_t majority(const std::vector<std::size_t>& counts) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < counts.size(); ++c)
            if (counts[c] > counts[best]) best = c;
        return static_cast<std::uint32_t>(best);
    }

    // returns node index
    std::size_t build(std::vector<std::size_t>& idx) {
        std::vector<std::size_t> counts(num_classes, 0);
        for (auto i : idx) counts[y[i]]++;
        std::size_t node = tree.nodes.size();
        tree.nodes.push_back({});
        tree.nodes[node].cls = majority(counts);
        double parent_g = gini(counts, idx.size());
        if (parent_g == 0.0 || idx.size() < 2) return node;  // pure or tiny

        // sample sqrt(D) distinct candidate features
        std::vector<std::size_t> feats(dim);
        for (std::size_t d = 0; d < dim; ++d) feats[d] = d;
        for (std::size_t d = 0; d < n_features; ++d) {
            std::size_t j = d + rng.next_below(dim - d);
            std::swap(feats[d], feats[j]);
        }

        double best_gain = 0.0;
        std::size_t best_feat = 0;
        float best_thr = 0;
        for (std::size_t fi = 0; fi < n_features; ++fi) {
            std::size_t f = feats[fi];
            std::vector<std::pair<float, std::uint32_t>> vals;
            vals.reserve(idx.size());
            for (auto i : idx) vals.push_back({x[i * dim + f], y[i]});
            std::sort(vals.begin(), vals.end());
            std::vector<std::size_t> left(num_classes, 0);
            std::size_t nl = 0;
            for (std::size_t s = 0; s + 1 < vals.size(); ++s) {
                left[vals[s].second]++;
                ++nl;
                if (vals[s].first == vals[s + 1].first) continue;
                std::vector<std::size_t> right(num_classes);
                for (std::size_t c = 0; c < num_classes; ++c)
                    right[c] = counts[c] - left[c];
                std::size_t nr = idx.size() - nl;
                double g = parent_g -
                           (double(nl) * gini(left, nl) +
                            double(nr) * gini(right, nr)) /
                               double(idx.size());
                if (g > best_gain) {
                    best_gain = g;
                    best_feat = f;
                    // midpoint keeps the split stable under noise
                    best_thr = vals[s].first +
                               0.5f * (vals[s + 1].first - vals[s].first);
                }
            }
        }
        if (best_gain <= 0.0) return node;  // zero gain: stay a leaf

        std::vector<std::size_t> li, ri;
        for (auto i : idx)
            (x[i * dim + best_feat] <= best_thr ? li : ri).push_back(i);
        if (li.empty() || ri.empty()) return node;
        tree.nodes[node].leaf = false;
        tree.nodes[node].feature = best_feat;
        tree.nodes[node].threshold = best_thr;
        std::size_t l = build(li);
        tree.nodes[node].left = l;
        std::size_t r = build(ri);
        tree.nodes[node].right = r;
        return node;
    }
};

}  // namespace

void RandomForest::fit(const std::vector<float>& embeddings, std::size_t dim,
                       const std::vector<std::uint32_t>& labels) {
    if (dim == 0 || labels.empty() || embeddings.size() != labels.size() * dim)
        throw Error(ErrorCode::DimensionMismatch,
                    "forest fit: embeddings do not form (N," +
                        std::to_string(dim) + ")");
    if (labels.size() < 2)
        throw Error(ErrorCode::DegenerateData,
                    "forest needs at least 2 training samples");
    dim_ = dim;
    num_classes_ = *std::max_element(labels.begin(), labels.end()) + 1;
    std::size_t n = labels.size();
    std::size_t n_feat = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::sqrt(double(dim))));
    trees_.assign(n_trees_, {});
    for (std::size_t t = 0; t < n_trees_; ++t) {
        RngStream rng(seed_ + t, "tree");
        // bootstrap resample: n draws with replacement
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = rng.next_below(n);
        TreeBuilder builder{embeddings, labels, dim, num_classes_,
                            n_feat, rng, trees_[t]};
        builder.build(idx);
    }
}

std::uint32_t RandomForest::predict_one(const float* query) const {
    if (trees_.empty())
        throw Error(ErrorCode::DimensionMismatch, "forest not fitted");
    std::vector<std::size_t> votes(num_classes_, 0);
    for (const auto& t : trees_) votes[t.predict_one(query)]++;
    std::size_t best = 0;
    for (std::size_t c = 1; c < num_classes_; ++c)
        if (votes[c] > votes[best]) best = c;
    return static_cast<std::uint32_t>(best);
}

std::vector<std::uint32_t> RandomForest::predict(
    const std::vector<float>& queries, std::size_t dim) const {
    if (dim != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "forest query dimension " + std::to_string(dim) +
                        " != fitted dimension " + std::to_string(dim_));
    if (queries.size() % dim != 0)
        throw Error(ErrorCode::DimensionMismatch,
                    "forest query payload not a multiple of the dimension");
    std::vector<std::uint32_t> out(queries.size() / dim);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = predict_one(queries.data() + i * dim);
    return out;
}

}  // namespace ueeg
