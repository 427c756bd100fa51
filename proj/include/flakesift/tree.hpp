#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "flakesift/error.hpp"
#include "flakesift/rng.hpp"

namespace flakesift {

enum class Task { Regression, Classification };

// Row-major feature storage shared by training and prediction.
class FeatureTable {
public:
    explicit FeatureTable(std::size_t cols) : cols_(cols) {}

    void add_row(std::span<const double> row) {
        if (row.size() != cols_) {
            throw validation_error("bad-feature-row", "feature row width mismatch");
        }
        data_.insert(data_.end(), row.begin(), row.end());
        ++rows_;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

private:
    std::size_t cols_;
    std::size_t rows_ = 0;
    std::vector<double> data_;
};

// Binary CART node. feature == -1 marks a leaf; `value` holds the leaf mean
// (regression / boosting step) or the positive-class probability.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

class DecisionTree {
public:
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        int at = 0;
        for (;;) {
            const TreeNode& node = nodes[static_cast<std::size_t>(at)];
            if (node.feature < 0) return node.value;
            at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
        }
    }

    // Leaf index a sample routes to; used for boosting's leaf refit.
    std::size_t leaf_index(std::span<const double> x) const {
        int at = 0;
        for (;;) {
            const TreeNode& node = nodes[static_cast<std::size_t>(at)];
            if (node.feature < 0) return static_cast<std::size_t>(at);
            at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
        }
    }
};

struct TreeGrowConfig {
    Task task = Task::Regression;
    int max_depth = -1;  // -1 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t mtry = 0;           // candidate features per node; 0 = all
    bool random_thresholds = false; // extra-trees style split proposal
};

namespace detail {

struct SplitResult {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();  // lower is better
};

// Sum of squared errors around the mean, via sum/sumsq.
inline double sse(double sum, double sum_sq, double n) {
    return sum_sq - sum * sum / n;
}

inline double gini(double positives, double n) {
    const double p = positives / n;
    return n * 2.0 * p * (1.0 - p);
}

class TreeBuilder {
public:
    TreeBuilder(const FeatureTable& x, std::span<const double> y, const TreeGrowConfig& config, Rng& rng)
        : x_(x), y_(y), config_(config), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> indices) {
        tree_.nodes.clear();
        grow(std::move(indices), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> indices, int depth) {
        const int node_id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        double sum = 0.0;
        bool constant_target = true;
        for (std::size_t i : indices) {
            sum += y_[i];
            constant_target &= y_[i] == y_[indices[0]];
        }
        const double mean = sum / static_cast<double>(indices.size());

        const bool depth_reached = config_.max_depth >= 0 && depth >= config_.max_depth;
        SplitResult split;
        if (!depth_reached && !constant_target && indices.size() >= config_.min_samples_split) {
            split = find_split(indices);
        }
        if (!split.valid) {
            tree_.nodes[static_cast<std::size_t>(node_id)].value = mean;
            return node_id;
        }

        std::vector<std::size_t> left_idx;
        std::vector<std::size_t> right_idx;
        left_idx.reserve(indices.size());
        right_idx.reserve(indices.size());
        for (std::size_t i : indices) {
            (x_.at(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left_idx : right_idx)
                .push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        const int left = grow(std::move(left_idx), depth + 1);
        const int right = grow(std::move(right_idx), depth + 1);
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(node_id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return node_id;
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t f = x_.cols();
        std::vector<std::size_t> all(f);
        std::iota(all.begin(), all.end(), 0);
        const std::size_t take = config_.mtry == 0 ? f : std::min(config_.mtry, f);
        // Partial Fisher-Yates; order matters for deterministic tie-breaks.
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng_.below(f - i));
            std::swap(all[i], all[j]);
        }
        all.resize(take);
        return all;
    }

    SplitResult find_split(const std::vector<std::size_t>& indices) {
        SplitResult best;
        for (std::size_t feature : candidate_features()) {
            if (config_.random_thresholds) {
                consider_random_threshold(indices, feature, best);
            } else {
                consider_best_threshold(indices, feature, best);
            }
        }
        return best;
    }

    void score_partition(const std::vector<std::size_t>& indices, std::size_t feature, double threshold,
                         SplitResult& best) {
        double n_l = 0.0, sum_l = 0.0, sq_l = 0.0, pos_l = 0.0;
        double n_r = 0.0, sum_r = 0.0, sq_r = 0.0, pos_r = 0.0;
        for (std::size_t i : indices) {
            const double v = y_[i];
            if (x_.at(i, feature) <= threshold) {
                ++n_l; sum_l += v; sq_l += v * v; pos_l += v;
            } else {
                ++n_r; sum_r += v; sq_r += v * v; pos_r += v;
            }
        }
        if (n_l == 0.0 || n_r == 0.0) return;
        const double score = config_.task == Task::Classification
                                 ? gini(pos_l, n_l) + gini(pos_r, n_r)
                                 : sse(sum_l, sq_l, n_l) + sse(sum_r, sq_r, n_r);
        if (score < best.score) {
            best.valid = true;
            best.feature = static_cast<int>(feature);
            best.threshold = threshold;
            best.score = score;
        }
    }

    // Extra-trees proposal: one uniform threshold in (min, max) per feature.
    void consider_random_threshold(const std::vector<std::size_t>& indices, std::size_t feature,
                                   SplitResult& best) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i : indices) {
            lo = std::min(lo, x_.at(i, feature));
            hi = std::max(hi, x_.at(i, feature));
        }
        if (!(lo < hi)) return;
        double threshold = rng_.uniform(lo, hi);
        if (!(threshold < hi)) threshold = lo;  // keep both sides non-empty
        score_partition(indices, feature, threshold, best);
    }

    // Exhaustive scan over midpoints between consecutive distinct values.
    void consider_best_threshold(const std::vector<std::size_t>& indices, std::size_t feature,
                                 SplitResult& best) {
        std::vector<std::pair<double, double>> items;  // (feature value, target)
        items.reserve(indices.size());
        for (std::size_t i : indices) items.emplace_back(x_.at(i, feature), y_[i]);
        std::sort(items.begin(), items.end());
        if (items.front().first == items.back().first) return;

        const double total_n = static_cast<double>(items.size());
        double total_sum = 0.0, total_sq = 0.0;
        for (const auto& [v, y] : items) { total_sum += y; total_sq += y * y; }

        double n_l = 0.0, sum_l = 0.0, sq_l = 0.0;
        for (std::size_t k = 0; k + 1 < items.size(); ++k) {
            const auto& [v, y] = items[k];
            ++n_l; sum_l += y; sq_l += y * y;
            if (v == items[k + 1].first) continue;
            const double n_r = total_n - n_l;
            const double sum_r = total_sum - sum_l;
            const double score = config_.task == Task::Classification
                                     ? gini(sum_l, n_l) + gini(sum_r, n_r)
                                     : sse(sum_l, sq_l, n_l) + sse(sum_r, total_sq - sq_l, n_r);
            if (score < best.score) {
                double threshold = (v + items[k + 1].first) / 2.0;
                if (!(threshold < items[k + 1].first)) threshold = v;
                best.valid = true;
                best.feature = static_cast<int>(feature);
                best.threshold = threshold;
                best.score = score;
            }
        }
    }

    const FeatureTable& x_;
    std::span<const double> y_;
    const TreeGrowConfig& config_;
    Rng& rng_;
    DecisionTree tree_;
};

}  // namespace detail

inline DecisionTree grow_tree(const FeatureTable& x, std::span<const double> y,
                              std::vector<std::size_t> indices, const TreeGrowConfig& config, Rng& rng) {
    if (indices.empty()) {
        throw validation_error("empty-training-set", "cannot grow a tree on zero samples");
    }
    detail::TreeBuilder builder(x, y, config, rng);
    return builder.build(std::move(indices));
}

}  // namespace flakesift
