#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flakesift/error.hpp"
#include "flakesift/parallel.hpp"
#include "flakesift/rng.hpp"
#include "flakesift/tree.hpp"

namespace flakesift {

enum class ModelKind { ExtraTrees, GradientBoosting, RandomForest };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::ExtraTrees: return "extra_trees";
        case ModelKind::GradientBoosting: return "gradient_boosting";
        case ModelKind::RandomForest: return "random_forest";
    }
    return "random_forest";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "extra_trees") return ModelKind::ExtraTrees;
    if (s == "gradient_boosting") return ModelKind::GradientBoosting;
    if (s == "random_forest") return ModelKind::RandomForest;
    throw validation_error("bad-model-kind", "unknown model kind: " + std::string(s));
}

inline const char* task_name(Task t) {
    return t == Task::Regression ? "regression" : "classification";
}

inline Task parse_task(std::string_view s) {
    if (s == "regression") return Task::Regression;
    if (s == "classification") return Task::Classification;
    throw validation_error("bad-task", "unknown task: " + std::string(s));
}

inline constexpr int kModelSchemaVersion = 1;

struct EnsembleOptions {
    std::size_t n_estimators = 100;
    double learning_rate = 0.1;  // boosting only
    int boosting_max_depth = 3;
};

// Forest / boosted ensemble over CART trees. Regression predictions are the
// tree mean (forests) or boosted sum; classification predictions are the
// positive-class probability.
struct TreeEnsembleModel {
    ModelKind kind = ModelKind::RandomForest;
    Task task = Task::Regression;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    double learning_rate = 0.0;  // 0 for forests
    double base_value = 0.0;     // boosting offset (mean / log-odds)
    std::vector<DecisionTree> trees;

    double predict(std::span<const double> x) const {
        if (kind == ModelKind::GradientBoosting) {
            double score = base_value;
            for (const auto& tree : trees) score += learning_rate * tree.predict(x);
            return task == Task::Classification ? 1.0 / (1.0 + std::exp(-score)) : score;
        }
        double total = 0.0;
        for (const auto& tree : trees) total += tree.predict(x);
        return total / static_cast<double>(trees.size());
    }

    bool predict_label(std::span<const double> x) const { return predict(x) >= 0.5; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = kModelSchemaVersion;
        j["kind"] = model_kind_name(kind);
        j["task"] = task_name(task);
        j["seed"] = seed;
        j["n_features"] = n_features;
        j["learning_rate"] = learning_rate;
        j["base_value"] = base_value;
        nlohmann::json trees_json = nlohmann::json::array();
        for (const auto& tree : trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree.nodes) {
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
            }
            trees_json.push_back(std::move(nodes));
        }
        j["trees"] = std::move(trees_json);
        return j;
    }

    static TreeEnsembleModel from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("schema_version", 0) != kModelSchemaVersion) {
            throw parse_error("bad-model-file", "unsupported model schema version");
        }
        TreeEnsembleModel model;
        try {
            model.kind = parse_model_kind(j.at("kind").get<std::string>());
            model.task = parse_task(j.at("task").get<std::string>());
            model.seed = j.at("seed").get<std::uint64_t>();
            model.n_features = j.at("n_features").get<std::size_t>();
            model.learning_rate = j.at("learning_rate").get<double>();
            model.base_value = j.at("base_value").get<double>();
            for (const auto& nodes : j.at("trees")) {
                DecisionTree tree;
                for (const auto& n : nodes) {
                    TreeNode node;
                    node.feature = n.at(0).get<int>();
                    node.threshold = n.at(1).get<double>();
                    node.left = n.at(2).get<int>();
                    node.right = n.at(3).get<int>();
                    node.value = n.at(4).get<double>();
                    tree.nodes.push_back(node);
                }
                model.trees.push_back(std::move(tree));
            }
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("bad-model-file", std::string("model JSON: ") + e.what());
        }
        return model;
    }
};

namespace detail {

inline void check_training_input(const FeatureTable& x, std::span<const double> y) {
    if (x.rows() == 0) {
        throw validation_error("empty-training-set", "cannot fit a model on zero examples");
    }
    if (x.rows() != y.size()) {
        throw validation_error("bad-training-set", "feature/target length mismatch");
    }
}

inline std::size_t forest_mtry(Task task, std::size_t f) {
    if (task == Task::Classification) {
        return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(f))));
    }
    return std::max<std::size_t>(1, f / 3);
}

}  // namespace detail

// Bootstrap sampling + best splits over sqrt(F)/F-third feature subsets.
// Tree t draws from seed+t, so parallel training is schedule-independent.
inline TreeEnsembleModel fit_random_forest(const FeatureTable& x, std::span<const double> y, Task task,
                                           std::uint64_t seed, const EnsembleOptions& opts = {}) {
    detail::check_training_input(x, y);
    TreeEnsembleModel model;
    model.kind = ModelKind::RandomForest;
    model.task = task;
    model.seed = seed;
    model.n_features = x.cols();
    model.trees.resize(opts.n_estimators);

    TreeGrowConfig config;
    config.task = task;
    config.mtry = detail::forest_mtry(task, x.cols());
    parallel_for(opts.n_estimators, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> indices(x.rows());
        for (auto& i : indices) i = static_cast<std::size_t>(rng.below(x.rows()));
        model.trees[t] = grow_tree(x, y, std::move(indices), config, rng);
    });
    return model;
}

// No bootstrap; one random threshold per candidate feature.
inline TreeEnsembleModel fit_extra_trees(const FeatureTable& x, std::span<const double> y, Task task,
                                         std::uint64_t seed, const EnsembleOptions& opts = {}) {
    detail::check_training_input(x, y);
    TreeEnsembleModel model;
    model.kind = ModelKind::ExtraTrees;
    model.task = task;
    model.seed = seed;
    model.n_features = x.cols();
    model.trees.resize(opts.n_estimators);

    TreeGrowConfig config;
    config.task = task;
    config.mtry = detail::forest_mtry(task, x.cols());
    config.random_thresholds = true;
    parallel_for(opts.n_estimators, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> indices(x.rows());
        std::iota(indices.begin(), indices.end(), 0);
        model.trees[t] = grow_tree(x, y, std::move(indices), config, rng);
    });
    return model;
}

// Stagewise least-squares (regression) or log-loss with Newton leaf steps
// (classification); depth-limited trees, learning rate 0.1.
inline TreeEnsembleModel fit_gradient_boosting(const FeatureTable& x, std::span<const double> y, Task task,
                                               std::uint64_t seed, const EnsembleOptions& opts = {}) {
    detail::check_training_input(x, y);
    TreeEnsembleModel model;
    model.kind = ModelKind::GradientBoosting;
    model.task = task;
    model.seed = seed;
    model.n_features = x.cols();
    model.learning_rate = opts.learning_rate;
    model.trees.reserve(opts.n_estimators);

    const std::size_t n = x.rows();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);

    if (task == Task::Regression) {
        model.base_value = mean;
    } else {
        const double p0 = std::clamp(mean, 1e-9, 1.0 - 1e-9);
        model.base_value = std::log(p0 / (1.0 - p0));
    }

    std::vector<double> score(n, model.base_value);
    std::vector<double> residual(n, 0.0);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    TreeGrowConfig config;
    config.task = Task::Regression;  // boosting trees always fit residuals
    config.max_depth = opts.boosting_max_depth;

    for (std::size_t stage = 0; stage < opts.n_estimators; ++stage) {
        Rng rng(derive_seed(seed, stage));
        if (task == Task::Regression) {
            for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - score[i];
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = 1.0 / (1.0 + std::exp(-score[i]));
                residual[i] = y[i] - p;
            }
        }
        DecisionTree tree = grow_tree(x, residual, all, config, rng);

        if (task == Task::Classification) {
            // Newton step per leaf: sum(residual) / sum(p (1 - p)).
            std::vector<double> num(tree.nodes.size(), 0.0);
            std::vector<double> den(tree.nodes.size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t leaf = tree.leaf_index(x.row(i));
                const double p = 1.0 / (1.0 + std::exp(-score[i]));
                num[leaf] += y[i] - p;
                den[leaf] += p * (1.0 - p);
            }
            for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
                if (tree.nodes[k].feature < 0) {
                    tree.nodes[k].value = den[k] > 1e-12 ? num[k] / den[k] : 0.0;
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            score[i] += opts.learning_rate * tree.predict(x.row(i));
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline TreeEnsembleModel fit_model(ModelKind kind, const FeatureTable& x, std::span<const double> y,
                                   Task task, std::uint64_t seed, const EnsembleOptions& opts = {}) {
    switch (kind) {
        case ModelKind::ExtraTrees: return fit_extra_trees(x, y, task, seed, opts);
        case ModelKind::GradientBoosting: return fit_gradient_boosting(x, y, task, seed, opts);
        case ModelKind::RandomForest: return fit_random_forest(x, y, task, seed, opts);
    }
    throw validation_error("bad-model-kind", "unreachable");
}

}  // namespace flakesift
