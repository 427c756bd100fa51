#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "flakesift/cluster.hpp"
#include "flakesift/cooccur.hpp"
#include "flakesift/ensemble.hpp"
#include "flakesift/error.hpp"
#include "flakesift/features.hpp"
#include "flakesift/metrics.hpp"
#include "flakesift/rng.hpp"

namespace flakesift {

// One training example: an unordered pair of flaky tests (stored in
// canonical order), its static distances, the observed Jaccard distance,
// and whether the pair shares a non-singleton cluster.
struct PairExample {
    TestId test_a;
    TestId test_b;
    PairFeatureVector features{};
    double target_distance = 0.0;
    bool same_cluster = false;
};

struct LearnGate {
    std::size_t min_flaky = 10;
};

// All C(n,2) pairs over the flaky tests. Requires the RQ1 gate: at least
// `min_flaky` flaky tests and at least one (non-singleton) cluster.
inline std::vector<PairExample> build_pair_dataset(const ProjectDataset& ds,
                                                   const std::map<TestId, FailureSignature>& signatures,
                                                   const ClusterReport& report,
                                                   const FeatureOptions& fopts = {},
                                                   const LearnGate& gate = {}) {
    if (signatures.size() < gate.min_flaky) {
        throw gate_error("too-few-flaky-tests",
                         "need at least " + std::to_string(gate.min_flaky) + " flaky tests, have " +
                             std::to_string(signatures.size()));
    }
    if (report.clusters.empty()) {
        throw gate_error("no-cluster", "project has no non-singleton cluster");
    }

    std::map<TestId, int> cluster_of;
    for (const auto& cluster : report.clusters) {
        for (const TestId& t : cluster.members) cluster_of[t] = cluster.id;
    }

    std::vector<const TestId*> tests;
    std::vector<const FailureSignature*> sigs;
    for (const auto& [test, sig] : signatures) {
        tests.push_back(&test);
        sigs.push_back(&sig);
    }

    std::vector<PairExample> out;
    out.reserve(tests.size() * (tests.size() - 1) / 2);
    for (std::size_t i = 0; i < tests.size(); ++i) {
        for (std::size_t j = i + 1; j < tests.size(); ++j) {
            PairExample ex;
            ex.test_a = *tests[i];
            ex.test_b = *tests[j];
            ex.features = feature_vector(ex.test_a, ex.test_b, ds, fopts);
            ex.target_distance = jaccard_distance(*sigs[i], *sigs[j]);
            const auto ca = cluster_of.find(ex.test_a);
            const auto cb = cluster_of.find(ex.test_b);
            ex.same_cluster =
                ca != cluster_of.end() && cb != cluster_of.end() && ca->second == cb->second;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

// Partition TESTS (not pairs) into k folds of near-equal size. The
// stratified variant spreads each stratum (cluster id; unclustered tests
// form one stratum) round-robin through a rolling fold counter.
inline std::vector<std::vector<TestId>> kfold_split(const std::vector<TestId>& tests, std::size_t k,
                                                    std::uint64_t seed,
                                                    const std::map<TestId, int>* stratify_by = nullptr) {
    if (k < 2) {
        throw validation_error("bad-fold-count", "k must be at least 2");
    }
    if (tests.size() < k) {
        throw gate_error("too-few-tests-for-folds",
                         "need at least " + std::to_string(k) + " tests for " + std::to_string(k) + " folds");
    }
    std::vector<std::vector<TestId>> folds(k);
    Rng rng(derive_seed(seed, 0x6b666f6c64));  // "kfold" stream

    if (stratify_by == nullptr) {
        std::vector<TestId> shuffled = tests;
        rng.shuffle(shuffled);
        for (std::size_t p = 0; p < shuffled.size(); ++p) folds[p % k].push_back(shuffled[p]);
    } else {
        // Strata in ascending id order, unclustered (-1) last.
        std::map<int, std::vector<TestId>> strata;
        for (const TestId& t : tests) {
            const auto it = stratify_by->find(t);
            strata[it == stratify_by->end() ? -1 : it->second].push_back(t);
        }
        std::vector<int> order;
        for (const auto& [id, members] : strata) {
            if (id != -1) order.push_back(id);
        }
        if (strata.count(-1) != 0) order.push_back(-1);

        std::size_t p = 0;
        for (int id : order) {
            std::vector<TestId>& members = strata[id];
            rng.shuffle(members);
            for (const TestId& t : members) folds[p++ % k].push_back(t);
        }
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

struct FoldScore {
    std::size_t fold = 0;
    double value = 0.0;
};

struct CvResult {
    std::vector<FoldScore> fold_scores;
    std::vector<std::string> warnings;
    double mean = 0.0;
};

// Leakage-safe pair CV: train on pairs whose both endpoints lie outside the
// held-out fold, evaluate on pairs entirely inside it. Straddling pairs are
// dropped. Folds without evaluable pairs (or with a constant regression
// target) are skipped with a warning.
inline CvResult cv_evaluate(ModelKind kind, Task task, const std::vector<PairExample>& examples,
                            const std::vector<std::vector<TestId>>& folds, std::uint64_t seed,
                            const EnsembleOptions& opts = {}) {
    if (examples.empty()) {
        throw validation_error("empty-training-set", "no pair examples");
    }
    std::map<TestId, std::size_t> fold_of;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (const TestId& t : folds[f]) fold_of[t] = f;
    }
    for (const auto& ex : examples) {
        if (fold_of.find(ex.test_a) == fold_of.end() || fold_of.find(ex.test_b) == fold_of.end()) {
            throw validation_error("test-not-in-folds", "pair endpoint missing from fold assignment");
        }
    }

    CvResult result;
    double total = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (folds[f].size() < 2) {
            result.warnings.push_back("fold " + std::to_string(f) + " skipped: fewer than 2 tests");
            continue;
        }
        FeatureTable train_x(kFeatureCount);
        std::vector<double> train_y;
        FeatureTable eval_x(kFeatureCount);
        std::vector<double> eval_y;
        std::vector<bool> eval_label;
        for (const auto& ex : examples) {
            const std::size_t fa = fold_of[ex.test_a];
            const std::size_t fb = fold_of[ex.test_b];
            if (fa == f && fb == f) {
                eval_x.add_row(ex.features);
                eval_y.push_back(ex.target_distance);
                eval_label.push_back(ex.same_cluster);
            } else if (fa != f && fb != f) {
                train_x.add_row(ex.features);
                train_y.push_back(task == Task::Regression ? ex.target_distance
                                                           : (ex.same_cluster ? 1.0 : 0.0));
            }
        }
        if (eval_x.rows() == 0 || train_x.rows() == 0) {
            result.warnings.push_back("fold " + std::to_string(f) + " skipped: no evaluable pairs");
            continue;
        }
        if (task == Task::Regression) {
            bool constant = true;
            for (double y : eval_y) constant &= y == eval_y.front();
            if (constant) {
                result.warnings.push_back("fold " + std::to_string(f) +
                                          " skipped: constant evaluation target");
                continue;
            }
        }

        const TreeEnsembleModel model =
            fit_model(kind, train_x, train_y, task, derive_seed(seed, f), opts);

        double value = 0.0;
        if (task == Task::Regression) {
            std::vector<double> pred(eval_x.rows());
            for (std::size_t i = 0; i < eval_x.rows(); ++i) pred[i] = model.predict(eval_x.row(i));
            value = r_squared(eval_y, pred);
        } else {
            std::vector<bool> pred(eval_x.rows());
            for (std::size_t i = 0; i < eval_x.rows(); ++i) pred[i] = model.predict_label(eval_x.row(i));
            value = mcc(eval_label, pred);
        }
        result.fold_scores.push_back({f, value});
        total += value;
    }
    if (result.fold_scores.empty()) {
        throw gate_error("no-evaluable-folds", "every fold was skipped");
    }
    result.mean = total / static_cast<double>(result.fold_scores.size());
    return result;
}

}  // namespace flakesift
