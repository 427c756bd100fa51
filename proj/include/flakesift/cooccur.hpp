#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <utility>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flakesift/dataset.hpp"
#include "flakesift/error.hpp"
#include "flakesift/io_util.hpp"
#include "flakesift/test_id.hpp"

namespace flakesift {

// 1 - |A∩B| / |A∪B|. Zero iff equal, one iff disjoint.
template <typename T>
double jaccard_distance(const std::set<T>& a, const std::set<T>& b) {
    if (a.empty() && b.empty()) {
        throw validation_error("empty-sets", "Jaccard distance of two empty sets is undefined");
    }
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else { ++inter; ++ia; ++ib; }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

// Pairwise distances over n >= 2 labels, condensed upper triangle in
// row-major order (same layout as SciPy's pdist output).
class DistanceMatrix {
public:
    DistanceMatrix(std::vector<TestId> labels, std::vector<double> condensed)
        : labels_(std::move(labels)), condensed_(std::move(condensed)) {
        if (labels_.size() < 2) {
            throw gate_error("too-few-tests", "distance matrix needs at least 2 tests");
        }
        if (condensed_.size() != labels_.size() * (labels_.size() - 1) / 2) {
            throw validation_error("bad-matrix", "condensed length does not match label count");
        }
        for (double v : condensed_) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw validation_error("bad-matrix", "distance outside [0,1]");
            }
        }
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<TestId>& labels() const noexcept { return labels_; }
    const std::vector<double>& condensed() const noexcept { return condensed_; }

    double at(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        if (i > j) std::swap(i, j);
        const std::size_t n = labels_.size();
        return condensed_[n * i - i * (i + 1) / 2 + (j - i - 1)];
    }

    // Square CSV with a header row of test names, for external inspection.
    void write_csv(std::ostream& out) const {
        out << "# schema: flakesift.distance-matrix.v1\n";
        out << "test";
        for (const auto& label : labels_) out << ',' << label.name();
        out << '\n';
        for (std::size_t i = 0; i < size(); ++i) {
            out << labels_[i].name();
            for (std::size_t j = 0; j < size(); ++j) out << ',' << format_double(at(i, j));
            out << '\n';
        }
    }

private:
    std::vector<TestId> labels_;
    std::vector<double> condensed_;
};

// Failure signatures for every flaky test, in canonical order.
inline std::map<TestId, FailureSignature> collect_signatures(const ProjectDataset& ds) {
    std::map<TestId, FailureSignature> out;
    for (const TestId& test : identify_flaky_tests(ds)) {
        out.emplace(test, failure_signature(ds, test));
    }
    return out;
}

inline DistanceMatrix build_distance_matrix(const std::map<TestId, FailureSignature>& signatures) {
    if (signatures.size() < 2) {
        throw gate_error("too-few-tests",
                         "need at least 2 flaky tests to build a distance matrix; skip clustering");
    }
    std::vector<TestId> labels;
    std::vector<const FailureSignature*> sigs;
    labels.reserve(signatures.size());
    sigs.reserve(signatures.size());
    for (const auto& [test, sig] : signatures) {
        labels.push_back(test);
        sigs.push_back(&sig);
    }
    const std::size_t n = labels.size();
    std::vector<double> condensed;
    condensed.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            condensed.push_back(jaccard_distance(*sigs[i], *sigs[j]));
        }
    }
    return DistanceMatrix(std::move(labels), std::move(condensed));
}

}  // namespace flakesift
