#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flakesift/cooccur.hpp"
#include "flakesift/error.hpp"
#include "flakesift/parallel.hpp"

namespace flakesift {

enum class Linkage { Average, Single, Complete };

inline const char* linkage_name(Linkage l) {
    switch (l) {
        case Linkage::Average: return "average";
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
    }
    return "average";
}

inline Linkage parse_linkage(std::string_view s) {
    if (s == "average") return Linkage::Average;
    if (s == "single") return Linkage::Single;
    if (s == "complete") return Linkage::Complete;
    throw validation_error("bad-linkage", "unknown linkage: " + std::string(s));
}

// One agglomeration step. Node ids: leaves are 0..n-1, the k-th merge creates
// node n+k. left < right always (deterministic layout).
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t member_count = 0;
};

struct Dendrogram {
    std::vector<TestId> leaves;
    std::vector<Merge> merges;  // length n-1, heights non-decreasing
};

// Bottom-up merging with Lance-Williams distance updates. Ties are broken by
// the lowest (smaller id, larger id) node pair so results are reproducible.
inline Dendrogram agglomerate(const DistanceMatrix& dm, Linkage linkage = Linkage::Average) {
    const std::size_t n = dm.size();
    Dendrogram out;
    out.leaves = dm.labels();
    out.merges.reserve(n - 1);

    // Active clusters live in slots [0, active); merging frees one slot by
    // swap-delete. Distances are kept in a full n x n scratch matrix.
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i * n + j] = dist[j * n + i] = dm.at(i, j);
        }
    }
    std::vector<std::size_t> node_id(n);
    std::vector<std::size_t> member_count(n, 1);
    for (std::size_t i = 0; i < n; ++i) node_id[i] = i;

    std::size_t active = n;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < active; ++a) {
            for (std::size_t b = a + 1; b < active; ++b) {
                const double d = dist[a * n + b];
                if (d < best) {
                    best = d;
                    best_a = a;
                    best_b = b;
                } else if (d == best) {
                    const auto key = std::minmax(node_id[a], node_id[b]);
                    const auto best_key = std::minmax(node_id[best_a], node_id[best_b]);
                    if (key < best_key) {
                        best_a = a;
                        best_b = b;
                    }
                }
            }
        }

        const std::size_t na = member_count[best_a];
        const std::size_t nb = member_count[best_b];
        Merge merge;
        merge.left = std::min(node_id[best_a], node_id[best_b]);
        merge.right = std::max(node_id[best_a], node_id[best_b]);
        merge.height = best;
        merge.member_count = na + nb;
        out.merges.push_back(merge);

        // New cluster takes slot best_a.
        for (std::size_t k = 0; k < active; ++k) {
            if (k == best_a || k == best_b) continue;
            const double dak = dist[best_a * n + k];
            const double dbk = dist[best_b * n + k];
            double d = 0.0;
            switch (linkage) {
                case Linkage::Average:
                    d = (static_cast<double>(na) * dak + static_cast<double>(nb) * dbk) /
                        static_cast<double>(na + nb);
                    break;
                case Linkage::Single:
                    d = std::min(dak, dbk);
                    break;
                case Linkage::Complete:
                    d = std::max(dak, dbk);
                    break;
            }
            dist[best_a * n + k] = dist[k * n + best_a] = d;
        }
        node_id[best_a] = n + step;
        member_count[best_a] = na + nb;

        // Swap-delete slot best_b.
        const std::size_t last = active - 1;
        if (best_b != last) {
            for (std::size_t k = 0; k < active; ++k) {
                dist[best_b * n + k] = dist[last * n + k];
                dist[k * n + best_b] = dist[k * n + last];
            }
            dist[best_b * n + best_b] = 0.0;
            node_id[best_b] = node_id[last];
            member_count[best_b] = member_count[last];
        }
        --active;
    }
    return out;
}

// Flat partition at a distance threshold: connected components of merges with
// height <= threshold. Cluster ids are contiguous from 0 in order of first
// leaf appearance.
struct ConcreteClustering {
    double threshold = 0.0;
    std::vector<int> assignment;  // by leaf index
    std::size_t cluster_count = 0;
    std::optional<double> mean_silhouette;

    std::map<TestId, int> as_map(const std::vector<TestId>& labels) const {
        std::map<TestId, int> out;
        for (std::size_t i = 0; i < assignment.size(); ++i) out[labels[i]] = assignment[i];
        return out;
    }
};

namespace detail {

struct UnionFind {
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
    std::vector<std::size_t> parent;
};

}  // namespace detail

inline ConcreteClustering cut(const Dendrogram& dg, double threshold) {
    const std::size_t n = dg.leaves.size();
    detail::UnionFind uf(2 * n - 1);
    for (std::size_t k = 0; k < dg.merges.size(); ++k) {
        const Merge& m = dg.merges[k];
        const std::size_t node = n + k;
        if (m.height <= threshold) {
            uf.unite(m.left, node);
            uf.unite(m.right, node);
        }
    }
    ConcreteClustering cc;
    cc.threshold = threshold;
    cc.assignment.assign(n, -1);
    std::map<std::size_t, int> root_to_id;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        const std::size_t root = uf.find(leaf);
        auto [it, inserted] = root_to_id.emplace(root, static_cast<int>(root_to_id.size()));
        cc.assignment[leaf] = it->second;
    }
    cc.cluster_count = root_to_id.size();
    return cc;
}

// Per-test silhouette s = (b - a) / max(a, b); a = mean distance to own
// cluster co-members, b = smallest mean distance to another cluster. Tests
// alone in their cluster score 0.
inline std::vector<double> silhouette_scores(const DistanceMatrix& dm, const ConcreteClustering& cc) {
    const std::size_t n = dm.size();
    const std::size_t k = cc.cluster_count;
    if (k < 2) {
        throw validation_error("single-cluster",
                               "silhouette is undefined for a single-cluster clustering");
    }
    std::vector<std::size_t> cluster_size(k, 0);
    for (int c : cc.assignment) ++cluster_size[static_cast<std::size_t>(c)];

    std::vector<double> sums(n * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = dm.at(i, j);
            sums[i * k + static_cast<std::size_t>(cc.assignment[j])] += d;
            sums[j * k + static_cast<std::size_t>(cc.assignment[i])] += d;
        }
    }

    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(cc.assignment[i]);
        if (cluster_size[own] <= 1) {
            s[i] = 0.0;  // singleton convention
            continue;
        }
        const double a = sums[i * k + own] / static_cast<double>(cluster_size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || cluster_size[c] == 0) continue;
            b = std::min(b, sums[i * k + c] / static_cast<double>(cluster_size[c]));
        }
        const double denom = std::max(a, b);
        s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return s;
}

inline double mean_silhouette(const DistanceMatrix& dm, const ConcreteClustering& cc) {
    const std::vector<double> s = silhouette_scores(dm, cc);
    double total = 0.0;
    for (double v : s) total += v;
    return total / static_cast<double>(s.size());
}

struct ThresholdSelection {
    std::optional<ConcreteClustering> clustering;
    std::string reason;  // set when clustering is empty
    Dendrogram dendrogram;
};

struct ClusterOptions {
    double min_silhouette = 0.6;
    Linkage linkage = Linkage::Average;
};

// Sweep candidate thresholds (exact 0 plus midpoints between consecutive
// distinct merge heights), keep cuts with 2..n-1 clusters, and return the one
// with the greatest mean silhouette over all tests. Below the floor -> none.
inline ThresholdSelection select_threshold(const DistanceMatrix& dm, const ClusterOptions& opts = {}) {
    ThresholdSelection out;
    const std::size_t n = dm.size();
    out.dendrogram = agglomerate(dm, opts.linkage);
    if (n < 3) {
        out.reason = "too-few-tests";
        return out;
    }

    std::vector<double> heights;
    heights.reserve(out.dendrogram.merges.size());
    for (const Merge& m : out.dendrogram.merges) heights.push_back(m.height);
    std::sort(heights.begin(), heights.end());
    heights.erase(std::unique(heights.begin(), heights.end()), heights.end());

    std::vector<double> candidates;
    candidates.push_back(0.0);
    for (std::size_t i = 0; i + 1 < heights.size(); ++i) {
        candidates.push_back((heights[i] + heights[i + 1]) / 2.0);
    }

    // Candidates are independent; evaluate in parallel, reduce sequentially
    // so ties still resolve toward the smallest threshold.
    std::vector<double> means(candidates.size(), -std::numeric_limits<double>::infinity());
    parallel_for(candidates.size(), [&](std::size_t i) {
        ConcreteClustering cc = cut(out.dendrogram, candidates[i]);
        if (cc.cluster_count < 2 || cc.cluster_count > n - 1) return;
        means[i] = mean_silhouette(dm, cc);
    });

    std::size_t best_idx = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (means[i] == -std::numeric_limits<double>::infinity()) continue;
        if (best_idx == candidates.size() || means[i] > means[best_idx]) best_idx = i;
    }

    if (best_idx == candidates.size()) {
        out.reason = "no-candidate-partition";
        return out;
    }
    if (means[best_idx] < opts.min_silhouette) {
        out.reason = "below-min-silhouette";
        return out;
    }
    ConcreteClustering best = cut(out.dendrogram, candidates[best_idx]);
    best.mean_silhouette = means[best_idx];
    out.clustering = std::move(best);
    return out;
}

// Table row of RQ1: non-singleton clusters only.
struct ClusterInfo {
    int id = 0;
    std::vector<TestId> members;
    std::size_t distinct_test_classes = 0;
};

struct ClusterReport {
    std::string project;
    std::vector<ClusterInfo> clusters;
    std::size_t clustered_test_count = 0;
    double mean_cluster_size = 0.0;
    double mean_distinct_classes = 0.0;
    std::optional<double> mean_silhouette;
    std::optional<double> threshold;
    bool systemic = false;
    std::string reason;  // set when not systemic
};

inline ClusterReport make_report(const ConcreteClustering& cc, const std::vector<TestId>& labels,
                                 const std::string& project = {}) {
    ClusterReport report;
    report.project = project;
    report.mean_silhouette = cc.mean_silhouette;
    report.threshold = cc.threshold;

    std::vector<std::vector<TestId>> members(cc.cluster_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<std::size_t>(cc.assignment[i])].push_back(labels[i]);
    }
    for (const auto& group : members) {
        if (group.size() < 2) continue;  // singletons are not systemic flakiness
        ClusterInfo info;
        info.id = static_cast<int>(report.clusters.size());
        info.members = group;
        std::set<std::string> classes;
        for (const TestId& t : group) classes.insert(t.qualified_class());
        info.distinct_test_classes = classes.size();
        report.clustered_test_count += group.size();
        report.clusters.push_back(std::move(info));
    }
    report.systemic = !report.clusters.empty();
    if (!report.systemic) report.reason = "no-systemic-flakiness";
    if (!report.clusters.empty()) {
        double size_total = 0.0;
        double class_total = 0.0;
        for (const auto& c : report.clusters) {
            size_total += static_cast<double>(c.members.size());
            class_total += static_cast<double>(c.distinct_test_classes);
        }
        report.mean_cluster_size = size_total / static_cast<double>(report.clusters.size());
        report.mean_distinct_classes = class_total / static_cast<double>(report.clusters.size());
    }
    return report;
}

inline ClusterReport empty_report(const std::string& project, const std::string& reason) {
    ClusterReport report;
    report.project = project;
    report.systemic = false;
    report.reason = reason;
    return report;
}

}  // namespace flakesift
