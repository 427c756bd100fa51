#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flakesift/error.hpp"
#include "flakesift/test_id.hpp"

namespace flakesift {

// Minimum insert/delete/substitute edits. Two-row DP.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(a.size() + 1);
    std::vector<std::size_t> curr(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) prev[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        curr[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            const std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[i] = std::min({prev[i] + 1, curr[i - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[a.size()];
}

// Optimal string alignment: adjacent transpositions allowed, but no
// substring is edited twice ("ca" -> "abc" costs 3 here, not 2).
inline std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    std::vector<std::size_t> two_back(m + 1);
    std::vector<std::size_t> prev(m + 1);
    std::vector<std::size_t> curr(m + 1);
    for (std::size_t i = 0; i <= m; ++i) prev[i] = i;
    for (std::size_t j = 1; j <= n; ++j) {
        curr[0] = j;
        for (std::size_t i = 1; i <= m; ++i) {
            const std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[i] = std::min({prev[i] + 1, curr[i - 1] + 1, sub});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
                curr[i] = std::min(curr[i], two_back[i - 2] + 1);
            }
        }
        std::swap(two_back, prev);
        std::swap(prev, curr);
    }
    return prev[m];
}

// Edit distance scaled by the longer string; 0/0 defined as 0.
inline double normalized(std::size_t d, std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(d) / static_cast<double>(longest);
}

namespace detail {

inline double jaro_similarity(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    // Canonical argument order makes the greedy matching symmetric.
    if (a.size() > b.size() || (a.size() == b.size() && a > b)) std::swap(a, b);
    const std::size_t window =
        std::max<std::size_t>(1, std::max(a.size(), b.size()) / 2) - 1;
    std::vector<bool> a_used(a.size(), false);
    std::vector<bool> b_used(b.size(), false);
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        const std::size_t hi = std::min(b.size(), i + window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
            if (!b_used[j] && a[i] == b[j]) {
                a_used[i] = true;
                b_used[j] = true;
                ++matches;
                break;
            }
        }
    }
    if (matches == 0) return 0.0;
    std::size_t transpositions = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a_used[i]) continue;
        while (!b_used[j]) ++j;
        if (a[i] != b[j]) ++transpositions;
        ++j;
    }
    const double m = static_cast<double>(matches);
    return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) +
            (m - static_cast<double>(transpositions / 2)) / m) /
           3.0;
}

}  // namespace detail

// Returned as distances (1 - similarity) so every feature is a distance.
inline double jaro(std::string_view a, std::string_view b) {
    return 1.0 - detail::jaro_similarity(a, b);
}

// Standard parameters: prefix scale 0.1, prefix cap 4, boost threshold 0.7.
inline double jaro_winkler(std::string_view a, std::string_view b) {
    const double sim = detail::jaro_similarity(a, b);
    double boosted = sim;
    if (sim > 0.7) {
        std::size_t prefix = 0;
        while (prefix < 4 && prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
            ++prefix;
        }
        boosted = sim + static_cast<double>(prefix) * 0.1 * (1.0 - sim);
    }
    return 1.0 - boosted;
}

struct SetDistances {
    double jaccard = 0.0;
    double dice = 0.0;
    double overlap = 0.0;
};

inline SetDistances set_distances(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() || b.empty()) {
        throw validation_error("empty-token-set", "set distances need non-empty token sets");
    }
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    SetDistances out;
    out.jaccard = 1.0 - static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
    out.dice = 1.0 - 2.0 * static_cast<double>(inter) / static_cast<double>(a.size() + b.size());
    out.overlap = 1.0 - static_cast<double>(inter) / static_cast<double>(std::min(a.size(), b.size()));
    return out;
}

// 1 - i/n over package+class paths (method discarded). n = longer path
// length; i = first differing index, n if identical, shorter length if one
// path is a proper prefix of the other.
inline double hierarchy_distance(const TestId& t1, const TestId& t2) {
    const std::vector<std::string> p1 = t1.hierarchy_path();
    const std::vector<std::string> p2 = t2.hierarchy_path();
    const std::size_t n = std::max(p1.size(), p2.size());
    const std::size_t shorter = std::min(p1.size(), p2.size());
    std::size_t i = 0;
    while (i < shorter && p1[i] == p2[i]) ++i;
    if (i == shorter && p1.size() == p2.size()) i = n;
    return 1.0 - static_cast<double>(i) / static_cast<double>(n);
}

}  // namespace flakesift
