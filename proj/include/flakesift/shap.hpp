#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "flakesift/error.hpp"
#include "flakesift/rng.hpp"
#include "flakesift/tree.hpp"

namespace flakesift {

// Additive per-feature attribution of one prediction against a background
// sample: base_value + sum(phi) equals the prediction (local accuracy).
struct Attribution {
    double base_value = 0.0;
    std::vector<double> phi;
    double prediction = 0.0;
};

using PredictFn = std::function<double(std::span<const double>)>;

namespace detail {

// Interventional coalition value: features outside S are replaced by each
// background row in turn, and the model output is averaged.
inline double coalition_value(const PredictFn& model, std::span<const double> x,
                              const FeatureTable& background, const std::vector<bool>& in_coalition,
                              std::vector<double>& scratch) {
    double total = 0.0;
    for (std::size_t b = 0; b < background.rows(); ++b) {
        const auto row = background.row(b);
        for (std::size_t i = 0; i < x.size(); ++i) {
            scratch[i] = in_coalition[i] ? x[i] : row[i];
        }
        total += model(scratch);
    }
    return total / static_cast<double>(background.rows());
}

inline double log_factorial(std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 2; i <= n; ++i) total += std::log(static_cast<double>(i));
    return total;
}

}  // namespace detail

// Exact Shapley values by full subset enumeration; F <= 12 keeps the 2^F
// coalition table small.
inline Attribution shapley_exact(const PredictFn& model, std::span<const double> x,
                                 const FeatureTable& background) {
    const std::size_t f = x.size();
    if (f > 12) {
        throw validation_error("too-many-features",
                               "exact Shapley enumeration is limited to 12 features; use shapley_sampled");
    }
    if (background.rows() == 0) {
        throw validation_error("empty-background", "Shapley attribution needs a non-empty background");
    }
    if (background.cols() != f) {
        throw validation_error("bad-background", "background feature width mismatch");
    }

    const std::size_t subsets = std::size_t{1} << f;
    std::vector<double> value(subsets, 0.0);
    std::vector<bool> mask(f, false);
    std::vector<double> scratch(f, 0.0);
    for (std::size_t s = 0; s < subsets; ++s) {
        for (std::size_t i = 0; i < f; ++i) mask[i] = (s >> i) & 1;
        value[s] = detail::coalition_value(model, x, background, mask, scratch);
    }

    // weight(|S|) = |S|! (F-|S|-1)! / F!
    std::vector<double> weight(f, 0.0);
    const double log_f_fact = detail::log_factorial(f);
    for (std::size_t s = 0; s < f; ++s) {
        weight[s] = std::exp(detail::log_factorial(s) + detail::log_factorial(f - s - 1) - log_f_fact);
    }

    Attribution out;
    out.phi.assign(f, 0.0);
    out.base_value = value[0];
    out.prediction = value[subsets - 1];
    for (std::size_t s = 0; s < subsets; ++s) {
        const std::size_t size = static_cast<std::size_t>(std::popcount(s));
        for (std::size_t i = 0; i < f; ++i) {
            if ((s >> i) & 1) continue;
            out.phi[i] += weight[size] * (value[s | (std::size_t{1} << i)] - value[s]);
        }
    }
    return out;
}

// Monte Carlo permutation sampling of the same interventional game. Each
// permutation walks one seeded background row, so a run costs
// permutations * (F+1) model calls instead of a full background sweep per
// coalition. The sampling residual (prediction - base - sum(phi)) is folded
// back proportionally to |phi| so local accuracy holds exactly.
inline Attribution shapley_sampled(const PredictFn& model, std::span<const double> x,
                                   const FeatureTable& background, std::size_t permutations,
                                   std::uint64_t seed) {
    const std::size_t f = x.size();
    if (permutations == 0) {
        throw validation_error("bad-permutation-count", "need at least one permutation");
    }
    if (background.rows() == 0) {
        throw validation_error("empty-background", "Shapley attribution needs a non-empty background");
    }
    if (background.cols() != f) {
        throw validation_error("bad-background", "background feature width mismatch");
    }

    Rng rng(seed);
    std::vector<double> phi(f, 0.0);
    std::vector<double> scratch(f, 0.0);
    std::vector<std::size_t> order(f);

    for (std::size_t p = 0; p < permutations; ++p) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = f; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(order[i - 1], order[j]);
        }
        const auto row = background.row(rng.below(background.rows()));
        for (std::size_t i = 0; i < f; ++i) scratch[i] = row[i];
        double prev = model(scratch);
        for (std::size_t step = 0; step < f; ++step) {
            scratch[order[step]] = x[order[step]];
            const double curr = model(scratch);
            phi[order[step]] += curr - prev;
            prev = curr;
        }
    }
    for (double& v : phi) v /= static_cast<double>(permutations);

    Attribution out;
    out.phi = std::move(phi);
    std::vector<bool> mask(f, false);
    out.base_value = detail::coalition_value(model, x, background, mask, scratch);
    std::fill(mask.begin(), mask.end(), true);
    out.prediction = detail::coalition_value(model, x, background, mask, scratch);

    double phi_sum = 0.0;
    double abs_sum = 0.0;
    for (double v : out.phi) {
        phi_sum += v;
        abs_sum += std::abs(v);
    }
    const double residual = out.prediction - out.base_value - phi_sum;
    if (abs_sum > 0.0) {
        for (double& v : out.phi) v += residual * std::abs(v) / abs_sum;
    }
    return out;
}

// Mean |phi| per feature, ranked descending; rank 1 = most impactful.
// Ties resolve toward the lower (canonical) feature index.
struct ImportanceRanking {
    std::vector<double> mean_abs_phi;
    std::vector<std::size_t> rank;  // per feature, 1-based
};

inline ImportanceRanking rank_features(const std::vector<Attribution>& attributions) {
    if (attributions.empty()) {
        throw validation_error("empty-attributions", "cannot rank an empty attribution list");
    }
    const std::size_t f = attributions.front().phi.size();
    ImportanceRanking out;
    out.mean_abs_phi.assign(f, 0.0);
    for (const auto& a : attributions) {
        if (a.phi.size() != f) {
            throw validation_error("bad-attribution", "attribution width mismatch");
        }
        for (std::size_t i = 0; i < f; ++i) out.mean_abs_phi[i] += std::abs(a.phi[i]);
    }
    for (double& v : out.mean_abs_phi) v /= static_cast<double>(attributions.size());

    std::vector<std::size_t> idx(f);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return out.mean_abs_phi[a] > out.mean_abs_phi[b];
    });
    out.rank.assign(f, 0);
    for (std::size_t pos = 0; pos < f; ++pos) out.rank[idx[pos]] = pos + 1;
    return out;
}

}  // namespace flakesift
