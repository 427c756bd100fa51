#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "flakesift/error.hpp"

namespace flakesift {

// R^2 = 1 - SSres/SStot. Undefined (error) for constant targets.
inline double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size()) {
        throw validation_error("bad-metric-input", "r_squared needs equal non-empty vectors");
    }
    double mean = 0.0;
    for (double y : y_true) mean += y;
    mean /= static_cast<double>(y_true.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (ss_tot == 0.0) {
        throw validation_error("constant-target", "r_squared is undefined for a constant target");
    }
    return 1.0 - ss_res / ss_tot;
}

// Matthews correlation coefficient from the 2x2 confusion matrix; 0 when any
// marginal is zero.
inline double mcc(const std::vector<bool>& y_true, const std::vector<bool>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size()) {
        throw validation_error("bad-metric-input", "mcc needs equal non-empty vectors");
    }
    double tp = 0.0, tn = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] && y_pred[i]) ++tp;
        else if (!y_true[i] && !y_pred[i]) ++tn;
        else if (!y_true[i] && y_pred[i]) ++fp;
        else ++fn;
    }
    const double pred_pos = tp + fp;
    const double pred_neg = tn + fn;
    const double actual_pos = tp + fn;
    const double actual_neg = tn + fp;
    if (pred_pos == 0.0 || pred_neg == 0.0 || actual_pos == 0.0 || actual_neg == 0.0) {
        return 0.0;
    }
    // Pairwise products stay well inside exact double range.
    const double denom = std::sqrt(pred_pos * pred_neg) * std::sqrt(actual_pos * actual_neg);
    return (tp * tn - fp * fn) / denom;
}

}  // namespace flakesift
