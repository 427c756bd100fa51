#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "flakesift/cluster.hpp"
#include "flakesift/error.hpp"
#include "flakesift/features.hpp"

namespace flakesift {

// Pipeline configuration. File grammar: one `key = value` per line, `#`
// comments, blank lines ignored. Unknown keys are rejected.
struct Config {
    double min_silhouette = 0.6;
    Linkage linkage = Linkage::Average;
    std::size_t k_folds = 5;
    std::size_t n_estimators = 100;
    std::uint64_t seed = 42;
    std::size_t min_flaky_for_ml = 10;
    std::size_t trace_sample_k = 5;
    std::size_t triage_truncate = 10000;
    std::size_t shap_permutations = 200;
    std::size_t shap_background = 100;
    bool name_features = true;
    bool code_features = true;
    bool code_on_tokens = false;

    FeatureOptions feature_options() const {
        FeatureOptions opts;
        opts.name_features = name_features;
        opts.code_features = code_features;
        opts.code_on_tokens = code_on_tokens;
        return opts;
    }

    ClusterOptions cluster_options() const {
        ClusterOptions opts;
        opts.min_silhouette = min_silhouette;
        opts.linkage = linkage;
        return opts;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw validation_error("bad-config-value", key + ": expected a boolean, got `" + v + "`");
}

template <typename T>
T parse_unsigned(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long raw = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<T>(raw);
    } catch (const std::exception&) {
        throw validation_error("bad-config-value", key + ": expected a non-negative integer, got `" + v + "`");
    }
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw validation_error("bad-config-value", key + ": expected a number, got `" + v + "`");
    }
}

}  // namespace detail

inline void apply_config_entry(Config& config, const std::string& key, const std::string& value) {
    if (key == "min_silhouette") {
        config.min_silhouette = detail::parse_double(value, key);
        if (config.min_silhouette < -1.0 || config.min_silhouette > 1.0) {
            throw validation_error("bad-config-value", "min_silhouette must lie in [-1,1]");
        }
    } else if (key == "linkage") {
        config.linkage = parse_linkage(value);
    } else if (key == "k_folds") {
        config.k_folds = detail::parse_unsigned<std::size_t>(value, key);
        if (config.k_folds < 2) throw validation_error("bad-config-value", "k_folds must be at least 2");
    } else if (key == "n_estimators") {
        config.n_estimators = detail::parse_unsigned<std::size_t>(value, key);
        if (config.n_estimators == 0) throw validation_error("bad-config-value", "n_estimators must be positive");
    } else if (key == "seed") {
        config.seed = detail::parse_unsigned<std::uint64_t>(value, key);
    } else if (key == "min_flaky_for_ml") {
        config.min_flaky_for_ml = detail::parse_unsigned<std::size_t>(value, key);
    } else if (key == "trace_sample_k") {
        config.trace_sample_k = detail::parse_unsigned<std::size_t>(value, key);
        if (config.trace_sample_k == 0) throw validation_error("bad-config-value", "trace_sample_k must be positive");
    } else if (key == "triage.truncate") {
        config.triage_truncate = detail::parse_unsigned<std::size_t>(value, key);
    } else if (key == "shap.permutations") {
        config.shap_permutations = detail::parse_unsigned<std::size_t>(value, key);
        if (config.shap_permutations == 0) {
            throw validation_error("bad-config-value", "shap.permutations must be positive");
        }
    } else if (key == "shap.background") {
        config.shap_background = detail::parse_unsigned<std::size_t>(value, key);
        if (config.shap_background == 0) {
            throw validation_error("bad-config-value", "shap.background must be positive");
        }
    } else if (key == "features.name") {
        config.name_features = detail::parse_bool(value, key);
    } else if (key == "features.code") {
        config.code_features = detail::parse_bool(value, key);
    } else if (key == "features.code_text") {
        if (value == "raw") config.code_on_tokens = false;
        else if (value == "tokens") config.code_on_tokens = true;
        else throw validation_error("bad-config-value", "features.code_text must be `raw` or `tokens`");
    } else {
        throw validation_error("unknown-config-key", "unknown config key: " + key);
    }
}

inline Config parse_config(std::string_view text) {
    Config config;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        const std::string line = detail::trim(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw validation_error("bad-config-line",
                                   "line " + std::to_string(line_no) + ": expected `key = value`");
        }
        apply_config_entry(config, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return config;
}

// FLAKESIFT_SEED wins over both the config file and --seed.
inline void apply_seed_env(Config& config) {
    if (const char* env = std::getenv("FLAKESIFT_SEED")) {
        config.seed = detail::parse_unsigned<std::uint64_t>(env, "FLAKESIFT_SEED");
    }
}

}  // namespace flakesift
