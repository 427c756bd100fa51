#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flakesift/dataset.hpp"
#include "flakesift/strdist.hpp"
#include "flakesift/test_id.hpp"

namespace flakesift {

// Fixed, versioned feature layout. Indices are stable; new features may only
// be appended.
inline constexpr std::size_t kFeatureCount = 19;
inline constexpr int kFeatureSchemaVersion = 1;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "name_levenshtein",
    "name_damerau",
    "name_levenshtein_norm",
    "name_damerau_norm",
    "name_jaro",
    "name_jaro_winkler",
    "code_levenshtein",
    "code_damerau",
    "code_levenshtein_norm",
    "code_damerau_norm",
    "code_jaro",
    "code_jaro_winkler",
    "name_token_jaccard",
    "name_token_dice",
    "name_token_overlap",
    "code_token_jaccard",
    "code_token_dice",
    "code_token_overlap",
    "hierarchy_distance",
};

using PairFeatureVector = std::array<double, kFeatureCount>;

inline std::size_t feature_index(std::string_view name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (kFeatureNames[i] == name) return i;
    }
    throw validation_error("bad-feature-name", "unknown feature: " + std::string(name));
}

namespace detail {

inline std::set<std::string> lowercase_token_set(const std::vector<std::string>& tokens) {
    std::set<std::string> out;
    for (const auto& token : tokens) {
        if (token.empty()) continue;
        std::string lower;
        lower.reserve(token.size());
        for (char c : token) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.insert(std::move(lower));
    }
    return out;
}

}  // namespace detail

struct FeatureOptions {
    bool name_features = true;
    bool code_features = true;     // disabled: code columns stay 0 and no source is required
    bool code_on_tokens = false;   // char distances over joined tokens instead of raw text
};

// All 19 static distance measures for one pair. Name character distances use
// the rendered fully qualified names; code distances need the dataset's
// source entries for both tests. Disabled feature groups stay 0 so the
// vector layout never changes.
inline PairFeatureVector feature_vector(const TestId& t1, const TestId& t2, const ProjectDataset& ds,
                                        const FeatureOptions& opts = {}) {
    PairFeatureVector f{};

    if (opts.name_features) {
        const std::string& name1 = t1.name();
        const std::string& name2 = t2.name();
        const std::size_t name_lev = levenshtein(name1, name2);
        const std::size_t name_dam = damerau_levenshtein(name1, name2);
        const SetDistances name_set = set_distances(tokenize_name(t1), tokenize_name(t2));
        f[0] = static_cast<double>(name_lev);
        f[1] = static_cast<double>(name_dam);
        f[2] = normalized(name_lev, name1, name2);
        f[3] = normalized(name_dam, name1, name2);
        f[4] = jaro(name1, name2);
        f[5] = jaro_winkler(name1, name2);
        f[12] = name_set.jaccard;
        f[13] = name_set.dice;
        f[14] = name_set.overlap;
    }

    if (opts.code_features) {
        const SourceEntry* s1 = ds.source(t1);
        const SourceEntry* s2 = ds.source(t2);
        if (s1 == nullptr) {
            throw validation_error("missing-source", "no source entry for " + t1.name());
        }
        if (s2 == nullptr) {
            throw validation_error("missing-source", "no source entry for " + t2.name());
        }
        auto joined = [](const std::vector<std::string>& tokens) {
            std::string out;
            for (const auto& t : tokens) {
                if (!out.empty()) out += ' ';
                out += t;
            }
            return out;
        };
        const std::string code1 = opts.code_on_tokens ? joined(s1->tokens) : s1->text;
        const std::string code2 = opts.code_on_tokens ? joined(s2->tokens) : s2->text;
        const std::set<std::string> code_tokens1 = detail::lowercase_token_set(s1->tokens);
        const std::set<std::string> code_tokens2 = detail::lowercase_token_set(s2->tokens);
        if (code_tokens1.empty()) {
            throw validation_error("missing-source", "empty token list for " + t1.name());
        }
        if (code_tokens2.empty()) {
            throw validation_error("missing-source", "empty token list for " + t2.name());
        }
        const std::size_t code_lev = levenshtein(code1, code2);
        const std::size_t code_dam = damerau_levenshtein(code1, code2);
        const SetDistances code_set = set_distances(code_tokens1, code_tokens2);
        f[6] = static_cast<double>(code_lev);
        f[7] = static_cast<double>(code_dam);
        f[8] = normalized(code_lev, code1, code2);
        f[9] = normalized(code_dam, code1, code2);
        f[10] = jaro(code1, code2);
        f[11] = jaro_winkler(code1, code2);
        f[15] = code_set.jaccard;
        f[16] = code_set.dice;
        f[17] = code_set.overlap;
    }

    f[18] = hierarchy_distance(t1, t2);
    return f;
}

}  // namespace flakesift
