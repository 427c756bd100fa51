#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "flakesift/dataset.hpp"
#include "flakesift/error.hpp"
#include "flakesift/rng.hpp"
#include "flakesift/strdist.hpp"

namespace flakesift {

struct TraceEntry {
    TestId test;
    RunId run = 0;
    std::string stack_trace;
    std::string error_message;
};

struct TraceSample {
    int cluster_id = 0;
    std::vector<TraceEntry> entries;
};

struct TriageOptions {
    std::size_t truncate_chars = 10000;  // cap before quadratic distance DP
};

// Farthest-first traversal over a cluster's failure records: seeded-random
// first pick, then greedily maximize the minimum Levenshtein distance to the
// already chosen traces. Stops at k or exhaustion.
inline TraceSample sample_diverse_traces(const ProjectDataset& ds, const std::vector<TestId>& members,
                                         std::size_t k, std::uint64_t seed, int cluster_id = 0,
                                         const TriageOptions& opts = {}) {
    if (k == 0) {
        throw validation_error("bad-sample-count", "k must be at least 1");
    }
    std::set<TestId> member_set(members.begin(), members.end());
    std::vector<TraceEntry> pool;
    for (const FailureRecord& f : ds.failures()) {
        if (member_set.count(f.test) == 0) continue;
        pool.push_back({f.test, f.run, f.stack_trace, f.error_message});
    }
    if (pool.empty()) {
        throw gate_error("no-failure-records", "cluster has no failure records to sample");
    }

    auto distance_text = [&](const TraceEntry& e) {
        std::string text = e.stack_trace;
        text += '\n';
        text += e.error_message;
        if (text.size() > opts.truncate_chars) text.resize(opts.truncate_chars);
        return text;
    };
    std::vector<std::string> texts;
    texts.reserve(pool.size());
    for (const auto& e : pool) texts.push_back(distance_text(e));

    TraceSample sample;
    sample.cluster_id = cluster_id;

    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cluster_id)));
    std::vector<bool> chosen(pool.size(), false);
    std::vector<std::size_t> min_dist(pool.size(), std::numeric_limits<std::size_t>::max());

    std::size_t pick = static_cast<std::size_t>(rng.below(pool.size()));
    for (std::size_t round = 0; round < std::min(k, pool.size()); ++round) {
        chosen[pick] = true;
        sample.entries.push_back(pool[pick]);
        if (sample.entries.size() == std::min(k, pool.size())) break;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (chosen[i]) continue;
            min_dist[i] = std::min(min_dist[i], levenshtein(texts[i], texts[pick]));
        }
        // Next pick: maximal min distance, ties to the lowest pool index.
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (chosen[i]) continue;
            if (best == pool.size() || min_dist[i] > min_dist[best]) best = i;
        }
        pick = best;
    }
    return sample;
}

}  // namespace flakesift
