#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flakesift/dataset.hpp"
#include "flakesift/error.hpp"
#include "flakesift/rng.hpp"
#include "flakesift/test_id.hpp"

namespace flakesift {

// Planted systemic-flakiness generator. Each cluster has a per-run Bernoulli
// trigger (the shared intermittent event); given a trigger, each member fails
// with its co-fail probability. Noise adds independent per-test failures.
struct SynthClusterSpec {
    std::size_t size = 0;
    double trigger_probability = 0.0;
    double co_fail_probability = 1.0;
};

struct SynthSpec {
    std::size_t runs = 500;
    std::vector<SynthClusterSpec> clusters;
    std::size_t independent_flaky = 0;
    double independent_fail_probability = 0.02;
    double noise = 0.0;
    std::string package_prefix = "synth";
    std::uint64_t seed = 42;
};

struct SynthResult {
    ProjectDataset dataset;
    std::map<TestId, int> truth;  // planted partition: block id per test
};

namespace detail {

inline void validate_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw validation_error("bad-synth-spec", std::string(what) + " must lie in [0,1]");
    }
}

inline std::string two_digits(std::size_t v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

inline SourceEntry synth_source(const TestId& id, const std::string& family) {
    SourceEntry entry;
    entry.text = "public void " + id.method_name() + "() {\n" +
                 "    Client client = Harness.connect(\"" + family + "\");\n" +
                 "    Result result = client.fetch(\"" + id.class_name() + "\");\n" +
                 "    Assert.assertNotNull(result);\n}\n";
    entry.tokens = {"public", "void",   id.method_name(), "Client", "client", "Harness",
                    "connect", family,  "Result",          "result", "fetch",  id.class_name(),
                    "Assert",  "assertNotNull"};
    return entry;
}

}  // namespace detail

inline SynthResult generate(const SynthSpec& spec) {
    if (spec.runs < 2) {
        throw validation_error("bad-synth-spec", "need at least 2 runs for flakiness");
    }
    detail::validate_probability(spec.noise, "noise");
    detail::validate_probability(spec.independent_fail_probability, "independent fail probability");
    for (const auto& c : spec.clusters) {
        if (c.size == 0) {
            throw validation_error("bad-synth-spec", "cluster size must be at least 1");
        }
        detail::validate_probability(c.trigger_probability, "trigger probability");
        detail::validate_probability(c.co_fail_probability, "co-fail probability");
    }

    // Shared per-run trigger realizations, one stream per cluster.
    std::vector<std::vector<bool>> triggers(spec.clusters.size());
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
        Rng rng(derive_seed(spec.seed, 0x74726900 + c));  // "tri" streams
        triggers[c].resize(spec.runs);
        std::size_t fired = 0;
        for (std::size_t r = 0; r < spec.runs; ++r) {
            triggers[c][r] = rng.bernoulli(spec.clusters[c].trigger_probability);
            fired += triggers[c][r] ? 1 : 0;
        }
        // A member can never fail if the trigger path and the noise path are
        // both dead; it can never pass if every run forces a failure.
        const bool can_fail =
            (fired > 0 && spec.clusters[c].co_fail_probability > 0.0) || spec.noise > 0.0;
        const bool can_pass =
            spec.noise < 1.0 && !(fired == spec.runs && spec.clusters[c].co_fail_probability >= 1.0);
        if (!can_fail || !can_pass) {
            throw validation_error("infeasible-spec",
                                   "cluster " + std::to_string(c) + " cannot produce flaky members");
        }
    }
    if (spec.independent_flaky > 0) {
        const double p = 1.0 - (1.0 - spec.noise) * (1.0 - spec.independent_fail_probability);
        if (p <= 0.0 || p >= 1.0) {
            throw validation_error("infeasible-spec", "independent tests cannot be flaky");
        }
    }

    SynthResult out;
    out.dataset.project_name = spec.package_prefix;
    for (std::size_t r = 0; r < spec.runs; ++r) out.dataset.add_run(r);

    std::size_t test_counter = 0;
    auto draw_outcomes = [&](const TestId& id, int block, const std::vector<bool>* trigger,
                             double co_fail, double solo_rate, const std::string& family) {
        const std::size_t my_index = test_counter++;
        constexpr std::size_t kMaxAttempts = 10000;
        std::vector<bool> fails(spec.runs);
        std::vector<bool> via_trigger(spec.runs);
        bool ok = false;
        for (std::size_t attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
            Rng rng(derive_seed(spec.seed, 0x7465737400000000ULL + my_index * kMaxAttempts + attempt));
            bool any_fail = false;
            bool any_pass = false;
            for (std::size_t r = 0; r < spec.runs; ++r) {
                bool fail = false;
                bool from_trigger = false;
                if (trigger != nullptr && (*trigger)[r] && rng.bernoulli(co_fail)) {
                    fail = true;
                    from_trigger = true;
                }
                if (solo_rate > 0.0 && rng.bernoulli(solo_rate)) fail = true;
                if (spec.noise > 0.0 && rng.bernoulli(spec.noise)) fail = true;
                fails[r] = fail;
                via_trigger[r] = from_trigger;
                any_fail |= fail;
                any_pass |= !fail;
            }
            ok = any_fail && any_pass;
        }
        if (!ok) {
            throw validation_error("infeasible-spec", "could not realize a flaky outcome row for " + id.name());
        }
        for (std::size_t r = 0; r < spec.runs; ++r) {
            out.dataset.set_outcome(r, id, fails[r] ? Outcome::Fail : Outcome::Pass);
            if (fails[r]) {
                FailureRecord record;
                record.run = r;
                record.test = id;
                if (via_trigger[r]) {
                    record.error_message = "ConnectException: " + family + " unreachable";
                    record.stack_trace = "java.net.ConnectException: " + family + " unreachable\n\tat " +
                                         id.qualified_class() + "." + id.method_name() + "(" +
                                         id.class_name() + ".java:42)\n\tat Harness.connect(Harness.java:17)";
                } else {
                    record.error_message = "AssertionError: stale fixture";
                    record.stack_trace = "java.lang.AssertionError: stale fixture\n\tat " +
                                         id.qualified_class() + "." + id.method_name() + "(" +
                                         id.class_name() + ".java:" + std::to_string(60 + my_index % 40) + ")";
                }
                out.dataset.add_failure(std::move(record));
            }
        }
        out.dataset.set_source(id, detail::synth_source(id, family));
        out.truth[id] = block;
    };

    // Cluster members share a package and class so static name distances
    // carry the planted signal.
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
        const std::string tag = detail::two_digits(c);
        for (std::size_t m = 0; m < spec.clusters[c].size; ++m) {
            const TestId id({spec.package_prefix, "group" + tag}, "Group" + tag + "Test",
                            "case" + detail::two_digits(m));
            draw_outcomes(id, static_cast<int>(c), &triggers[c], spec.clusters[c].co_fail_probability,
                          0.0, "service-" + tag);
        }
    }
    for (std::size_t i = 0; i < spec.independent_flaky; ++i) {
        const std::string tag = detail::two_digits(i);
        const TestId id({spec.package_prefix, "solo" + tag}, "Solo" + tag + "Test", "flaps");
        draw_outcomes(id, static_cast<int>(spec.clusters.size() + i), nullptr, 0.0,
                      spec.independent_fail_probability, "local-" + tag);
    }

    out.dataset.normalize_failures();
    return out;
}

// Pair-counting adjusted Rand index between two partitions of one element
// set. 1 for identical partitions; ~0 for independent ones.
inline double adjusted_rand_index(const std::map<TestId, int>& p1, const std::map<TestId, int>& p2) {
    if (p1.empty() || p1.size() != p2.size()) {
        throw validation_error("partition-mismatch", "partitions cover different element sets");
    }
    std::map<int, std::size_t> rows;
    std::map<int, std::size_t> cols;
    std::map<std::pair<int, int>, std::size_t> cells;
    for (const auto& [test, b1] : p1) {
        const auto it = p2.find(test);
        if (it == p2.end()) {
            throw validation_error("partition-mismatch", "element missing from second partition: " + test.name());
        }
        ++rows[b1];
        ++cols[it->second];
        ++cells[{b1, it->second}];
    }
    auto comb2 = [](std::size_t n) {
        return n < 2 ? 0.0 : static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    };
    double index = 0.0;
    for (const auto& [cell, n] : cells) index += comb2(n);
    double row_sum = 0.0;
    for (const auto& [b, n] : rows) row_sum += comb2(n);
    double col_sum = 0.0;
    for (const auto& [b, n] : cols) col_sum += comb2(n);
    if (p1.size() < 2) return 1.0;  // one element: partitions are forcibly equal
    const double total = comb2(p1.size());
    const double expected = row_sum * col_sum / total;
    const double max_index = (row_sum + col_sum) / 2.0;
    if (max_index == expected) return 1.0;  // both trivial partitions
    return (index - expected) / (max_index - expected);
}

}  // namespace flakesift
