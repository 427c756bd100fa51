#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flakesift/error.hpp"
#include "flakesift/test_id.hpp"

namespace flakesift {

using RunId = std::uint64_t;

enum class Outcome { Pass, Fail, NotExecuted };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "pass";
        case Outcome::Fail: return "fail";
        case Outcome::NotExecuted: return "skip";
    }
    return "skip";
}

inline Outcome parse_outcome(std::string_view s) {
    if (s == "pass") return Outcome::Pass;
    if (s == "fail") return Outcome::Fail;
    if (s == "skip") return Outcome::NotExecuted;
    throw parse_error("bad-outcome", "unknown outcome: " + std::string(s));
}

struct FailureRecord {
    RunId run = 0;
    TestId test;
    std::string stack_trace;
    std::string error_message;
};

struct SourceEntry {
    std::string text;
    std::vector<std::string> tokens;
};

// Set of run IDs in which one flaky test failed; the atom of co-occurrence.
using FailureSignature = std::set<RunId>;

// Canonical run x test outcome store. Cells are sparse: a (run, test) pair
// with no entry means the test was not executed in that run.
class ProjectDataset {
public:
    std::string project_name;

    const std::set<RunId>& runs() const noexcept { return runs_; }
    const std::map<TestId, std::map<RunId, Outcome>>& tests() const noexcept { return outcomes_; }

    std::size_t cell_count() const noexcept { return cell_count_; }

    void add_run(RunId run) { runs_.insert(run); }

    void set_outcome(RunId run, const TestId& test, Outcome outcome) {
        runs_.insert(run);
        auto [it, inserted] = outcomes_[test].emplace(run, outcome);
        if (!inserted) {
            if (it->second != outcome) {
                throw parse_error("conflicting-outcome",
                                  "conflicting outcomes for " + test.name() + " in run " + std::to_string(run));
            }
            return;  // exact duplicate is a no-op
        }
        ++cell_count_;
    }

    Outcome outcome(RunId run, const TestId& test) const {
        auto it = outcomes_.find(test);
        if (it == outcomes_.end()) return Outcome::NotExecuted;
        auto cell = it->second.find(run);
        return cell == it->second.end() ? Outcome::NotExecuted : cell->second;
    }

    void add_failure(FailureRecord record) { failures_.push_back(std::move(record)); }
    const std::vector<FailureRecord>& failures() const noexcept { return failures_; }

    void set_source(const TestId& test, SourceEntry entry) { source_[test] = std::move(entry); }
    const SourceEntry* source(const TestId& test) const {
        auto it = source_.find(test);
        return it == source_.end() ? nullptr : &it->second;
    }
    const std::map<TestId, SourceEntry>& sources() const noexcept { return source_; }

    // Order-independent union; conflicting cells are an error, so merging
    // per-run reports in any schedule yields the same dataset.
    void merge(const ProjectDataset& other) {
        for (RunId r : other.runs_) runs_.insert(r);
        for (const auto& [test, cells] : other.outcomes_) {
            for (const auto& [run, outcome] : cells) set_outcome(run, test, outcome);
        }
        for (const auto& f : other.failures_) failures_.push_back(f);
        for (const auto& [test, src] : other.source_) source_[test] = src;
        normalize_failures();
    }

    // Deterministic failure order: (test name, run id). Called by parsers
    // after bulk insertion.
    void normalize_failures() {
        std::sort(failures_.begin(), failures_.end(), [](const FailureRecord& a, const FailureRecord& b) {
            if (a.test != b.test) return a.test < b.test;
            return a.run < b.run;
        });
        failures_.erase(std::unique(failures_.begin(), failures_.end(),
                                    [](const FailureRecord& a, const FailureRecord& b) {
                                        return a.test == b.test && a.run == b.run &&
                                               a.stack_trace == b.stack_trace &&
                                               a.error_message == b.error_message;
                                    }),
                        failures_.end());
    }

    // Requires normalize_failures() to have run (parsers and merge do).
    const FailureRecord* failure_for(RunId run, const TestId& test) const {
        auto it = std::lower_bound(failures_.begin(), failures_.end(), std::make_pair(test, run),
                                   [](const FailureRecord& f, const std::pair<TestId, RunId>& key) {
                                       if (f.test != key.first) return f.test < key.first;
                                       return f.run < key.second;
                                   });
        if (it != failures_.end() && it->test == test && it->run == run) return &*it;
        return nullptr;
    }

private:
    std::set<RunId> runs_;
    std::map<TestId, std::map<RunId, Outcome>> outcomes_;
    std::vector<FailureRecord> failures_;
    std::map<TestId, SourceEntry> source_;
    std::size_t cell_count_ = 0;
};

// Flaky = at least one Pass and at least one Fail among executed runs.
// NotExecuted cells carry no signal. Canonical (lexicographic) order.
inline std::vector<TestId> identify_flaky_tests(const ProjectDataset& ds) {
    std::vector<TestId> out;
    for (const auto& [test, cells] : ds.tests()) {
        bool passed = false;
        bool failed = false;
        for (const auto& [run, outcome] : cells) {
            passed |= outcome == Outcome::Pass;
            failed |= outcome == Outcome::Fail;
            if (passed && failed) break;
        }
        if (passed && failed) out.push_back(test);
    }
    return out;
}

inline FailureSignature failure_signature(const ProjectDataset& ds, const TestId& test) {
    auto it = ds.tests().find(test);
    FailureSignature sig;
    bool passed = false;
    if (it != ds.tests().end()) {
        for (const auto& [run, outcome] : it->second) {
            if (outcome == Outcome::Fail) sig.insert(run);
            if (outcome == Outcome::Pass) passed = true;
        }
    }
    if (sig.empty() || !passed) {
        throw validation_error("not-flaky", "test is not flaky: " + test.name());
    }
    return sig;
}

}  // namespace flakesift
