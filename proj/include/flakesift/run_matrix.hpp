#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "flakesift/dataset.hpp"
#include "flakesift/error.hpp"

namespace flakesift {

// Run-matrix JSONL: one object per line with keys `run`, `test`, `outcome`
// (pass|fail|skip) and, for failures, optional `stack_trace` and
// `error_message`. Record order is irrelevant on read; writes are canonical.

inline ProjectDataset parse_run_matrix(std::istream& in) {
    ProjectDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw parse_error("malformed-jsonl", "line " + std::to_string(line_no) + ": not a JSON object");
        }
        try {
            const RunId run = record.at("run").get<RunId>();
            const TestId test = TestId::parse(record.at("test").get<std::string>());
            const Outcome outcome = parse_outcome(record.at("outcome").get<std::string>());
            ds.set_outcome(run, test, outcome);
            if (outcome == Outcome::Fail) {
                FailureRecord fr;
                fr.run = run;
                fr.test = test;
                fr.stack_trace = record.value("stack_trace", std::string());
                fr.error_message = record.value("error_message", std::string());
                ds.add_failure(std::move(fr));
            }
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("malformed-jsonl", "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    ds.normalize_failures();
    return ds;
}

inline ProjectDataset parse_run_matrix(const std::string& text) {
    std::istringstream in(text);
    return parse_run_matrix(in);
}

// Canonical order: (test name, run id). Empty failure texts are omitted so
// write(parse(write(x))) is a byte fixed point.
inline void write_run_matrix(std::ostream& out, const ProjectDataset& ds) {
    for (const auto& [test, cells] : ds.tests()) {
        for (const auto& [run, outcome] : cells) {
            nlohmann::json record;
            record["run"] = run;
            record["test"] = test.name();
            record["outcome"] = outcome_name(outcome);
            if (outcome == Outcome::Fail) {
                if (const FailureRecord* fr = ds.failure_for(run, test)) {
                    if (!fr->stack_trace.empty()) record["stack_trace"] = fr->stack_trace;
                    if (!fr->error_message.empty()) record["error_message"] = fr->error_message;
                }
            }
            out << record.dump() << '\n';
        }
    }
}

inline std::string write_run_matrix(const ProjectDataset& ds) {
    std::ostringstream out;
    write_run_matrix(out, ds);
    return out.str();
}

// Source sidecar JSONL: `{test, source, tokens: [...]}` per line. Carries the
// textual and tokenized test bodies needed by the code distance features.
inline void parse_sources(std::istream& in, ProjectDataset& ds) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw parse_error("malformed-jsonl", "sources line " + std::to_string(line_no) + ": not a JSON object");
        }
        try {
            const TestId test = TestId::parse(record.at("test").get<std::string>());
            SourceEntry entry;
            entry.text = record.at("source").get<std::string>();
            entry.tokens = record.at("tokens").get<std::vector<std::string>>();
            ds.set_source(test, std::move(entry));
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("malformed-jsonl", "sources line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void write_sources(std::ostream& out, const ProjectDataset& ds) {
    for (const auto& [test, entry] : ds.sources()) {
        nlohmann::json record;
        record["test"] = test.name();
        record["source"] = entry.text;
        record["tokens"] = entry.tokens;
        out << record.dump() << '\n';
    }
}

}  // namespace flakesift
