#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flakesift/cluster.hpp"
#include "flakesift/error.hpp"
#include "flakesift/io_util.hpp"
#include "flakesift/learn.hpp"
#include "flakesift/shap.hpp"
#include "flakesift/synth.hpp"
#include "flakesift/triage.hpp"
#include "flakesift/version.hpp"

namespace flakesift {

inline nlohmann::json cluster_report_to_json(const ClusterReport& report) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["project"] = report.project;
    j["systemic"] = report.systemic;
    if (!report.systemic) j["reason"] = report.reason;
    if (report.threshold) j["threshold"] = *report.threshold;
    else j["threshold"] = nullptr;
    if (report.mean_silhouette) j["mean_silhouette"] = *report.mean_silhouette;
    else j["mean_silhouette"] = nullptr;
    j["clustered_test_count"] = report.clustered_test_count;
    j["mean_cluster_size"] = report.mean_cluster_size;
    j["mean_distinct_classes"] = report.mean_distinct_classes;
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : report.clusters) {
        nlohmann::json cj;
        cj["id"] = c.id;
        nlohmann::json members = nlohmann::json::array();
        for (const TestId& t : c.members) members.push_back(t.name());
        cj["members"] = std::move(members);
        cj["distinct_test_classes"] = c.distinct_test_classes;
        clusters.push_back(std::move(cj));
    }
    j["clusters"] = std::move(clusters);
    return j;
}

inline ClusterReport cluster_report_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema_version", 0) != kReportSchemaVersion) {
        throw parse_error("bad-report-file", "unsupported cluster report schema version");
    }
    ClusterReport report;
    try {
        report.project = j.at("project").get<std::string>();
        report.systemic = j.at("systemic").get<bool>();
        report.reason = j.value("reason", std::string());
        if (!j.at("threshold").is_null()) report.threshold = j.at("threshold").get<double>();
        if (!j.at("mean_silhouette").is_null()) report.mean_silhouette = j.at("mean_silhouette").get<double>();
        report.clustered_test_count = j.at("clustered_test_count").get<std::size_t>();
        report.mean_cluster_size = j.at("mean_cluster_size").get<double>();
        report.mean_distinct_classes = j.at("mean_distinct_classes").get<double>();
        for (const auto& cj : j.at("clusters")) {
            ClusterInfo info;
            info.id = cj.at("id").get<int>();
            for (const auto& m : cj.at("members")) info.members.push_back(TestId::parse(m.get<std::string>()));
            info.distinct_test_classes = cj.at("distinct_test_classes").get<std::size_t>();
            report.clusters.push_back(std::move(info));
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("bad-report-file", std::string("cluster report JSON: ") + e.what());
    }
    return report;
}

// Feature CSV: one row per unordered pair in canonical order, the 19
// features in fixed layout, then the Jaccard target and same-cluster label.
inline void write_feature_csv(std::ostream& out, const std::vector<PairExample>& examples) {
    out << "# schema: flakesift.features.v" << kFeatureSchemaVersion << "\n";
    out << "test_a,test_b";
    for (const auto& name : kFeatureNames) out << ',' << name;
    out << ",target_jaccard,same_cluster\n";
    for (const auto& ex : examples) {
        out << ex.test_a.name() << ',' << ex.test_b.name();
        for (double v : ex.features) out << ',' << format_double(v);
        out << ',' << format_double(ex.target_distance) << ',' << (ex.same_cluster ? "true" : "false")
            << '\n';
    }
}

inline std::vector<PairExample> read_feature_csv(std::istream& in) {
    std::vector<PairExample> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cells.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (!header_seen) {
            if (cells.size() != kFeatureCount + 4 || cells[0] != "test_a") {
                throw parse_error("bad-feature-csv", "unexpected feature CSV header");
            }
            for (std::size_t i = 0; i < kFeatureCount; ++i) {
                if (cells[i + 2] != kFeatureNames[i]) {
                    throw parse_error("bad-feature-csv",
                                      "feature column " + std::to_string(i) + " is " + cells[i + 2] +
                                          ", expected " + std::string(kFeatureNames[i]));
                }
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != kFeatureCount + 4) {
            throw parse_error("bad-feature-csv", "line " + std::to_string(line_no) + ": wrong column count");
        }
        PairExample ex;
        ex.test_a = TestId::parse(cells[0]);
        ex.test_b = TestId::parse(cells[1]);
        try {
            for (std::size_t i = 0; i < kFeatureCount; ++i) ex.features[i] = std::stod(cells[i + 2]);
            ex.target_distance = std::stod(cells[kFeatureCount + 2]);
        } catch (const std::exception&) {
            throw parse_error("bad-feature-csv", "line " + std::to_string(line_no) + ": bad number");
        }
        const std::string& label = cells[kFeatureCount + 3];
        if (label != "true" && label != "false") {
            throw parse_error("bad-feature-csv", "line " + std::to_string(line_no) + ": bad label");
        }
        ex.same_cluster = label == "true";
        out.push_back(std::move(ex));
    }
    if (!header_seen) {
        throw parse_error("bad-feature-csv", "missing header row");
    }
    return out;
}

inline nlohmann::json cv_result_to_json(const CvResult& result) {
    nlohmann::json j;
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& fs : result.fold_scores) {
        folds.push_back({{"fold", fs.fold}, {"value", fs.value}});
    }
    j["folds"] = std::move(folds);
    j["mean"] = result.mean;
    j["warnings"] = result.warnings;
    return j;
}

// Importance CSV mirroring the per-project rank table: rows are features,
// columns the project's rank plus the mean rank over listed projects.
inline void write_importance_csv(std::ostream& out, const ImportanceRanking& ranking,
                                 const std::string& project) {
    out << "# schema: flakesift.importance.v1\n";
    out << "feature,mean_abs_shap,rank:" << (project.empty() ? "project" : project) << ",mean_rank\n";
    for (std::size_t i = 0; i < ranking.rank.size(); ++i) {
        const std::string name = i < kFeatureCount ? std::string(kFeatureNames[i])
                                                   : "feature_" + std::to_string(i);
        out << name << ',' << format_double(ranking.mean_abs_phi[i]) << ',' << ranking.rank[i] << ','
            << format_double(static_cast<double>(ranking.rank[i])) << '\n';
    }
}

inline nlohmann::json truth_to_json(const std::map<TestId, int>& truth) {
    nlohmann::json blocks = nlohmann::json::object();
    for (const auto& [test, block] : truth) blocks[test.name()] = block;
    nlohmann::json j;
    j["schema_version"] = kTruthSchemaVersion;
    j["blocks"] = std::move(blocks);
    return j;
}

inline std::map<TestId, int> truth_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema_version", 0) != kTruthSchemaVersion) {
        throw parse_error("bad-truth-file", "unsupported ground-truth schema version");
    }
    std::map<TestId, int> out;
    for (const auto& [name, block] : j.at("blocks").items()) {
        out[TestId::parse(name)] = block.get<int>();
    }
    return out;
}

struct ClusterDossier {
    int cluster_id = 0;
    std::vector<TestId> members;
    std::size_t failure_record_count = 0;
    std::size_t runs_with_co_failure = 0;  // runs where >= 2 members failed
    double mean_pairwise_jaccard = 0.0;
    TraceSample traces;
};

// Per-cluster inspection bundle: members, co-failure statistics, diverse
// trace sample.
inline ClusterDossier build_dossier(const ProjectDataset& ds, const ClusterInfo& cluster,
                                    std::size_t k, std::uint64_t seed, const TriageOptions& topts = {}) {
    ClusterDossier dossier;
    dossier.cluster_id = cluster.id;
    dossier.members = cluster.members;
    dossier.traces = sample_diverse_traces(ds, cluster.members, k, seed, cluster.id, topts);

    std::map<RunId, std::size_t> failing_members_per_run;
    std::vector<FailureSignature> signatures;
    for (const TestId& member : cluster.members) {
        const FailureSignature sig = failure_signature(ds, member);
        for (RunId r : sig) ++failing_members_per_run[r];
        signatures.push_back(sig);
        dossier.failure_record_count += sig.size();
    }
    for (const auto& [run, count] : failing_members_per_run) {
        if (count >= 2) ++dossier.runs_with_co_failure;
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
        for (std::size_t j = i + 1; j < signatures.size(); ++j) {
            total += jaccard_distance(signatures[i], signatures[j]);
            ++pairs;
        }
    }
    dossier.mean_pairwise_jaccard = pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
    return dossier;
}

inline nlohmann::json dossier_to_json(const ClusterDossier& dossier) {
    nlohmann::json j;
    j["schema_version"] = kDossierSchemaVersion;
    j["cluster_id"] = dossier.cluster_id;
    nlohmann::json members = nlohmann::json::array();
    for (const TestId& t : dossier.members) members.push_back(t.name());
    j["members"] = std::move(members);
    j["failure_record_count"] = dossier.failure_record_count;
    j["runs_with_co_failure"] = dossier.runs_with_co_failure;
    j["mean_pairwise_jaccard"] = dossier.mean_pairwise_jaccard;
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& e : dossier.traces.entries) {
        traces.push_back({{"test", e.test.name()},
                          {"run", e.run},
                          {"error_message", e.error_message},
                          {"stack_trace", e.stack_trace}});
    }
    j["traces"] = std::move(traces);
    return j;
}

inline std::string dossier_to_markdown(const ClusterDossier& dossier) {
    std::ostringstream out;
    out << "# Cluster " << dossier.cluster_id << " dossier\n\n";
    out << "schema_version: " << kDossierSchemaVersion << "\n\n";
    out << "## Members (" << dossier.members.size() << ")\n\n";
    for (const TestId& t : dossier.members) out << "- `" << t.name() << "`\n";
    out << "\n## Co-failure statistics\n\n";
    out << "- failure records: " << dossier.failure_record_count << "\n";
    out << "- runs with >=2 member failures: " << dossier.runs_with_co_failure << "\n";
    out << "- mean pairwise Jaccard distance: " << format_double(dossier.mean_pairwise_jaccard) << "\n";
    out << "\n## Sampled traces (" << dossier.traces.entries.size() << ")\n";
    for (const auto& e : dossier.traces.entries) {
        out << "\n### `" << e.test.name() << "` in run " << e.run << "\n\n";
        if (!e.error_message.empty()) out << "message: " << e.error_message << "\n\n";
        out << "```\n" << e.stack_trace << "\n```\n";
    }
    return out.str();
}

}  // namespace flakesift
