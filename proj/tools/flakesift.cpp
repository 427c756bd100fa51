// flakesift: detect and predict systemic flakiness from test-suite runs.
//
// Subcommands mirror the analysis stages: ingest -> cluster -> features ->
// train -> explain -> triage, plus synth (fixture generator) and pipeline
// (all stages in one go). Every command is a pure function of its inputs,
// the config, and the seed; outputs are written atomically.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flakesift/flakesift.hpp"
#include "flakesift/report_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> min_silhouette;
    std::optional<std::string> linkage;
    std::string out_dir = ".";
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "config file (key = value lines)");
    cmd->add_option("--seed", opts.seed, "random seed (FLAKESIFT_SEED env overrides)");
    cmd->add_option("--min-silhouette", opts.min_silhouette, "silhouette floor for systemic flakiness");
    cmd->add_option("--linkage", opts.linkage, "linkage: average|single|complete");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--format", opts.format, "json|csv (csv adds matrix exports)")
        ->check(CLI::IsMember({"json", "csv"}));
}

flakesift::Config load_config(const CommonOpts& opts) {
    flakesift::Config config;
    if (!opts.config_path.empty()) {
        config = flakesift::parse_config(flakesift::read_file(opts.config_path));
    }
    if (opts.seed) config.seed = *opts.seed;
    if (opts.min_silhouette) {
        flakesift::apply_config_entry(config, "min_silhouette", flakesift::format_double(*opts.min_silhouette));
    }
    if (opts.linkage) config.linkage = flakesift::parse_linkage(*opts.linkage);
    flakesift::apply_seed_env(config);
    return config;
}

void write_text(const fs::path& path, const std::string& content) {
    flakesift::atomic_write(path, content);
}

void write_json(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

flakesift::ProjectDataset load_matrix(const std::string& matrix_path, const std::string& sources_path) {
    flakesift::ProjectDataset ds = flakesift::parse_run_matrix(flakesift::read_file(matrix_path));
    ds.project_name = fs::path(matrix_path).stem().string();
    if (!sources_path.empty()) {
        std::istringstream in(flakesift::read_file(sources_path));
        flakesift::parse_sources(in, ds);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Stage implementations. Each returns the artifacts it produced so `pipeline`
// can chain them without re-reading files.
// ---------------------------------------------------------------------------

std::string stage_ingest(std::vector<std::string> report_paths, const fs::path& out_dir) {
    if (report_paths.empty()) {
        throw flakesift::validation_error("no-input", "ingest needs at least one JUnit XML report");
    }
    std::sort(report_paths.begin(), report_paths.end());
    flakesift::ProjectDataset merged;
    for (std::size_t i = 0; i < report_paths.size(); ++i) {
        const auto part = flakesift::parse_junit_xml(flakesift::read_file(report_paths[i]),
                                                     static_cast<flakesift::RunId>(i));
        merged.merge(part);
    }
    const fs::path out = out_dir / "run-matrix.jsonl";
    write_text(out, flakesift::write_run_matrix(merged));
    return out.string();
}

struct ClusterStage {
    flakesift::ClusterReport report;
    std::optional<flakesift::ConcreteClustering> clustering;
    std::string gate_reason;  // non-empty when no clustering was selected
};

ClusterStage stage_cluster(const flakesift::ProjectDataset& ds, const flakesift::Config& config,
                           const fs::path& out_dir, bool csv_exports) {
    ClusterStage stage;
    const auto signatures = flakesift::collect_signatures(ds);

    if (signatures.size() < 2) {
        stage.gate_reason = "too-few-tests";
        stage.report = flakesift::empty_report(ds.project_name, stage.gate_reason);
        write_json(out_dir / "cluster-report.json", flakesift::cluster_report_to_json(stage.report));
        return stage;
    }

    const flakesift::DistanceMatrix dm = flakesift::build_distance_matrix(signatures);
    if (csv_exports) {
        std::ostringstream csv;
        dm.write_csv(csv);
        write_text(out_dir / "distance-matrix.csv", csv.str());
    }

    flakesift::ThresholdSelection selection = flakesift::select_threshold(dm, config.cluster_options());
    if (selection.clustering) {
        stage.clustering = selection.clustering;
        stage.report = flakesift::make_report(*selection.clustering, dm.labels(), ds.project_name);
        write_text(out_dir / "dendrogram.svg",
                   flakesift::render_dendrogram_svg(selection.dendrogram, selection.clustering->threshold));
    } else {
        stage.gate_reason = selection.reason;
        stage.report = flakesift::empty_report(ds.project_name, selection.reason);
        write_text(out_dir / "dendrogram.svg", flakesift::render_dendrogram_svg(selection.dendrogram, -1.0));
    }
    write_json(out_dir / "cluster-report.json", flakesift::cluster_report_to_json(stage.report));
    return stage;
}

std::vector<flakesift::PairExample> stage_features(const flakesift::ProjectDataset& ds,
                                                   const flakesift::ClusterReport& report,
                                                   const flakesift::Config& config,
                                                   const fs::path& out_dir) {
    const auto signatures = flakesift::collect_signatures(ds);
    flakesift::LearnGate gate;
    gate.min_flaky = config.min_flaky_for_ml;
    const auto examples =
        flakesift::build_pair_dataset(ds, signatures, report, config.feature_options(), gate);
    std::ostringstream csv;
    flakesift::write_feature_csv(csv, examples);
    write_text(out_dir / "features.csv", csv.str());
    return examples;
}

// Cluster ids are recoverable from the pair labels: same_cluster is an
// equivalence relation over clustered tests, so its connected components are
// exactly the clusters.
std::map<flakesift::TestId, int> strata_from_pairs(const std::vector<flakesift::PairExample>& examples) {
    std::map<flakesift::TestId, std::size_t> index;
    for (const auto& ex : examples) {
        index.emplace(ex.test_a, index.size());
        index.emplace(ex.test_b, index.size());
    }
    flakesift::detail::UnionFind uf(index.size());
    for (const auto& ex : examples) {
        if (ex.same_cluster) uf.unite(index[ex.test_a], index[ex.test_b]);
    }
    std::map<std::size_t, std::size_t> component_size;
    for (const auto& [test, i] : index) ++component_size[uf.find(i)];
    std::map<std::size_t, int> root_to_id;
    std::map<flakesift::TestId, int> out;
    for (const auto& [test, i] : index) {
        const std::size_t root = uf.find(i);
        if (component_size[root] < 2) {
            out[test] = -1;  // unclustered stratum
            continue;
        }
        auto [it, inserted] = root_to_id.emplace(root, static_cast<int>(root_to_id.size()));
        out[test] = it->second;
    }
    return out;
}

struct TrainStage {
    json eval_report;
    std::string best_regression_model;
};

TrainStage stage_train(const std::vector<flakesift::PairExample>& examples,
                       const flakesift::Config& config, const std::string& project,
                       const fs::path& out_dir) {
    std::set<flakesift::TestId> test_set;
    bool any_cluster_pair = false;
    for (const auto& ex : examples) {
        test_set.insert(ex.test_a);
        test_set.insert(ex.test_b);
        any_cluster_pair |= ex.same_cluster;
    }
    if (test_set.size() < config.min_flaky_for_ml) {
        throw flakesift::gate_error("too-few-flaky-tests",
                                    "need at least " + std::to_string(config.min_flaky_for_ml) +
                                        " flaky tests, have " + std::to_string(test_set.size()));
    }
    if (!any_cluster_pair) {
        throw flakesift::gate_error("no-cluster", "feature file has no same-cluster pair");
    }
    const std::vector<flakesift::TestId> tests(test_set.begin(), test_set.end());
    const auto strata = strata_from_pairs(examples);

    const auto folds_plain = flakesift::kfold_split(tests, config.k_folds, config.seed);
    const auto folds_strat = flakesift::kfold_split(tests, config.k_folds, config.seed, &strata);

    flakesift::EnsembleOptions ens;
    ens.n_estimators = config.n_estimators;

    flakesift::FeatureTable all_x(flakesift::kFeatureCount);
    std::vector<double> all_reg;
    std::vector<double> all_cls;
    for (const auto& ex : examples) {
        all_x.add_row(ex.features);
        all_reg.push_back(ex.target_distance);
        all_cls.push_back(ex.same_cluster ? 1.0 : 0.0);
    }

    TrainStage stage;
    json models_json = json::object();
    double best_r2 = -std::numeric_limits<double>::infinity();
    static constexpr flakesift::ModelKind kKinds[] = {flakesift::ModelKind::ExtraTrees,
                                                      flakesift::ModelKind::GradientBoosting,
                                                      flakesift::ModelKind::RandomForest};
    for (const auto kind : kKinds) {
        json per_kind = json::object();
        const auto reg = flakesift::cv_evaluate(kind, flakesift::Task::Regression, examples, folds_plain,
                                                config.seed, ens);
        per_kind["regression"] = flakesift::cv_result_to_json(reg);
        per_kind["regression"]["metric"] = "r_squared";
        const auto cls = flakesift::cv_evaluate(kind, flakesift::Task::Classification, examples,
                                                folds_strat, config.seed, ens);
        per_kind["classification"] = flakesift::cv_result_to_json(cls);
        per_kind["classification"]["metric"] = "mcc";
        models_json[flakesift::model_kind_name(kind)] = std::move(per_kind);

        if (reg.mean > best_r2) {
            best_r2 = reg.mean;
            stage.best_regression_model = flakesift::model_kind_name(kind);
        }

        const auto reg_model =
            flakesift::fit_model(kind, all_x, all_reg, flakesift::Task::Regression, config.seed, ens);
        write_json(out_dir / ("model-" + std::string(flakesift::model_kind_name(kind)) + "-regression.json"),
                   reg_model.to_json());
        const auto cls_model =
            flakesift::fit_model(kind, all_x, all_cls, flakesift::Task::Classification, config.seed, ens);
        write_json(out_dir /
                       ("model-" + std::string(flakesift::model_kind_name(kind)) + "-classification.json"),
                   cls_model.to_json());
    }

    stage.eval_report["schema_version"] = flakesift::kEvalSchemaVersion;
    stage.eval_report["project"] = project;
    stage.eval_report["seed"] = config.seed;
    stage.eval_report["k_folds"] = config.k_folds;
    stage.eval_report["n_estimators"] = config.n_estimators;
    stage.eval_report["models"] = std::move(models_json);
    stage.eval_report["best_regression_model"] = stage.best_regression_model;
    write_json(out_dir / "eval-report.json", stage.eval_report);
    return stage;
}

void stage_explain(const flakesift::TreeEnsembleModel& model,
                   const std::vector<flakesift::PairExample>& examples,
                   const flakesift::Config& config, const std::string& project,
                   const fs::path& out_dir) {
    if (model.task != flakesift::Task::Regression) {
        throw flakesift::validation_error("bad-model-task", "explain expects a regression model");
    }
    if (examples.empty()) {
        throw flakesift::validation_error("empty-training-set", "no pairs to attribute");
    }

    // Background: up to shap_background seeded-sampled pairs.
    flakesift::Rng bg_rng(flakesift::derive_seed(config.seed, 0x73686170));  // "shap" stream
    std::vector<std::size_t> pool(examples.size());
    std::iota(pool.begin(), pool.end(), 0);
    bg_rng.shuffle(pool);
    pool.resize(std::min(config.shap_background, pool.size()));
    std::sort(pool.begin(), pool.end());
    flakesift::FeatureTable background(flakesift::kFeatureCount);
    for (std::size_t i : pool) background.add_row(examples[i].features);

    const flakesift::PredictFn predict = [&model](std::span<const double> x) {
        return model.predict(x);
    };
    std::vector<flakesift::Attribution> attributions(examples.size());
    flakesift::parallel_for(examples.size(), [&](std::size_t i) {
        attributions[i] = flakesift::shapley_sampled(predict, examples[i].features, background,
                                                     config.shap_permutations,
                                                     flakesift::derive_seed(config.seed, i));
    });

    const auto ranking = flakesift::rank_features(attributions);
    std::ostringstream csv;
    flakesift::write_importance_csv(csv, ranking, project);
    write_text(out_dir / "importance.csv", csv.str());
}

void stage_triage(const flakesift::ProjectDataset& ds, const flakesift::ClusterReport& report,
                  const flakesift::Config& config, const fs::path& out_dir) {
    flakesift::TriageOptions topts;
    topts.truncate_chars = config.triage_truncate;
    for (const auto& cluster : report.clusters) {
        const auto dossier =
            flakesift::build_dossier(ds, cluster, config.trace_sample_k, config.seed, topts);
        std::string tag = std::to_string(cluster.id);
        if (tag.size() < 2) tag = "0" + tag;
        write_json(out_dir / ("dossier-cluster-" + tag + ".json"), flakesift::dossier_to_json(dossier));
        write_text(out_dir / ("dossier-cluster-" + tag + ".md"), flakesift::dossier_to_markdown(dossier));
    }
}

flakesift::SynthSpec load_synth_spec(const std::string& path) {
    json j = json::parse(flakesift::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw flakesift::parse_error("bad-synth-spec", "synth spec is not a JSON object");
    }
    flakesift::SynthSpec spec;
    try {
        spec.runs = j.value("runs", spec.runs);
        spec.independent_flaky = j.value("independent_flaky", spec.independent_flaky);
        spec.independent_fail_probability =
            j.value("independent_fail_probability", spec.independent_fail_probability);
        spec.noise = j.value("noise", spec.noise);
        spec.package_prefix = j.value("package_prefix", spec.package_prefix);
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("clusters")) {
            for (const auto& cj : j.at("clusters")) {
                flakesift::SynthClusterSpec c;
                c.size = cj.at("size").get<std::size_t>();
                c.trigger_probability = cj.at("trigger_probability").get<double>();
                c.co_fail_probability = cj.value("co_fail_probability", 1.0);
                spec.clusters.push_back(c);
            }
        }
    } catch (const json::exception& e) {
        throw flakesift::parse_error("bad-synth-spec", std::string("synth spec JSON: ") + e.what());
    }
    return spec;
}

void stage_synth(const flakesift::SynthSpec& spec, const fs::path& out_dir) {
    const flakesift::SynthResult result = flakesift::generate(spec);
    write_text(out_dir / "run-matrix.jsonl", flakesift::write_run_matrix(result.dataset));
    std::ostringstream sources;
    flakesift::write_sources(sources, result.dataset);
    write_text(out_dir / "sources.jsonl", sources.str());
    write_json(out_dir / "truth.json", flakesift::truth_to_json(result.truth));
}

int fail_with(const flakesift::Error& e) {
    std::cout << "reason: " << e.reason() << "\n";
    std::cerr << "flakesift: " << e.what() << "\n";
    return e.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"systemic flakiness analysis toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<std::string> xml_inputs;
    std::string matrix_path;
    std::string sources_path;
    std::string report_path;
    std::string features_path;
    std::string model_path;
    std::string spec_path;
    std::string project_override;

    auto* cmd_ingest = app.add_subcommand("ingest", "merge JUnit XML reports into a run matrix");
    cmd_ingest->add_option("reports", xml_inputs, "JUnit/Surefire XML files (one per run)")->required();
    add_common(cmd_ingest, opts);

    auto* cmd_cluster = app.add_subcommand("cluster", "cluster flaky tests by failure co-occurrence");
    cmd_cluster->add_option("--matrix", matrix_path, "run-matrix JSONL")->required();
    cmd_cluster->add_option("--project", project_override, "project name for the report");
    add_common(cmd_cluster, opts);

    auto* cmd_features = app.add_subcommand("features", "static distance features for flaky pairs");
    cmd_features->add_option("--matrix", matrix_path, "run-matrix JSONL")->required();
    cmd_features->add_option("--report", report_path, "cluster report JSON")->required();
    cmd_features->add_option("--sources", sources_path, "sources JSONL (test bodies + tokens)");
    add_common(cmd_features, opts);

    auto* cmd_train = app.add_subcommand("train", "fit tree ensembles and cross-validate");
    cmd_train->add_option("--features", features_path, "feature CSV")->required();
    cmd_train->add_option("--project", project_override, "project name for the eval report");
    add_common(cmd_train, opts);

    auto* cmd_explain = app.add_subcommand("explain", "Shapley feature importance for a model");
    cmd_explain->add_option("--model", model_path, "model JSON")->required();
    cmd_explain->add_option("--features", features_path, "feature CSV")->required();
    cmd_explain->add_option("--project", project_override, "project name for the importance table");
    add_common(cmd_explain, opts);

    auto* cmd_triage = app.add_subcommand("triage", "per-cluster dossiers with diverse traces");
    cmd_triage->add_option("--matrix", matrix_path, "run-matrix JSONL")->required();
    cmd_triage->add_option("--report", report_path, "cluster report JSON")->required();
    add_common(cmd_triage, opts);

    auto* cmd_synth = app.add_subcommand("synth", "generate a planted-cluster dataset");
    cmd_synth->add_option("--spec", spec_path, "synth spec JSON")->required();
    add_common(cmd_synth, opts);

    auto* cmd_pipeline = app.add_subcommand("pipeline", "run every stage end to end");
    cmd_pipeline->add_option("--matrix", matrix_path, "run-matrix JSONL");
    cmd_pipeline->add_option("reports", xml_inputs, "JUnit XML files (alternative to --matrix)");
    cmd_pipeline->add_option("--sources", sources_path, "sources JSONL");
    cmd_pipeline->add_option("--project", project_override, "project name");
    add_common(cmd_pipeline, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        const flakesift::Config config = load_config(opts);
        const fs::path out_dir(opts.out_dir);
        fs::create_directories(out_dir);
        const bool csv_exports = opts.format == "csv";

        if (cmd_ingest->parsed()) {
            stage_ingest(xml_inputs, out_dir);
            return 0;
        }

        if (cmd_cluster->parsed()) {
            flakesift::ProjectDataset ds = load_matrix(matrix_path, "");
            if (!project_override.empty()) ds.project_name = project_override;
            const ClusterStage stage = stage_cluster(ds, config, out_dir, csv_exports);
            if (!stage.gate_reason.empty()) {
                throw flakesift::gate_error("no-systemic-flakiness",
                                            "no clustering selected (" + stage.gate_reason + ")");
            }
            return 0;
        }

        if (cmd_features->parsed()) {
            flakesift::ProjectDataset ds = load_matrix(matrix_path, sources_path);
            const auto report =
                flakesift::cluster_report_from_json(json::parse(flakesift::read_file(report_path)));
            stage_features(ds, report, config, out_dir);
            return 0;
        }

        if (cmd_train->parsed()) {
            std::istringstream in(flakesift::read_file(features_path));
            const auto examples = flakesift::read_feature_csv(in);
            const std::string project = project_override.empty()
                                            ? fs::path(features_path).stem().string()
                                            : project_override;
            stage_train(examples, config, project, out_dir);
            return 0;
        }

        if (cmd_explain->parsed()) {
            const auto model =
                flakesift::TreeEnsembleModel::from_json(json::parse(flakesift::read_file(model_path)));
            std::istringstream in(flakesift::read_file(features_path));
            const auto examples = flakesift::read_feature_csv(in);
            const std::string project = project_override.empty()
                                            ? fs::path(features_path).stem().string()
                                            : project_override;
            stage_explain(model, examples, config, project, out_dir);
            return 0;
        }

        if (cmd_triage->parsed()) {
            flakesift::ProjectDataset ds = load_matrix(matrix_path, "");
            const auto report =
                flakesift::cluster_report_from_json(json::parse(flakesift::read_file(report_path)));
            stage_triage(ds, report, config, out_dir);
            return 0;
        }

        if (cmd_synth->parsed()) {
            flakesift::SynthSpec spec = load_synth_spec(spec_path);
            if (opts.seed) spec.seed = *opts.seed;
            if (const char* env = std::getenv("FLAKESIFT_SEED")) {
                spec.seed = flakesift::detail::parse_unsigned<std::uint64_t>(env, "FLAKESIFT_SEED");
            }
            stage_synth(spec, out_dir);
            return 0;
        }

        if (cmd_pipeline->parsed()) {
            json summary;
            summary["schema_version"] = 1;
            summary["seed"] = config.seed;
            json stages = json::object();

            std::string matrix = matrix_path;
            if (!xml_inputs.empty()) {
                matrix = stage_ingest(xml_inputs, out_dir);
                stages["ingest"] = {{"status", "ok"}, {"output", "run-matrix.jsonl"}};
            } else if (matrix.empty()) {
                throw flakesift::validation_error("no-input", "pipeline needs --matrix or XML reports");
            }

            flakesift::ProjectDataset ds = load_matrix(matrix, sources_path);
            if (!project_override.empty()) ds.project_name = project_override;
            summary["project"] = ds.project_name;

            const ClusterStage cluster = stage_cluster(ds, config, out_dir, csv_exports);
            if (!cluster.gate_reason.empty()) {
                stages["cluster"] = {{"status", "no-systemic-flakiness"}, {"reason", cluster.gate_reason}};
                for (const char* name : {"features", "train", "explain", "triage"}) {
                    stages[name] = {{"status", "skipped"}, {"reason", "no-cluster"}};
                }
                summary["stages"] = std::move(stages);
                write_json(out_dir / "summary.json", summary);
                return 0;
            }
            stages["cluster"] = {{"status", "ok"},
                                 {"clusters", cluster.report.clusters.size()},
                                 {"threshold", *cluster.report.threshold}};

            const bool need_sources = config.code_features;
            if (need_sources && ds.sources().empty()) {
                for (const char* name : {"features", "train", "explain"}) {
                    stages[name] = {{"status", "skipped"}, {"reason", "missing-sources"}};
                }
            } else {
                try {
                    const auto examples = stage_features(ds, cluster.report, config, out_dir);
                    stages["features"] = {{"status", "ok"}, {"pairs", examples.size()}};

                    const TrainStage train =
                        stage_train(examples, config, ds.project_name, out_dir);
                    stages["train"] = {{"status", "ok"},
                                       {"best_regression_model", train.best_regression_model}};

                    const fs::path best_model_path =
                        out_dir / ("model-" + train.best_regression_model + "-regression.json");
                    const auto model = flakesift::TreeEnsembleModel::from_json(
                        json::parse(flakesift::read_file(best_model_path)));
                    stage_explain(model, examples, config, ds.project_name, out_dir);
                    stages["explain"] = {{"status", "ok"}, {"model", train.best_regression_model}};
                } catch (const flakesift::Error& e) {
                    if (e.error_class() != flakesift::ErrorClass::Gate) throw;
                    for (const char* name : {"features", "train", "explain"}) {
                        if (!stages.contains(name)) {
                            stages[name] = {{"status", "skipped"}, {"reason", e.reason()}};
                        }
                    }
                }
            }

            stage_triage(ds, cluster.report, config, out_dir);
            stages["triage"] = {{"status", "ok"}, {"dossiers", cluster.report.clusters.size()}};

            summary["stages"] = std::move(stages);
            write_json(out_dir / "summary.json", summary);
            return 0;
        }

        return 0;
    } catch (const flakesift::Error& e) {
        return fail_with(e);
    } catch (const std::exception& e) {
        std::cerr << "flakesift: unexpected error: " << e.what() << "\n";
        return 1;
    }
}
