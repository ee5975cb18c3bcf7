#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "attnet/dataset.hpp"
#include "attnet/errors.hpp"
#include "attnet/estimation.hpp"
#include "attnet/graph.hpp"
#include "attnet/io_util.hpp"
#include "attnet/ising.hpp"
#include "attnet/pipeline.hpp"
#include "attnet/simulation.hpp"
#include "attnet/stats.hpp"

// Command line driver. Subcommands: estimate, metrics, compare, simulate,
// replicate. Exit codes: 0 ok, 2 input error, 3 data-contract error,
// 4 numerical failure. Outputs are staged in memory and written atomically
// only after a command has fully succeeded, so failed runs leave no partial
// files.

namespace attnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 12345;

struct StagedOutputs {
    std::vector<std::pair<fs::path, std::string>> files;

    void add(fs::path path, std::string content) {
        files.emplace_back(std::move(path), std::move(content));
    }
    void commit() const {
        for (const auto& [path, content] : files) write_file_atomic(path, content);
    }
};

inline std::string sanitize(const std::string& label) {
    std::string out;
    for (char c : label)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
    return out;
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

inline std::string format_p_display(double p) {
    if (p < 0.001) return "p < .001";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p = %.4f", p);
    return buf;
}

inline std::string format_fixed(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

inline json json_or_null(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

// Paths inside manifests resolve relative to the manifest's directory.
inline std::string resolve_path(const std::string& base_file, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_file).parent_path() / p).string();
}

struct EstimationFlags {
    EstimationConfig estimation;
    PipelineConfig pipeline;
    std::string edge_rule = "and";
    std::string split_order = "group-first";

    void attach(CLI::App* cmd) {
        cmd->add_option("--gamma", estimation.gamma, "EBIC hyperparameter (default 0.25)");
        cmd->add_option("--lambda-count", estimation.n_lambda, "penalty path length (default 100)");
        cmd->add_option("--lambda-ratio", estimation.lambda_ratio,
                        "lambda_min/lambda_max (default 0.01)");
        cmd->add_option("--edge-rule", edge_rule, "edge combination rule: and | or")
            ->check(CLI::IsMember({"and", "or"}));
        cmd->add_option("--min-group-size", pipeline.min_cases,
                        "minimum cases per group after cleaning (default 50)");
        cmd->add_option("--missing-threshold", pipeline.missing_threshold,
                        "drop variables with missing fraction above this (default 0.10)");
        cmd->add_option("--split-order", split_order,
                        "group-first: clean within groups; group-last: clean pooled data first")
            ->check(CLI::IsMember({"group-first", "group-last"}));
    }
    void finalize() {
        estimation.edge_rule = edge_rule_from_string(edge_rule);
        pipeline.split_first = split_order == "group-first";
    }
};

// Rethrows with a group/cohort prefix, preserving the error category.
[[noreturn]] inline void throw_with_group(const std::string& label, const Error& e) {
    const std::string msg = "group \"" + label + "\": " + e.what();
    if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(msg);
    if (dynamic_cast<const InputError*>(&e)) throw InputError(msg);
    throw ContractError(msg);
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
    std::string input, schema, grouping, out;
    EstimationFlags flags;
};

inline int cmd_estimate(const EstimateOptions& opt) {
    const Schema schema = load_schema(opt.schema);
    const SurveyDataset raw = load_csv(opt.input, schema);
    std::optional<GroupingSpec> grouping;
    if (!opt.grouping.empty()) grouping = load_grouping(opt.grouping);

    const PipelineResult pipeline = run_group_pipeline(raw, grouping, opt.flags.pipeline);

    StagedOutputs staged;
    const fs::path out(opt.out);
    json report;
    if (pipeline.shared_report) report["pooled"] = pipeline.shared_report->to_json();
    if (grouping) report["missing_group_rows"] = pipeline.missing_group_rows;

    std::vector<std::string> summary;
    for (const auto& [label, data] : pipeline.groups) {
        IsingNetwork net;
        try {
            net = estimate_network(data, opt.flags.estimation);
        } catch (const Error& e) {
            if (label.empty()) throw;
            throw_with_group(label, e);
        }
        const std::string suffix = label.empty() ? "" : "_" + sanitize(label);
        staged.add(out / ("network" + suffix + ".json"), dump_json(network_to_json(net)));
        staged.add(out / ("edges" + suffix + ".csv"), network_edges_csv(net));
        const json group_report = pipeline.reports.at(label).to_json();
        if (label.empty())
            report.update(group_report);
        else
            report["groups"][label] = group_report;
        summary.push_back((label.empty() ? std::string("network") : "group " + label) +
                          ": n=" + std::to_string(data.n()) + " p=" + std::to_string(data.p()) +
                          " edges=" + std::to_string(net.edge_count()));
    }
    staged.add(out / "exclusion_report.json", dump_json(report));
    staged.commit();
    for (const auto& line : summary) std::cout << line << "\n";
    return 0;
}

// ----------------------------------------------------------------- metrics

struct MetricsOptions {
    std::vector<std::string> inputs;
    std::string manifest, out;
    bool emit_distances = false;
};

inline int cmd_metrics(const MetricsOptions& opt) {
    struct Entry {
        std::string file, cohort, group;
        IsingNetwork net;
        AsplResult aspl;
    };
    std::vector<Entry> entries;

    auto add_entry = [&](const std::string& file, const std::string& cohort,
                         const std::string& group) {
        Entry e;
        e.file = file;
        e.cohort = cohort;
        e.group = group;
        e.net = network_from_json(read_json_file(file), file);
        e.aspl = aspl(e.net);
        entries.push_back(std::move(e));
    };

    if (!opt.manifest.empty()) {
        const json manifest = read_json_file(opt.manifest);
        if (!manifest.contains("networks") || !manifest.at("networks").is_array())
            throw InputError(opt.manifest + ": manifest must contain a \"networks\" array");
        for (const auto& item : manifest.at("networks"))
            add_entry(resolve_path(opt.manifest, item.at("file").get<std::string>()),
                      item.value("cohort", ""), item.value("group", ""));
    }
    for (const auto& file : opt.inputs) add_entry(file, "", "");
    if (entries.empty()) throw InputError("metrics: no network files given");

    StagedOutputs staged;
    const fs::path out(opt.out);
    json doc;
    doc["networks"] = json::array();
    for (const auto& e : entries) {
        json row;
        row["file"] = e.file;
        if (!e.cohort.empty()) row["cohort"] = e.cohort;
        if (!e.group.empty()) row["group"] = e.group;
        row["aspl"] = e.aspl.aspl;
        row["n_nodes"] = e.net.p();
        row["n_edges"] = e.net.edge_count();
        row["disconnected_pairs"] = e.aspl.disconnected_pairs;
        row["replacement_value"] = json_or_null(e.aspl.replacement_value);
        doc["networks"].push_back(std::move(row));

        if (opt.emit_distances) {
            std::string csv;
            const std::size_t p = e.net.p();
            for (std::size_t j = 0; j < p; ++j) {
                if (j) csv.push_back(',');
                csv += csv_escape(e.net.names[j]);
            }
            csv.push_back('\n');
            for (std::size_t i = 0; i < p; ++i) {
                for (std::size_t j = 0; j < p; ++j) {
                    if (j) csv.push_back(',');
                    csv += format_double(e.aspl.distance(i, j, p));
                }
                csv.push_back('\n');
            }
            staged.add(out / ("distances_" + sanitize(fs::path(e.file).stem().string()) + ".csv"),
                       csv);
        }
    }

    // per-cohort standardization of the ASPL values
    std::map<std::string, std::vector<const Entry*>> cohorts;
    for (const auto& e : entries)
        if (!e.cohort.empty()) cohorts[e.cohort].push_back(&e);
    for (auto& [cohort, members] : cohorts) {
        std::sort(members.begin(), members.end(),
                  [](const Entry* a, const Entry* b) { return a->group < b->group; });
        json rows = json::array();
        if (members.size() >= 2) {
            std::vector<double> values;
            for (const auto* m : members) values.push_back(m->aspl.aspl);
            try {
                const std::vector<double> z = standardize(values);
                for (std::size_t i = 0; i < members.size(); ++i)
                    rows.push_back({{"file", members[i]->file},
                                    {"group", members[i]->group},
                                    {"aspl", members[i]->aspl.aspl},
                                    {"standardized_aspl", z[i]}});
                doc["cohorts"][cohort] = std::move(rows);
            } catch (const ContractError&) {
                doc["cohorts"][cohort] = {{"skipped", "zero standard deviation"}};
            }
        } else {
            doc["cohorts"][cohort] = {{"skipped", "fewer than 2 networks"}};
        }
    }

    staged.add(out / "metrics.json", dump_json(doc));
    staged.commit();
    for (const auto& e : entries)
        std::cout << e.file << ": aspl=" << format_fixed(e.aspl.aspl) << " nodes=" << e.net.p()
                  << " edges=" << e.net.edge_count() << "\n";
    return 0;
}

// ----------------------------------------------------------------- compare

struct CompareOptions {
    std::string input, out;
};

struct ComparisonArtifacts {
    json report;
    std::string figure2_csv, figure3a_csv, figure3b_csv;
    std::vector<std::string> display;
};

// Shared by compare and replicate: ANCOVA + Tukey + partial correlations and
// the plot-ready data files.
inline ComparisonArtifacts build_comparison(const std::vector<GroupRecord>& records) {
    ComparisonArtifacts art;
    const AncovaFit fit = ancova_from_records(records);
    const std::vector<TukeyContrast> contrasts = tukey_contrasts(fit);
    const StrengthAnalysis strength = connectivity_strength_analysis(records);

    json& rep = art.report;
    rep["ancova"] = {{"f", fit.f},
                     {"df", {fit.df_factor, fit.df_residual}},
                     {"p", fit.p},
                     {"partial_eta_sq", fit.partial_eta_sq},
                     {"ss_factor", fit.ss_factor},
                     {"ss_residual", fit.ss_residual},
                     {"mse", fit.mse},
                     {"grand_mean_covariate", fit.grand_mean_covariate}};
    for (std::size_t g = 0; g < fit.levels.size(); ++g) {
        rep["ancova"]["adjusted_means"][fit.levels[g]] = fit.adjusted_means[g];
        rep["ancova"]["group_sizes"][fit.levels[g]] = fit.group_sizes[g];
    }
    rep["tukey"] = json::array();
    for (const auto& c : contrasts)
        rep["tukey"].push_back({{"pair", {c.level_a, c.level_b}},
                                {"difference", c.difference},
                                {"se", c.se},
                                {"t", c.t},
                                {"p", c.p},
                                {"ci", {c.ci_low, c.ci_high}},
                                {"cohens_d", c.cohens_d}});
    auto strength_json = [](const std::optional<StrengthMeasureResult>& m) -> json {
        if (!m) return nullptr;
        return {{"partial_r", m->partial_r}, {"p", m->p}, {"n_records", m->n_records}};
    };
    rep["partial_correlations"]["behavior_impact"] = strength_json(strength.behavior_impact);
    rep["partial_correlations"]["stability"] = strength_json(strength.stability);

    // figure 2 analog: ASPL standardized within each cohort
    std::map<std::string, std::vector<const GroupRecord*>> cohorts;
    for (const auto& r : records) cohorts[r.cohort].push_back(&r);
    art.figure2_csv = "cohort,group,aspl,standardized_aspl\n";
    for (auto& [cohort, members] : cohorts) {
        std::sort(members.begin(), members.end(),
                  [](const GroupRecord* a, const GroupRecord* b) { return a->group < b->group; });
        if (members.size() < 2) continue;
        std::vector<double> values;
        for (const auto* m : members) values.push_back(m->aspl);
        std::vector<double> z;
        try {
            z = standardize(values);
        } catch (const ContractError&) {
            continue; // constant within cohort: no standardized bars
        }
        for (std::size_t i = 0; i < members.size(); ++i)
            art.figure2_csv += csv_escape(cohort) + "," + csv_escape(members[i]->group) + "," +
                               format_double(members[i]->aspl) + "," + format_double(z[i]) + "\n";
    }

    auto scatter_csv = [](const std::optional<StrengthMeasureResult>& m,
                          const std::string& value_name) {
        std::string csv = "cohort,group,aspl_residual," + value_name + "_residual\n";
        if (m)
            for (const auto& pt : m->scatter)
                csv += csv_escape(pt.cohort) + "," + csv_escape(pt.group) + "," +
                       format_double(pt.connectivity_residual) + "," +
                       format_double(pt.strength_residual) + "\n";
        return csv;
    };
    art.figure3a_csv = scatter_csv(strength.behavior_impact, "behavior_impact");
    art.figure3b_csv = scatter_csv(strength.stability, "stability");

    // human-readable summary
    art.display.push_back("ANCOVA: F(" + std::to_string(fit.df_factor) + ", " +
                          std::to_string(fit.df_residual) + ") = " + format_fixed(fit.f, 2) +
                          ", " + format_p_display(fit.p) +
                          ", partial eta^2 = " + format_fixed(fit.partial_eta_sq, 2));
    for (std::size_t g = 0; g < fit.levels.size(); ++g)
        art.display.push_back("  adjusted mean [" + fit.levels[g] +
                              "] = " + format_fixed(fit.adjusted_means[g], 3) +
                              " (n=" + std::to_string(fit.group_sizes[g]) + ")");
    for (const auto& c : contrasts)
        art.display.push_back("  " + c.level_a + " vs " + c.level_b + ": diff = " +
                              format_fixed(c.difference, 3) + ", t = " + format_fixed(c.t, 2) +
                              ", " + format_p_display(c.p) + ", d = " + format_fixed(c.cohens_d, 2));
    auto display_strength = [&](const char* name, const std::optional<StrengthMeasureResult>& m) {
        if (!m) return;
        art.display.push_back(std::string(name) + ": partial r = " + format_fixed(m->partial_r, 3) +
                              ", " + format_p_display(m->p) + " (n=" +
                              std::to_string(m->n_records) + ")");
    };
    display_strength("connectivity vs behavior impact", strength.behavior_impact);
    display_strength("connectivity vs stability", strength.stability);
    return art;
}

inline void stage_comparison(const ComparisonArtifacts& art, StagedOutputs& staged,
                             const fs::path& out) {
    staged.add(out / "report.json", dump_json(art.report));
    staged.add(out / "figure2_standardized_aspl.csv", art.figure2_csv);
    staged.add(out / "figure3a_behavior_scatter.csv", art.figure3a_csv);
    staged.add(out / "figure3b_stability_scatter.csv", art.figure3b_csv);
}

inline int cmd_compare(const CompareOptions& opt) {
    const std::vector<GroupRecord> records = load_records(opt.input);
    ComparisonArtifacts art = build_comparison(records);
    StagedOutputs staged;
    stage_comparison(art, staged, fs::path(opt.out));
    staged.commit();
    for (const auto& line : art.display) std::cout << line << "\n";
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string network, out;
    std::size_t n = 1000;
    std::uint64_t seed = kDefaultSeed;
    GibbsConfig gibbs;
    std::size_t perturbation_trials = 0;
};

inline int cmd_simulate(const SimulateOptions& opt) {
    const IsingNetwork net = network_from_json(read_json_file(opt.network), opt.network);
    const BinaryDataset data = gibbs_sample(net, opt.n, opt.gibbs, opt.seed);

    StagedOutputs staged;
    const fs::path out(opt.out);
    staged.add(out / "dataset.csv", to_csv(data));
    json schema;
    for (const auto& name : data.names) schema["columns"][name] = "binary";
    staged.add(out / "dataset_schema.json", dump_json(schema));

    if (opt.perturbation_trials > 0) {
        PerturbationConfig pcfg;
        pcfg.gibbs = opt.gibbs;
        const PerturbationReport report =
            perturbation_experiment(net, opt.perturbation_trials, opt.seed, pcfg);
        json j;
        j["alignment"] = report.alignment;
        j["flip_response"] = report.flip_response;
        j["trials"] = report.trials;
        j["seed"] = report.seed;
        j["note"] = "illustrative dynamics metrics, not model parameter estimates";
        staged.add(out / "perturbation.json", dump_json(j));
        std::string sweep = "field,mean_state\n";
        for (const auto& [field, mean_state] : report.field_sweep)
            sweep += format_double(field) + "," + format_double(mean_state) + "\n";
        staged.add(out / "field_sweep.csv", sweep);
    }
    staged.commit();
    std::cout << "seed: " << opt.seed << "\n";
    std::cout << "samples: " << data.n() << " x " << data.p() << "\n";
    return 0;
}

// --------------------------------------------------------------- replicate

struct ReplicateOptions {
    std::string manifest, out;
    EstimationFlags flags;
    bool point_biserial = false;
};

struct ReplicationTargets {
    double f_statistic = 17.59;
    std::map<std::string, double> group_mean_aspl{
        {"low", 2.44}, {"intermediate", 2.07}, {"high", 1.80}};
    double behavior_partial_r = -0.71;
    double stability_partial_r = -0.66;
    double f_tolerance = 2.0;
    double mean_tolerance = 0.10;
    double r_tolerance = 0.05;
};

inline ReplicationTargets targets_from_json(const json& j) {
    ReplicationTargets t;
    if (j.contains("f_statistic")) t.f_statistic = j.at("f_statistic").get<double>();
    if (j.contains("group_mean_aspl")) {
        t.group_mean_aspl.clear();
        for (const auto& [label, v] : j.at("group_mean_aspl").items())
            t.group_mean_aspl[label] = v.get<double>();
    }
    if (j.contains("behavior_partial_r")) t.behavior_partial_r = j.at("behavior_partial_r").get<double>();
    if (j.contains("stability_partial_r")) t.stability_partial_r = j.at("stability_partial_r").get<double>();
    if (j.contains("f_tolerance")) t.f_tolerance = j.at("f_tolerance").get<double>();
    if (j.contains("mean_tolerance")) t.mean_tolerance = j.at("mean_tolerance").get<double>();
    if (j.contains("r_tolerance")) t.r_tolerance = j.at("r_tolerance").get<double>();
    return t;
}

inline int cmd_replicate(const ReplicateOptions& opt) {
    const json manifest = read_json_file(opt.manifest);
    if (!manifest.contains("cohorts") || !manifest.at("cohorts").is_array() ||
        manifest.at("cohorts").empty())
        throw InputError(opt.manifest + ": manifest needs a non-empty \"cohorts\" array");

    const std::string pre_name = manifest.value("attitude_pre", "attitude_pre");
    const std::string post_name = manifest.value("attitude_post", "attitude_post");
    const std::string vote_name = manifest.value("vote", "vote");
    const std::string default_schema = manifest.value("schema", "");
    ReplicationTargets targets;
    if (manifest.contains("targets")) targets = targets_from_json(manifest.at("targets"));

    struct Task {
        std::string cohort, group, csv_path, schema_path;
    };
    std::vector<Task> tasks;
    for (const auto& cohort : manifest.at("cohorts")) {
        Task base;
        base.cohort = cohort.at("cohort").get<std::string>();
        base.schema_path = cohort.value("schema", default_schema);
        if (base.schema_path.empty())
            throw InputError(opt.manifest + ": cohort \"" + base.cohort +
                             "\" has no schema (set a top-level \"schema\" or per-cohort)");
        base.schema_path = resolve_path(opt.manifest, base.schema_path);
        for (const auto& [group, file] : cohort.at("groups").items()) {
            Task t = base;
            t.group = group;
            t.csv_path = resolve_path(opt.manifest, file.get<std::string>());
            tasks.push_back(std::move(t));
        }
    }
    std::sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
        return std::tie(a.cohort, a.group) < std::tie(b.cohort, b.group);
    });

    StagedOutputs staged;
    const fs::path out(opt.out);
    std::vector<GroupRecord> records;
    json exclusions;
    for (const auto& task : tasks) {
        const Schema schema = load_schema(task.schema_path);
        const SurveyDataset raw = load_csv(task.csv_path, schema);
        const std::string tag = task.cohort + "/" + task.group;

        const int pre_ix = raw.column_index(pre_name);
        const int post_ix = raw.column_index(post_name);
        const int vote_ix = raw.column_index(vote_name);
        if (pre_ix < 0 || post_ix < 0 || vote_ix < 0)
            throw InputError(tag + ": file must contain columns \"" + pre_name + "\", \"" +
                             post_name + "\", \"" + vote_name + "\"");

        SurveyDataset items;
        for (std::size_t j = 0; j < raw.n_cols(); ++j) {
            if (static_cast<int>(j) == pre_ix || static_cast<int>(j) == post_ix ||
                static_cast<int>(j) == vote_ix)
                continue;
            items.names.push_back(raw.names[j]);
            items.kinds.push_back(raw.kinds[j]);
            items.cols.push_back(raw.cols[j]);
        }

        GroupRecord record;
        record.cohort = task.cohort;
        record.group = task.group;
        try {
            ExclusionReport report;
            const SurveyDataset filtered = filter_missing_variables(
                dichotomize(items), opt.flags.pipeline.missing_threshold, report);
            const BinaryDataset data =
                casewise_delete(filtered, opt.flags.pipeline.min_cases, report);
            exclusions[task.cohort][task.group] = report.to_json();

            const IsingNetwork net = estimate_network(data, opt.flags.estimation);
            const AsplResult connectivity = aspl(net);
            record.aspl = connectivity.aspl;
            record.n_nodes = static_cast<double>(net.p());

            const std::string stem =
                "network_" + sanitize(task.cohort) + "_" + sanitize(task.group);
            staged.add(out / "networks" / (stem + ".json"), dump_json(network_to_json(net)));
            staged.add(out / "networks" / (stem + ".edges.csv"), network_edges_csv(net));
        } catch (const Error& e) {
            throw_with_group(tag, e);
        }

        // strength measures use only the rows relevant for each analysis
        const auto& pre = raw.cols[static_cast<std::size_t>(pre_ix)];
        const auto& post = raw.cols[static_cast<std::size_t>(post_ix)];
        const auto& vote = raw.cols[static_cast<std::size_t>(vote_ix)];
        std::vector<double> sx, sy;
        for (std::size_t i = 0; i < raw.n_rows(); ++i)
            if (!is_missing(pre[i]) && !is_missing(post[i])) {
                sx.push_back(pre[i]);
                sy.push_back(post[i]);
            }
        if (sx.size() >= 3) {
            try {
                record.stability = pearson(sx, sy);
            } catch (const Error& e) {
                throw_with_group(tag + " stability", e);
            }
        }
        std::vector<double> bx, bd;
        for (std::size_t i = 0; i < raw.n_rows(); ++i)
            if (!is_missing(pre[i]) && !is_missing(vote[i])) {
                bx.push_back(pre[i]);
                bd.push_back(vote[i]);
            }
        if (bx.size() >= 3) {
            try {
                record.behavior_impact =
                    opt.point_biserial ? point_biserial(bx, bd) : biserial(bx, bd).r;
            } catch (const Error& e) {
                throw_with_group(tag + " behavior impact", e);
            }
        }
        records.push_back(std::move(record));
    }

    ComparisonArtifacts art = build_comparison(records);
    const AncovaFit fit = ancova_from_records(records);
    const StrengthAnalysis strength = connectivity_strength_analysis(records);

    // side-by-side table against the reference values
    json replication;
    replication["rows"] = json::array();
    std::vector<std::string> table;
    auto add_row = [&](const std::string& metric, double reference, double observed,
                       double tolerance) {
        const double diff = std::fabs(observed - reference);
        const bool within = diff <= tolerance;
        replication["rows"].push_back({{"metric", metric},
                                       {"reference", reference},
                                       {"observed", observed},
                                       {"abs_difference", diff},
                                       {"tolerance", tolerance},
                                       {"within_tolerance", within}});
        table.push_back("  " + metric + ": reference " + format_fixed(reference, 2) +
                        ", observed " + format_fixed(observed, 2) + ", |diff| " +
                        format_fixed(diff, 2) + " (tol " + format_fixed(tolerance, 2) + ") " +
                        (within ? "OK" : "OUT"));
    };
    add_row("f_statistic", targets.f_statistic, fit.f, targets.f_tolerance);
    for (const auto& [label, reference] : targets.group_mean_aspl) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& r : records)
            if (r.group == label) {
                sum += r.aspl;
                ++count;
            }
        if (count == 0) continue;
        add_row("mean_aspl[" + label + "]", reference, sum / static_cast<double>(count),
                targets.mean_tolerance);
    }
    if (strength.behavior_impact)
        add_row("behavior_partial_r", targets.behavior_partial_r,
                strength.behavior_impact->partial_r, targets.r_tolerance);
    if (strength.stability)
        add_row("stability_partial_r", targets.stability_partial_r, strength.stability->partial_r,
                targets.r_tolerance);

    art.report["replication"] = replication;
    stage_comparison(art, staged, out);
    staged.add(out / "records.csv", records_to_csv(records));
    staged.add(out / "exclusions.json", dump_json(exclusions));
    staged.add(out / "replication.json", dump_json(replication));
    staged.commit();

    std::cout << "replication (" << records.size() << " networks):\n";
    for (const auto& line : table) std::cout << line << "\n";
    for (const auto& line : art.display) std::cout << line << "\n";
    return 0;
}

// --------------------------------------------------------------------- run

inline int run(const std::vector<std::string>& args) {
    CLI::App app{"Ising attitude-network estimation and connectivity analysis"};
    app.require_subcommand(1);

    EstimateOptions est;
    auto* cmd_est = app.add_subcommand("estimate", "estimate networks from a survey CSV");
    cmd_est->add_option("--input", est.input, "survey CSV")->required();
    cmd_est->add_option("--schema", est.schema, "schema JSON (column kinds)")->required();
    cmd_est->add_option("--grouping", est.grouping, "grouping spec JSON");
    cmd_est->add_option("--out", est.out, "output directory")->required();
    est.flags.attach(cmd_est);

    MetricsOptions met;
    auto* cmd_met = app.add_subcommand("metrics", "connectivity metrics for network JSON files");
    cmd_met->add_option("--input", met.inputs, "network JSON files");
    cmd_met->add_option("--manifest", met.manifest, "manifest JSON declaring cohorts");
    cmd_met->add_flag("--emit-distances", met.emit_distances, "write distance matrices as CSV");
    cmd_met->add_option("--out", met.out, "output directory")->required();

    CompareOptions cmp;
    auto* cmd_cmp = app.add_subcommand("compare", "group-level strength analysis of a record table");
    cmd_cmp->add_option("--input", cmp.input, "group record CSV")->required();
    cmd_cmp->add_option("--out", cmp.out, "output directory")->required();

    SimulateOptions sim;
    auto* cmd_sim = app.add_subcommand("simulate", "sample binary data from a network");
    cmd_sim->add_option("--network", sim.network, "network JSON")->required();
    cmd_sim->add_option("--n", sim.n, "number of samples")->required();
    cmd_sim->add_option("--seed", sim.seed, "random seed (default 12345)");
    cmd_sim->add_option("--burn-in", sim.gibbs.burn_in, "burn-in sweeps (default 1000)");
    cmd_sim->add_option("--thin", sim.gibbs.thinning, "sweeps between samples (default 10)");
    cmd_sim->add_option("--perturbation-trials", sim.perturbation_trials,
                        "also run the perturbation experiment with this many trials");
    cmd_sim->add_option("--out", sim.out, "output directory")->required();

    ReplicateOptions rep;
    auto* cmd_rep = app.add_subcommand("replicate", "full pipeline over a cohort manifest");
    cmd_rep->add_option("--manifest", rep.manifest, "cohort manifest JSON")->required();
    cmd_rep->add_option("--out", rep.out, "output directory")->required();
    cmd_rep->add_flag("--point-biserial", rep.point_biserial,
                      "use the point-biserial instead of the biserial for behavior impact");
    rep.flags.attach(cmd_rep);

    std::vector<const char*> argv;
    argv.push_back("attnet");
    for (const auto& a : args) argv.push_back(a.c_str());

    auto error_json = [](const char* type, const std::string& message) {
        json j;
        j["error"] = {{"type", type}, {"message", message}};
        std::cerr << j.dump() << "\n";
    };

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        est.flags.finalize();
        rep.flags.finalize();
        if (cmd_est->parsed()) return cmd_estimate(est);
        if (cmd_met->parsed()) return cmd_metrics(met);
        if (cmd_cmp->parsed()) return cmd_compare(cmp);
        if (cmd_sim->parsed()) return cmd_simulate(sim);
        if (cmd_rep->parsed()) return cmd_replicate(rep);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_json("input", e.what());
        return 2;
    } catch (const InputError& e) {
        error_json("input", e.what());
        return 2;
    } catch (const ContractError& e) {
        error_json("data-contract", e.what());
        return 3;
    } catch (const NumericalError& e) {
        error_json("numerical", e.what());
        return 4;
    } catch (const std::exception& e) {
        error_json("numerical", e.what());
        return 4;
    }
}

inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace attnet::cli
