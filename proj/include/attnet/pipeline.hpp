#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attnet/dataset.hpp"
#include "attnet/errors.hpp"

// End-to-end cleaning for one survey file: grouping, dichotomization,
// missingness filtering, casewise deletion. Exclusion handling can run
// either per group (the default: variables are filtered within each group)
// or once before splitting.

namespace attnet {

struct PipelineConfig {
    double missing_threshold = 0.10;
    std::size_t min_cases = 50;
    bool split_first = true; // group first, then clean within each group
};

struct PipelineResult {
    // Key "" holds the single dataset of an ungrouped run.
    std::map<std::string, BinaryDataset> groups;
    std::map<std::string, ExclusionReport> reports;
    // Present when cleaning happened before the split (split_first = false).
    std::optional<ExclusionReport> shared_report;
    std::size_t missing_group_rows = 0;
};

namespace detail {

inline BinaryDataset clean_one(const SurveyDataset& ds, const PipelineConfig& cfg,
                               ExclusionReport& report) {
    const SurveyDataset filtered =
        filter_missing_variables(dichotomize(ds), cfg.missing_threshold, report);
    return casewise_delete(filtered, cfg.min_cases, report);
}

} // namespace detail

inline PipelineResult run_group_pipeline(const SurveyDataset& raw,
                                         const std::optional<GroupingSpec>& grouping,
                                         const PipelineConfig& cfg) {
    PipelineResult result;
    if (!grouping) {
        ExclusionReport report;
        result.groups[""] = detail::clean_one(raw, cfg, report);
        result.reports[""] = std::move(report);
        return result;
    }

    if (cfg.split_first) {
        SplitResult split = split_by_group(raw, *grouping);
        result.missing_group_rows = split.missing_group_rows;
        for (auto& [label, ds] : split.groups) {
            ExclusionReport report;
            try {
                result.groups[label] = detail::clean_one(ds, cfg, report);
            } catch (const ContractError& e) {
                throw ContractError("group \"" + label + "\": " + e.what());
            }
            result.reports[label] = std::move(report);
        }
        return result;
    }

    // Clean before splitting: the grouping column is set aside, items are
    // dichotomized and filtered over the pooled data, rows with missing items
    // are deleted once, and only then are rows partitioned.
    const int g = raw.column_index(grouping->group_variable);
    if (g < 0)
        throw InputError("group variable \"" + grouping->group_variable + "\" not found");
    const std::vector<double> group_values = raw.cols[static_cast<std::size_t>(g)];

    SurveyDataset items;
    for (std::size_t j = 0; j < raw.n_cols(); ++j) {
        if (static_cast<int>(j) == g) continue;
        items.names.push_back(raw.names[j]);
        items.kinds.push_back(raw.kinds[j]);
        items.cols.push_back(raw.cols[j]);
    }

    ExclusionReport shared;
    const SurveyDataset filtered =
        filter_missing_variables(dichotomize(items), cfg.missing_threshold, shared);

    const std::size_t n = filtered.n_rows();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        bool complete = true;
        for (std::size_t j = 0; j < filtered.n_cols() && complete; ++j)
            if (is_missing(filtered.cols[j][i])) complete = false;
        if (complete) keep.push_back(i);
    }
    shared.rows_removed = n - keep.size();
    shared.rows_kept = keep.size();

    SurveyDataset base;
    base.names = filtered.names;
    base.kinds = filtered.kinds;
    base.cols.assign(filtered.n_cols(), {});
    std::map<std::string, SurveyDataset> parts;
    for (const auto& [value, label] : grouping->mapping) {
        (void)value;
        parts.emplace(label, base);
    }
    for (std::size_t i : keep) {
        if (is_missing(group_values[i])) {
            ++result.missing_group_rows;
            continue;
        }
        const auto it = grouping->mapping.find(group_values[i]);
        if (it == grouping->mapping.end())
            throw ContractError("group variable \"" + grouping->group_variable + "\" has value " +
                                format_double(group_values[i]) +
                                " not covered by the grouping mapping");
        SurveyDataset& target = parts[it->second];
        for (std::size_t j = 0; j < filtered.n_cols(); ++j)
            target.cols[j].push_back(filtered.cols[j][i]);
    }

    for (auto& [label, ds] : parts) {
        ExclusionReport report;
        try {
            result.groups[label] = casewise_delete(ds, cfg.min_cases, report);
        } catch (const ContractError& e) {
            throw ContractError("group \"" + label + "\": " + e.what());
        }
        report.rows_removed = 0; // rows were removed before the split
        result.reports[label] = std::move(report);
    }
    result.shared_report = std::move(shared);
    return result;
}

} // namespace attnet
