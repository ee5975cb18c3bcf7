#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnet/csv.hpp"
#include "attnet/errors.hpp"
#include "attnet/io_util.hpp"

// Survey ingestion and the cleaning steps applied before network estimation:
// dichotomization of ordinal items, removal of high-missingness variables,
// casewise deletion, and splitting by a grouping variable.

namespace attnet {

enum class ColumnKind { ordinal4, ordinal5, binary, continuous, categorical };

inline const char* to_string(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::ordinal4: return "ordinal-4";
        case ColumnKind::ordinal5: return "ordinal-5";
        case ColumnKind::binary: return "binary";
        case ColumnKind::continuous: return "continuous";
        case ColumnKind::categorical: return "categorical";
    }
    return "?";
}

inline ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "ordinal-4") return ColumnKind::ordinal4;
    if (s == "ordinal-5") return ColumnKind::ordinal5;
    if (s == "binary") return ColumnKind::binary;
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "categorical") return ColumnKind::categorical;
    throw InputError("unknown column kind: \"" + s + "\"");
}

// Cells are doubles; missing values are NaN.
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

struct SurveyDataset {
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    std::vector<std::vector<double>> cols; // cols[j][i]

    std::size_t n_rows() const { return cols.empty() ? 0 : cols.front().size(); }
    std::size_t n_cols() const { return names.size(); }

    int column_index(const std::string& name) const {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return static_cast<int>(j);
        return -1;
    }
};

struct BinaryDataset {
    std::vector<std::string> names;
    std::vector<std::vector<std::uint8_t>> cols; // cols[j][i], values 0/1

    std::size_t n() const { return cols.empty() ? 0 : cols.front().size(); }
    std::size_t p() const { return names.size(); }
};

struct Schema {
    std::vector<std::pair<std::string, ColumnKind>> columns;
    std::vector<std::string> missing_codes; // raw CSV tokens treated as missing
};

// Schema JSON is either a flat { "column": "kind", ... } object or
// { "columns": {...}, "missing_codes": ["Don't know", "9", ...] }.
inline Schema schema_from_json(const nlohmann::json& j, const std::string& origin = "<schema>") {
    Schema schema;
    const nlohmann::json* cols = &j;
    if (j.is_object() && j.contains("columns")) {
        cols = &j.at("columns");
        if (j.contains("missing_codes"))
            for (const auto& code : j.at("missing_codes"))
                schema.missing_codes.push_back(code.is_string() ? code.get<std::string>()
                                                                : code.dump());
    }
    if (!cols->is_object())
        throw InputError(origin + ": schema must be a JSON object mapping column to kind");
    for (const auto& [name, kind] : cols->items()) {
        if (!kind.is_string())
            throw InputError(origin + ": kind for column \"" + name + "\" must be a string");
        schema.columns.emplace_back(name, column_kind_from_string(kind.get<std::string>()));
    }
    if (schema.columns.empty())
        throw InputError(origin + ": schema declares no columns");
    return schema;
}

inline Schema load_schema(const std::string& path) {
    return schema_from_json(read_json_file(path), path);
}

namespace detail {

inline bool in_kind_range(double v, ColumnKind kind) {
    switch (kind) {
        case ColumnKind::ordinal4:
            return v == std::floor(v) && v >= 1.0 && v <= 4.0;
        case ColumnKind::ordinal5:
            return v == std::floor(v) && v >= 1.0 && v <= 5.0;
        case ColumnKind::binary:
            return v == 0.0 || v == 1.0;
        case ColumnKind::continuous:
        case ColumnKind::categorical:
            return std::isfinite(v);
    }
    return false;
}

} // namespace detail

// Parses a survey CSV against a schema. Empty cells and any cell whose raw
// token equals a declared missing code become MISSING.
inline SurveyDataset survey_from_csv(const CsvTable& table, const Schema& schema,
                                     const std::string& origin = "<csv>") {
    SurveyDataset ds;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        const std::string name = detail::trim(table.header[j]);
        if (std::find(ds.names.begin(), ds.names.end(), name) != ds.names.end())
            throw InputError(origin + ": duplicate column \"" + name + "\"");
        const auto it = std::find_if(schema.columns.begin(), schema.columns.end(),
                                     [&](const auto& c) { return c.first == name; });
        if (it == schema.columns.end())
            throw InputError(origin + ": column \"" + name + "\" not declared in schema");
        ds.names.push_back(name);
        ds.kinds.push_back(it->second);
    }
    for (const auto& [name, kind] : schema.columns) {
        (void)kind;
        if (ds.column_index(name) < 0)
            throw InputError(origin + ": schema column \"" + name + "\" missing from file header");
    }

    ds.cols.assign(ds.n_cols(), {});
    for (auto& col : ds.cols) col.reserve(table.rows.size());

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != ds.n_cols())
            throw InputError(origin + ": row " + std::to_string(r + 2) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(ds.n_cols()));
        for (std::size_t j = 0; j < row.size(); ++j) {
            const std::string token = detail::trim(row[j]);
            if (token.empty() ||
                std::find(schema.missing_codes.begin(), schema.missing_codes.end(), token) !=
                    schema.missing_codes.end()) {
                ds.cols[j].push_back(kMissing);
                continue;
            }
            const auto value = detail::parse_number(token);
            if (!value)
                throw InputError(origin + ": row " + std::to_string(r + 2) + ", column \"" +
                                 ds.names[j] + "\": cannot parse \"" + token + "\" as a number");
            if (!detail::in_kind_range(*value, ds.kinds[j]))
                throw InputError(origin + ": row " + std::to_string(r + 2) + ", column \"" +
                                 ds.names[j] + "\": value " + token + " out of range for kind " +
                                 to_string(ds.kinds[j]));
            ds.cols[j].push_back(*value);
        }
    }
    return ds;
}

inline SurveyDataset load_csv(const std::string& path, const Schema& schema) {
    return survey_from_csv(read_csv_file(path), schema, path);
}

// Ordinal items collapse to binary: 4-point scales split 1,2 | 3,4 and
// 5-point scales split 1,2,3 | 4,5. Already-binary columns pass through, so
// the operation is idempotent.
inline SurveyDataset dichotomize(SurveyDataset ds) {
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        const ColumnKind kind = ds.kinds[j];
        if (kind != ColumnKind::ordinal4 && kind != ColumnKind::ordinal5) continue;
        const double cut = (kind == ColumnKind::ordinal4) ? 3.0 : 4.0;
        for (double& v : ds.cols[j])
            if (!is_missing(v)) v = (v >= cut) ? 1.0 : 0.0;
        ds.kinds[j] = ColumnKind::binary;
    }
    return ds;
}

struct ExclusionReport {
    struct DroppedVariable {
        std::string name;
        double missing_fraction = 0.0;
    };
    std::vector<DroppedVariable> dropped;
    std::size_t rows_removed = 0;
    std::size_t rows_kept = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["dropped"] = nlohmann::json::array();
        for (const auto& d : dropped)
            j["dropped"].push_back({{"name", d.name}, {"missing_fraction", d.missing_fraction}});
        j["rows_removed"] = rows_removed;
        j["rows_kept"] = rows_kept;
        return j;
    }
};

// Drops columns whose missing fraction strictly exceeds the threshold.
inline SurveyDataset filter_missing_variables(const SurveyDataset& ds, double threshold,
                                              ExclusionReport& report) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ContractError("missing threshold must be in [0,1]");
    SurveyDataset out;
    const double n = static_cast<double>(ds.n_rows());
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        std::size_t missing = 0;
        for (double v : ds.cols[j])
            if (is_missing(v)) ++missing;
        const double fraction = n > 0 ? missing / n : 0.0;
        if (fraction > threshold) {
            report.dropped.push_back({ds.names[j], fraction});
        } else {
            out.names.push_back(ds.names[j]);
            out.kinds.push_back(ds.kinds[j]);
            out.cols.push_back(ds.cols[j]);
        }
    }
    if (out.n_cols() == 0)
        throw ContractError("no variables remain after missingness filtering");
    return out;
}

// Binary view of an all-binary, fully observed survey dataset. Rejects
// constant columns when require_nonconstant is set; estimation is undefined
// for constant nodes.
inline BinaryDataset to_binary_dataset(const SurveyDataset& ds, bool require_nonconstant = true) {
    BinaryDataset out;
    out.names = ds.names;
    out.cols.reserve(ds.n_cols());
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        if (ds.kinds[j] != ColumnKind::binary)
            throw ContractError("column \"" + ds.names[j] + "\" is not binary (kind " +
                                to_string(ds.kinds[j]) + "); dichotomize first");
        std::vector<std::uint8_t> col;
        col.reserve(ds.cols[j].size());
        bool saw0 = false, saw1 = false;
        for (double v : ds.cols[j]) {
            if (is_missing(v))
                throw ContractError("column \"" + ds.names[j] +
                                    "\" still contains missing values; apply casewise deletion");
            col.push_back(v != 0.0);
            (v != 0.0 ? saw1 : saw0) = true;
        }
        if (require_nonconstant && !(saw0 && saw1))
            throw ContractError("column \"" + ds.names[j] + "\" is constant after cleaning");
        out.cols.push_back(std::move(col));
    }
    return out;
}

// Removes every row containing a missing value, then converts to binary.
inline BinaryDataset casewise_delete(const SurveyDataset& ds, std::size_t min_cases,
                                     ExclusionReport& report) {
    for (std::size_t j = 0; j < ds.n_cols(); ++j)
        if (ds.kinds[j] != ColumnKind::binary)
            throw ContractError("casewise deletion expects all-binary columns; column \"" +
                                ds.names[j] + "\" has kind " + std::string(to_string(ds.kinds[j])));
    const std::size_t n = ds.n_rows();
    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool complete = true;
        for (std::size_t j = 0; j < ds.n_cols() && complete; ++j)
            if (is_missing(ds.cols[j][i])) complete = false;
        if (complete) keep.push_back(i);
    }
    report.rows_removed += n - keep.size();
    report.rows_kept = keep.size();
    if (keep.size() < min_cases)
        throw ContractError("insufficient cases: " + std::to_string(keep.size()) + " of " +
                            std::to_string(n) + " rows remain after casewise deletion, minimum is " +
                            std::to_string(min_cases));
    SurveyDataset reduced;
    reduced.names = ds.names;
    reduced.kinds = ds.kinds;
    reduced.cols.assign(ds.n_cols(), {});
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        reduced.cols[j].reserve(keep.size());
        for (std::size_t i : keep) reduced.cols[j].push_back(ds.cols[j][i]);
    }
    if (reduced.n_cols() < 2)
        throw ContractError("need at least 2 variables, have " + std::to_string(reduced.n_cols()));
    return to_binary_dataset(reduced);
}

struct GroupingSpec {
    std::string group_variable;
    std::map<double, std::string> mapping; // observed response value -> group label
};

inline GroupingSpec grouping_from_json(const nlohmann::json& j,
                                       const std::string& origin = "<grouping>") {
    GroupingSpec spec;
    try {
        spec.group_variable = j.at("group_variable").get<std::string>();
        for (const auto& [key, label] : j.at("mapping").items()) {
            const auto value = detail::parse_number(key);
            if (!value)
                throw InputError(origin + ": mapping key \"" + key + "\" is not numeric");
            spec.mapping[*value] = label.get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": bad grouping spec: " + e.what());
    }
    std::vector<std::string> labels;
    for (const auto& [v, label] : spec.mapping)
        if (std::find(labels.begin(), labels.end(), label) == labels.end())
            labels.push_back(label);
    if (labels.size() < 2)
        throw InputError(origin + ": grouping must define at least 2 distinct group labels");
    return spec;
}

inline GroupingSpec load_grouping(const std::string& path) {
    return grouping_from_json(read_json_file(path), path);
}

struct SplitResult {
    std::map<std::string, SurveyDataset> groups; // group column removed
    std::size_t missing_group_rows = 0;
};

// Partitions rows by the mapped group label. Rows with a missing group value
// are excluded and counted; an observed value absent from the mapping is an
// error.
inline SplitResult split_by_group(const SurveyDataset& ds, const GroupingSpec& spec) {
    const int g = ds.column_index(spec.group_variable);
    if (g < 0)
        throw InputError("group variable \"" + spec.group_variable + "\" not found in dataset");

    SurveyDataset base;
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
        if (static_cast<int>(j) == g) continue;
        base.names.push_back(ds.names[j]);
        base.kinds.push_back(ds.kinds[j]);
        base.cols.emplace_back();
    }

    SplitResult result;
    for (const auto& [value, label] : spec.mapping) {
        (void)value;
        if (!result.groups.count(label)) {
            result.groups[label] = base;
        }
    }

    const auto& gcol = ds.cols[static_cast<std::size_t>(g)];
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (is_missing(gcol[i])) {
            ++result.missing_group_rows;
            continue;
        }
        const auto it = spec.mapping.find(gcol[i]);
        if (it == spec.mapping.end())
            throw ContractError("group variable \"" + spec.group_variable + "\" has value " +
                                format_double(gcol[i]) + " (row " + std::to_string(i + 2) +
                                ") not covered by the grouping mapping");
        SurveyDataset& target = result.groups[it->second];
        std::size_t out_j = 0;
        for (std::size_t j = 0; j < ds.n_cols(); ++j) {
            if (static_cast<int>(j) == g) continue;
            target.cols[out_j++].push_back(ds.cols[j][i]);
        }
    }
    return result;
}

inline std::string to_csv(const BinaryDataset& ds) {
    std::string out;
    for (std::size_t j = 0; j < ds.p(); ++j) {
        if (j) out.push_back(',');
        out += csv_escape(ds.names[j]);
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.p(); ++j) {
            if (j) out.push_back(',');
            out.push_back(ds.cols[j][i] ? '1' : '0');
        }
        out.push_back('\n');
    }
    return out;
}

// Reloads a CSV written by to_csv(BinaryDataset). Cells must be 0/1 with no
// missing values.
inline BinaryDataset binary_from_csv(const CsvTable& table, const std::string& origin = "<csv>") {
    Schema schema;
    for (const auto& name : table.header)
        schema.columns.emplace_back(detail::trim(name), ColumnKind::binary);
    const SurveyDataset ds = survey_from_csv(table, schema, origin);
    return to_binary_dataset(ds, /*require_nonconstant=*/false);
}

inline BinaryDataset load_binary_csv(const std::string& path) {
    return binary_from_csv(read_csv_file(path), path);
}

} // namespace attnet
