#include <catch2/catch_amalgamated.hpp>

#include "attnet/dataset.hpp"
#include "attnet/pipeline.hpp"
#include "attnet/rng.hpp"

#include "test_util.hpp"

using namespace attnet;

namespace {

Schema make_schema(std::initializer_list<std::pair<const char*, ColumnKind>> cols,
                   std::vector<std::string> missing = {}) {
    Schema s;
    for (const auto& [name, kind] : cols) s.columns.emplace_back(name, kind);
    s.missing_codes = std::move(missing);
    return s;
}

} // namespace

TEST_CASE("load_csv parses values and missing cells", "[dataset]") {
    const auto schema = make_schema(
        {{"a", ColumnKind::ordinal4}, {"b", ColumnKind::ordinal4}, {"c", ColumnKind::ordinal4}});
    const auto table = parse_csv("a,b,c\n1,2,3\n4,,2\n2,3,1\n");
    const SurveyDataset ds = survey_from_csv(table, schema);
    REQUIRE(ds.n_rows() == 3);
    REQUIRE(ds.n_cols() == 3);
    CHECK(ds.cols[0][1] == 4.0);
    CHECK(is_missing(ds.cols[1][1]));
    std::size_t missing = 0;
    for (const auto& col : ds.cols)
        for (double v : col)
            if (is_missing(v)) ++missing;
    CHECK(missing == 1);
}

TEST_CASE("load_csv rejects out-of-range and malformed input", "[dataset]") {
    const auto schema = make_schema({{"a", ColumnKind::ordinal4}, {"b", ColumnKind::binary}});
    CHECK_THROWS_MATCHES(survey_from_csv(parse_csv("a,b\n7,0\n"), schema), InputError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("out of range")));
    CHECK_THROWS_AS(survey_from_csv(parse_csv("a,b\n1\n"), schema), InputError);
    CHECK_THROWS_AS(survey_from_csv(parse_csv("a,a\n1,1\n"), make_schema({{"a", ColumnKind::binary}})),
                    InputError);
    CHECK_THROWS_AS(survey_from_csv(parse_csv("a,b\nx,1\n"), schema), InputError);
    // column present in file but not in schema, and vice versa
    CHECK_THROWS_AS(survey_from_csv(parse_csv("a,z\n1,1\n"), schema), InputError);
    CHECK_THROWS_AS(survey_from_csv(parse_csv("a\n1\n"), schema), InputError);
}

TEST_CASE("load_csv empty data section gives n=0", "[dataset]") {
    const auto schema = make_schema({{"a", ColumnKind::binary}, {"b", ColumnKind::binary}});
    const SurveyDataset ds = survey_from_csv(parse_csv("a,b\n"), schema);
    CHECK(ds.n_rows() == 0);
    ExclusionReport report;
    CHECK_THROWS_AS(casewise_delete(ds, 50, report), ContractError);
}

TEST_CASE("declared missing codes map to MISSING", "[dataset]") {
    const auto schema =
        make_schema({{"a", ColumnKind::ordinal4}, {"b", ColumnKind::ordinal5}}, {"Don't know", "9"});
    const SurveyDataset ds =
        survey_from_csv(parse_csv("a,b\nDon't know,5\n2,9\n3,1\n"), schema);
    CHECK(is_missing(ds.cols[0][0]));
    CHECK(is_missing(ds.cols[1][1]));
    CHECK(ds.cols[1][0] == 5.0);
}

TEST_CASE("dichotomize splits 4-point and 5-point scales", "[dataset]") {
    const auto schema = make_schema({{"a", ColumnKind::ordinal4},
                                     {"b", ColumnKind::ordinal5},
                                     {"c", ColumnKind::binary}});
    const SurveyDataset ds =
        survey_from_csv(parse_csv("a,b,c\n1,1,0\n2,2,1\n3,3,0\n4,4,1\n,5,\n"), schema);
    const SurveyDataset d = dichotomize(ds);
    // 4-point: 1,2 -> 0 and 3,4 -> 1
    CHECK(d.cols[0][0] == 0.0);
    CHECK(d.cols[0][1] == 0.0);
    CHECK(d.cols[0][2] == 1.0);
    CHECK(d.cols[0][3] == 1.0);
    // 5-point: 1,2,3 -> 0 and 4,5 -> 1
    CHECK(d.cols[1][0] == 0.0);
    CHECK(d.cols[1][1] == 0.0);
    CHECK(d.cols[1][2] == 0.0);
    CHECK(d.cols[1][3] == 1.0);
    CHECK(d.cols[1][4] == 1.0);
    // missing passes through, binary column untouched
    CHECK(is_missing(d.cols[0][4]));
    CHECK(is_missing(d.cols[2][4]));
    CHECK(d.cols[2][1] == 1.0);
    for (auto kind : d.kinds) CHECK(kind == ColumnKind::binary);
}

TEST_CASE("dichotomize is idempotent", "[dataset]") {
    Rng rng(91);
    SurveyDataset ds;
    ds.names = {"a", "b", "c"};
    ds.kinds = {ColumnKind::ordinal4, ColumnKind::ordinal5, ColumnKind::binary};
    ds.cols.assign(3, {});
    for (int i = 0; i < 40; ++i) {
        ds.cols[0].push_back(rng.bernoulli(0.1) ? kMissing : std::floor(rng.uniform() * 4) + 1);
        ds.cols[1].push_back(rng.bernoulli(0.1) ? kMissing : std::floor(rng.uniform() * 5) + 1);
        ds.cols[2].push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
    }
    const SurveyDataset once = dichotomize(ds);
    const SurveyDataset twice = dichotomize(once);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < once.n_rows(); ++i) {
            if (is_missing(once.cols[j][i]))
                CHECK(is_missing(twice.cols[j][i]));
            else
                CHECK(once.cols[j][i] == twice.cols[j][i]);
        }
}

TEST_CASE("filter_missing_variables uses a strict threshold", "[dataset]") {
    // 100 rows: column a has 11 missing, column b exactly 10, column c none
    SurveyDataset ds;
    ds.names = {"a", "b", "c"};
    ds.kinds = {ColumnKind::binary, ColumnKind::binary, ColumnKind::binary};
    ds.cols.assign(3, {});
    for (int i = 0; i < 100; ++i) {
        ds.cols[0].push_back(i < 11 ? kMissing : (i % 2 ? 1.0 : 0.0));
        ds.cols[1].push_back(i < 10 ? kMissing : (i % 2 ? 1.0 : 0.0));
        ds.cols[2].push_back(i % 2 ? 1.0 : 0.0);
    }
    ExclusionReport report;
    const SurveyDataset out = filter_missing_variables(ds, 0.10, report);
    CHECK(out.n_cols() == 2);
    CHECK(out.names == std::vector<std::string>{"b", "c"});
    REQUIRE(report.dropped.size() == 1);
    CHECK(report.dropped[0].name == "a");
    CHECK(report.dropped[0].missing_fraction == Catch::Approx(0.11));

    ExclusionReport identity_report;
    SurveyDataset clean = ds;
    clean.cols[0] = clean.cols[2];
    clean.cols[1] = clean.cols[2];
    const SurveyDataset same = filter_missing_variables(clean, 0.10, identity_report);
    CHECK(same.n_cols() == 3);
    CHECK(identity_report.dropped.empty());

    SurveyDataset all_bad = ds;
    all_bad.cols[1] = all_bad.cols[0];
    all_bad.cols[2] = all_bad.cols[0];
    ExclusionReport r2;
    CHECK_THROWS_MATCHES(filter_missing_variables(all_bad, 0.05, r2), ContractError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("no variables remain")));
}

TEST_CASE("casewise_delete removes incomplete rows", "[dataset]") {
    const auto schema = make_schema({{"a", ColumnKind::binary}, {"b", ColumnKind::binary}});
    const SurveyDataset ds =
        survey_from_csv(parse_csv("a,b\n0,1\n1,\n1,0\n0,0\n1,1\n"), schema);
    ExclusionReport report;
    const BinaryDataset out = casewise_delete(ds, 1, report);
    CHECK(out.n() == 4);
    CHECK(report.rows_removed == 1);
    CHECK(report.rows_kept == 4);

    // identity when nothing is missing
    const SurveyDataset full = survey_from_csv(parse_csv("a,b\n0,1\n1,0\n"), schema);
    ExclusionReport r2;
    const BinaryDataset same = casewise_delete(full, 1, r2);
    CHECK(same.n() == 2);
    CHECK(r2.rows_removed == 0);

    // every row incomplete
    const SurveyDataset empty = survey_from_csv(parse_csv("a,b\n,1\n1,\n"), schema);
    ExclusionReport r3;
    CHECK_THROWS_MATCHES(casewise_delete(empty, 1, r3), ContractError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("insufficient cases")));
}

TEST_CASE("casewise_delete enforces minimum cases and non-constant columns", "[dataset]") {
    const auto schema = make_schema({{"a", ColumnKind::binary}, {"b", ColumnKind::binary}});
    const SurveyDataset small = survey_from_csv(parse_csv("a,b\n0,1\n1,0\n"), schema);
    ExclusionReport report;
    CHECK_THROWS_AS(casewise_delete(small, 50, report), ContractError);

    const SurveyDataset constant = survey_from_csv(parse_csv("a,b\n1,1\n1,0\n1,1\n"), schema);
    ExclusionReport r2;
    CHECK_THROWS_MATCHES(casewise_delete(constant, 1, r2), ContractError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("\"a\" is constant")));

    // non-binary input is a contract violation
    const auto mixed = make_schema({{"a", ColumnKind::ordinal4}, {"b", ColumnKind::binary}});
    const SurveyDataset ord = survey_from_csv(parse_csv("a,b\n1,1\n2,0\n"), mixed);
    ExclusionReport r3;
    CHECK_THROWS_AS(casewise_delete(ord, 1, r3), ContractError);
}

TEST_CASE("split_by_group partitions and counts missing", "[dataset]") {
    const auto schema = make_schema({{"item", ColumnKind::binary}, {"g", ColumnKind::categorical}});
    const SurveyDataset ds =
        survey_from_csv(parse_csv("item,g\n1,1\n0,2\n1,2\n0,3\n1,\n"), schema);
    GroupingSpec spec;
    spec.group_variable = "g";
    spec.mapping = {{1.0, "high"}, {2.0, "intermediate"}, {3.0, "low"}};
    const SplitResult split = split_by_group(ds, spec);
    CHECK(split.missing_group_rows == 1);
    REQUIRE(split.groups.size() == 3);
    CHECK(split.groups.at("high").n_rows() == 1);
    CHECK(split.groups.at("intermediate").n_rows() == 2);
    CHECK(split.groups.at("low").n_rows() == 1);
    // group column removed
    CHECK(split.groups.at("high").n_cols() == 1);
    CHECK(split.groups.at("high").names == std::vector<std::string>{"item"});

    // disjoint partition: sizes sum to non-missing rows
    std::size_t total = 0;
    for (const auto& [label, part] : split.groups) total += part.n_rows();
    CHECK(total + split.missing_group_rows == ds.n_rows());
}

TEST_CASE("split_by_group rejects unmapped values", "[dataset]") {
    const auto schema = make_schema({{"item", ColumnKind::binary}, {"g", ColumnKind::categorical}});
    const SurveyDataset ds = survey_from_csv(parse_csv("item,g\n1,4\n"), schema);
    GroupingSpec spec;
    spec.group_variable = "g";
    spec.mapping = {{1.0, "a"}, {2.0, "b"}};
    CHECK_THROWS_MATCHES(
        split_by_group(ds, spec), ContractError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("value 4")));
    GroupingSpec missing_var = spec;
    missing_var.group_variable = "nope";
    CHECK_THROWS_AS(split_by_group(ds, missing_var), InputError);
}

TEST_CASE("single-level rows all land in one group", "[dataset]") {
    const auto schema = make_schema({{"item", ColumnKind::binary}, {"g", ColumnKind::categorical}});
    const SurveyDataset ds = survey_from_csv(parse_csv("item,g\n1,2\n0,2\n1,2\n"), schema);
    GroupingSpec spec;
    spec.group_variable = "g";
    spec.mapping = {{1.0, "a"}, {2.0, "b"}};
    const SplitResult split = split_by_group(ds, spec);
    CHECK(split.groups.at("b").n_rows() == 3);
    CHECK(split.groups.at("a").n_rows() == 0);
}

TEST_CASE("binary dataset round-trips through CSV exactly", "[dataset]") {
    Rng rng(1234);
    for (int rep = 0; rep < 5; ++rep) {
        BinaryDataset ds;
        const std::size_t p = 2 + static_cast<std::size_t>(rng.uniform() * 5);
        const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform() * 40);
        for (std::size_t j = 0; j < p; ++j) ds.names.push_back("item_" + std::to_string(j));
        ds.names[0] = "comma, quoted \"name\""; // exercise escaping
        ds.cols.assign(p, {});
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t i = 0; i < n; ++i) ds.cols[j].push_back(rng.bernoulli(0.5));
            ds.cols[j][j % n] = 0; // ensure both values appear
            ds.cols[j][(j + 1) % n] = 1;
        }
        const std::string csv = to_csv(ds);
        const BinaryDataset back = binary_from_csv(parse_csv(csv));
        CHECK(back.names == ds.names);
        CHECK(back.cols == ds.cols);
    }
}

TEST_CASE("schema JSON accepts flat and nested forms", "[dataset]") {
    const auto flat = schema_from_json(nlohmann::json::parse(R"({"a":"binary","b":"ordinal-4"})"));
    CHECK(flat.columns.size() == 2);
    CHECK(flat.missing_codes.empty());
    const auto nested = schema_from_json(nlohmann::json::parse(
        R"({"columns":{"a":"continuous"},"missing_codes":["Don't know",8]})"));
    CHECK(nested.columns.size() == 1);
    REQUIRE(nested.missing_codes.size() == 2);
    CHECK(nested.missing_codes[0] == "Don't know");
    CHECK_THROWS_AS(schema_from_json(nlohmann::json::parse(R"({"a":"octal"})")), InputError);
}

TEST_CASE("pipeline orders: split first vs pooled cleaning", "[dataset]") {
    // group two (odd rows) has item "a" missing in 25% of its rows, group one
    // never: per-group filtering drops "a" only in group two, pooled filtering
    // (12.5% overall) drops it for everyone
    std::string csv = "a,b,c,g\n";
    Rng rng(7);
    for (int i = 0; i < 120; ++i) {
        const int g = i % 2 + 1;
        std::string a = (i % 8 == 1) ? "" : (rng.bernoulli(0.5) ? "1" : "0");
        csv += a;
        csv += rng.bernoulli(0.5) ? ",1" : ",0";
        csv += rng.bernoulli(0.5) ? ",1" : ",0";
        csv += "," + std::to_string(g) + "\n";
    }
    const auto schema = make_schema({{"a", ColumnKind::binary},
                                     {"b", ColumnKind::binary},
                                     {"c", ColumnKind::binary},
                                     {"g", ColumnKind::categorical}});
    const SurveyDataset ds = survey_from_csv(parse_csv(csv), schema);
    GroupingSpec spec;
    spec.group_variable = "g";
    spec.mapping = {{1.0, "one"}, {2.0, "two"}};

    PipelineConfig cfg;
    cfg.min_cases = 10;
    cfg.split_first = true;
    const PipelineResult per_group = run_group_pipeline(ds, spec, cfg);
    CHECK(per_group.groups.at("one").p() == 3);
    CHECK(per_group.groups.at("two").p() == 2); // "a" dropped within group two
    CHECK(per_group.reports.at("two").dropped.size() == 1);

    cfg.split_first = false;
    const PipelineResult pooled = run_group_pipeline(ds, spec, cfg);
    REQUIRE(pooled.shared_report.has_value());
    // pooled missing fraction of "a" is 12.5%, so it is dropped for everyone
    CHECK(pooled.groups.at("one").p() == 2);
    CHECK(pooled.groups.at("two").p() == 2);

    // cleaning never adds rows or columns
    for (const auto& [label, data] : per_group.groups) {
        CHECK(data.n() <= ds.n_rows());
        CHECK(data.p() <= ds.n_cols() - 1);
    }
}

TEST_CASE("grouping spec JSON validation", "[dataset]") {
    const auto spec = grouping_from_json(
        nlohmann::json::parse(R"({"group_variable":"g","mapping":{"1":"hi","2":"hi","3":"lo"}})"));
    CHECK(spec.mapping.size() == 3);
    CHECK_THROWS_AS(grouping_from_json(nlohmann::json::parse(
                        R"({"group_variable":"g","mapping":{"1":"only"}})")),
                    InputError);
    CHECK_THROWS_AS(grouping_from_json(nlohmann::json::parse(
                        R"({"group_variable":"g","mapping":{"x":"a","2":"b"}})")),
                    InputError);
}

TEST_CASE("csv files load from disk", "[dataset]") {
    test_util::TempDir dir;
    const auto path = dir.file("data.csv", "a,b\n1,0\n0,1\n");
    const auto schema = make_schema({{"a", ColumnKind::binary}, {"b", ColumnKind::binary}});
    const SurveyDataset ds = load_csv(path, schema);
    CHECK(ds.n_rows() == 2);
    CHECK_THROWS_AS(load_csv(dir.sub("absent.csv"), schema), InputError);
}
