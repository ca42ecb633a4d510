#include <gtest/gtest.h>

#include <filesystem>

#include "test_support.hpp"

using namespace missboopf;

namespace {

Schema mixed_schema() {
    return {{"x", ColumnKind::continuous()},
            {"colour", ColumnKind::nominal({"red", "green", "blue"})},
            {"grade", ColumnKind::ordinal({"low", "mid", "high"})}};
}

}  // namespace

TEST(ColumnKind, RejectsEmptyAndDuplicateLevels) {
    EXPECT_THROW(ColumnKind::nominal({}), SchemaError);
    EXPECT_THROW(ColumnKind::ordinal({"a", "b", "a"}), SchemaError);
    EXPECT_EQ(ColumnKind::ordinal({"a", "b"}).level_index("b"), 1u);
    EXPECT_FALSE(ColumnKind::ordinal({"a", "b"}).level_index("c").has_value());
}

TEST(DataMatrix, StartsMissingAndTracksCells) {
    DataMatrix d(mixed_schema(), 3);
    EXPECT_EQ(d.missing_count(), 9u);
    d.set(0, 0, 1.5);
    d.set(1, 1, LevelIndex{2});
    EXPECT_EQ(std::get<double>(d.cell(0, 0)), 1.5);
    EXPECT_EQ(std::get<LevelIndex>(d.cell(1, 1)).value, 2u);
    EXPECT_TRUE(std::holds_alternative<Missing>(d.cell(2, 2)));
    EXPECT_THROW(d.set(0, 1, 2.0), SchemaError);
    EXPECT_THROW(d.set(0, 0, LevelIndex{0}), SchemaError);
    EXPECT_THROW(d.set_level(0, 1, 3), SchemaError);
    EXPECT_THROW(d.set_real(0, 0, std::nan("")), SchemaError);
    EXPECT_EQ(d.missing_count(0), 2u);
    d.set(0, 0, Missing{});
    EXPECT_EQ(d.missing_count(0), 3u);
}

TEST(Mask, CountsAndHash) {
    Mask m(4, 3);
    m.set(0, 0, true);
    m.set(3, 2, true);
    m.set(2, 2, true);
    EXPECT_EQ(m.count(), 3u);
    EXPECT_EQ(m.count_in_column(2), 2u);
    EXPECT_EQ(m.count_in_column(1), 0u);
    Mask other = m;
    EXPECT_EQ(m.hash(), other.hash());
    other.set(2, 2, false);
    EXPECT_NE(m.hash(), other.hash());
    // Same bits but different shape must hash differently.
    EXPECT_NE(Mask(4, 3).hash(), Mask(3, 4).hash());
}

TEST(Csv, QuotedFieldsRoundTrip) {
    const auto rows = csv::parse("a,\"b,c\",\"say \"\"hi\"\"\"\r\n1,\"line\nbreak\",\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0][1], "b,c");
    EXPECT_EQ(rows[0][2], "say \"hi\"");
    EXPECT_EQ(rows[1][1], "line\nbreak");
    EXPECT_EQ(rows[1][2], "");
    EXPECT_EQ(csv::quote("plain"), "plain");
    EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
    EXPECT_THROW(csv::parse("a,\"open\n"), ParseError);
    EXPECT_THROW(csv::parse("a\"b\n"), ParseError);
}

TEST(Schema, ParseFormatRoundTrip) {
    const std::string text = "x:continuous\ncolour:nominal:red,green,blue\n# comment\ngrade:ordinal:low,mid,high\n";
    const Schema s = parse_schema(text);
    EXPECT_EQ(s, mixed_schema());
    EXPECT_EQ(parse_schema(format_schema(s)), s);
    EXPECT_THROW(parse_schema("x:weird\n"), ParseError);
    EXPECT_THROW(parse_schema("x:nominal:a,a\n"), ParseError);
    EXPECT_THROW(parse_schema(""), ParseError);
}

TEST(Csv, ParseMixedWithMissingAndRoundTrip) {
    const std::string text = "x,colour,grade\n1.25,red,high\nNA,blue,NA\n-0.125,NA,low\n";
    const DataMatrix d = parse_csv(text, mixed_schema());
    EXPECT_EQ(d.rows(), 3u);
    EXPECT_EQ(d.value(0, 0), 1.25);
    EXPECT_EQ(d.value(1, 1), 2.0);
    EXPECT_TRUE(d.is_missing(1, 0));
    EXPECT_TRUE(d.is_missing(2, 1));
    EXPECT_EQ(d.value(2, 0), -0.125);
    EXPECT_EQ(parse_csv(format_csv(d), mixed_schema()), d);
    EXPECT_EQ(format_csv(d), text);
}

TEST(Csv, CustomNaTokenAndErrors) {
    const auto d = parse_csv("x,colour,grade\n?,red,low\n", mixed_schema(), "?");
    EXPECT_TRUE(d.is_missing(0, 0));
    EXPECT_THROW(parse_csv("x,colour,grade\n1,purple,low\n", mixed_schema()), SchemaError);
    EXPECT_THROW(parse_csv("x,colour\n1,red\n", mixed_schema()), SchemaError);
    EXPECT_THROW(parse_csv("x,colour,grade\nabc,red,low\n", mixed_schema()), ParseError);
    EXPECT_THROW(parse_csv("x,colour,grade\n1,red\n", mixed_schema()), ParseError);
    EXPECT_THROW(parse_csv("x,colour,grade\n", mixed_schema()), ParseError);
}

TEST(Csv, RealsRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 1e300}) {
        const auto back = parse_real(format_real(v));
        ASSERT_TRUE(back.has_value());
        EXPECT_EQ(*back, v);
    }
    EXPECT_FALSE(parse_real("1.0x").has_value());
    EXPECT_FALSE(parse_real("").has_value());
}

TEST(Csv, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "missboopf_dm_test";
    std::filesystem::create_directories(dir);
    const auto d = testsupport::random_mixed(20, 2, 1, 1, 3);
    save_csv(d, (dir / "d.csv").string());
    save_schema(d.schema(), (dir / "d.schema").string());
    EXPECT_EQ(load_csv((dir / "d.csv").string(), (dir / "d.schema").string()), d);
    EXPECT_THROW(read_file((dir / "absent.csv").string()), Error);
}

TEST(Partition, IndicesAndBlocks) {
    DataMatrix d = testsupport::random_mixed(6, 2, 1, 0, 1);
    d.set_missing(1, 0);
    d.set_missing(4, 0);
    const auto part = partition_column(d, 0);
    EXPECT_EQ(part.mis_idx, (std::vector<std::size_t>{1, 4}));
    EXPECT_EQ(part.obs_idx, (std::vector<std::size_t>{0, 2, 3, 5}));
    const auto split = split_by_observed(d, 0);
    EXPECT_EQ(split.target_obs.rows(), 4u);
    EXPECT_EQ(split.others_mis.rows(), 2u);
    EXPECT_EQ(split.others_mis.cols(), 2u);
    EXPECT_EQ(split.others_mis.value(1, 0), d.value(4, 1));
    EXPECT_EQ(split.target_mis.missing_count(), 2u);
    for (std::size_t i = 0; i < 6; ++i) d.set_missing(i, 2);
    try {
        split_by_observed(d, 2);
        FAIL();
    } catch (const FullyMissingColumn& e) {
        EXPECT_EQ(e.column(), 2u);
    }
}

TEST(Partition, MissingOrderIsStableAscending) {
    DataMatrix d = testsupport::continuous_matrix(5, 4, std::vector<double>(20, 1.0));
    // counts: col0 2, col1 0, col2 2, col3 1
    d.set_missing(0, 0);
    d.set_missing(1, 0);
    d.set_missing(3, 2);
    d.set_missing(4, 2);
    d.set_missing(2, 3);
    // Oracle: independent insertion sort on (count, index).
    std::vector<std::pair<std::size_t, std::size_t>> keyed;
    for (std::size_t j = 0; j < 4; ++j) keyed.push_back({d.missing_count(j), j});
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> expected;
    for (auto& k : keyed) expected.push_back(k.second);
    EXPECT_EQ(missing_order(d), expected);
    EXPECT_EQ(missing_order(d), (std::vector<std::size_t>{1, 3, 0, 2}));
}

TEST(InitialImpute, MeanAndLowestModeTie) {
    Schema s = {{"x", ColumnKind::continuous()}, {"c", ColumnKind::nominal({"p", "q", "r"})}};
    DataMatrix d(s, 5);
    d.set_real(0, 0, 1.0);
    d.set_real(1, 0, 2.0);
    d.set_real(2, 0, 6.0);
    d.set_level(0, 1, 2);
    d.set_level(1, 1, 1);
    d.set_level(2, 1, 2);
    d.set_level(3, 1, 1);
    const auto out = initial_impute(d);
    EXPECT_EQ(out.missing_count(), 0u);
    EXPECT_DOUBLE_EQ(out.value(3, 0), 3.0);
    EXPECT_DOUBLE_EQ(out.value(4, 0), 3.0);
    EXPECT_EQ(out.value(4, 1), 1.0);  // levels q and r tie at 2; q has the lower index
    EXPECT_EQ(out.value(0, 0), 1.0);
}
