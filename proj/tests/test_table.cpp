#include <doctest.h>

#include "support/demo_data.hpp"
#include "tabaug/rng.hpp"
#include "tabaug/table.hpp"

using namespace tabaug;

namespace {

Table two_col_fixture() {
    // {A,B}: 3 rows, used by the block-missingness fixtures.
    Schema s;
    s.features = {{"A", FeatureKind::numeric()}, {"B", FeatureKind::numeric()}};
    return Table(s, {Cell::number(1.0), Cell::number(10.0), Cell::number(2.0), Cell::number(20.0),
                     Cell::number(3.0), Cell::number(30.0)});
}

Table bc_fixture() {
    // {B,C}: 2 rows.
    Schema s;
    s.features = {{"B", FeatureKind::numeric()}, {"C", FeatureKind::numeric()}};
    return Table(s, {Cell::number(40.0), Cell::number(100.0), Cell::number(50.0), Cell::number(200.0)});
}

}  // namespace

TEST_CASE("schema validation") {
    Schema s;
    s.features = {{"a", FeatureKind::numeric()}, {"a", FeatureKind::numeric()}};
    CHECK_THROWS_AS(s.validate(), SchemaError);

    Schema t;
    t.features = {{"a", FeatureKind::numeric()}};
    t.target = "missing";
    CHECK_THROWS_AS(t.validate(), SchemaError);

    Schema num_target;
    num_target.features = {{"a", FeatureKind::numeric()}};
    num_target.target = "a";
    CHECK_THROWS_AS(num_target.validate(), SchemaError);

    CHECK_THROWS_AS(FeatureKind::categorical({}), SchemaError);
    CHECK_THROWS_AS(FeatureKind::categorical({"x", "x"}), SchemaError);
}

TEST_CASE("table construction type-checks cells") {
    Schema s;
    s.features = {{"a", FeatureKind::numeric()}, {"b", FeatureKind::categorical({"x", "y"})}};
    CHECK_NOTHROW(Table(s, {Cell::number(1.0), Cell::category(1)}));
    CHECK_THROWS_AS(Table(s, {Cell::category(0), Cell::category(1)}), SchemaError);
    CHECK_THROWS_AS(Table(s, {Cell::number(1.0), Cell::category(2)}), SchemaError);
    CHECK_THROWS_AS(Table(s, {Cell::number(1.0)}), SchemaError);
    CHECK_THROWS_AS(Cell::number(1.0 / 0.0), Error);
}

TEST_CASE("column_stats numeric") {
    Schema s;
    s.features = {{"a", FeatureKind::numeric()}};
    Table t(s, {Cell::number(1.0), Cell::number(2.0), Cell::missing(), Cell::number(3.0)});
    const ColumnSummary cs = column_stats(t, "a");
    CHECK(cs.mean == doctest::Approx(2.0));
    CHECK(cs.n_missing == 1);
    CHECK(cs.n_observed == 3);
    CHECK(cs.min == 1.0);
    CHECK(cs.max == 3.0);
    CHECK_THROWS_AS(column_stats(t, "nope"), SchemaError);
}

TEST_CASE("column_stats mode and tie-break") {
    Schema s;
    s.features = {{"c", FeatureKind::categorical({"a", "b"})}};
    Table t1(s, {Cell::category(0), Cell::category(0), Cell::category(1)});
    CHECK(column_stats(t1, "c").mode == 0);
    // Tie: first level in schema order wins, regardless of row order.
    Table t2(s, {Cell::category(0), Cell::category(1)});
    CHECK(column_stats(t2, "c").mode == 0);
    Table t3(s, {Cell::category(1), Cell::category(0)});
    CHECK(column_stats(t3, "c").mode == 0);
}

TEST_CASE("union_schema basics") {
    const Schema u = union_schema({two_col_fixture().schema(), bc_fixture().schema()});
    REQUIRE(u.size() == 3);
    CHECK(u.features[0].name == "A");
    CHECK(u.features[1].name == "B");
    CHECK(u.features[2].name == "C");

    // Idempotence and associativity on conflict-free inputs.
    const Schema a = two_col_fixture().schema();
    CHECK(union_schema({a, a}) == a);
    const Schema b = bc_fixture().schema();
    Schema c;
    c.features = {{"D", FeatureKind::numeric()}};
    CHECK(union_schema({union_schema({a, b}), c}) == union_schema({a, union_schema({b, c})}));

    Schema conflict;
    conflict.features = {{"A", FeatureKind::categorical({"x"})}};
    CHECK_THROWS_AS(union_schema({a, conflict}), SchemaError);
}

TEST_CASE("union_schema merges categorical levels in first-appearance order") {
    Schema a, b;
    a.features = {{"c", FeatureKind::categorical({"x", "y"})}};
    b.features = {{"c", FeatureKind::categorical({"z", "y"})}};
    const Schema u = union_schema({a, b});
    CHECK(u.features[0].kind.levels == std::vector<std::string>{"x", "y", "z"});
}

TEST_CASE("demo schemas: 31-feature union with auxiliary extras is 33") {
    const Table primary = demo::make_primary(1);
    const Table aux = demo::make_auxiliary(1);
    // Counts include the target column (31 + 1 and 23 + 1).
    CHECK(primary.schema().size() == 32);
    CHECK(aux.schema().size() == 24);
    const Schema u = union_schema({primary.schema(), aux.schema()});
    CHECK(u.size() == 34);  // 33 features + target

    // Aligning the 31-feature table into the union adds exactly the two
    // auxiliary-only all-missing columns.
    const Table aligned = align_to_schema(primary, u);
    CHECK(aligned.n_cols() == 34);
    CHECK(count_missing(aligned, u.require("cog_test_a")) == aligned.n_rows());
    CHECK(count_missing(aligned, u.require("cog_test_b")) == aligned.n_rows());
}

TEST_CASE("align_to_schema reorder, extension, identity") {
    Schema target;
    target.features = {{"A", FeatureKind::numeric()},
                       {"B", FeatureKind::numeric()},
                       {"C", FeatureKind::numeric()}};
    Schema rev;
    rev.features = {{"B", FeatureKind::numeric()}, {"A", FeatureKind::numeric()}};
    Table t(rev, {Cell::number(10.0), Cell::number(1.0), Cell::number(20.0), Cell::number(2.0)});
    const Table out = align_to_schema(t, target);
    CHECK(out.at(0, 0).number() == 1.0);
    CHECK(out.at(0, 1).number() == 10.0);
    CHECK(out.at(0, 2).is_missing());
    CHECK(out.n_rows() == 2);

    const Table same = align_to_schema(two_col_fixture(), two_col_fixture().schema());
    CHECK(same.cells() == two_col_fixture().cells());

    Schema conflict;
    conflict.features = {{"A", FeatureKind::categorical({"x"})}, {"B", FeatureKind::numeric()}};
    CHECK_THROWS_AS(align_to_schema(two_col_fixture(), conflict), SchemaError);
}

TEST_CASE("align_to_schema remaps widened categorical levels") {
    Schema narrow;
    narrow.features = {{"c", FeatureKind::categorical({"y"})}};
    Table t(narrow, {Cell::category(0)});
    Schema wide;
    wide.features = {{"c", FeatureKind::categorical({"x", "y"})}};
    const Table out = align_to_schema(t, wide);
    CHECK(out.at(0, 0).category() == 1);  // "y" is index 1 in the wide kind
}

TEST_CASE("stack and block missingness fixture") {
    const Schema u = union_schema({two_col_fixture().schema(), bc_fixture().schema()});
    const Table s = stack({align_to_schema(two_col_fixture(), u), align_to_schema(bc_fixture(), u)});
    REQUIRE(s.n_rows() == 5);
    // Column C missing exactly on rows 0-2; column A exactly on rows 3-4.
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(s.at(r, 2).is_missing());
        CHECK(!s.at(r, 0).is_missing());
    }
    for (std::size_t r = 3; r < 5; ++r) {
        CHECK(s.at(r, 0).is_missing());
        CHECK(!s.at(r, 2).is_missing());
    }
    // Stack of a single table is that table.
    CHECK(stack({two_col_fixture()}).cells() == two_col_fixture().cells());
    CHECK_THROWS_AS(stack({two_col_fixture(), bc_fixture()}), SchemaError);
}

TEST_CASE("align+stack over a row partition reconstructs a permutation") {
    const Table t = demo::make_primary(7);
    std::vector<std::size_t> first, second;
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        (i % 3 == 0 ? first : second).push_back(i);
    }
    const Table a = select_rows(t, first);
    const Table b = select_rows(t, second);
    const Table merged = stack({align_to_schema(a, t.schema()), align_to_schema(b, t.schema())});
    REQUIRE(merged.n_rows() == t.n_rows());
    std::vector<std::size_t> order = first;
    order.insert(order.end(), second.begin(), second.end());
    for (std::size_t r = 0; r < order.size(); ++r) {
        for (std::size_t c = 0; c < t.n_cols(); ++c) {
            CHECK(merged.at(r, c) == t.at(order[r], c));
        }
    }
}

TEST_CASE("drop/select columns and rows") {
    const Table t = two_col_fixture();
    const Table dropped = drop_columns(t, {"B"});
    CHECK(dropped.n_cols() == 1);
    CHECK(dropped.schema().features[0].name == "A");
    CHECK_THROWS_AS(drop_columns(t, {"nope"}), SchemaError);

    const Table all = select_rows(t, {0, 1, 2});
    CHECK(all.cells() == t.cells());
    const Table one = select_rows(t, {2});
    CHECK(one.at(0, 0).number() == 3.0);
    CHECK_THROWS_AS(select_rows(t, {9}), Error);
}

TEST_CASE("select rows by source recovers the first block") {
    const Schema u = union_schema({two_col_fixture().schema(), bc_fixture().schema()});
    Table s = stack({align_to_schema(two_col_fixture(), u), align_to_schema(bc_fixture(), u)});
    s = append_column(s, {"src", FeatureKind::categorical({"p", "q"})},
                      {Cell::category(0), Cell::category(0), Cell::category(0), Cell::category(1),
                       Cell::category(1)});
    std::vector<std::size_t> p_rows;
    const std::size_t src = s.schema().require("src");
    for (std::size_t i = 0; i < s.n_rows(); ++i) {
        if (s.at(i, src).category() == 0) p_rows.push_back(i);
    }
    const Table block = select_rows(s, p_rows);
    CHECK(block.n_rows() == 3);
    CHECK(block.at(2, 0).number() == 3.0);
}

TEST_CASE("missing counts match column summaries") {
    const Table t = demo::make_auxiliary(5);
    for (std::size_t j = 0; j < t.n_cols(); ++j) {
        const ColumnSummary cs = column_stats(t, t.schema().features[j].name);
        CHECK(cs.n_missing == count_missing(t, j));
        CHECK(cs.n_observed + cs.n_missing == t.n_rows());
        if (t.schema().features[j].kind.is_categorical()) {
            std::size_t total = 0;
            for (std::size_t c : cs.level_counts) total += c;
            CHECK(total == cs.n_observed);
        }
    }
}
