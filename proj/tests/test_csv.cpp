#include <doctest.h>

#include "support/demo_data.hpp"
#include "tabaug/csv.hpp"
#include "tabaug/rng.hpp"

using namespace tabaug;

TEST_CASE("empty token becomes missing") {
    Schema s;
    s.features = {{"a", FeatureKind::numeric()}, {"b", FeatureKind::categorical({"x", "y"})}};
    const Table t = parse_csv("a,b\n1,x\n,y", s);
    REQUIRE(t.n_rows() == 2);
    CHECK(t.at(0, 0).number() == 1.0);
    CHECK(t.at(1, 0).is_missing());
    CHECK(t.level_of(1, 1) == "y");
}

TEST_CASE("numeric column summary from parsed csv") {
    const Table t = parse_csv("a\n1.5\n2.5", std::nullopt);
    CHECK(t.schema().features[0].kind.is_numeric());
    CHECK(column_stats(t, "a").mean == doctest::Approx(2.0));
}

TEST_CASE("parse errors carry locations") {
    Schema s;
    s.features = {{"a", FeatureKind::numeric()}};
    CHECK_THROWS_AS(parse_csv("a\nnotanum", s), ParseError);
    try {
        parse_csv("a\n1\nx", s);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row == 3);
        CHECK(e.column == 1);
    }
    // Ragged row.
    CHECK_THROWS_AS(parse_csv("a,b\n1", std::nullopt), ParseError);
    // Unknown categorical level under a fixed schema.
    Schema c;
    c.features = {{"b", FeatureKind::categorical({"x"})}};
    CHECK_THROWS_AS(parse_csv("b\nz", c), SchemaError);
}

TEST_CASE("missing tokens are configurable") {
    Schema s;
    s.features = {{"a", FeatureKind::numeric()}};
    const Table t = parse_csv("a\nNA\n-\n2", s, {"", "NA", "-"});
    CHECK(t.at(0, 0).is_missing());
    CHECK(t.at(1, 0).is_missing());
    CHECK(t.at(2, 0).number() == 2.0);
    // "NA" is a level, not a missing marker, once removed from the token set.
    Schema c;
    c.features = {{"b", FeatureKind::categorical({"NA", "x"})}};
    const Table u = parse_csv("b\nNA", c, {""});
    CHECK(u.level_of(0, 0) == "NA");
}

TEST_CASE("quoted fields, embedded separators, CRLF") {
    const Table t = parse_csv("a,b\r\n\"1,5\",\"say \"\"hi\"\"\"\r\n2,plain\r\n", std::nullopt);
    REQUIRE(t.n_rows() == 2);
    CHECK(t.level_of(0, 0) == "1,5");
    CHECK(t.level_of(0, 1) == "say \"hi\"");
    CHECK(t.level_of(1, 1) == "plain");
}

TEST_CASE("emit/parse round trip is the identity") {
    // Random mixed table with awkward values; categorical cells round-trip
    // bit-exactly, numeric cells through shortest round-trip formatting.
    rng::Rng rng(99);
    Schema s;
    s.features = {{"n1", FeatureKind::numeric()},
                  {"n2", FeatureKind::numeric()},
                  {"c", FeatureKind::categorical({"plain", "with,comma", "with \"quote\"", "line\nbreak"})}};
    std::vector<Cell> cells;
    for (int i = 0; i < 200; ++i) {
        const double u = rng.uniform();
        cells.push_back(u < 0.1 ? Cell::missing()
                                : Cell::number((rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_int(40) - 20.0)));
        cells.push_back(Cell::number(rng.normal()));
        cells.push_back(rng.uniform() < 0.1 ? Cell::missing()
                                            : Cell::category(static_cast<int>(rng.uniform_int(4))));
    }
    const Table t(s, std::move(cells));
    const Table back = parse_csv(emit_csv(t), s);
    CHECK(back.cells() == t.cells());

    // Default tokens on a table without ambiguous levels.
    const Table demo_t = demo::make_auxiliary(3);
    const Table demo_back = parse_csv(emit_csv(demo_t), demo_t.schema());
    CHECK(demo_back.cells() == demo_t.cells());
}

TEST_CASE("bundled demo dataset parses cleanly with a 4-level target") {
    // Stand-in for the linked open dataset: structurally similar shape,
    // parsed with zero structural errors.
    const Table t = demo::make_primary(20250801);
    const Table parsed = parse_csv(emit_csv(t), t.schema());
    CHECK(parsed.n_rows() == 169);
    CHECK(parsed.n_cols() == 32);
    const auto& target = parsed.schema().features[parsed.schema().require("destination")];
    CHECK(target.kind.levels.size() == 4);

    // Schema-free inference agrees on the shape.
    const Table inferred = parse_csv(emit_csv(t), std::nullopt);
    CHECK(inferred.n_rows() == 169);
    CHECK(inferred.n_cols() == 32);
}

TEST_CASE("schema json round trip") {
    const Table t = demo::make_auxiliary(4);
    Schema s = t.schema();
    s.source_feature = std::nullopt;
    const Schema back = schema_from_json_text(schema_to_json_text(s));
    CHECK(back == s);
    CHECK_THROWS_AS(schema_from_json_text("{}"), SchemaError);
}
