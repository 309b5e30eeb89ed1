#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "cmla/dataset.hpp"
#include "cmla/error.hpp"

using namespace cmla;

namespace {

DataTable from_text(const std::string& text, const std::optional<TableSchema>& hint = std::nullopt,
                    Origin origin = Origin::synthetic) {
  return table_from_records(parse_csv(text), hint, origin, "inline");
}

std::string error_of(const std::string& text, const std::optional<TableSchema>& hint) {
  try {
    from_text(text, hint);
  } catch (const Error& e) {
    CHECK(e.stage() == Stage::dataset_core);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("kind inference on a two-column file") {
  const auto t = from_text("age,job\n39,clerk\n50,nurse\n");
  CHECK(t.rows() == 2);
  REQUIRE(t.cols() == 2);
  CHECK(t.schema()[0].kind == ColumnKind::numeric);
  CHECK(t.schema()[1].kind == ColumnKind::categorical);
  CHECK(t.schema()[1].vocabulary == std::vector<std::string>{"clerk", "nurse"});
  CHECK(t.numeric(1, 0) == 50.0);
  CHECK(t.category_label(1, 1) == "nurse");
}

TEST_CASE("hint overrides inferred kind") {
  TableSchema hint({{"age", ColumnKind::categorical, {}}, {"job", ColumnKind::categorical, {}}});
  const auto t = from_text("age,job\n39,clerk\n50,nurse\n", hint);
  CHECK(t.schema()[0].kind == ColumnKind::categorical);
  CHECK(t.schema()[0].vocabulary == std::vector<std::string>{"39", "50"});
}

TEST_CASE("hint vocabulary is kept as a prefix") {
  TableSchema hint({{"job", ColumnKind::categorical, {"nurse", "pilot"}}});
  const auto t = from_text("job\nclerk\nnurse\n", hint);
  CHECK(t.schema()[0].vocabulary == std::vector<std::string>{"nurse", "pilot", "clerk"});
  CHECK(t.category(0, 0) == 2);
  CHECK(t.category(1, 0) == 0);
}

TEST_CASE("unparseable numeric names row and column") {
  TableSchema hint({{"age", ColumnKind::numeric, {}}, {"job", ColumnKind::categorical, {}}});
  const auto msg = error_of("age,job\nabc,clerk\n", hint);
  CHECK(msg.find("row 1") != std::string::npos);
  CHECK(msg.find("column age") != std::string::npos);
}

TEST_CASE("missing numeric value is rejected") {
  TableSchema hint({{"age", ColumnKind::numeric, {}}, {"job", ColumnKind::categorical, {}}});
  const auto msg = error_of("age,job\n1,a\n,b\n", hint);
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("missing") != std::string::npos);
}

TEST_CASE("empty categorical cell is a category") {
  const auto t = from_text("job\nclerk\n\"\"\nclerk\n");
  // a quoted empty field is a record with one empty value; blank lines are skipped
  CHECK(t.schema()[0].kind == ColumnKind::categorical);
}

TEST_CASE("ragged rows and quoting errors") {
  CHECK(!error_of("a,b\n1\n", std::nullopt).empty());
  CHECK_THROWS_AS(parse_csv("a\n\"x"), Error);
  CHECK_THROWS_AS(parse_csv("a\nx\"y\n"), Error);
  CHECK(!error_of("a,b\n", std::nullopt).empty());
}

TEST_CASE("RFC-4180 quoting and BOM") {
  const auto rec = parse_csv("\xEF\xBB\xBFname,note\r\n\"Smith, J\",\"say \"\"hi\"\"\"\r\n");
  REQUIRE(rec.size() == 2);
  CHECK(rec[0][0] == "name");
  CHECK(rec[1][0] == "Smith, J");
  CHECK(rec[1][1] == "say \"hi\"");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
  CHECK(csv_escape("plain") == "plain");
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 1e21, 5e-324}) {
    const auto text = format_double(v);
    REQUIRE(parse_finite(text));
    CHECK(*parse_finite(text) == v);
  }
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(2.0) == "2");
  CHECK(!parse_finite("inf"));
  CHECK(!parse_finite("nan"));
  CHECK(!parse_finite("1e999"));
  CHECK(!parse_finite("12abc"));
  CHECK(!parse_finite(""));
  CHECK(*parse_finite("+4") == 4.0);
}

TEST_CASE("CSV write and reload reproduces the table") {
  const auto t = from_text("x,label,y\n0.1,\"a,b\",-3\n2.5e-7,plain,4\n1e10,\"q\"\"x\",0\n");
  const auto path = std::filesystem::temp_directory_path() / "cmla_dataset_roundtrip.csv";
  write_csv(t, path);
  const auto back = load_csv(path);
  CHECK(back.schema() == t.schema());
  CHECK(back.cells() == t.cells());
  CHECK(to_csv(back) == to_csv(t));
  std::filesystem::remove(path);
}

TEST_CASE("inference is order-stable") {
  const auto a = from_text("c\nz\ny\nz\nx\n");
  const auto b = from_text("c\nz\ny\nz\nx\n");
  CHECK(a.schema()[0].vocabulary == std::vector<std::string>{"z", "y", "x"});
  CHECK(a.schema() == b.schema());
}

TEST_CASE("unify_schema examples") {
  const auto synth = from_text("v\nA\nB\n");
  const auto real = from_text("v\nA\nB\nC\n", std::nullopt, Origin::real);
  const auto s = unify_schema(synth, &real);
  CHECK(s[0].vocabulary == std::vector<std::string>{"A", "B"});
  CHECK(unify_schema(synth) == synth.schema());

  const auto s_job = from_text("job\nclerk\n");
  const auto r_occ = from_text("occupation\nclerk\n", std::nullopt, Origin::real);
  try {
    unify_schema(s_job, &r_occ);
    FAIL("expected a schema mismatch");
  } catch (const Error& e) {
    CHECK(e.stage() == Stage::dataset_core);
    CHECK(std::string(e.what()).find("schema mismatch") != std::string::npos);
  }

  const auto r_kind = from_text("v\n1\n2\n", std::nullopt, Origin::real);
  CHECK_THROWS_AS(unify_schema(synth, &r_kind), Error);
}

TEST_CASE("unify_schema ignores real vocabularies") {
  const auto synth = from_text("x,v\n1,A\n2,B\n");
  const auto r1 = from_text("x,v\n1,A\n", std::nullopt, Origin::real);
  const auto r2 = from_text("x,v\n9,Q\n3,R\n7,A\n", std::nullopt, Origin::real);
  CHECK(unify_schema(synth, &r1) == unify_schema(synth, &r2));
}

TEST_CASE("table construction validates cells") {
  TableSchema s({{"x", ColumnKind::numeric, {}}, {"c", ColumnKind::categorical, {"a"}}});
  CHECK_NOTHROW(DataTable(s, {1.0, 0.0}, Origin::real));
  CHECK_THROWS_AS(DataTable(s, {1.0, 1.0}, Origin::real), Error);
  CHECK_THROWS_AS(DataTable(s, {std::nan(""), 0.0}, Origin::real), Error);
  CHECK_THROWS_AS(DataTable(s, {}, Origin::real), Error);
  CHECK_THROWS_AS(TableSchema({{"x", ColumnKind::numeric, {}}, {"x", ColumnKind::numeric, {}}}).validate(),
                  Error);
}
