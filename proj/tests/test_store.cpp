#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "graphgen/graphgen.hpp"

using namespace graphgen;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("graphgen_store_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Csv, InfersIntegerAndStringColumns) {
  Catalog cat;
  const auto& t = cat.load_csv_text("id,name\n1,ann\n2,bob\n", "P");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.columns()[0].type, ColumnType::Integer);
  EXPECT_EQ(t.columns()[1].type, ColumnType::String);
  EXPECT_EQ(std::get<std::int64_t>(t.at(1, 0)), 2);
  EXPECT_EQ(std::get<std::string>(t.at(0, 1)), "ann");
}

TEST(Csv, MixedColumnFallsBackToString) {
  Catalog cat;
  const auto& t = cat.load_csv_text("k\n1\nx\n", "T");
  EXPECT_EQ(t.columns()[0].type, ColumnType::String);
  EXPECT_EQ(std::get<std::string>(t.at(0, 0)), "1");
}

TEST(Csv, QuotedFieldsWithCommasQuotesAndNewlines) {
  Catalog cat;
  const auto& t = cat.load_csv_text("a,b\n\"x,y\",\"say \"\"hi\"\"\"\n\"two\nlines\",z\r\n", "Q");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(std::get<std::string>(t.at(0, 0)), "x,y");
  EXPECT_EQ(std::get<std::string>(t.at(0, 1)), "say \"hi\"");
  EXPECT_EQ(std::get<std::string>(t.at(1, 0)), "two\nlines");
  EXPECT_EQ(std::get<std::string>(t.at(1, 1)), "z");
}

TEST(Csv, QuotedEmptyStringIsAValue) {
  Catalog cat;
  const auto& t = cat.load_csv_text("a,b\n1,\"\"\n", "E");
  EXPECT_EQ(std::get<std::string>(t.at(0, 1)), "");
}

TEST(Csv, UnquotedEmptyFieldIsRejectedWithRow) {
  Catalog cat;
  try {
    cat.load_csv_text("a,b\n1,2\n3,\n", "E");
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  EXPECT_FALSE(cat.has_table("E"));
}

TEST(Csv, RaggedRowIsRejected) {
  Catalog cat;
  EXPECT_THROW(cat.load_csv_text("a,b\n1\n", "E"), IngestError);
}

TEST(Csv, UnterminatedQuoteIsRejected) {
  Catalog cat;
  EXPECT_THROW(cat.load_csv_text("a\n\"open\n", "E"), IngestError);
}

TEST(Csv, MissingHeaderIsRejected) {
  Catalog cat;
  EXPECT_THROW(cat.load_csv_text("", "E"), IngestError);
}

TEST(Csv, DuplicateColumnIsRejected) {
  Catalog cat;
  EXPECT_THROW(cat.load_csv_text("a,a\n1,2\n", "E"), IngestError);
}

TEST(Csv, ExplicitSchemaIsEnforced) {
  Catalog cat;
  EXPECT_THROW(cat.load_csv_text("a\nx\n", "E", std::vector<ColumnType>{ColumnType::Integer}), IngestError);
  const auto& t = cat.load_csv_text("a\n7\n", "S", std::vector<ColumnType>{ColumnType::String});
  EXPECT_EQ(std::get<std::string>(t.at(0, 0)), "7");
  EXPECT_THROW(cat.load_csv_text("a\n7\n", "W", std::vector<ColumnType>{ColumnType::String, ColumnType::String}),
               IngestError);
}

TEST(Catalog, DuplicateTableNameClashes) {
  Catalog cat;
  cat.load_csv_text("a\n1\n", "T");
  EXPECT_THROW(cat.load_csv_text("a\n1\n", "T"), NameClash);
}

TEST(Catalog, UnknownTableAndColumn) {
  Catalog cat;
  cat.load_csv_text("a\n1\n", "T");
  EXPECT_THROW(cat.table("nope"), CatalogError);
  EXPECT_THROW(cat.distinct_count("T", "zz"), CatalogError);
}

TEST(Catalog, AddTableTypeChecks) {
  Catalog cat;
  EXPECT_THROW(cat.add_table("T", {{"a", ColumnType::Integer}}, {{Value{std::string("x")}}}), TypeError);
  EXPECT_FALSE(cat.has_table("T"));
}

TEST(Catalog, DistinctCountsMatchSets) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Catalog cat;
    std::vector<std::vector<Value>> rows;
    std::set<std::int64_t> a;
    std::set<std::pair<std::int64_t, std::int64_t>> ab;
    const int n = 1 + static_cast<int>(rng() % 300);
    for (int i = 0; i < n; ++i) {
      std::int64_t x = static_cast<std::int64_t>(rng() % 40), y = static_cast<std::int64_t>(rng() % 7);
      rows.push_back({Value{x}, Value{y}});
      a.insert(x);
      ab.emplace(x, y);
    }
    cat.add_table("T", {{"a", ColumnType::Integer}, {"b", ColumnType::Integer}}, rows);
    EXPECT_EQ(cat.distinct_count("T", "a"), a.size());
    EXPECT_EQ(cat.distinct_count("T", std::vector<std::size_t>{0, 1}), ab.size());
    EXPECT_EQ(cat.stats("T").row_count, static_cast<std::size_t>(n));
  }
}

TEST(Catalog, CsvWriteReadRoundTrip) {
  auto dir = temp_dir("rt");
  Catalog cat;
  cat.add_table("T", {{"id", ColumnType::Integer}, {"s", ColumnType::String}},
                {{Value{std::int64_t{-3}}, Value{std::string("a,b")}},
                 {Value{std::int64_t{4}}, Value{std::string("q\"x")}}});
  cat.write_csv("T", dir / "T.csv");
  Catalog back;
  back.load_directory(dir);
  const auto& t = back.table("T");
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(std::get<std::int64_t>(t.at(0, 0)), -3);
  EXPECT_EQ(std::get<std::string>(t.at(0, 1)), "a,b");
  EXPECT_EQ(std::get<std::string>(t.at(1, 1)), "q\"x");
}

TEST(Catalog, LoadDirectoryRejectsMissingDir) {
  Catalog cat;
  EXPECT_THROW(cat.load_directory("/nonexistent/graphgen"), InputError);
}

TEST(Eval, ConjunctiveJoinIsDistinctProjection) {
  Catalog cat;
  cat.load_csv_text("s,c\n1,10\n2,10\n1,10\n3,11\n", "E");
  std::vector<Atom> atoms = {{"E", {Term::var("A"), Term::var("C")}}, {"E", {Term::var("B"), Term::var("C")}}};
  auto ts = eval_conjunctive(cat, atoms, {"A", "B"});
  // (1,1) (1,2) (2,1) (2,2) (3,3)
  EXPECT_EQ(ts.size(), 5u);
}

TEST(Eval, ConstantsFilterRows) {
  Catalog cat;
  cat.load_csv_text("s,c\n1,10\n2,10\n3,11\n", "E");
  std::vector<Atom> atoms = {{"E", {Term::var("A"), Term::integer(10)}}};
  EXPECT_EQ(eval_conjunctive(cat, atoms, {"A"}).size(), 2u);
}

TEST(Eval, SegmentPairsAreKeyed) {
  Catalog cat;
  cat.load_csv_text("s,c\n1,10\n2,10\n3,11\n", "E");
  Segment seg{{{"E", {Term::var("A"), Term::var("C")}}}, {"A"}, {"C"}};
  auto rel = eval_segment(cat, seg);
  EXPECT_EQ(rel.size(), 3u);
  EXPECT_EQ(rel.right_keys.size(), 2u);
}

TEST(Sql, EmitsJoinsAndPredicates) {
  Catalog cat;
  cat.load_csv_text("s,c\n1,10\n", "E");
  std::vector<Atom> atoms = {{"E", {Term::var("A"), Term::var("C")}}, {"E", {Term::var("B"), Term::var("C")}}};
  EXPECT_EQ(emit_sql(cat, atoms, {"A", "B"}),
            "SELECT DISTINCT t1.s AS A, t2.s AS B FROM E AS t1 INNER JOIN E AS t2 ON t1.c = t2.c");
  std::vector<Atom> one = {{"E", {Term::var("s"), Term::str("it's")}}};
  EXPECT_EQ(emit_sql(cat, one, {"s"}), "SELECT DISTINCT s FROM E WHERE c = 'it''s'");
}
