#include <gtest/gtest.h>

#include "graphgen/graphgen.hpp"
#include "oracle.hpp"

using namespace graphgen;

namespace {

void load_coauthors(Catalog& cat) {
  cat.load_csv_text("id,name\n1,a\n2,b\n3,c\n4,d\n5,e\n", "Author");
  cat.load_csv_text("aid,pid\n1,10\n2,10\n3,10\n4,10\n1,11\n2,11\n5,12\n", "AuthorPub");
}

const char* kCoauthor =
    "Nodes(ID, Name) :- Author(ID, Name).\n"
    "Edges(ID1, ID2) :- AuthorPub(ID1, P), AuthorPub(ID2, P).\n";

// Rows chosen so the join on P is marked: 40 rows, 2 distinct keys.
void load_dense(Catalog& cat) {
  std::string a = "id\n", ap = "aid,pid\n";
  for (int i = 0; i < 20; ++i) a += std::to_string(i) + "\n";
  for (int i = 0; i < 20; ++i) ap += std::to_string(i) + ",0\n" + std::to_string(i) + "," + std::to_string(1 + i % 2) + "\n";
  cat.load_csv_text(a, "A");
  cat.load_csv_text(ap, "AP");
}

}  // namespace

TEST(Marking, InequalityBoundary) {
  // l*r > 2d(l+r)
  EXPECT_FALSE(is_large_output(100, 100, 25));  // 10000 vs 10000
  EXPECT_TRUE(is_large_output(100, 100, 24));
  EXPECT_FALSE(is_large_output(0, 100, 1));
  EXPECT_FALSE(is_large_output(10, 10, 0));
  EXPECT_TRUE(is_large_output(std::size_t{1} << 40, std::size_t{1} << 40, 1));  // no overflow
}

TEST(Marking, PlanMarksDenseJoin) {
  Catalog cat;
  load_dense(cat);
  auto plan = plan_extraction(parse("Nodes(ID) :- A(ID).\nEdges(ID1, ID2) :- AP(ID1, P), AP(ID2, P)."), cat);
  ASSERT_EQ(plan.rules.size(), 1u);
  EXPECT_EQ(plan.rules[0].marked, std::vector<std::size_t>{0});
  ASSERT_EQ(plan.rules[0].segments.size(), 2u);
  EXPECT_EQ(plan.rules[0].segments[0].right, std::vector<std::string>{"P"});
}

TEST(Marking, SparseJoinIsNotMarked) {
  Catalog cat;
  load_coauthors(cat);
  auto plan = plan_extraction(parse(kCoauthor), cat);
  EXPECT_TRUE(plan.rules[0].marked.empty());
}

TEST(Extract, CoauthorsMatchBruteForce) {
  Catalog cat;
  load_coauthors(cat);
  auto prog = parse(kCoauthor);
  auto want = oracle::brute_force_edges(prog, cat);
  auto exp = extract_expanded(prog, cat);
  EXPECT_EQ(oracle::api_edges(exp), want);
  auto res = extract_condensed(prog, cat);
  EXPECT_EQ(oracle::api_edges(res.graph), want);
  EXPECT_EQ(res.report.expanded_edges, want.size());
  EXPECT_EQ(res.graph.props(res.graph.index_of("3")).at("Name"), "c");
}

TEST(Extract, DenseJoinBuildsVirtualNodes) {
  Catalog cat;
  load_dense(cat);
  ExtractOptions opt;
  opt.expand_ratio = -1;
  auto prog = parse("Nodes(ID) :- A(ID).\nEdges(ID1, ID2) :- AP(ID1, P), AP(ID2, P).");
  auto res = extract_condensed(prog, cat, opt);
  const auto& g = res.graph;
  EXPECT_EQ(g.num_virtuals(), 3u);
  EXPECT_EQ(g.repr(), Repr::CDup);
  std::set<std::string> labels;
  for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v) labels.insert(g.label(v));
  EXPECT_EQ(labels, (std::set<std::string>{"e1.1:0", "e1.1:1", "e1.1:2"}));
  EXPECT_EQ(oracle::api_edges(g), oracle::brute_force_edges(prog, cat));
  EXPECT_LT(res.report.condensed_edges, res.report.expanded_edges);
  EXPECT_EQ(res.report.step_times_ms.size(), 6u);
}

TEST(Extract, RandomScenariosMatchBruteForce) {
  for (std::uint64_t seed = 1; seed <= 250; ++seed) {
    auto sc = oracle::random_scenario(seed);
    auto prog = parse(sc.dsl);
    auto want = oracle::brute_force_edges(prog, sc.cat);
    for (int variant = 0; variant < 3; ++variant) {
      ExtractOptions opt;
      opt.preprocess = variant != 1;
      opt.expand_ratio = variant == 2 ? 1.2 : -1;
      auto res = extract_condensed(prog, sc.cat, opt);
      ASSERT_EQ(oracle::api_edges(res.graph), want) << "seed " << seed << " variant " << variant << "\n" << sc.dsl;
      ASSERT_EQ(oracle::logical_edges(res.graph), want) << "seed " << seed;
      ASSERT_EQ(res.report.expanded_edges, want.size());
      ASSERT_TRUE(res.graph.is_dag());
    }
    ASSERT_EQ(oracle::api_edges(extract_expanded(prog, sc.cat)), want);
  }
}

TEST(Extract, PreprocessReachesFixpoint) {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    auto sc = oracle::random_scenario(seed);
    ExtractOptions opt;
    opt.expand_ratio = -1;
    opt.preprocess = false;
    auto raw = extract_condensed(sc.dsl, sc.cat, opt);
    if (raw.report.case2) continue;
    Graph g = raw.graph;
    const auto before_edges = g.physical_edge_count();
    const auto before_virtuals = g.num_virtuals();
    auto events = preprocess_expand(g);
    for (std::uint32_t v = 0; v < g.virtual_capacity(); ++v) {
      auto in = g.in(vnode(v)).size(), out = g.out(vnode(v)).size();
      ASSERT_GT(in * out, in + out + 1) << "seed " << seed;
    }
    EXPECT_EQ(g.num_virtuals() + events.size(), before_virtuals);
    EXPECT_LE(g.physical_edge_count() + g.num_virtuals(), before_edges + before_virtuals) << "seed " << seed;
    EXPECT_EQ(oracle::api_edges(g), oracle::api_edges(raw.graph));
  }
}

TEST(Extract, FullExpansionWhenRatioIsSmall) {
  Catalog cat;
  load_coauthors(cat);
  auto res = extract_condensed(kCoauthor, cat);
  EXPECT_EQ(res.graph.num_virtuals(), 0u);
}

TEST(Extract, NonChainFallsBackToFullEvaluation) {
  Catalog cat;
  load_coauthors(cat);
  auto prog = parse("Nodes(ID) :- Author(ID, _n).\nEdges(ID1, ID2) :- AuthorPub(ID1, P), AuthorPub(Q, P), AuthorPub(ID2, P).");
  auto res = extract_condensed(prog, cat);
  EXPECT_TRUE(res.report.case2);
  EXPECT_EQ(res.graph.repr(), Repr::Exp);
  EXPECT_EQ(oracle::api_edges(res.graph), oracle::brute_force_edges(prog, cat));
}

TEST(Extract, MissingEndpointIsAnError) {
  Catalog cat;
  cat.load_csv_text("id\n1\n", "N");
  cat.load_csv_text("a,b\n1,2\n", "E");
  EXPECT_THROW(extract_condensed("Nodes(ID) :- N(ID).\nEdges(A, B) :- E(A, B).", cat), ExtractError);
  EXPECT_THROW(extract_expanded(parse("Nodes(ID) :- N(ID).\nEdges(A, B) :- E(A, B)."), cat), ExtractError);
}

TEST(Extract, EdgePropertiesOnlyForFullEvaluation) {
  Catalog cat;
  cat.load_csv_text("id\n1\n2\n", "N");
  cat.load_csv_text("a,b,w\n1,2,9\n", "E");
  EXPECT_THROW(extract_condensed("Nodes(ID) :- N(ID).\nEdges(A, B, W) :- E(A, B, W).", cat), ExtractError);
  auto g = extract_expanded(parse("Nodes(ID) :- N(ID).\nEdges(A, B, W) :- E(A, B, W)."), cat);
  ASSERT_NE(g.edge_props(g.index_of("1"), g.index_of("2")), nullptr);
  EXPECT_EQ(g.edge_props(g.index_of("1"), g.index_of("2"))->at("W"), "9");
}

TEST(Extract, UnknownTable) {
  Catalog cat;
  EXPECT_THROW(extract_condensed(kCoauthor, cat), CatalogError);
}
