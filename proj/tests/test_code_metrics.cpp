#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "recsel/code_metrics.hpp"
#include "recsel/error.hpp"
#include "recsel/portfolio.hpp"
#include "support.hpp"

using namespace recsel;
using namespace recsel::code;

namespace {

const std::vector<std::string> kSources = {"pop_a", "pop_b", "itemknn_a", "itemknn_b", "bpr_a",
                                           "bpr_b", "implicitmf", "ease", "fpmc"};

std::filesystem::path source_of(const std::string& id) {
  return testing::kSourceDir / "src" / "portfolio" / (id + ".cpp");
}

SyntaxGraph path_graph(std::size_t n) {
  SyntaxGraph g;
  g.root = g.add("n", std::nullopt);
  for (std::size_t i = 1; i < n; ++i) g.add("n", i - 1);
  return g;
}

}  // namespace

TEST_CASE("halstead on a one-line function") {
  const auto unit = analyze_source("int add(int a, int b) { return a + b; }", profile("cpp"));
  const auto c = halstead_counts(unit);
  // operators ( , { return + ;  operands add a b a b
  CHECK(c.distinct_operators == 6);
  CHECK(c.total_operators == 6);
  CHECK(c.distinct_operands == 3);
  CHECK(c.total_operands == 5);
  const auto h = halstead(c);
  CHECK(h.volume == doctest::Approx(11.0 * std::log2(9.0)).epsilon(1e-12));
  CHECK(h.difficulty == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(h.effort == doctest::Approx(55.0 * std::log2(9.0)).epsilon(1e-12));
  CHECK(unit.sloc == 1);
  CHECK(unit.lloc == 1);
  CHECK(cyclomatic(unit).blocks == 1);
  CHECK(cyclomatic(unit).average == 1.0);
}

TEST_CASE("halstead degenerate vocabulary") {
  HalsteadCounts c;
  c.distinct_operators = 1;
  c.total_operators = 4;
  const auto h = halstead(c);
  CHECK(h.volume == 0.0);
  CHECK(h.effort == 0.0);
  CHECK(halstead(HalsteadCounts{}).difficulty == 0.0);
}

TEST_CASE("cyclomatic counts decision tokens per block") {
  const char* src =
      "int f(int x) {\n"
      "  if (x > 0 && x < 3) return 1;\n"
      "  for (;;) {}\n"
      "  return 0;\n"
      "}\n"
      "int g() { return 2; }\n";
  const auto unit = analyze_source(src, profile("cpp"));
  const auto cc = cyclomatic(unit);
  CHECK(cc.blocks == 2);
  CHECK(cc.average == doctest::Approx((4.0 + 1.0) / 2.0));

  const char* py =
      "def f(x, y):\n"
      "    if x and y:\n"
      "        return 1\n"
      "    return 2\n";
  const auto pu = analyze_source(py, profile("python"));
  CHECK(cyclomatic(pu).blocks == 1);
  CHECK(cyclomatic(pu).average == 3.0);
  CHECK(pu.sloc == 4);
  CHECK(cyclomatic(analyze_source("int x = 1;", profile("cpp"))).blocks == 0);
}

TEST_CASE("lexer: comments, strings and multi-line tokens") {
  const char* src =
      "// a + b\n"
      "/* if while\n"
      "   for */\n"
      "const char* s = \"a + b // not a comment\";\n"
      "\n";
  const auto unit = analyze_source(src, profile("cpp"));
  CHECK(unit.sloc == 1);
  const auto c = halstead_counts(unit);
  // operators * =  ;  operands s and the string literal
  CHECK(c.total_operands == 2);
  CHECK(c.distinct_operators == 3);
  std::size_t comments = 0;
  for (const auto& t : unit.tokens) comments += t.cls == TokenClass::comment;
  CHECK(comments == 2);

  const auto py = analyze_source("x = '''a\nb\nc'''\n# trailing\n", profile("python"));
  CHECK(py.sloc == 3);
  CHECK(py.lloc == 1);
  CHECK(halstead_counts(py).total_operands == 2);
}

TEST_CASE("lexer rejects unbalanced delimiters") {
  CHECK_THROWS_AS(analyze_source("int f() { return (1; }", profile("cpp")), ParseError);
  CHECK_THROWS_AS(analyze_source("int f() {", profile("cpp")), ParseError);
}

TEST_CASE("graph metrics on a path and a star") {
  const auto p = ast_graph_metrics(path_graph(5));
  CHECK(p.node_count == 5);
  CHECK(p.edge_count == 4);
  CHECK(p.avg_degree == doctest::Approx(8.0 / 5.0));
  CHECK(p.max_degree == 2);
  CHECK(p.transitivity == 0.0);
  CHECK(p.avg_clustering == 0.0);
  CHECK(p.depth == 4);

  SyntaxGraph star;
  star.root = star.add("r", std::nullopt);
  for (int i = 0; i < 6; ++i) star.add("leaf", star.root);
  const auto s = ast_graph_metrics(star);
  CHECK(s.edge_count == 6);
  CHECK(s.max_degree == 6);
  CHECK(s.avg_degree == doctest::Approx(12.0 / 7.0));
  CHECK(s.depth == 1);
  CHECK(s.transitivity == 0.0);
}

TEST_CASE("graph metrics with a cross edge from an AST export") {
  // root -> a, root -> b, a -> b : one triangle plus a pendant c under b
  auto g = parse_ast_json(R"({"nodes":[{"id":"r","children":["a","b"]},{"id":"a","children":["b"]},
                              {"id":"b","children":["c"]},{"id":"c"}]})");
  CHECK(g.root == 0);
  CHECK_FALSE(g.is_tree());
  const auto m = ast_graph_metrics(g);
  CHECK(m.edge_count == 4);
  // triads: r 1, a 1, b 3, c 0 -> 3*1/5
  CHECK(m.transitivity == doctest::Approx(3.0 / 5.0));
  CHECK(m.avg_clustering == doctest::Approx((1.0 + 1.0 + 1.0 / 3.0) / 4.0));
  CHECK(m.depth == 2);

  CHECK_THROWS_AS(parse_ast_json(R"({"nodes":[{"id":1},{"id":2}]})"), ValidationError);
  CHECK_THROWS_AS(parse_ast_json(R"({"nodes":[{"id":1,"children":[7]}]})"), ValidationError);
  CHECK_THROWS_AS(parse_ast_json("{nope"), ParseError);
}

TEST_CASE("ast override replaces only graph features") {
  auto dir = testing::temp_dir("ast");
  {
    std::ofstream out(dir / "tri.json");
    out << R"({"root":0,"nodes":[{"id":0,"children":[1,2]},{"id":1,"children":[2]},{"id":2}]})";
  }
  const auto base = extract_algo_features("ease", source_of("ease"), profile("cpp"));
  const auto over = extract_algo_features("ease", source_of("ease"), profile("cpp"), dir / "tri.json");
  CHECK(over.sloc == base.sloc);
  CHECK(over.hal_effort == base.hal_effort);
  CHECK(over.average_cc_file == base.average_cc_file);
  CHECK(over.ast_node_count == 3);
  CHECK(over.ast_transitivity == doctest::Approx(1.0));
  CHECK(over.ast_avg_clustering == doctest::Approx(1.0));
}

TEST_CASE("portfolio sources: tree invariants and distinct vectors") {
  std::set<std::array<double, kAlgoFeatureCount>> seen;
  for (const auto& id : kSources) {
    CAPTURE(id);
    const auto unit = analyze_file(source_of(id), profile_for(source_of(id)));
    CHECK(unit.tree.is_tree());
    const auto f = algo_features(id, unit);
    CHECK_NOTHROW(validate(f));
    CHECK(f.ast_transitivity == 0.0);
    CHECK(f.ast_avg_clustering == 0.0);
    CHECK(f.ast_edge_count == f.ast_node_count - 1);
    CHECK(f.num_complexity_blocks >= 1);
    CHECK(f.lloc <= f.sloc);
    CHECK(f.hal_effort == doctest::Approx(f.hal_difficulty * f.hal_volume).epsilon(1e-12));
    seen.insert(f.values());
  }
  CHECK(seen.size() == kSources.size());
}

TEST_CASE("feature manifest round trip and column order") {
  std::vector<AlgoFeatureVector> rows;
  for (const auto& id : kSources) rows.push_back(extract_algo_features(id, source_of(id), profile("cpp")));
  auto dir = testing::temp_dir("manifest");
  write_feature_manifest(rows, dir / "m.csv");
  CHECK(load_feature_manifest(dir / "m.csv") == rows);

  // Reordered columns load the same values.
  std::ofstream(dir / "r.csv") << "hal_volume,algo_id,sloc,lloc,average_cc_file,num_complexity_blocks,"
                                  "hal_difficulty,hal_effort,ast_node_count,ast_edge_count,ast_avg_degree,"
                                  "ast_max_degree,ast_transitivity,ast_avg_clustering,ast_depth\n"
                                  "10,x,5,4,1,1,2,20,3,2,1.3333,2,0,0,1\n";
  const auto r = load_feature_manifest(dir / "r.csv");
  REQUIRE(r.size() == 1);
  CHECK(r[0].algo_id == "x");
  CHECK(r[0].hal_volume == 10);
  CHECK(r[0].sloc == 5);
  CHECK(to_feature_table(r).values.cols() == 14);
}

TEST_CASE("feature manifest errors") {
  auto dir = testing::temp_dir("manifest_bad");
  std::string header = "algo_id";
  for (auto n : kAlgoFeatureNames) header += "," + std::string(n);
  auto expect = [&](const std::string& body, const std::string& needle) {
    std::ofstream(dir / "b.csv") << body;
    try {
      load_feature_manifest(dir / "b.csv");
      FAIL("expected failure for " << needle);
    } catch (const Error& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  const std::string ok = "a,5,4,1,1,10,2,20,3,2,1,2,0,0,1\n";
  expect(header.substr(0, header.rfind(',')) + "\n", "missing column ast_depth");
  expect(header + ",extra\n", "extra");
  expect(header + "\n" + ok + ok, "row 2 (line 3): duplicate algo_id a");
  expect(header + "\na,5,4,1,1,10,2,21,3,2,1,2,0,0,1\n", "hal_effort");
  expect(header + "\na,5,6,1,1,10,2,20,3,2,1,2,0,0,1\n", "lloc exceeds sloc");
  expect(header + "\na,5,4,1,1,10,2,20,3,2,1,2,1.5,0,1\n", "transitivity");
  expect(header + "\na,5,4,1,1,10,2,20,3,2,1,2,0,0,abc\n", "ast_depth is not a number");
  expect(header + "\na,-5,4,1,1,10,2,20,3,2,1,2,0,0,1\n", "sloc must be finite");
}
