#include <fstream>
#include <set>

#include "doctest.h"
#include "recsel/error.hpp"
#include "recsel/ground_truth.hpp"
#include "recsel/portfolio.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace recsel;

namespace {

RecommenderSpec spec_of(const std::string& id) {
  for (auto& s : default_portfolio(testing::kSourceDir)) {
    if (s.algo_id == id) return s;
  }
  throw std::runtime_error("no spec " + id);
}

// Two user groups, each consuming only its own half of the catalog.
Dataset block_dataset(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  for (int u = 0; u < 40; ++u) {
    const int block = u % 2;
    std::set<int> chosen;
    while (chosen.size() < 8) chosen.insert(block * 20 + static_cast<int>(uniform_index(rng, 20)));
    int t = 0;
    for (int i : chosen) rows.emplace_back("u" + std::to_string(u), "i" + std::to_string(i), t++);
  }
  return testing::make_dataset(rows);
}

double in_block_rate(const FittedModel& m, const Dataset& ds, std::size_t k) {
  std::size_t hits = 0, total = 0;
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    const int block = std::stoi(ds.user_id(u).substr(1)) % 2;
    for (auto i : recommend(m, u, k).items) {
      const int item = std::stoi(ds.item_id(i).substr(1));
      hits += (item / 20 == block) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("portfolio has the nine members") {
  auto specs = default_portfolio(testing::kSourceDir);
  std::vector<std::string> ids;
  for (const auto& s : specs) ids.push_back(s.algo_id);
  CHECK(ids == std::vector<std::string>{"pop_a", "pop_b", "itemknn_a", "itemknn_b", "bpr_a", "bpr_b", "implicitmf",
                                        "ease", "fpmc"});
  for (const auto& s : specs) CHECK(std::filesystem::exists(s.source_path));
}

TEST_CASE("top_k breaks ties by item index and skips excluded items") {
  Eigen::VectorXd s(5);
  s << 1.0, 3.0, 3.0, 2.0, 3.0;
  const std::vector<std::size_t> excl = {2};
  auto r = top_k(s, excl, 3);
  CHECK(r.items == std::vector<std::size_t>{1, 4, 3});
  CHECK(r.scores == std::vector<double>{3.0, 3.0, 2.0});
}

TEST_CASE("EASE weights match a per-column constrained ridge solve") {
  Rng rng(3);
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  for (int u = 0; u < 15; ++u) {
    for (int i = 0; i < 6; ++i) {
      if (uniform01(rng) < 0.45 || i == u % 6) rows.emplace_back("u" + std::to_string(u), "i" + std::to_string(i), i);
    }
  }
  auto ds = testing::make_dataset(rows);
  auto spec = spec_of("ease");
  spec.params["lambda"] = 4.0;
  auto model = fit(spec, ds);
  const auto& B = model.matrix("weights");
  REQUIRE(B.rows() == 6);
  const auto want = oracle::ease_weights(oracle::binary_matrix(ds), 4.0);
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(B(j, j) == 0.0);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(B(i, j) - want(i, j)) <= 1e-8);
  }
}

TEST_CASE("ItemKNN hand example") {
  // A={u1,u2,u3,u4}, B={u1,u2}, C={u2}: cos(A,B)=2/sqrt(8), cos(A,C)=1/2, cos(B,C)=1/sqrt(2)
  auto ds = testing::make_dataset({{"u1", "A", 1}, {"u1", "B", 2}, {"u2", "A", 1}, {"u2", "B", 2}, {"u2", "C", 3},
                                   {"u3", "A", 1}, {"u4", "A", 1}});
  for (const char* id : {"itemknn_a", "itemknn_b"}) {
    auto spec = spec_of(id);
    if (spec.params.count("shrinkage")) spec.params["shrinkage"] = 0.0;
    auto m = fit(spec, ds);
    auto scores = m.scores(3);  // u4 has seen only A
    CHECK(scores(1) == doctest::Approx(2.0 / std::sqrt(8.0)));
    CHECK(scores(2) == doctest::Approx(0.5));
    auto r = recommend(m, 3, 10);
    CHECK(r.items == std::vector<std::size_t>{1, 2});
  }
  // shrinkage scales each similarity by c / (c + beta), c = co-occurrence count
  auto spec = spec_of("itemknn_b");
  spec.params["shrinkage"] = 2.0;
  auto m = fit(spec, ds);
  CHECK(m.scores(3)(1) == doctest::Approx(2.0 / std::sqrt(8.0) * 2.0 / 4.0));
  CHECK(m.scores(3)(2) == doctest::Approx(0.5 * 1.0 / 3.0));
}

TEST_CASE("popularity baselines") {
  std::vector<Interaction> v = {{"u1", "a", 1, 5.0}, {"u2", "a", 1, 1.0}, {"u3", "b", 1, 4.0}, {"u1", "c", 2, 5.0}};
  Dataset ds(v);
  auto a = fit(spec_of("pop_a"), ds);
  CHECK(a.scores(0)(0) == 2.0);
  CHECK(a.scores(0)(1) == 1.0);
  auto b = fit(spec_of("pop_b"), ds);
  // count * mean rating / max rating
  CHECK(b.scores(0)(0) == doctest::Approx(2.0 * 3.0 / 5.0));
  CHECK(b.scores(0)(1) == doctest::Approx(1.0 * 4.0 / 5.0));
  CHECK(b.scores(0)(2) == doctest::Approx(1.0));
}

TEST_CASE("latent-factor and EASE models learn block structure") {
  auto ds = block_dataset(5);
  for (const char* id : {"bpr_a", "bpr_b"}) {
    auto m = fit(spec_of(id), ds);
    CHECK_MESSAGE(in_block_rate(m, ds, 5) > 0.8, id);
  }
  // 32 factors on a 40x40 toy mostly memorizes each user's own items.
  auto als = spec_of("implicitmf");
  als.params["factors"] = 8;
  CHECK(in_block_rate(fit(als, ds), ds, 5) > 0.8);
  CHECK(in_block_rate(fit(spec_of("ease"), ds), ds, 5) > 0.8);
}

TEST_CASE("ALS objective never increases") {
  auto ds = block_dataset(9);
  auto spec = spec_of("implicitmf");
  auto m = fit(spec, ds);
  const auto& loss = m.matrix("loss");
  REQUIRE(loss.cols() == 16);
  for (Eigen::Index s = 1; s < loss.cols(); ++s) CHECK(loss(0, s) <= loss(0, s - 1) * (1 + 1e-12));
  CHECK(loss(0, 15) == doctest::Approx(detail::implicit_mf_objective(ds, m.matrix("user_factors"),
                                                                     m.matrix("item_factors"), 40, 0.1)));
}

TEST_CASE("FPMC follows sequential transitions that popularity cannot") {
  // Every user walks the ring i -> i+1 from a random start; the held-out item
  // is the successor of the last training item.
  Rng rng(21);
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  const int n_items = 30;
  for (int u = 0; u < 60; ++u) {
    const int start = static_cast<int>(uniform_index(rng, n_items));
    for (int t = 0; t < 10; ++t) {
      rows.emplace_back("u" + std::to_string(u), "i" + std::to_string((start + t) % n_items), t);
    }
  }
  auto split = temporal_split(testing::make_dataset(rows), 0.9);
  auto hit_rate = [&](const std::string& id) {
    auto m = fit(spec_of(id), split.train);
    std::size_t hits = 0;
    for (std::size_t u = 0; u < split.train.n_users(); ++u) {
      const auto rel = split.relevant_items(u);
      const auto top = recommend(m, u, 1).items;
      hits += (!top.empty() && top[0] == rel[0]) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(split.train.n_users());
  };
  const double markov = hit_rate("fpmc");
  const double pop = hit_rate("pop_a");
  CHECK(markov > 0.8);
  CHECK(pop < 0.6);
}

TEST_CASE("fitting is deterministic and the cache round-trips bit-exactly") {
  auto ds = block_dataset(2);
  auto dir = testing::temp_dir("cache");
  ModelCache cache(dir);
  for (const auto& spec : default_portfolio(testing::kSourceDir)) {
    auto a = fit(spec, ds);
    auto b = fit(spec, ds);
    CHECK(serialize_model(a) == serialize_model(b));
    cache.store(dataset_hash(ds), spec_hash(spec), a);
    auto c = cache.load(dataset_hash(ds), spec_hash(spec));
    REQUIRE(c.has_value());
    CHECK(serialize_model(*c) == serialize_model(a));
    for (std::size_t u = 0; u < ds.n_users(); u += 7) CHECK(c->scores(u) == a.scores(u));
  }
  auto spec = spec_of("bpr_a");
  auto other = spec;
  other.seed = 43;
  CHECK(spec_hash(spec) != spec_hash(other));
}

TEST_CASE("manifest round trip and validation errors") {
  auto dir = testing::temp_dir("manifest");
  auto specs = default_portfolio(testing::kSourceDir);
  std::ofstream(dir / "p.ini") << write_portfolio_manifest(specs, dir);
  auto back = load_portfolio_manifest(dir / "p.ini");
  REQUIRE(back.size() == specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(back[i].algo_id == specs[i].algo_id);
    CHECK(back[i].params == specs[i].params);
    CHECK(spec_hash(back[i]) != 0);
    CHECK(std::filesystem::equivalent(back[i].source_path, specs[i].source_path));
  }
  auto shipped = load_portfolio_manifest(testing::kSourceDir / "config" / "portfolio.ini");
  CHECK(shipped.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(spec_hash(shipped[i]) == spec_hash(specs[i]));

  std::ofstream(dir / "bad.ini") << "[x]\nimplementation = ease\nsource = " << specs[7].source_path.string()
                                 << "\nparam.lamda = 3\n";
  try {
    load_portfolio_manifest(dir / "bad.ini");
    FAIL("expected validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad.ini:4") != std::string::npos);
    CHECK(std::string(e.what()).find("lamda") != std::string::npos);
  }
  std::ofstream(dir / "bad2.ini") << "[x]\nimplementation = nope\n";
  CHECK_THROWS_AS(load_portfolio_manifest(dir / "bad2.ini"), ValidationError);
}
