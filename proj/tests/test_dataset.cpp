#include <fstream>

#include "doctest.h"
#include "recsel/csv.hpp"
#include "recsel/dataset.hpp"
#include "recsel/error.hpp"
#include "support.hpp"

using namespace recsel;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  auto dir = testing::temp_dir("dataset");
  auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("dense indices follow first appearance and histories are chronological") {
  auto ds = testing::make_dataset({{"b", "x", 30}, {"a", "y", 10}, {"b", "y", 10}, {"b", "z", 10}});
  CHECK(ds.n_users() == 2);
  CHECK(ds.user_id(0) == "b");
  CHECK(ds.item_id(2) == "z");
  auto h = ds.history(0);
  REQUIRE(h.size() == 3);
  // equal timestamps keep input order
  CHECK(ds.item_id(ds.item_of(h[0])) == "y");
  CHECK(ds.item_id(ds.item_of(h[1])) == "z");
  CHECK(ds.item_id(ds.item_of(h[2])) == "x");
  auto items = ds.items_of(0);
  CHECK(std::vector<std::size_t>(items.begin(), items.end()) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("train_count matches the integer form of the 80/20 rule") {
  // Oracle: position p (0-based) is train iff 5p < 4n, clamped so both parts are non-empty.
  for (std::size_t n = 2; n <= 200; ++n) {
    std::size_t expected = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (5 * p < 4 * n) ++expected;
    }
    expected = std::clamp<std::size_t>(expected, 1, n - 1);
    CHECK_MESSAGE(train_count(n, 0.8) == expected, "n = " << n);
  }
  CHECK(train_count(10, 0.8) == 8);
  CHECK(train_count(15, 0.8) == 12);
  CHECK(train_count(2, 0.8) == 1);
}

TEST_CASE("temporal split keeps the latest interactions for testing") {
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  for (int t = 9; t >= 0; --t) rows.emplace_back("u", "i" + std::to_string(t), t * 100);
  for (int t = 0; t < 5; ++t) rows.emplace_back("v", "j" + std::to_string(t), t);
  auto split = temporal_split(testing::make_dataset(rows), 0.8);
  REQUIRE(split.test.size() == 2);
  CHECK(split.train.history(0).size() == 8);
  CHECK(split.test[0].size() == 2);
  CHECK(split.test[0][0].item_id == "i8");
  CHECK(split.test[0][1].item_id == "i9");
  CHECK(split.split_point[0] == 800);
  CHECK(split.test[1].size() == 1);
  CHECK(split.test[1][0].item_id == "j4");
  for (std::size_t u = 0; u < 2; ++u) {
    for (auto r : split.train.history(u)) CHECK(split.train.interactions()[r].timestamp < split.split_point[u]);
  }
}

TEST_CASE("held-out items unknown to training get out-of-catalog ids") {
  auto split = temporal_split(testing::make_dataset({{"u", "a", 1}, {"u", "b", 2}, {"u", "c", 3}, {"u", "a", 4}}), 0.5);
  auto rel = split.relevant_items(0);
  REQUIRE(rel.size() == 2);
  CHECK(rel[0] == 0);  // "a" is in the training catalog
  CHECK(rel[1] >= split.train.n_items());
}

TEST_CASE("min-interaction filter is a single pass over users") {
  std::vector<std::tuple<std::string, std::string, std::int64_t>> rows;
  for (int i = 0; i < 10; ++i) rows.emplace_back("keep", "i" + std::to_string(i), i);
  for (int i = 0; i < 9; ++i) rows.emplace_back("drop", "only" + std::to_string(i), i);
  auto f = filter_min_interactions(testing::make_dataset(rows), 10);
  CHECK(f.n_users() == 1);
  CHECK(f.n_items() == 10);
  CHECK(f.size() == 10);
  CHECK_THROWS_AS(filter_min_interactions(testing::make_dataset(rows), 11), EmptyDatasetError);
}

TEST_CASE("sparsity") {
  CHECK(dataset_stats(2, 5, 3).sparsity == doctest::Approx(0.7));
  CHECK(dataset_stats(1, 1, 1).sparsity == 0.0);
  CHECK(dataset_stats(0, 0, 0).sparsity == 1.0);
}

TEST_CASE("timestamp parsing") {
  CHECK(parse_epoch_seconds("1700000000") == 1700000000);
  CHECK_FALSE(parse_epoch_seconds("17e3").has_value());
  CHECK(parse_iso8601("1970-01-02") == 86400);
  CHECK(parse_iso8601("2000-03-01T00:00:00Z") == 951868800);
  CHECK(parse_iso8601("2000-03-01 01:00:00+01:00") == 951868800);
  CHECK(parse_iso8601("2000-02-29T12:30:15.75") == 951827415);
  CHECK_FALSE(parse_iso8601("2001-02-29").has_value());
  CHECK_FALSE(parse_iso8601("yesterday").has_value());
}

TEST_CASE("loader maps schema columns and detects timestamp kind") {
  auto p = write_temp("a.tsv", "ts\tuid\titem\tstars\n2020-01-01\tu1\ti1\t4\n2020-01-02T10:00:00Z\tu1\ti2\t\n");
  Schema s;
  s.user = "uid";
  s.item = "item";
  s.timestamp = "ts";
  s.rating = "stars";
  auto r = load_interactions(p, FileFormat::tsv, s);
  REQUIRE(r.dataset.size() == 2);
  CHECK(r.dataset.interactions()[0].rating == 4.0);
  CHECK_FALSE(r.dataset.interactions()[1].rating.has_value());
  CHECK(r.dataset.interactions()[0].timestamp == 1577836800);
}

TEST_CASE("loader errors name the line; lenient mode skips") {
  auto p = write_temp("b.csv", "user_id,item_id,timestamp\nu1,i1,10\nu1,i2,notatime\nu2,i3\n");
  try {
    load_interactions(p, FileFormat::csv, Schema{});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  auto r = load_interactions(p, FileFormat::csv, Schema{}, ParseMode::lenient);
  CHECK(r.dataset.size() == 1);
  CHECK(r.skipped_rows == 2);

  auto q = write_temp("c.csv", "user,item_id,timestamp\nu1,i1,10\n");
  CHECK_THROWS_AS(load_interactions(q, FileFormat::csv, Schema{}), SchemaError);

  // epoch and ISO values may not be mixed within a file
  auto m = write_temp("d.csv", "user_id,item_id,timestamp\nu1,i1,10\nu1,i2,2020-01-01\n");
  CHECK_THROWS_AS(load_interactions(m, FileFormat::csv, Schema{}), ParseError);
}

TEST_CASE("quoted CSV fields") {
  auto f = csv::split_line(R"(a,"b,c","d""e",)");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "d\"e");
  CHECK(f[3].empty());
  CHECK(csv::escape("x,y") == "\"x,y\"");
  CHECK(csv::split_line(csv::escape("q\"r,s"))[0] == "q\"r,s");
}

TEST_CASE("toy fixture counts") {
  auto r = load_interactions(testing::fixture("toy_interactions.csv"), FileFormat::csv,
                             Schema{"user_id", "item_id", "timestamp", std::string("rating")});
  auto raw = dataset_stats(r.dataset);
  CHECK(raw.n_users == 53);
  CHECK(raw.n_items == 60);
  CHECK(raw.n_interactions == 1305);
  auto f = dataset_stats(filter_min_interactions(r.dataset, 10));
  CHECK(f.n_users == 50);
  CHECK(f.n_items == 60);
  CHECK(f.n_interactions == 1287);
}
