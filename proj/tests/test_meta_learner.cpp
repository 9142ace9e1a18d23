#include <functional>
#include <numeric>

#include "doctest.h"
#include "recsel/error.hpp"
#include "recsel/meta_learner.hpp"
#include "support.hpp"

using namespace recsel;

namespace {

GBTParams small_params() {
  GBTParams p;
  p.n_trees = 60;
  p.max_depth = 4;
  p.min_samples_leaf = 5;
  p.seed = 1;
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

FeatureTable rows_of(const FeatureTable& t, std::size_t begin, std::size_t end) {
  std::vector<std::string> keys(t.keys.begin() + static_cast<std::ptrdiff_t>(begin),
                                t.keys.begin() + static_cast<std::ptrdiff_t>(end));
  FeatureTable out;
  out.names = t.names;
  out.keys = keys;
  out.values = t.values.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  return out;
}

}  // namespace

TEST_CASE("dataset shapes and row order") {
  auto p = testing::planted_user_threshold(1, 3);
  const auto uo = build_user_only_dataset(p.P, p.F);
  CHECK(uo.rows.rows() == 3);
  CHECK(uo.rows.cols() == 15);
  CHECK(uo.targets.cols() == 9);
  CHECK(uo.targets == p.P.values);

  const auto ua = build_user_algo_dataset(p.P, p.F, p.A);
  CHECK(ua.rows.rows() == 27);
  CHECK(ua.rows.cols() == 29);
  CHECK(ua.targets.cols() == 1);
  CHECK(ua.user_feature_count == 15);
  CHECK(ua.row_users[10] == "u001");
  CHECK(ua.row_algos[10] == "a001");
  CHECK(ua.targets(10, 0) == p.P.values(1, 1));
  CHECK(ua.rows(10, 0) == p.F.values(1, 0));
  CHECK(ua.rows(10, 15) == p.A.values(1, 0));

  const auto sub = ua.select_users({"u002", "u000"});
  CHECK(sub.size() == 18);
  CHECK(sub.row_users.front() == "u000");
  CHECK(sub.row_users.back() == "u002");
}

TEST_CASE("feature coverage errors name the offender") {
  auto p = testing::planted_user_threshold(2, 4);
  auto F = rows_of(p.F, 0, 3);
  CHECK(error_of([&] { build_user_only_dataset(p.P, F); }).find("u003") != std::string::npos);
  const std::vector<std::size_t> first3 = {0, 1, 2};
  const auto P3 = p.P.select_rows(first3);
  CHECK(error_of([&] { build_user_algo_dataset(P3, p.F, p.A); }).find("u003") != std::string::npos);
  auto A = rows_of(p.A, 0, 8);
  CHECK(error_of([&] { build_user_algo_dataset(p.P, p.F, A); }).find("a008") != std::string::npos);
}

TEST_CASE("ranking breaks ties by algorithm id") {
  const auto s = rank_scores({"c", "a", "b"}, {0.7, 0.3, 0.7});
  CHECK(s.algo_ids == std::vector<std::string>{"b", "c", "a"});
  CHECK(s.scores == std::vector<double>{0.7, 0.7, 0.3});
}

TEST_CASE("identical algorithm features give identical predictions") {
  auto p = testing::planted_user_threshold(3, 40);
  p.A.values.setConstant(0.5);
  const auto model = train_meta_model(build_user_algo_dataset(p.P, p.F, p.A), small_params());
  for (std::size_t u = 0; u < 5; ++u) {
    const auto s = predict_scores(model, p.F, u, &p.A);
    for (double v : s) CHECK(v == s.front());
  }
}

TEST_CASE("planted threshold is recovered on held-out users") {
  auto p = testing::planted_user_threshold(4, 300);
  std::vector<std::size_t> train(240), test(60);
  std::iota(train.begin(), train.end(), 0);
  std::iota(test.begin(), test.end(), 240);
  const auto Ptrain = p.P.select_rows(train);
  const auto Ftrain = rows_of(p.F, 0, 240);
  const auto Ftest = rows_of(p.F, 240, 300);
  for (auto kind : {MetaKind::user_only, MetaKind::user_algo}) {
    CAPTURE(to_string(kind));
    const auto data = kind == MetaKind::user_only ? build_user_only_dataset(Ptrain, Ftrain)
                                                  : build_user_algo_dataset(Ptrain, Ftrain, p.A);
    const auto model = train_meta_model(data, small_params(), 2);
    const auto picks = select_all(model, Ftest, kind == MetaKind::user_algo ? &p.A : nullptr);
    int hits = 0;
    for (std::size_t r = 0; r < 60; ++r) {
      Eigen::Index best;
      p.P.values.row(static_cast<Eigen::Index>(240 + r)).maxCoeff(&best);
      hits += picks[r].algo_ids.front() == p.P.algo_ids[static_cast<std::size_t>(best)];
    }
    CHECK(hits >= 57);
  }
}

TEST_CASE("training is independent of thread count") {
  auto p = testing::planted_user_threshold(5, 60);
  const auto data = build_user_only_dataset(p.P, p.F);
  CHECK(train_meta_model(data, small_params(), 1) == train_meta_model(data, small_params(), 4));
}

TEST_CASE("features are matched by name, not position") {
  auto p = testing::planted_algo_offsets(6, 50);
  const auto model = train_meta_model(build_user_algo_dataset(p.P, p.F, p.A), small_params());
  auto F = p.F;
  // Swap two columns together with their names.
  F.values.col(0).swap(F.values.col(3));
  std::swap(F.names[0], F.names[3]);
  CHECK(predict_scores(model, F, 7, &p.A) == predict_scores(model, p.F, 7, &p.A));

  auto renamed = p.F;
  renamed.names[2] = "bogus";
  const auto msg = error_of([&] { predict_scores(model, renamed, 0, &p.A); });
  CHECK(msg.find("redundancy") != std::string::npos);
  CHECK(msg.find("bogus") != std::string::npos);
  CHECK_THROWS(predict_scores(model, p.F, 0));
}

TEST_CASE("model save and load round trip") {
  auto p = testing::planted_user_threshold(7, 50);
  for (auto kind : {MetaKind::user_only, MetaKind::user_algo}) {
    const auto data = kind == MetaKind::user_only ? build_user_only_dataset(p.P, p.F)
                                                  : build_user_algo_dataset(p.P, p.F, p.A);
    const auto model = train_meta_model(data, small_params());
    auto dir = testing::temp_dir("meta");
    write_meta_model(model, dir / "m.json");
    const auto back = read_meta_model(dir / "m.json");
    CHECK(back == model);
    const FeatureTable* A = kind == MetaKind::user_algo ? &p.A : nullptr;
    CHECK(predict_scores(back, p.F, 3, A) == predict_scores(model, p.F, 3, A));
  }
  CHECK_THROWS(load_meta_model("{\"format\":\"something\"}"));
  CHECK_THROWS(load_meta_model("not json"));
}
