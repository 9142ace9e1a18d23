#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "recsel/error.hpp"
#include "recsel/experiment.hpp"
#include "support.hpp"

using namespace recsel;

namespace {

GBTParams quick() {
  GBTParams p;
  p.n_trees = 40;
  p.max_depth = 3;
  p.min_samples_leaf = 5;
  return p;
}

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.grid = {quick()};
  return c;
}

PerformanceMatrix small_matrix() {
  PerformanceMatrix P;
  P.user_ids = {"u0", "u1", "u2"};
  P.algo_ids = {"a", "b", "c"};
  P.values.resize(3, 3);
  P.values << 0.1, 0.5, 0.5,  //
      0.3, 0.2, 0.1,          //
      0.0, 0.0, 0.0;
  return P;
}

}  // namespace

TEST_CASE("folds partition users deterministically") {
  const auto users = testing::ids("u", 23);
  const auto a = make_folds(users, 5, 9);
  const auto b = make_folds(users, 5, 9);
  CHECK(a.fold_of == b.fold_of);
  std::set<std::string> seen;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto m = a.members(f);
    CHECK((m.size() == 4 || m.size() == 5));
    CHECK(m.size() + a.complement(f).size() == 23);
    for (const auto& u : m) CHECK(seen.insert(u).second);
  }
  CHECK(seen.size() == 23);
  CHECK_FALSE(make_folds(users, 5, 10).fold_of == a.fold_of);
  CHECK_THROWS_AS(make_folds(testing::ids("u", 3), 5, 0), ValidationError);
  CHECK_THROWS_AS(make_folds({"x", "y", "x", "z", "w", "v"}, 5, 0), ValidationError);
}

TEST_CASE("selector metrics on a hand example") {
  const auto P = small_matrix();
  const auto m = evaluate_selector(P, {{"c", "a", "b"}, {"b", "a", "c"}, {"c", "b", "a"}});
  CHECK(m.avg_ndcg == doctest::Approx(0.7 / 3.0).epsilon(1e-14));
  CHECK(m.acc1 == doctest::Approx(200.0 / 3.0));
  CHECK(m.acc3 == 100.0);
  CHECK(m.acc1_index == 0.0);
  CHECK(m.acc3_index == 100.0);
  CHECK(zero_row_rate(P) == doctest::Approx(100.0 / 3.0));

  // A perfect selector reaches the virtual best.
  const auto oracle = evaluate_selector(P, {{"b", "c", "a"}, {"a", "b", "c"}, {"a", "b", "c"}});
  CHECK(oracle.avg_ndcg == doctest::Approx(virtual_best(P)).epsilon(1e-14));
  CHECK(oracle.acc1 == 100.0);
  CHECK(oracle.acc1_index == 100.0);
  CHECK_THROWS(evaluate_selector(P, {{"a"}, {"zzz"}, {"a"}}));
  CHECK_THROWS(evaluate_selector(P, {{"a"}}));
}

TEST_CASE("derived report columns") {
  ReportRow r;
  r.sba_perf = 0.2;
  r.vba_perf = 0.6;
  r.perf_user_only = 0.25;
  r.perf_user_algo = 0.3;
  CHECK(std::abs(r.gain_vs_sba() - 100.0 * (0.3 - 0.2) / 0.2) <= 1e-12);
  CHECK(std::abs(r.gain_vs_user_ml() - 100.0 * (0.3 - 0.25) / 0.25) <= 1e-12);
  CHECK(std::abs(r.gap_closed() - 100.0 * (0.3 - 0.2) / (0.6 - 0.2)) <= 1e-12);
  // SBA already optimal: the gap is undefined.
  r.vba_perf = 0.2;
  CHECK(std::isnan(r.gap_closed()));
  r.sba_perf = 0.0;
  CHECK(std::isnan(r.gain_vs_sba()));

  ExperimentReport rep;
  r.dataset = "d";
  r.sba_algo = "x";
  rep.rows = {r};
  const auto csv = report_csv(rep);
  CHECK(csv.find("n/a") != std::string::npos);
  CHECK(csv.find("Average") != std::string::npos);
}

TEST_CASE("training folds never see held-out users") {
  auto p = testing::planted_user_threshold(21, 60);
  const auto plan = make_folds(p.P.user_ids, 5, 3);
  const auto cfg = quick_config();
  const auto base = train_fold_models(p.P, p.F, p.A, plan, 2, cfg);
  auto P2 = p.P;
  auto F2 = p.F;
  for (const auto& u : plan.members(2)) {
    const auto r = static_cast<Eigen::Index>(F2.row_of(u));
    P2.values.row(r).setConstant(0.99);
    F2.values.row(r).setConstant(-5.0);
  }
  const auto mutated = train_fold_models(P2, F2, p.A, plan, 2, cfg);
  CHECK(base.first == mutated.first);
  CHECK(base.second == mutated.second);
  // A training user does matter.
  auto P3 = p.P;
  P3.values.row(static_cast<Eigen::Index>(p.F.row_of(plan.complement(2).front()))).setConstant(0.99);
  CHECK_FALSE(train_fold_models(P3, p.F, p.A, plan, 2, cfg).first == base.first);
}

TEST_CASE("tuning prefers the grid point that generalizes") {
  auto p = testing::planted_user_threshold(31, 200, 0.2);
  const auto data = build_user_only_dataset(p.P, p.F);
  GBTParams overfit;
  overfit.n_trees = 200;
  overfit.max_depth = 0;
  overfit.learning_rate = 1.0;
  overfit.min_samples_leaf = 1;
  overfit.subsample = 1.0;
  GBTParams sane = quick();
  sane.min_samples_leaf = 20;
  const auto chosen = tune_gbt(data, {overfit, sane}, 1);
  CHECK(chosen == sane);
  CHECK(tune_gbt(data, {overfit}, 1) == overfit);
  const auto tiny = data.select_users({"u000", "u001", "u002"});
  CHECK(tune_gbt(tiny, {overfit, sane}, 1) == overfit);
  CHECK(default_grid().size() == 8);
}

TEST_CASE("cross-validated row is the fold mean and respects the virtual best") {
  auto p = testing::planted_user_threshold(41, 100);
  auto cfg = quick_config();
  const auto row = run_experiment("planted", p.P, p.F, p.A, cfg);
  REQUIRE(row.folds.size() == 5);
  double sba = 0, vba = 0, uo = 0, ua = 0;
  std::size_t tested = 0;
  for (const auto& f : row.folds) {
    CHECK(f.vba_perf >= f.sba_perf);
    CHECK(f.vba_perf >= f.user_only.avg_ndcg);
    CHECK(f.vba_perf >= f.user_algo.avg_ndcg);
    sba += f.sba_perf;
    vba += f.vba_perf;
    uo += f.user_only.avg_ndcg;
    ua += f.user_algo.avg_ndcg;
    tested += f.n_test_users;
    CHECK(f.n_train_users + f.n_test_users == 100);
  }
  CHECK(tested == 100);
  CHECK(std::abs(row.sba_perf - sba / 5) <= 1e-12);
  CHECK(std::abs(row.vba_perf - vba / 5) <= 1e-12);
  CHECK(std::abs(row.perf_user_only - uo / 5) <= 1e-12);
  CHECK(std::abs(row.perf_user_algo - ua / 5) <= 1e-12);

  cfg.threads = 3;
  ExperimentReport a, b;
  a.rows = {row};
  b.rows = {run_experiment("planted", p.P, p.F, p.A, cfg)};
  CHECK(report_json(a) == report_json(b));

  cfg.sba_global = true;
  const auto g = run_experiment("planted", p.P, p.F, p.A, cfg);
  CHECK(g.perf_user_only == row.perf_user_only);
  CHECK(g.perf_user_algo == row.perf_user_algo);
  CHECK(g.vba_perf == row.vba_perf);
}

TEST_CASE("report averaging, JSON round trip and merging") {
  ExperimentReport rep;
  for (int d = 0; d < 3; ++d) {
    ReportRow r;
    r.dataset = "d" + std::to_string(d);
    r.sba_algo = "pop_a";
    r.sba_perf = 0.1 * (d + 1);
    r.vba_perf = 0.5 + 0.1 * d;
    r.perf_user_only = 0.15 * (d + 1);
    r.perf_user_algo = 0.12 * (d + 1);
    r.acc1_user_only = 10.0 * d;
    rep.rows.push_back(r);
  }
  const auto avg = rep.average();
  CHECK(avg.dataset == "Average");
  CHECK(std::abs(avg.sba_perf - 0.2) <= 1e-12);
  CHECK(std::abs(avg.vba_perf - 0.6) <= 1e-12);
  CHECK(std::abs(avg.gap_closed() - gap_closed(0.24, 0.2, 0.6)) <= 1e-12);
  CHECK(std::abs(avg.acc1_user_only - 10.0) <= 1e-12);

  const auto back = parse_report_json(report_json(rep));
  CHECK(report_csv(back) == report_csv(rep));
  auto renamed = back;
  for (auto& r : renamed.rows) r.dataset += "_b";
  const auto merged = merge_reports({rep, renamed});
  CHECK(merged.rows.size() == 6);
  CHECK_THROWS(merge_reports({rep, back}));
  auto other = rep;
  other.tie_mode = "index";
  CHECK_THROWS(merge_reports({rep, other}));

  const auto header = report_csv(rep).substr(0, report_csv(rep).find('\n'));
  for (const auto& c : kReportColumns) CHECK(header.find(c) != std::string::npos);
  CHECK(kReportColumns.size() == kReportColumnCount);
}
