#include "recsel/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "recsel/code_metrics.hpp"
#include "recsel/csv.hpp"
#include "recsel/error.hpp"
#include "recsel/parallel.hpp"
#include "recsel/random.hpp"
#include "recsel/user_features.hpp"

namespace recsel {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<std::string> FoldPlan::members(std::size_t fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(users[i]);
  }
  return out;
}

std::vector<std::string> FoldPlan::complement(std::size_t fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(users[i]);
  }
  return out;
}

FoldPlan make_folds(const std::vector<std::string>& users, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds == 0) throw ValidationError("number of folds must be positive");
  if (users.size() < n_folds) {
    throw ValidationError("cannot split " + std::to_string(users.size()) + " users into " + std::to_string(n_folds) +
                          " folds");
  }
  if (std::set<std::string>(users.begin(), users.end()).size() != users.size()) {
    throw ValidationError("duplicate user in fold assignment");
  }
  std::vector<std::size_t> order(users.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.users = users;
  plan.fold_of.assign(users.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) plan.fold_of[order[pos]] = pos % n_folds;
  return plan;
}

std::vector<GBTParams> default_grid() {
  std::vector<GBTParams> grid;
  for (std::size_t trees : {100, 300}) {
    for (std::size_t depth : {3, 6}) {
      for (double lr : {0.05, 0.1}) {
        GBTParams p;
        p.n_trees = trees;
        p.max_depth = depth;
        p.learning_rate = lr;
        p.min_samples_leaf = 20;
        p.subsample = 0.8;
        grid.push_back(p);
      }
    }
  }
  return grid;
}

namespace {

std::vector<std::string> distinct_users(const MetaDataset& d) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& u : d.row_users) {
    if (seen.insert(u).second) out.push_back(u);
  }
  return out;
}

double holdout_mse(const MetaModel& m, const MetaDataset& holdout) {
  double sse = 0.0;
  for (std::size_t t = 0; t < m.regressors.size(); ++t) {
    const auto pred = m.regressors[t].predict(holdout.rows);
    sse += (pred - holdout.targets.col(static_cast<Eigen::Index>(t))).squaredNorm();
  }
  return sse / static_cast<double>(holdout.targets.size());
}

}  // namespace

GBTParams tune_gbt(const MetaDataset& train, const std::vector<GBTParams>& grid, std::uint64_t seed,
                   std::size_t threads) {
  if (grid.empty()) throw ValidationError("tuning grid is empty");
  if (grid.size() == 1) return grid[0];
  const auto users = distinct_users(train);
  if (users.size() < 5) return grid[0];
  const auto inner = make_folds(users, 5, seed);
  const auto fit_part = train.select_users(inner.complement(0));
  const auto holdout = train.select_users(inner.members(0));
  std::vector<double> mse(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t g) { mse[g] = holdout_mse(train_meta_model(fit_part, grid[g]), holdout); });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (mse[g] < mse[best]) best = g;
  }
  return grid[best];
}

std::string to_string(TieMode m) { return m == TieMode::value ? "value" : "index"; }

TieMode tie_mode_from_string(const std::string& s) {
  if (s == "value") return TieMode::value;
  if (s == "index") return TieMode::index;
  throw ValidationError("unknown tie mode '" + s + "' (expected value or index)");
}

SelectorMetrics evaluate_selector(const PerformanceMatrix& P_test,
                                  const std::vector<std::vector<std::string>>& rankings) {
  if (rankings.size() != P_test.n_users()) throw ValidationError("selections do not cover every test user");
  SelectorMetrics m;
  const auto n = P_test.n_users();
  if (n == 0) return m;
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t a = 0; a < P_test.n_algos(); ++a) col[P_test.algo_ids[a]] = static_cast<Eigen::Index>(a);
  for (std::size_t r = 0; r < n; ++r) {
    const auto u = static_cast<Eigen::Index>(r);
    const auto& rank = rankings[r];
    if (rank.empty()) throw ValidationError("empty selection for user " + P_test.user_ids[r]);
    Eigen::Index first_max = 0;
    const double best = P_test.values.row(u).maxCoeff(&first_max);
    auto index_of = [&](const std::string& id) {
      auto it = col.find(id);
      if (it == col.end()) throw ValidationError("selection names unknown algorithm " + id);
      return it->second;
    };
    const auto top = index_of(rank[0]);
    m.avg_ndcg += P_test.values(u, top);
    if (P_test.values(u, top) == best) m.acc1 += 1.0;
    if (top == first_max) m.acc1_index += 1.0;
    bool hit = false, hit_index = false;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, rank.size()); ++k) {
      const auto a = index_of(rank[k]);
      hit = hit || P_test.values(u, a) == best;
      hit_index = hit_index || a == first_max;
    }
    if (hit) m.acc3 += 1.0;
    if (hit_index) m.acc3_index += 1.0;
  }
  const double dn = static_cast<double>(n);
  m.avg_ndcg /= dn;
  m.acc1 *= 100.0 / dn;
  m.acc3 *= 100.0 / dn;
  m.acc1_index *= 100.0 / dn;
  m.acc3_index *= 100.0 / dn;
  return m;
}

double zero_row_rate(const PerformanceMatrix& P) {
  if (P.n_users() == 0) return 0.0;
  std::size_t zero = 0;
  for (Eigen::Index u = 0; u < P.values.rows(); ++u) {
    if ((P.values.row(u).array() == 0.0).all()) ++zero;
  }
  return 100.0 * static_cast<double>(zero) / static_cast<double>(P.n_users());
}

double relative_gain(double value, double reference) {
  return reference > 0.0 ? 100.0 * (value - reference) / reference : kNaN;
}

double gap_closed(double perf, double sba, double vba) { return vba > sba ? 100.0 * (perf - sba) / (vba - sba) : kNaN; }

double ReportRow::gain_vs_sba() const { return relative_gain(perf_user_algo, sba_perf); }
double ReportRow::gain_vs_user_ml() const { return relative_gain(perf_user_algo, perf_user_only); }
double ReportRow::gap_closed() const { return recsel::gap_closed(perf_user_algo, sba_perf, vba_perf); }

namespace {

// Numeric fields that are averaged across folds and across datasets.
struct Field {
  const char* name;
  double ReportRow::*ptr;
};

constexpr Field kFields[] = {
    {"sba_perf", &ReportRow::sba_perf},
    {"vba_perf", &ReportRow::vba_perf},
    {"perf_user_only", &ReportRow::perf_user_only},
    {"acc1_user_only", &ReportRow::acc1_user_only},
    {"acc3_user_only", &ReportRow::acc3_user_only},
    {"perf_user_algo", &ReportRow::perf_user_algo},
    {"acc1_user_algo", &ReportRow::acc1_user_algo},
    {"acc3_user_algo", &ReportRow::acc3_user_algo},
    {"acc1_index_user_only", &ReportRow::acc1_index_user_only},
    {"acc1_index_user_algo", &ReportRow::acc1_index_user_algo},
    {"zero_row_rate", &ReportRow::zero_row_rate},
};

std::string most_frequent(const std::vector<std::string>& v) {
  std::map<std::string, std::size_t> count;
  for (const auto& s : v) ++count[s];
  std::string best;
  std::size_t best_n = 0;
  for (const auto& [s, n] : count) {
    if (n > best_n) {
      best = s;
      best_n = n;
    }
  }
  return best;
}

ReportRow fold_row(const FoldResult& f, TieMode mode) {
  ReportRow r;
  r.sba_algo = f.sba_algo;
  r.sba_perf = f.sba_perf;
  r.vba_perf = f.vba_perf;
  r.perf_user_only = f.user_only.avg_ndcg;
  r.perf_user_algo = f.user_algo.avg_ndcg;
  const bool v = mode == TieMode::value;
  r.acc1_user_only = v ? f.user_only.acc1 : f.user_only.acc1_index;
  r.acc3_user_only = v ? f.user_only.acc3 : f.user_only.acc3_index;
  r.acc1_user_algo = v ? f.user_algo.acc1 : f.user_algo.acc1_index;
  r.acc3_user_algo = v ? f.user_algo.acc3 : f.user_algo.acc3_index;
  r.acc1_index_user_only = f.user_only.acc1_index;
  r.acc1_index_user_algo = f.user_algo.acc1_index;
  r.zero_row_rate = f.zero_row_rate;
  return r;
}

ReportRow mean_row(const std::vector<ReportRow>& rows) {
  ReportRow out;
  if (rows.empty()) return out;
  for (const auto& f : kFields) {
    double s = 0.0;
    for (const auto& r : rows) s += r.*(f.ptr);
    out.*(f.ptr) = s / static_cast<double>(rows.size());
  }
  return out;
}

}  // namespace

ReportRow ExperimentReport::average() const {
  auto out = mean_row(rows);
  out.dataset = "Average";
  out.sba_algo = "-";
  return out;
}

FeatureTable select_feature_rows(const FeatureTable& t, const std::vector<std::string>& keys) {
  FeatureTable out;
  out.names = t.names;
  out.keys = keys;
  out.values.resize(static_cast<Eigen::Index>(keys.size()), t.values.cols());
  for (std::size_t r = 0; r < keys.size(); ++r) {
    out.values.row(static_cast<Eigen::Index>(r)) = t.values.row(static_cast<Eigen::Index>(t.row_of(keys[r])));
  }
  return out;
}

namespace {

std::vector<GBTParams> seeded_grid(const ExperimentConfig& config, std::uint64_t seed) {
  auto grid = config.grid.empty() ? default_grid() : config.grid;
  for (auto& p : grid) p.seed = seed;
  return grid;
}

struct FoldData {
  MetaDataset user_only;
  MetaDataset user_algo;
};

std::pair<MetaModel, MetaModel> train_on(const FoldData& data, const std::vector<std::string>& train_users,
                                         const ExperimentConfig& config, std::uint64_t seed, std::size_t threads,
                                         GBTParams* chosen_uo = nullptr, GBTParams* chosen_ua = nullptr) {
  const auto grid = seeded_grid(config, seed);
  const auto uo = data.user_only.select_users(train_users);
  const auto ua = data.user_algo.select_users(train_users);
  const auto p_uo = tune_gbt(uo, grid, seed, threads);
  const auto p_ua = tune_gbt(ua, grid, seed, threads);
  if (chosen_uo) *chosen_uo = p_uo;
  if (chosen_ua) *chosen_ua = p_ua;
  return {train_meta_model(uo, p_uo, threads), train_meta_model(ua, p_ua, threads)};
}

std::vector<std::size_t> rows_of(const PerformanceMatrix& P, const std::vector<std::string>& users) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t u = 0; u < P.n_users(); ++u) idx[P.user_ids[u]] = u;
  std::vector<std::size_t> out;
  for (const auto& u : users) out.push_back(idx.at(u));
  return out;
}

}  // namespace

std::pair<MetaModel, MetaModel> train_fold_models(const PerformanceMatrix& P, const FeatureTable& F,
                                                  const FeatureTable& A, const FoldPlan& plan, std::size_t fold,
                                                  const ExperimentConfig& config, std::size_t threads) {
  const FoldData data{build_user_only_dataset(P, F), build_user_algo_dataset(P, F, A)};
  return train_on(data, plan.complement(fold), config, config.seed + fold, threads);
}

ReportRow run_experiment(const std::string& dataset, const PerformanceMatrix& P, const FeatureTable& F,
                         const FeatureTable& A, const ExperimentConfig& config) {
  const FoldData data{build_user_only_dataset(P, F), build_user_algo_dataset(P, F, A)};
  const auto plan = make_folds(P.user_ids, config.n_folds, config.seed);
  const auto global_sba = single_best(P);
  const std::size_t threads = resolve_threads(config.threads);
  const std::size_t inner = std::max<std::size_t>(1, threads / config.n_folds);

  std::vector<FoldResult> folds(config.n_folds);
  parallel_for(config.n_folds, threads, [&](std::size_t k) {
    FoldResult& res = folds[k];
    res.fold = k;
    const auto train_users = plan.complement(k);
    // Users keep P's row order inside each fold.
    auto train_rows = rows_of(P, train_users);
    auto test_rows = rows_of(P, plan.members(k));
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    const auto P_train = P.select_rows(train_rows);
    const auto P_test = P.select_rows(test_rows);
    res.n_train_users = P_train.n_users();
    res.n_test_users = P_test.n_users();

    const auto seed = config.seed + k;
    auto [m_uo, m_ua] = train_on(data, P_train.user_ids, config, seed, inner, &res.params_user_only,
                                 &res.params_user_algo);

    const auto sba = config.sba_global ? global_sba : single_best(P_train);
    res.sba_algo = sba.algo_id;
    res.sba_perf = P_test.column_mean(P_test.algo_index(sba.algo_id));
    res.vba_perf = virtual_best(P_test);
    res.zero_row_rate = zero_row_rate(P_test);

    const auto F_test = select_feature_rows(F, P_test.user_ids);
    std::vector<std::vector<std::string>> r_uo, r_ua;
    for (std::size_t u = 0; u < P_test.n_users(); ++u) {
      r_uo.push_back(select(m_uo, F_test, u).algo_ids);
      r_ua.push_back(select(m_ua, F_test, u, &A).algo_ids);
    }
    res.user_only = evaluate_selector(P_test, r_uo);
    res.user_algo = evaluate_selector(P_test, r_ua);
  });

  std::vector<ReportRow> per_fold;
  std::vector<std::string> sba_choices;
  for (const auto& f : folds) {
    per_fold.push_back(fold_row(f, config.tie_mode));
    sba_choices.push_back(f.sba_algo);
  }
  auto row = mean_row(per_fold);
  row.dataset = dataset;
  row.sba_algo = most_frequent(sba_choices);
  row.folds = std::move(folds);
  return row;
}

FeatureTable algo_feature_table(const std::vector<RecommenderSpec>& portfolio) {
  std::vector<code::AlgoFeatureVector> rows;
  for (const auto& spec : portfolio) {
    auto f = code::extract_algo_features(spec.algo_id, spec.source_path, code::profile_for(spec.source_path));
    code::validate(f);
    rows.push_back(std::move(f));
  }
  return code::to_feature_table(rows);
}

ReportRow run_experiment(const std::string& dataset, const SplitDataset& split,
                         const std::vector<RecommenderSpec>& portfolio, const ExperimentConfig& config,
                         const ModelCache* cache) {
  GroundTruthOptions opts;
  opts.threads = config.threads;
  opts.cache = cache;
  PerformanceMatrix P;
  try {
    P = build_performance_matrix(split, portfolio, opts);
  } catch (const Error& e) {
    throw Error(std::string("ground-truth stage: ") + e.what());
  }
  FeatureTable F, A;
  try {
    F = to_feature_table(extract_user_features(split, config.threads));
    A = algo_feature_table(portfolio);
  } catch (const Error& e) {
    throw Error(std::string("features stage: ") + e.what());
  }
  try {
    return run_experiment(dataset, P, F, A, config);
  } catch (const Error& e) {
    throw Error(std::string("experiment stage: ") + e.what());
  }
}

// ---- report output ----

const std::vector<std::string> kReportColumns = {
    "sba_algo",       "sba_perf",    "vba_perf",        "perf_user_only", "acc1_user_only", "acc3_user_only",
    "perf_user_algo", "gain_vs_sba", "gain_vs_user_ml", "acc1_user_algo", "acc3_user_algo", "gap_closed"};

namespace {

std::string num(double v) { return std::isnan(v) ? "n/a" : csv::format_double(v); }

std::string fixed(double v, int digits, bool sign = false) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits);
  if (sign && v >= 0) out << '+';
  out << v;
  return out.str();
}

std::vector<std::string> csv_fields(const ReportRow& r) {
  return {r.dataset,
          r.sba_algo,
          num(r.sba_perf),
          num(r.vba_perf),
          num(r.perf_user_only),
          num(r.acc1_user_only),
          num(r.acc3_user_only),
          num(r.perf_user_algo),
          num(r.gain_vs_sba()),
          num(r.gain_vs_user_ml()),
          num(r.acc1_user_algo),
          num(r.acc3_user_algo),
          num(r.gap_closed()),
          num(r.acc1_index_user_only),
          num(r.acc1_index_user_algo),
          num(r.zero_row_rate)};
}

nlohmann::json metrics_json(const SelectorMetrics& m) {
  return {{"avg_ndcg", m.avg_ndcg},
          {"acc1", m.acc1},
          {"acc3", m.acc3},
          {"acc1_index", m.acc1_index},
          {"acc3_index", m.acc3_index}};
}

SelectorMetrics metrics_from(const nlohmann::json& j) {
  SelectorMetrics m;
  m.avg_ndcg = j.at("avg_ndcg");
  m.acc1 = j.at("acc1");
  m.acc3 = j.at("acc3");
  m.acc1_index = j.at("acc1_index");
  m.acc3_index = j.at("acc3_index");
  return m;
}

nlohmann::json params_json(const GBTParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"learning_rate", p.learning_rate},
          {"min_samples_leaf", p.min_samples_leaf},
          {"subsample", p.subsample},
          {"seed", p.seed}};
}

GBTParams params_from(const nlohmann::json& j) {
  GBTParams p;
  p.n_trees = j.at("n_trees");
  p.max_depth = j.at("max_depth");
  p.learning_rate = j.at("learning_rate");
  p.min_samples_leaf = j.at("min_samples_leaf");
  p.subsample = j.at("subsample");
  p.seed = j.at("seed");
  return p;
}

// NaN has no JSON literal; derived columns become null.
nlohmann::json maybe(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

nlohmann::json row_json(const ReportRow& r) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["sba_algo"] = r.sba_algo;
  for (const auto& f : kFields) j[f.name] = r.*(f.ptr);
  j["gain_vs_sba"] = maybe(r.gain_vs_sba());
  j["gain_vs_user_ml"] = maybe(r.gain_vs_user_ml());
  j["gap_closed"] = maybe(r.gap_closed());
  auto& folds = j["folds"] = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"n_train_users", f.n_train_users},
                     {"n_test_users", f.n_test_users},
                     {"sba_algo", f.sba_algo},
                     {"sba_perf", f.sba_perf},
                     {"vba_perf", f.vba_perf},
                     {"zero_row_rate", f.zero_row_rate},
                     {"user_only", metrics_json(f.user_only)},
                     {"user_algo", metrics_json(f.user_algo)},
                     {"params_user_only", params_json(f.params_user_only)},
                     {"params_user_algo", params_json(f.params_user_algo)}});
  }
  return j;
}

ReportRow row_from(const nlohmann::json& j) {
  ReportRow r;
  r.dataset = j.at("dataset");
  r.sba_algo = j.at("sba_algo");
  for (const auto& f : kFields) r.*(f.ptr) = j.at(f.name).get<double>();
  for (const auto& fj : j.at("folds")) {
    FoldResult f;
    f.fold = fj.at("fold");
    f.n_train_users = fj.at("n_train_users");
    f.n_test_users = fj.at("n_test_users");
    f.sba_algo = fj.at("sba_algo");
    f.sba_perf = fj.at("sba_perf");
    f.vba_perf = fj.at("vba_perf");
    f.zero_row_rate = fj.at("zero_row_rate");
    f.user_only = metrics_from(fj.at("user_only"));
    f.user_algo = metrics_from(fj.at("user_algo"));
    f.params_user_only = params_from(fj.at("params_user_only"));
    f.params_user_algo = params_from(fj.at("params_user_algo"));
    r.folds.push_back(std::move(f));
  }
  return r;
}

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::vector<std::string> header = {"dataset"};
  header.insert(header.end(), kReportColumns.begin(), kReportColumns.end());
  header.insert(header.end(), {"acc1_index_user_only", "acc1_index_user_algo", "zero_row_rate"});
  std::string out = csv::join(header) + "\n";
  for (const auto& r : report.rows) out += csv::join(csv_fields(r)) + "\n";
  out += csv::join(csv_fields(report.average())) + "\n";
  return out;
}

std::string report_table(const ExperimentReport& report) {
  const std::vector<std::string> header = {"Dataset",    "SBA Algo",  "SBA Perf",   "VBA Perf",
                                            "M(U) Perf",  "M(U) Top1", "M(U) Top3",  "M(U+A) Perf",
                                            "Gain vs SBA", "Gain vs M(U)", "M(U+A) Top1", "M(U+A) Top3",
                                            "Gap Closed"};
  std::vector<std::vector<std::string>> cells;
  auto add = [&](const ReportRow& r) {
    cells.push_back({r.dataset, r.sba_algo, fixed(r.sba_perf, 3), fixed(r.vba_perf, 3), fixed(r.perf_user_only, 3),
                     fixed(r.acc1_user_only, 2) + "%", fixed(r.acc3_user_only, 2) + "%", fixed(r.perf_user_algo, 3),
                     fixed(r.gain_vs_sba(), 2, true) + "%", fixed(r.gain_vs_user_ml(), 2, true) + "%",
                     fixed(r.acc1_user_algo, 2) + "%", fixed(r.acc3_user_algo, 2) + "%",
                     fixed(r.gap_closed(), 2) + "%"});
  };
  for (const auto& r : report.rows) add(r);
  add(report.average());
  for (auto& row : cells) {
    for (auto& c : row) {
      if (c == "n/a%") c = "n/a";
    }
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2) {
        out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << row[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  total += 2 * (width.size() - 1);
  const std::string rule(total, '-');
  out << rule << '\n';
  for (std::size_t r = 0; r + 1 < cells.size(); ++r) line(cells[r]);
  out << rule << '\n';
  line(cells.back());
  out << "Top-1 ties: " << report.tie_mode << "; SBA: " << (report.sba_global ? "full matrix" : "per training fold")
      << '\n';
  return out.str();
}

std::string report_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["format"] = "recsel-report";
  j["version"] = 1;
  j["tie_mode"] = report.tie_mode;
  j["sba_global"] = report.sba_global;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  auto avg = row_json(report.average());
  avg.erase("folds");
  j["average"] = avg;
  return j.dump(1) + "\n";
}

ExperimentReport parse_report_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "recsel-report" || j.at("version") != 1) throw ValidationError("unsupported report format");
    ExperimentReport r;
    r.tie_mode = j.at("tie_mode");
    r.sba_global = j.at("sba_global");
    for (const auto& row : j.at("rows")) r.rows.push_back(row_from(row));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

ExperimentReport merge_reports(const std::vector<ExperimentReport>& reports) {
  if (reports.empty()) throw ValidationError("no reports to merge");
  ExperimentReport out;
  out.tie_mode = reports[0].tie_mode;
  out.sba_global = reports[0].sba_global;
  std::set<std::string> names;
  for (const auto& r : reports) {
    if (r.tie_mode != out.tie_mode || r.sba_global != out.sba_global) {
      throw ValidationError("reports use different tie modes or SBA protocols");
    }
    for (const auto& row : r.rows) {
      if (!names.insert(row.dataset).second) throw ValidationError("dataset '" + row.dataset + "' appears twice");
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace recsel
