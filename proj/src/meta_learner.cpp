#include "recsel/meta_learner.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "recsel/csv.hpp"
#include "recsel/error.hpp"
#include "recsel/parallel.hpp"

namespace recsel {

std::string to_string(MetaKind k) { return k == MetaKind::user_only ? "user_only" : "user_algo"; }

MetaKind meta_kind_from_string(const std::string& s) {
  if (s == "user_only") return MetaKind::user_only;
  if (s == "user_algo") return MetaKind::user_algo;
  throw ValidationError("unknown meta-learner kind '" + s + "'");
}

void MetaDataset::validate() const {
  if (rows.rows() != targets.rows() || size() != row_users.size()) {
    throw ValidationError("meta dataset: row count differs from key count");
  }
  if (kind == MetaKind::user_algo && row_algos.size() != size()) {
    throw ValidationError("meta dataset: missing algorithm keys");
  }
  if (static_cast<std::size_t>(rows.cols()) != feature_names.size() || user_feature_count > feature_names.size()) {
    throw ValidationError("meta dataset: feature count differs from schema");
  }
  if (!rows.allFinite()) throw ValidationError("meta dataset: non-finite feature value");
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    const double t = targets.data()[i];
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("meta dataset: target outside [0,1]");
  }
}

MetaDataset MetaDataset::select_users(const std::vector<std::string>& users) const {
  const std::set<std::string> keep(users.begin(), users.end());
  std::vector<Eigen::Index> idx;
  for (std::size_t r = 0; r < row_users.size(); ++r) {
    if (keep.count(row_users[r])) idx.push_back(static_cast<Eigen::Index>(r));
  }
  MetaDataset out;
  out.kind = kind;
  out.feature_names = feature_names;
  out.user_feature_count = user_feature_count;
  out.algo_ids = algo_ids;
  out.rows = rows(idx, Eigen::all);
  out.targets = targets(idx, Eigen::all);
  for (auto r : idx) {
    out.row_users.push_back(row_users[static_cast<std::size_t>(r)]);
    if (!row_algos.empty()) out.row_algos.push_back(row_algos[static_cast<std::size_t>(r)]);
  }
  return out;
}

namespace {

void check_users(const PerformanceMatrix& P, const FeatureTable& F) {
  for (const auto& u : P.user_ids) {
    if (!F.contains(u)) throw ValidationError("user '" + u + "' has no features");
  }
  const std::set<std::string> in_p(P.user_ids.begin(), P.user_ids.end());
  for (const auto& u : F.keys) {
    if (!in_p.count(u)) throw ValidationError("user '" + u + "' has features but no performance row");
  }
}

}  // namespace

MetaDataset build_user_only_dataset(const PerformanceMatrix& P, const FeatureTable& F) {
  P.validate();
  F.validate_finite();
  check_users(P, F);
  MetaDataset d;
  d.kind = MetaKind::user_only;
  d.feature_names = F.names;
  d.user_feature_count = F.names.size();
  d.algo_ids = P.algo_ids;
  const auto n = static_cast<Eigen::Index>(P.n_users());
  d.rows.resize(n, F.values.cols());
  for (Eigen::Index u = 0; u < n; ++u) {
    d.rows.row(u) = F.values.row(static_cast<Eigen::Index>(F.row_of(P.user_ids[static_cast<std::size_t>(u)])));
  }
  d.targets = P.values;
  d.row_users = P.user_ids;
  return d;
}

MetaDataset build_user_algo_dataset(const PerformanceMatrix& P, const FeatureTable& F, const FeatureTable& A) {
  P.validate();
  F.validate_finite();
  A.validate_finite();
  check_users(P, F);
  for (const auto& a : P.algo_ids) {
    if (!A.contains(a)) throw ValidationError("algorithm '" + a + "' has no features");
  }
  MetaDataset d;
  d.kind = MetaKind::user_algo;
  d.feature_names = F.names;
  d.feature_names.insert(d.feature_names.end(), A.names.begin(), A.names.end());
  d.user_feature_count = F.names.size();
  d.algo_ids = P.algo_ids;
  const auto nu = static_cast<Eigen::Index>(P.n_users());
  const auto na = static_cast<Eigen::Index>(P.n_algos());
  const auto fu = F.values.cols();
  const auto fa = A.values.cols();
  d.rows.resize(nu * na, fu + fa);
  d.targets.resize(nu * na, 1);
  std::vector<Eigen::Index> arow(static_cast<std::size_t>(na));
  for (Eigen::Index a = 0; a < na; ++a) arow[a] = static_cast<Eigen::Index>(A.row_of(P.algo_ids[a]));
  for (Eigen::Index u = 0; u < nu; ++u) {
    const auto frow = static_cast<Eigen::Index>(F.row_of(P.user_ids[u]));
    for (Eigen::Index a = 0; a < na; ++a) {
      const auto r = u * na + a;
      d.rows.row(r).head(fu) = F.values.row(frow);
      d.rows.row(r).tail(fa) = A.values.row(arow[a]);
      d.targets(r, 0) = P.values(u, a);
      d.row_users.push_back(P.user_ids[u]);
      d.row_algos.push_back(P.algo_ids[a]);
    }
  }
  return d;
}

bool MetaModel::operator==(const MetaModel& o) const {
  return kind == o.kind && regressors == o.regressors && user_feature_names == o.user_feature_names &&
         algo_feature_names == o.algo_feature_names && algo_ids == o.algo_ids && params == o.params;
}

MetaModel train_meta_model(const MetaDataset& data, const GBTParams& params, std::size_t threads) {
  data.validate();
  if (data.size() == 0) throw ValidationError("meta-learner: no training rows");
  MetaModel m;
  m.kind = data.kind;
  m.algo_ids = data.algo_ids;
  m.params = params;
  if (data.kind == MetaKind::user_only) {
    m.user_feature_names = data.feature_names;
    m.regressors.resize(data.algo_ids.size());
    parallel_for(m.regressors.size(), threads, [&](std::size_t a) {
      m.regressors[a] = fit_gbt(data.rows, data.targets.col(static_cast<Eigen::Index>(a)), params);
    });
  } else {
    const auto split = data.feature_names.begin() + static_cast<std::ptrdiff_t>(data.user_feature_count);
    m.user_feature_names.assign(data.feature_names.begin(), split);
    m.algo_feature_names.assign(split, data.feature_names.end());
    m.regressors.push_back(fit_gbt(data.rows, data.targets.col(0), params));
  }
  return m;
}

namespace {

// Column of `table` for each required name; throws listing missing/extra names.
std::vector<Eigen::Index> map_schema(const std::vector<std::string>& required, const FeatureTable& table,
                                     const std::string& what) {
  std::vector<std::string> missing, extra;
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t c = 0; c < table.names.size(); ++c) pos[table.names[c]] = static_cast<Eigen::Index>(c);
  const std::set<std::string> req(required.begin(), required.end());
  for (const auto& n : required) {
    if (!pos.count(n)) missing.push_back(n);
  }
  for (const auto& n : table.names) {
    if (!req.count(n)) extra.push_back(n);
  }
  if (!missing.empty() || !extra.empty()) {
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
      return s.empty() ? std::string("none") : s;
    };
    throw ValidationError(what + " schema mismatch; missing: " + list(missing) + "; extra: " + list(extra));
  }
  std::vector<Eigen::Index> out;
  for (const auto& n : required) out.push_back(pos[n]);
  return out;
}

}  // namespace

std::vector<double> predict_scores(const MetaModel& model, const FeatureTable& F, std::size_t user_row,
                                   const FeatureTable* A) {
  const auto ucols = map_schema(model.user_feature_names, F, "user feature");
  const auto u = static_cast<Eigen::Index>(user_row);
  std::vector<double> scores(model.algo_ids.size());
  if (model.kind == MetaKind::user_only) {
    Eigen::RowVectorXd x(static_cast<Eigen::Index>(ucols.size()));
    for (std::size_t c = 0; c < ucols.size(); ++c) x(static_cast<Eigen::Index>(c)) = F.values(u, ucols[c]);
    for (std::size_t a = 0; a < scores.size(); ++a) scores[a] = model.regressors[a].predict_row(x.data());
    return scores;
  }
  if (A == nullptr) throw ValidationError("user_algo model needs algorithm features");
  const auto acols = map_schema(model.algo_feature_names, *A, "algorithm feature");
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(ucols.size() + acols.size()));
  for (std::size_t c = 0; c < ucols.size(); ++c) x(static_cast<Eigen::Index>(c)) = F.values(u, ucols[c]);
  for (std::size_t a = 0; a < scores.size(); ++a) {
    const auto arow = static_cast<Eigen::Index>(A->row_of(model.algo_ids[a]));
    for (std::size_t c = 0; c < acols.size(); ++c) {
      x(static_cast<Eigen::Index>(ucols.size() + c)) = A->values(arow, acols[c]);
    }
    scores[a] = model.regressors[0].predict_row(x.data());
  }
  return scores;
}

Selection rank_scores(const std::vector<std::string>& algo_ids, const std::vector<double>& scores) {
  std::vector<std::size_t> order(algo_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return algo_ids[a] < algo_ids[b];
  });
  Selection s;
  for (auto i : order) {
    s.algo_ids.push_back(algo_ids[i]);
    s.scores.push_back(scores[i]);
  }
  return s;
}

Selection select(const MetaModel& model, const FeatureTable& F, std::size_t user_row, const FeatureTable* A) {
  return rank_scores(model.algo_ids, predict_scores(model, F, user_row, A));
}

std::vector<Selection> select_all(const MetaModel& model, const FeatureTable& F, const FeatureTable* A) {
  std::vector<Selection> out;
  out.reserve(F.keys.size());
  for (std::size_t r = 0; r < F.keys.size(); ++r) out.push_back(select(model, F, r, A));
  return out;
}

std::string save_meta_model(const MetaModel& model) {
  nlohmann::json j;
  j["format"] = "recsel-meta-model";
  j["version"] = 1;
  j["kind"] = to_string(model.kind);
  j["user_feature_names"] = model.user_feature_names;
  j["algo_feature_names"] = model.algo_feature_names;
  j["algo_ids"] = model.algo_ids;
  j["params"] = {{"n_trees", model.params.n_trees},
                 {"max_depth", model.params.max_depth},
                 {"learning_rate", model.params.learning_rate},
                 {"min_samples_leaf", model.params.min_samples_leaf},
                 {"subsample", model.params.subsample},
                 {"seed", model.params.seed}};
  auto& regs = j["regressors"] = nlohmann::json::array();
  for (const auto& r : model.regressors) regs.push_back(r.to_json());
  return j.dump(1) + "\n";
}

MetaModel load_meta_model(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "recsel-meta-model" || j.at("version") != 1) {
      throw ValidationError("unsupported meta-model format");
    }
    MetaModel m;
    m.kind = meta_kind_from_string(j.at("kind").get<std::string>());
    m.user_feature_names = j.at("user_feature_names").get<std::vector<std::string>>();
    m.algo_feature_names = j.at("algo_feature_names").get<std::vector<std::string>>();
    m.algo_ids = j.at("algo_ids").get<std::vector<std::string>>();
    const auto& p = j.at("params");
    m.params.n_trees = p.at("n_trees").get<std::size_t>();
    m.params.max_depth = p.at("max_depth").get<std::size_t>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
    m.params.subsample = p.at("subsample").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("regressors")) m.regressors.push_back(GBTEnsemble::from_json(r));
    const std::size_t expected = m.kind == MetaKind::user_only ? m.algo_ids.size() : 1;
    if (m.regressors.size() != expected) throw ValidationError("meta-model: wrong regressor count");
    const std::size_t width = m.user_feature_names.size() + m.algo_feature_names.size();
    for (const auto& r : m.regressors) {
      if (r.n_features != width) throw ValidationError("meta-model: regressor width differs from schema");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed meta-model: ") + e.what());
  }
}

void write_meta_model(const MetaModel& model, const std::filesystem::path& path) {
  csv::write_file(path, save_meta_model(model));
}

MetaModel read_meta_model(const std::filesystem::path& path) { return load_meta_model(csv::read_file(path)); }

}  // namespace recsel
