#include "recsel/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "recsel/csv.hpp"
#include "recsel/error.hpp"
#include "recsel/parallel.hpp"

namespace recsel {

double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k) {
  if (k < 1) throw Error("ndcg_at_k: k must be >= 1");
  if (relevant.empty()) throw Error("ndcg_at_k: relevant set is empty");
  std::vector<std::size_t> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  rel.erase(std::unique(rel.begin(), rel.end()), rel.end());

  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(rel.begin(), rel.end(), ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, rel.size());
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

double ndcg_at_k(const RankedList& ranked, std::span<const std::size_t> relevant, std::size_t k) {
  return ndcg_at_k(std::span<const std::size_t>(ranked.items), relevant, k);
}

void PerformanceMatrix::validate() const {
  if (static_cast<std::size_t>(values.rows()) != user_ids.size() ||
      static_cast<std::size_t>(values.cols()) != algo_ids.size()) {
    throw ValidationError("performance matrix shape does not match its labels");
  }
  if (std::set<std::string>(user_ids.begin(), user_ids.end()).size() != user_ids.size()) {
    throw ValidationError("duplicate user_id in performance matrix");
  }
  if (std::set<std::string>(algo_ids.begin(), algo_ids.end()).size() != algo_ids.size()) {
    throw ValidationError("duplicate algo_id in performance matrix");
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("performance value out of [0,1] for user " + user_ids[r] + ", algo " + algo_ids[c]);
      }
    }
  }
}

double PerformanceMatrix::column_mean(std::size_t a) const {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < values.rows(); ++r) sum += values(r, static_cast<Eigen::Index>(a));
  return sum / static_cast<double>(values.rows());
}

std::size_t PerformanceMatrix::algo_index(const std::string& algo_id) const {
  auto it = std::find(algo_ids.begin(), algo_ids.end(), algo_id);
  if (it == algo_ids.end()) throw Error("unknown algo_id " + algo_id);
  return static_cast<std::size_t>(it - algo_ids.begin());
}

PerformanceMatrix PerformanceMatrix::select_rows(std::span<const std::size_t> rows) const {
  PerformanceMatrix out;
  out.algo_ids = algo_ids;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(rows[r]));
    out.user_ids.push_back(user_ids[rows[r]]);
  }
  return out;
}

SingleBest single_best(const PerformanceMatrix& P) {
  if (P.n_users() == 0 || P.n_algos() == 0) throw Error("single_best: empty performance matrix");
  SingleBest best;
  for (std::size_t a = 0; a < P.n_algos(); ++a) {
    const double m = P.column_mean(a);
    if (a == 0 || m > best.perf || (m == best.perf && P.algo_ids[a] < best.algo_id)) {
      best = {P.algo_ids[a], a, m};
    }
  }
  return best;
}

double virtual_best(const PerformanceMatrix& P) {
  if (P.n_users() == 0 || P.n_algos() == 0) throw Error("virtual_best: empty performance matrix");
  double sum = 0.0;
  for (Eigen::Index r = 0; r < P.values.rows(); ++r) sum += P.values.row(r).maxCoeff();
  return sum / static_cast<double>(P.values.rows());
}

BaselineSummary baselines(const PerformanceMatrix& P) {
  const auto sb = single_best(P);
  return {sb.algo_id, sb.perf, virtual_best(P)};
}

std::vector<double> evaluate_model(const FittedModel& model, const SplitDataset& split, std::size_t k) {
  std::vector<double> out;
  for (std::size_t u = 0; u < split.train.n_users(); ++u) {
    if (split.test[u].empty()) continue;
    const auto rel = split.relevant_items(u);
    out.push_back(ndcg_at_k(recommend(model, u, k), rel, k));
  }
  return out;
}

PerformanceMatrix build_performance_matrix(const SplitDataset& split, const std::vector<RecommenderSpec>& portfolio,
                                           const GroundTruthOptions& options) {
  if (portfolio.empty()) throw Error("ground truth: empty portfolio");
  PerformanceMatrix P;
  for (const auto& s : portfolio) P.algo_ids.push_back(s.algo_id);
  for (std::size_t u = 0; u < split.train.n_users(); ++u) {
    if (!split.test[u].empty()) P.user_ids.push_back(split.train.user_id(u));
  }
  P.values.resize(static_cast<Eigen::Index>(P.user_ids.size()), static_cast<Eigen::Index>(portfolio.size()));

  const auto data_hash = options.cache ? dataset_hash(split.train) : 0;
  std::vector<char> cached(portfolio.size(), 0);
  parallel_for(portfolio.size(), options.threads, [&](std::size_t a) {
    const auto& spec = portfolio[a];
    FittedModel model;
    try {
      std::optional<FittedModel> hit;
      std::uint64_t sh = 0;
      if (options.cache) {
        sh = spec_hash(spec);
        hit = options.cache->load(data_hash, sh);
      }
      if (hit) {
        model = std::move(*hit);
        cached[a] = 1;
      } else {
        model = fit(spec, split.train);
        if (options.cache) options.cache->store(data_hash, sh, model);
      }
    } catch (const std::exception& e) {
      throw Error("ground truth: fitting " + spec.algo_id + " failed: " + e.what());
    }
    const auto col = evaluate_model(model, split, options.k);
    for (std::size_t r = 0; r < col.size(); ++r) {
      P.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = col[r];
    }
  });
  if (options.on_model) {
    for (std::size_t a = 0; a < portfolio.size(); ++a) options.on_model(portfolio[a].algo_id, cached[a] != 0);
  }
  P.validate();
  return P;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_performance_matrix(const PerformanceMatrix& P, const std::filesystem::path& csv_path,
                              const std::string& config_hash) {
  std::ostringstream out;
  out << "user_id,algo_id,ndcg\n";
  for (std::size_t r = 0; r < P.n_users(); ++r) {
    for (std::size_t a = 0; a < P.n_algos(); ++a) {
      out << csv::escape(P.user_ids[r]) << ',' << csv::escape(P.algo_ids[a]) << ','
          << csv::format_double(P.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a))) << '\n';
    }
  }
  csv::write_file(csv_path, out.str());
  nlohmann::json side = {{"format", "recsel-performance-matrix"},
                         {"version", 1},
                         {"metric", "ndcg"},
                         {"user_ids", P.user_ids},
                         {"algo_ids", P.algo_ids},
                         {"config_hash", config_hash}};
  csv::write_file(sidecar_path(csv_path), side.dump(2) + "\n");
}

PerformanceMatrix read_performance_matrix(const std::filesystem::path& csv_path) {
  auto table = csv::read_table(csv_path);
  const auto cu = table.column("user_id");
  const auto ca = table.column("algo_id");
  const auto cn = table.column("ndcg");
  if (cu == std::string::npos || ca == std::string::npos || cn == std::string::npos) {
    throw SchemaError("performance matrix CSV needs user_id, algo_id, ndcg columns: " + csv_path.string());
  }
  PerformanceMatrix P;
  const auto side_path = sidecar_path(csv_path);
  if (std::filesystem::exists(side_path)) {
    auto side = nlohmann::json::parse(csv::read_file(side_path));
    P.user_ids = side.at("user_ids").get<std::vector<std::string>>();
    P.algo_ids = side.at("algo_ids").get<std::vector<std::string>>();
  } else {
    for (const auto& row : table.rows) {
      if (std::find(P.user_ids.begin(), P.user_ids.end(), row[cu]) == P.user_ids.end()) P.user_ids.push_back(row[cu]);
      if (std::find(P.algo_ids.begin(), P.algo_ids.end(), row[ca]) == P.algo_ids.end()) P.algo_ids.push_back(row[ca]);
    }
  }
  std::map<std::string, std::size_t> urow, acol;
  for (std::size_t i = 0; i < P.user_ids.size(); ++i) urow[P.user_ids[i]] = i;
  for (std::size_t i = 0; i < P.algo_ids.size(); ++i) acol[P.algo_ids[i]] = i;
  P.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(P.user_ids.size()),
                                       static_cast<Eigen::Index>(P.algo_ids.size()), -1.0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) throw ParseError("wrong field count", table.line_numbers[r]);
    auto u = urow.find(row[cu]);
    auto a = acol.find(row[ca]);
    if (u == urow.end() || a == acol.end()) throw ParseError("label not in sidecar", table.line_numbers[r]);
    P.values(static_cast<Eigen::Index>(u->second), static_cast<Eigen::Index>(a->second)) = csv::parse_double(row[cn]);
  }
  P.validate();  // missing cells stay at -1 and fail here
  return P;
}

}  // namespace recsel
