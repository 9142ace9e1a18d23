#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recsel/dataset.hpp"
#include "recsel/portfolio.hpp"

namespace recsel {

// Binary-relevance NDCG@k. `relevant` must be non-empty; IDCG is truncated
// at min(k, |relevant|).
double ndcg_at_k(std::span<const std::size_t> ranked, std::span<const std::size_t> relevant, std::size_t k = 10);
double ndcg_at_k(const RankedList& ranked, std::span<const std::size_t> relevant, std::size_t k = 10);

// users x algorithms matrix of NDCG@k values.
struct PerformanceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> user_ids;
  std::vector<std::string> algo_ids;

  std::size_t n_users() const { return user_ids.size(); }
  std::size_t n_algos() const { return algo_ids.size(); }

  // Throws ValidationError on shape, label or range violations.
  void validate() const;

  // Mean of column `a`, summed in row order.
  double column_mean(std::size_t a) const;
  std::size_t algo_index(const std::string& algo_id) const;

  PerformanceMatrix select_rows(std::span<const std::size_t> rows) const;
};

struct SingleBest {
  std::string algo_id;
  std::size_t index = 0;
  double perf = 0.0;
};

struct BaselineSummary {
  std::string sba_algo;
  double sba_perf = 0.0;
  double vba_perf = 0.0;
};

// Argmax of column means; ties go to the lexicographically smallest algo_id.
SingleBest single_best(const PerformanceMatrix& P);
// Mean over users of the row maximum.
double virtual_best(const PerformanceMatrix& P);
BaselineSummary baselines(const PerformanceMatrix& P);

struct GroundTruthOptions {
  std::size_t k = 10;
  std::size_t threads = 1;
  const ModelCache* cache = nullptr;
  // Called once per algorithm after its model is available.
  std::function<void(const std::string& algo_id, bool from_cache)> on_model;
};

PerformanceMatrix build_performance_matrix(const SplitDataset& split, const std::vector<RecommenderSpec>& portfolio,
                                           const GroundTruthOptions& options = {});

// Per-user NDCG of one fitted model over every user with held-out items.
std::vector<double> evaluate_model(const FittedModel& model, const SplitDataset& split, std::size_t k);

// Long-format CSV (user_id, algo_id, ndcg) plus a JSON sidecar carrying the
// label order and the evaluation config hash.
void write_performance_matrix(const PerformanceMatrix& P, const std::filesystem::path& csv_path,
                              const std::string& config_hash);
PerformanceMatrix read_performance_matrix(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace recsel
