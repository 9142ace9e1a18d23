#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "recsel/features.hpp"
#include "recsel/gbt.hpp"
#include "recsel/ground_truth.hpp"
#include "recsel/meta_learner.hpp"

namespace recsel {

struct FoldPlan {
  std::size_t n_folds = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> users;
  std::vector<std::size_t> fold_of;  // parallel to `users`

  std::vector<std::string> members(std::size_t fold) const;
  std::vector<std::string> complement(std::size_t fold) const;
};

// Seeded shuffle, then round-robin assignment.
FoldPlan make_folds(const std::vector<std::string>& users, std::size_t n_folds = 5, std::uint64_t seed = 0);

// n_trees {100,300} x max_depth {3,6} x learning_rate {0.05,0.1}.
std::vector<GBTParams> default_grid();

// Inner 80/20 user-grouped holdout; lowest holdout MSE wins, ties to the
// earlier grid point. Returns grid[0] when there is nothing to choose.
GBTParams tune_gbt(const MetaDataset& train, const std::vector<GBTParams>& grid, std::uint64_t seed,
                   std::size_t threads = 1);

enum class TieMode { value, index };
std::string to_string(TieMode m);
TieMode tie_mode_from_string(const std::string& s);

// Accuracies are percentages.
struct SelectorMetrics {
  double avg_ndcg = 0.0;
  double acc1 = 0.0;        // any attainer of the row maximum counts
  double acc3 = 0.0;
  double acc1_index = 0.0;  // only the first (lowest column) attainer counts
  double acc3_index = 0.0;
};

// `rankings[r]` is the ranked algo list for row r of P_test.
SelectorMetrics evaluate_selector(const PerformanceMatrix& P_test,
                                  const std::vector<std::vector<std::string>>& rankings);

// Percentage of rows whose entries are all zero.
double zero_row_rate(const PerformanceMatrix& P);

struct ExperimentConfig {
  std::size_t n_folds = 5;
  std::uint64_t seed = 42;
  bool sba_global = false;
  TieMode tie_mode = TieMode::value;
  std::vector<GBTParams> grid;  // empty: default_grid()
  std::size_t threads = 1;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train_users = 0;
  std::size_t n_test_users = 0;
  std::string sba_algo;
  double sba_perf = 0.0;
  double vba_perf = 0.0;
  double zero_row_rate = 0.0;
  SelectorMetrics user_only;
  SelectorMetrics user_algo;
  GBTParams params_user_only;
  GBTParams params_user_algo;
};

// One report row per dataset. Derived columns are computed from the perf columns
// and are NaN when undefined.
struct ReportRow {
  std::string dataset;
  std::string sba_algo;
  double sba_perf = 0.0;
  double vba_perf = 0.0;
  double perf_user_only = 0.0;
  double acc1_user_only = 0.0;
  double acc3_user_only = 0.0;
  double perf_user_algo = 0.0;
  double acc1_user_algo = 0.0;
  double acc3_user_algo = 0.0;
  double acc1_index_user_only = 0.0;
  double acc1_index_user_algo = 0.0;
  double zero_row_rate = 0.0;
  std::vector<FoldResult> folds;

  double gain_vs_sba() const;
  double gain_vs_user_ml() const;
  double gap_closed() const;
};

// Percentage helpers behind the derived columns.
double relative_gain(double value, double reference);
double gap_closed(double perf, double sba, double vba);

struct ExperimentReport {
  std::string tie_mode = "value";
  bool sba_global = false;
  std::vector<ReportRow> rows;

  // Column-wise unweighted mean of the rows; derived columns recomputed.
  ReportRow average() const;
};

// Trains both meta-learners on the users outside `fold`.
std::pair<MetaModel, MetaModel> train_fold_models(const PerformanceMatrix& P, const FeatureTable& F,
                                                  const FeatureTable& A, const FoldPlan& plan, std::size_t fold,
                                                  const ExperimentConfig& config, std::size_t threads = 1);

ReportRow run_experiment(const std::string& dataset, const PerformanceMatrix& P, const FeatureTable& F,
                         const FeatureTable& A, const ExperimentConfig& config);

// Full pipeline from a split dataset: ground truth, features, cross-validation.
ReportRow run_experiment(const std::string& dataset, const SplitDataset& split,
                         const std::vector<RecommenderSpec>& portfolio, const ExperimentConfig& config,
                         const ModelCache* cache = nullptr);

// Algorithm features for every spec, measured on its source file.
FeatureTable algo_feature_table(const std::vector<RecommenderSpec>& portfolio);

FeatureTable select_feature_rows(const FeatureTable& t, const std::vector<std::string>& keys);

inline constexpr std::size_t kReportColumnCount = 12;
extern const std::vector<std::string> kReportColumns;

std::string report_csv(const ExperimentReport& report);
std::string report_table(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);
ExperimentReport parse_report_json(const std::string& text);
// Concatenates rows; all inputs must share tie mode and SBA protocol.
ExperimentReport merge_reports(const std::vector<ExperimentReport>& reports);

}  // namespace recsel
