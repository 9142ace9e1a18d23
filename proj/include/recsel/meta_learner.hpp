#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recsel/features.hpp"
#include "recsel/gbt.hpp"
#include "recsel/ground_truth.hpp"

namespace recsel {

enum class MetaKind { user_only, user_algo };

std::string to_string(MetaKind k);
MetaKind meta_kind_from_string(const std::string& s);

// Training rows for one meta-learner.
//  user_only: one row per user, targets has one column per algorithm.
//  user_algo: one row per (user, algorithm) cell, targets has one column.
struct MetaDataset {
  MetaKind kind = MetaKind::user_only;
  Eigen::MatrixXd rows;
  Eigen::MatrixXd targets;
  std::vector<std::string> feature_names;
  std::size_t user_feature_count = 0;  // leading columns of `rows` that describe the user
  std::vector<std::string> algo_ids;   // P's algorithm order
  std::vector<std::string> row_users;  // user key of every row
  std::vector<std::string> row_algos;  // algo key of every row (user_algo only)

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  void validate() const;
  // Keeps the rows whose user is in `users`, in original order.
  MetaDataset select_users(const std::vector<std::string>& users) const;
};

// F must hold exactly the users of P; rows follow P's user order.
MetaDataset build_user_only_dataset(const PerformanceMatrix& P, const FeatureTable& F);
// Rows are user-major: (u0,a0), (u0,a1), ... Features are F's then A's columns.
MetaDataset build_user_algo_dataset(const PerformanceMatrix& P, const FeatureTable& F, const FeatureTable& A);

struct MetaModel {
  MetaKind kind = MetaKind::user_only;
  std::vector<GBTEnsemble> regressors;
  std::vector<std::string> user_feature_names;
  std::vector<std::string> algo_feature_names;  // empty for user_only
  std::vector<std::string> algo_ids;
  GBTParams params;

  bool operator==(const MetaModel& o) const;
};

// user_only fits one ensemble per algorithm column, in parallel over columns.
MetaModel train_meta_model(const MetaDataset& data, const GBTParams& params, std::size_t threads = 1);

struct Selection {
  std::vector<std::string> algo_ids;  // best first
  std::vector<double> scores;
};

// Predicted score for every algorithm in model order.
std::vector<double> predict_scores(const MetaModel& model, const FeatureTable& F, std::size_t user_row,
                                   const FeatureTable* A = nullptr);

// Ranks algorithms by predicted score, descending; ties by ascending algo_id.
Selection select(const MetaModel& model, const FeatureTable& F, std::size_t user_row, const FeatureTable* A = nullptr);
Selection rank_scores(const std::vector<std::string>& algo_ids, const std::vector<double>& scores);

// One selection per row of F.
std::vector<Selection> select_all(const MetaModel& model, const FeatureTable& F, const FeatureTable* A = nullptr);

std::string save_meta_model(const MetaModel& model);
MetaModel load_meta_model(const std::string& text);
void write_meta_model(const MetaModel& model, const std::filesystem::path& path);
MetaModel read_meta_model(const std::filesystem::path& path);

}  // namespace recsel
