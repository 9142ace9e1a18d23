#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace recsel {

struct GBTParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 3;  // 0 = unbounded
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 20;
  double subsample = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const GBTParams&) const = default;
};

std::string to_string(const GBTParams& p);

// Rows with x[feature] <= threshold go left. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const double* row, Eigen::Index stride = 1) const;
  std::size_t depth() const;
};

class GBTEnsemble {
 public:
  double base = 0.0;
  double learning_rate = 1.0;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;

  // `row` points at n_features values spaced `stride` apart.
  double predict_row(const double* row, Eigen::Index stride = 1) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  nlohmann::json to_json() const;
  static GBTEnsemble from_json(const nlohmann::json& j);
  bool operator==(const GBTEnsemble& o) const;
};

// Squared-loss gradient boosting with exact splits. Throws ValidationError on
// empty or non-finite input.
GBTEnsemble fit_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GBTParams& params);

// Single regression tree on residuals `r` over the rows listed in `sample`.
// Exposed for the split oracle tests.
RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, const std::vector<std::uint32_t>& sample,
                        std::size_t max_depth, std::size_t min_samples_leaf);

}  // namespace recsel
