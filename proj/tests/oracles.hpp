#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recsel/dataset.hpp"
#include "recsel/gbt.hpp"
#include "recsel/random.hpp"

namespace oracle {

// Direct formula: DCG over the first k positions against the ideal ordering.
inline double ndcg(const std::vector<std::size_t>& ranked, const std::vector<std::size_t>& relevant, std::size_t k) {
  std::vector<std::size_t> rel;
  for (auto r : relevant) {
    if (std::find(rel.begin(), rel.end(), r) == rel.end()) rel.push_back(r);
  }
  double dcg = 0.0;
  for (std::size_t p = 0; p < ranked.size() && p < k; ++p) {
    if (std::find(rel.begin(), rel.end(), ranked[p]) != rel.end()) dcg += std::log(2.0) / std::log(p + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t p = 0; p < rel.size() && p < k; ++p) idcg += std::log(2.0) / std::log(p + 2.0);
  return dcg / idcg;
}

// EASE column j: ridge regression of X_j on the other columns, solved by QR on
// the augmented system [X_-j; sqrt(l) I] b = [X_j; 0].
inline Eigen::MatrixXd ease_weights(const Eigen::MatrixXd& X, double lambda) {
  const Eigen::Index n = X.cols();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(X.rows() + n - 1, n - 1);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(X.rows() + n - 1);
    y.head(X.rows()) = X.col(j);
    std::vector<Eigen::Index> others;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      const auto c = static_cast<Eigen::Index>(others.size());
      Z.col(c).head(X.rows()) = X.col(k);
      Z(X.rows() + c, c) = std::sqrt(lambda);
      others.push_back(k);
    }
    Eigen::VectorXd b = Z.colPivHouseholderQr().solve(y);
    for (std::size_t r = 0; r < others.size(); ++r) B(others[r], j) = b(static_cast<Eigen::Index>(r));
  }
  return B;
}

inline Eigen::MatrixXd binary_matrix(const recsel::Dataset& ds) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.n_users()), static_cast<Eigen::Index>(ds.n_items()));
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    for (auto i : ds.items_of(u)) X(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return X;
}

// Exhaustive best first split under squared loss: every feature, every
// threshold between consecutive distinct values, both sides >= min_leaf.
struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // parent SSE minus children SSE
  double left_mean = 0.0;
  double right_mean = 0.0;
  double runner_up = 0.0;  // best gain among the remaining candidates
};

inline double sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline Split best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t min_leaf) {
  std::vector<double> all(y.data(), y.data() + y.size());
  const double parent = sse(all);
  Split best;
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    std::vector<double> xs(X.col(f).data(), X.col(f).data() + X.rows());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      // Any value in [xs[k], xs[k+1]) partitions identically; pick the middle.
      double t = xs[k] + (xs[k + 1] - xs[k]) / 2.0;
      if (t >= xs[k + 1]) t = xs[k];
      std::vector<double> l, r;
      for (Eigen::Index i = 0; i < X.rows(); ++i) (X(i, f) <= t ? l : r).push_back(y(i));
      if (l.size() < min_leaf || r.size() < min_leaf) continue;
      const double gain = parent - sse(l) - sse(r);
      if (gain > best.gain) {
        best.runner_up = best.gain;
        best = {static_cast<int>(f), t, gain, mean(l), mean(r), best.runner_up};
      } else if (gain > best.runner_up) {
        best.runner_up = gain;
      }
    }
  }
  return best;
}

struct SplitReport {
  int cases = 0;
  int agree = 0;
  std::string first_failure;
};

// Compares fit_tree's root split with the exhaustive oracle on random
// datasets. Candidates whose gains are within 1e-9 of each other are
// treated as ties; then only the achieved gain is compared.
inline SplitReport check_split_oracle(std::uint64_t seed, int cases, std::size_t max_features = 1) {
  recsel::Rng rng(seed);
  SplitReport rep;
  for (int c = 0; c < cases; ++c) {
    const auto n = static_cast<Eigen::Index>(4 + recsel::uniform_index(rng, 57));
    const auto d = static_cast<Eigen::Index>(1 + recsel::uniform_index(rng, max_features));
    const std::size_t min_leaf = 1 + recsel::uniform_index(rng, 4);
    const bool discrete = recsel::uniform01(rng) < 0.4;
    const bool constant = c % 17 == 0;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index f = 0; f < d; ++f) {
        X(i, f) = discrete ? static_cast<double>(recsel::uniform_index(rng, 5)) : recsel::uniform01(rng);
      }
      y(i) = constant ? 0.25 : recsel::normal01(rng) + (X(i, 0) > (discrete ? 2.0 : 0.5) ? 1.0 : 0.0);
    }
    std::vector<std::uint32_t> sample(static_cast<std::size_t>(n));
    std::iota(sample.begin(), sample.end(), 0u);
    const auto tree = recsel::fit_tree(X, y, sample, 1, min_leaf);
    const auto want = best_split(X, y, min_leaf);
    ++rep.cases;
    bool ok = true;
    std::string why;
    const auto& root = tree.nodes.at(0);
    if (want.gain <= 1e-12) {
      ok = root.feature == -1 || want.gain > 0.0;
      if (!ok) why = "split where none improves";
    } else if (root.feature < 0) {
      ok = false;
      why = "no split, oracle gain " + std::to_string(want.gain);
    } else if (want.gain - want.runner_up > 1e-9) {
      ok = root.feature == want.feature && root.threshold == want.threshold &&
           std::abs(tree.nodes[root.left].value - want.left_mean) <= 1e-12 &&
           std::abs(tree.nodes[root.right].value - want.right_mean) <= 1e-12;
      if (!ok) {
        why = "got f" + std::to_string(root.feature) + "@" + std::to_string(root.threshold) + " want f" +
              std::to_string(want.feature) + "@" + std::to_string(want.threshold);
      }
    } else {
      std::vector<double> l, r;
      for (Eigen::Index i = 0; i < n; ++i) (X(i, root.feature) <= root.threshold ? l : r).push_back(y(i));
      const double got = sse(std::vector<double>(y.data(), y.data() + n)) - sse(l) - sse(r);
      ok = std::abs(got - want.gain) <= 1e-9;
      if (!ok) why = "tied gains differ";
    }
    if (ok) {
      ++rep.agree;
    } else if (rep.first_failure.empty()) {
      rep.first_failure = "case " + std::to_string(c) + ": " + why;
    }
  }
  return rep;
}

}  // namespace oracle
