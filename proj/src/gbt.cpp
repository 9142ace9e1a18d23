#include "recsel/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "recsel/error.hpp"
#include "recsel/random.hpp"

namespace recsel {

void GBTParams::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning_rate must lie in (0,1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ValidationError("subsample must lie in (0,1]");
  if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
}

std::string to_string(const GBTParams& p) {
  std::ostringstream out;
  out << "n_trees=" << p.n_trees << " max_depth=" << p.max_depth << " learning_rate=" << p.learning_rate
      << " min_samples_leaf=" << p.min_samples_leaf << " subsample=" << p.subsample << " seed=" << p.seed;
  return out.str();
}

double RegressionTree::predict(const double* row, Eigen::Index stride) const {
  int k = 0;
  while (nodes[k].feature >= 0) {
    const auto& n = nodes[k];
    k = row[n.feature * stride] <= n.threshold ? n.left : n.right;
  }
  return nodes[k].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t out = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    out = std::max(out, d[k]);
    if (nodes[k].feature >= 0) {
      d[nodes[k].left] = d[k] + 1;
      d[nodes[k].right] = d[k] + 1;
    }
  }
  return out;
}

double GBTEnsemble::predict_row(const double* row, Eigen::Index stride) const {
  double f = base;
  for (const auto& t : trees) f += learning_rate * t.predict(row, stride);
  return f;
}

Eigen::VectorXd GBTEnsemble::predict(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != n_features) throw ValidationError("gbt: feature count mismatch");
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_row(X.data() + i, X.rows());
  return out;
}

nlohmann::json GBTEnsemble::to_json() const {
  nlohmann::json j;
  j["format"] = "recsel-gbt";
  j["version"] = 1;
  j["base"] = base;
  j["learning_rate"] = learning_rate;
  j["n_features"] = n_features;
  auto& arr = j["trees"] = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json tj;
    for (const auto& n : t.nodes) {
      tj["feature"].push_back(n.feature);
      tj["threshold"].push_back(n.threshold);
      tj["left"].push_back(n.left);
      tj["right"].push_back(n.right);
      tj["value"].push_back(n.value);
    }
    arr.push_back(std::move(tj));
  }
  return j;
}

GBTEnsemble GBTEnsemble::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "recsel-gbt" || j.at("version") != 1) throw ValidationError("unsupported GBT model format");
    GBTEnsemble e;
    e.base = j.at("base").get<double>();
    e.learning_rate = j.at("learning_rate").get<double>();
    e.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& tj : j.at("trees")) {
      RegressionTree t;
      const auto& f = tj.at("feature");
      t.nodes.resize(f.size());
      for (std::size_t k = 0; k < f.size(); ++k) {
        auto& n = t.nodes[k];
        n.feature = f[k].get<int>();
        n.threshold = tj.at("threshold")[k].get<double>();
        n.left = tj.at("left")[k].get<int>();
        n.right = tj.at("right")[k].get<int>();
        n.value = tj.at("value")[k].get<double>();
        const int size = static_cast<int>(f.size());
        if (n.feature >= static_cast<int>(e.n_features) ||
            (n.feature >= 0 && (n.left <= static_cast<int>(k) || n.right <= static_cast<int>(k) || n.left >= size ||
                                n.right >= size))) {
          throw ValidationError("malformed tree node " + std::to_string(k));
        }
      }
      if (t.nodes.empty()) throw ValidationError("empty tree");
      e.trees.push_back(std::move(t));
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed GBT model: ") + ex.what());
  }
}

bool GBTEnsemble::operator==(const GBTEnsemble& o) const {
  if (base != o.base || learning_rate != o.learning_rate || n_features != o.n_features ||
      trees.size() != o.trees.size()) {
    return false;
  }
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& a = trees[t].nodes;
    const auto& b = o.trees[t].nodes;
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].feature != b[k].feature || a[k].threshold != b[k].threshold || a[k].left != b[k].left ||
          a[k].right != b[k].right || a[k].value != b[k].value) {
        return false;
      }
    }
  }
  return true;
}

namespace {

// Threshold strictly between lo and hi that sends lo left and hi right.
double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return (m >= hi || m < lo) ? lo : m;
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, std::size_t max_depth, std::size_t min_leaf)
      : X_(X), r_(r), max_depth_(max_depth), min_leaf_(min_leaf), goes_left_(static_cast<std::size_t>(X.rows()), 0) {}

  // `sorted[f]` lists the sample rows ordered by feature f.
  RegressionTree build(std::vector<std::vector<std::uint32_t>> sorted) {
    sorted_ = std::move(sorted);
    scratch_.resize(sorted_.empty() ? 0 : sorted_[0].size());
    RegressionTree tree;
    nodes_ = &tree.nodes;
    grow(0, sorted_[0].size(), 0);
    return tree;
  }

 private:
  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const int id = static_cast<int>(nodes_->size());
    nodes_->push_back({});
    const auto& rows = sorted_[0];
    const double n = static_cast<double>(end - begin);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += r_(rows[i]);
    (*nodes_)[id].value = sum / n;

    const bool depth_ok = max_depth_ == 0 || depth < max_depth_;
    if (!depth_ok || end - begin < 2 * min_leaf_) return id;

    const double parent = sum * sum / n;
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::size_t best_left = 0;
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      const auto& order = sorted_[f];
      const auto fi = static_cast<Eigen::Index>(f);
      double left_sum = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        left_sum += r_(order[i]);
        const std::size_t nl = i + 1 - begin;
        const std::size_t nr = end - begin - nl;
        if (nl < min_leaf_) continue;
        if (nr < min_leaf_) break;
        const double xa = X_(order[i], fi);
        const double xb = X_(order[i + 1], fi);
        if (xa == xb) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = midpoint(xa, xb);
          best_left = nl;
        }
      }
    }
    if (best_feature < 0) return id;

    const auto bf = static_cast<Eigen::Index>(best_feature);
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = sorted_[0][i];
      goes_left_[row] = X_(row, bf) <= best_threshold ? 1 : 0;
    }
    for (auto& order : sorted_) {
      std::size_t l = begin;
      std::size_t k = 0;
      for (std::size_t i = begin; i < end; ++i) {
        if (goes_left_[order[i]]) {
          order[l++] = order[i];
        } else {
          scratch_[k++] = order[i];
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(k),
                order.begin() + static_cast<std::ptrdiff_t>(l));
    }
    const std::size_t mid = begin + best_left;
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    auto& node = (*nodes_)[id];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& r_;
  std::size_t max_depth_;
  std::size_t min_leaf_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<std::uint32_t> scratch_;
  std::vector<char> goes_left_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

std::vector<std::vector<std::uint32_t>> presort(const Eigen::MatrixXd& X) {
  std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& order = out[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
  }
  return out;
}

// Restricts each presorted order to rows flagged in `in_sample`.
std::vector<std::vector<std::uint32_t>> restrict(const std::vector<std::vector<std::uint32_t>>& full,
                                                 const std::vector<char>& in_sample, std::size_t count) {
  std::vector<std::vector<std::uint32_t>> out(full.size());
  for (std::size_t f = 0; f < full.size(); ++f) {
    out[f].reserve(count);
    for (auto row : full[f]) {
      if (in_sample[row]) out[f].push_back(row);
    }
  }
  return out;
}

void check_input(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw ValidationError("gbt: empty training set");
  if (X.rows() != y.size()) throw ValidationError("gbt: row count differs from target count");
  if (X.rows() > static_cast<Eigen::Index>(UINT32_MAX)) throw ValidationError("gbt: too many rows");
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("gbt: non-finite input");
}

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& r, const std::vector<std::uint32_t>& sample,
                        std::size_t max_depth, std::size_t min_samples_leaf) {
  check_input(X, r);
  if (sample.empty()) throw ValidationError("gbt: empty sample");
  std::vector<char> in_sample(static_cast<std::size_t>(X.rows()), 0);
  for (auto s : sample) in_sample[s] = 1;
  TreeBuilder builder(X, r, max_depth, std::max<std::size_t>(1, min_samples_leaf));
  if (X.cols() == 0) {
    RegressionTree t;
    double sum = 0.0;
    for (auto s : sample) sum += r(s);
    t.nodes.push_back({-1, 0.0, -1, -1, sum / static_cast<double>(sample.size())});
    return t;
  }
  return builder.build(restrict(presort(X), in_sample, sample.size()));
}

GBTEnsemble fit_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GBTParams& params) {
  params.validate();
  check_input(X, y);
  const auto n = static_cast<std::size_t>(X.rows());
  GBTEnsemble model;
  model.n_features = static_cast<std::size_t>(X.cols());
  model.learning_rate = params.learning_rate;
  model.base = y.mean();
  if (params.n_trees == 0) return model;

  const auto full = presort(X);
  const std::size_t m =
      params.subsample >= 1.0 ? n : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));
  Rng rng(params.seed);
  std::vector<std::uint32_t> perm(n);
  std::vector<char> in_sample(n, 1);
  Eigen::VectorXd F = Eigen::VectorXd::Constant(X.rows(), model.base);
  Eigen::VectorXd residual(X.rows());
  TreeBuilder builder(X, residual, params.max_depth, params.min_samples_leaf);

  for (std::size_t t = 0; t < params.n_trees; ++t) {
    residual = y - F;
    if (m < n) {
      // Partial Fisher-Yates: the first m entries form the sample.
      std::iota(perm.begin(), perm.end(), 0u);
      for (std::size_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + uniform_index(rng, n - i)]);
      std::fill(in_sample.begin(), in_sample.end(), 0);
      for (std::size_t i = 0; i < m; ++i) in_sample[perm[i]] = 1;
    }
    auto tree = X.cols() == 0 ? RegressionTree{{TreeNode{-1, 0.0, -1, -1, 0.0}}}
                              : builder.build(m < n ? restrict(full, in_sample, m) : full);
    if (X.cols() == 0) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (in_sample[i]) sum += residual(static_cast<Eigen::Index>(i));
      }
      tree.nodes[0].value = sum / static_cast<double>(m);
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      F(i) += params.learning_rate * tree.predict(X.data() + i, X.rows());
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace recsel
