#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>
#include <vector>

#include "implementations.hpp"

namespace recsel::impl {

namespace {

struct Neighbor {
  std::size_t item;
  double sim;
};

// Shrunk cosine: sim * co / (co + shrinkage).
std::vector<Neighbor> neighbors_of(std::size_t i, const Dataset& train,
                                   const std::vector<std::vector<std::size_t>>& inverted,
                                   std::size_t limit, double shrinkage) {
  std::unordered_map<std::size_t, double> co;
  for (auto u : inverted[i]) {
    for (auto j : train.items_of(u)) {
      if (j != i) co[j] += 1.0;
    }
  }
  std::vector<Neighbor> out;
  out.reserve(co.size());
  const double norm_i = std::sqrt(static_cast<double>(inverted[i].size()));
  for (const auto& [j, c] : co) {
    const double cosine = c / (norm_i * std::sqrt(static_cast<double>(inverted[j].size())));
    out.push_back({j, cosine * (c / (c + shrinkage))});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.item < b.item;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace

Implementation itemknn_b() {
  Implementation im;
  im.name = "itemknn_b";
  im.family = Family::itemknn;
  im.defaults = {{"neighbors", 100}, {"shrinkage", 100}};
  im.source_file = "src/portfolio/itemknn_b.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    const auto limit = static_cast<std::size_t>(spec.param("neighbors", 100));
    const double shrinkage = spec.param("shrinkage", 100);
    std::vector<std::vector<std::size_t>> inverted(train.n_items());
    for (std::size_t u = 0; u < train.n_users(); ++u) {
      for (auto i : train.items_of(u)) inverted[i].push_back(u);
    }
    const auto rows = static_cast<Eigen::Index>(train.n_items());
    const auto cols = static_cast<Eigen::Index>(limit);
    ModelState state;
    state["nbr_index"] = Eigen::MatrixXd::Constant(rows, cols, -1.0);
    state["nbr_sim"] = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t i = 0; i < train.n_items(); ++i) {
      auto nbrs = neighbors_of(i, train, inverted, limit, shrinkage);
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        state["nbr_index"](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) =
            static_cast<double>(nbrs[r].item);
        state["nbr_sim"](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = nbrs[r].sim;
      }
    }
    return state;
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    const auto& idx = m.matrix("nbr_index");
    const auto& sim = m.matrix("nbr_sim");
    const auto& hist = m.history(user);
    out.setZero();
    for (Eigen::Index i = 0; i < idx.rows(); ++i) {
      for (Eigen::Index r = 0; r < idx.cols() && idx(i, r) >= 0; ++r) {
        const auto j = static_cast<std::size_t>(idx(i, r));
        if (std::binary_search(hist.begin(), hist.end(), j)) out[i] += sim(i, r);
      }
    }
  };
  return im;
}

}  // namespace recsel::impl
