#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "implementations.hpp"

namespace recsel::impl {

namespace {

using Index = Eigen::Index;

// Cosine similarity on binary consumption vectors, top-n neighbors per item.
ModelState fit_neighbors(const Dataset& train, std::size_t n_neighbors) {
  const std::size_t n_items = train.n_items();
  std::vector<std::vector<std::size_t>> users_of(n_items);
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    for (auto i : train.items_of(u)) users_of[i].push_back(u);
  }

  Eigen::MatrixXd nbr_index = Eigen::MatrixXd::Constant(static_cast<Index>(n_items),
                                                        static_cast<Index>(n_neighbors), -1.0);
  Eigen::MatrixXd nbr_sim = Eigen::MatrixXd::Zero(static_cast<Index>(n_items), static_cast<Index>(n_neighbors));

  std::vector<double> co(n_items, 0.0);
  std::vector<std::size_t> touched;
  std::vector<std::size_t> order;
  std::vector<double> sim(n_items, 0.0);
  for (std::size_t i = 0; i < n_items; ++i) {
    touched.clear();
    for (auto u : users_of[i]) {
      for (auto j : train.items_of(u)) {
        if (j == i) continue;
        if (co[j] == 0.0) touched.push_back(j);
        co[j] += 1.0;
      }
    }
    order.assign(touched.begin(), touched.end());
    for (auto j : touched) {
      sim[j] = co[j] / std::sqrt(static_cast<double>(users_of[i].size()) * static_cast<double>(users_of[j].size()));
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sim[a] != sim[b] ? sim[a] > sim[b] : a < b;
    });
    const std::size_t keep = std::min(n_neighbors, order.size());
    for (std::size_t r = 0; r < keep; ++r) {
      nbr_index(static_cast<Index>(i), static_cast<Index>(r)) = static_cast<double>(order[r]);
      nbr_sim(static_cast<Index>(i), static_cast<Index>(r)) = sim[order[r]];
    }
    for (auto j : touched) co[j] = sim[j] = 0.0;
  }
  return ModelState{{"nbr_index", nbr_index}, {"nbr_sim", nbr_sim}};
}

}  // namespace

Implementation itemknn_a() {
  Implementation im;
  im.name = "itemknn_a";
  im.family = Family::itemknn;
  im.defaults = {{"neighbors", 20}};
  im.source_file = "src/portfolio/itemknn_a.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    return fit_neighbors(train, static_cast<std::size_t>(spec.param("neighbors", 20)));
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    const auto& idx = m.matrix("nbr_index");
    const auto& sim = m.matrix("nbr_sim");
    std::vector<char> in_history(m.n_items(), 0);
    for (auto j : m.history(user)) in_history[j] = 1;
    for (Index i = 0; i < idx.rows(); ++i) {
      double s = 0.0;
      for (Index r = 0; r < idx.cols(); ++r) {
        const double j = idx(i, r);
        if (j < 0) break;
        if (in_history[static_cast<std::size_t>(j)]) s += sim(i, r);
      }
      out[i] = s;
    }
  };
  return im;
}

}  // namespace recsel::impl
