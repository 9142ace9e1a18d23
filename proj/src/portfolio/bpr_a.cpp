#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "implementations.hpp"
#include "recsel/random.hpp"

namespace recsel::impl {

namespace {

struct BprConfig {
  int factors;
  double lr;
  double reg;
  int epochs;
};

bool consumed(const Dataset& train, std::size_t u, std::size_t j) {
  auto items = train.items_of(u);
  return std::binary_search(items.begin(), items.end(), j);
}

ModelState train_bpr(const Dataset& train, const BprConfig& cfg, std::uint64_t seed) {
  const auto n_users = static_cast<Eigen::Index>(train.n_users());
  const auto n_items = static_cast<Eigen::Index>(train.n_items());
  Rng rng(seed);
  Eigen::MatrixXd P(n_users, cfg.factors);
  Eigen::MatrixXd Q(n_items, cfg.factors);
  for (Eigen::Index r = 0; r < P.size(); ++r) P.data()[r] = 0.1 * normal01(rng);
  for (Eigen::Index r = 0; r < Q.size(); ++r) Q.data()[r] = 0.1 * normal01(rng);

  std::vector<std::pair<std::size_t, std::size_t>> positives;
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    if (train.items_of(u).size() >= train.n_items()) continue;  // no negatives exist
    for (auto i : train.items_of(u)) positives.emplace_back(u, i);
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(positives, rng);
    for (const auto& [u, i] : positives) {
      std::size_t j = uniform_index(rng, train.n_items());
      while (consumed(train, u, j)) j = uniform_index(rng, train.n_items());

      const auto uu = static_cast<Eigen::Index>(u);
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double x = P.row(uu).dot(Q.row(ii) - Q.row(jj));
      const double g = 1.0 / (1.0 + std::exp(x));  // d/dx ln sigmoid(x)
      Eigen::RowVectorXd pu = P.row(uu);
      P.row(uu) += cfg.lr * (g * (Q.row(ii) - Q.row(jj)) - cfg.reg * pu);
      Q.row(ii) += cfg.lr * (g * pu - cfg.reg * Q.row(ii));
      Q.row(jj) += cfg.lr * (-g * pu - cfg.reg * Q.row(jj));
    }
  }
  return ModelState{{"user_factors", P}, {"item_factors", Q}};
}

}  // namespace

// BPR-MF, one pass over shuffled positives per epoch.
Implementation bpr_a() {
  Implementation im;
  im.name = "bpr_a";
  im.family = Family::bpr;
  im.defaults = {{"factors", 32}, {"learning_rate", 0.05}, {"regularization", 0.01}, {"epochs", 30}};
  im.source_file = "src/portfolio/bpr_a.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    BprConfig cfg{static_cast<int>(spec.param("factors", 32)), spec.param("learning_rate", 0.05),
                  spec.param("regularization", 0.01), static_cast<int>(spec.param("epochs", 30))};
    return train_bpr(train, cfg, spec.seed);
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    out = m.matrix("item_factors") * m.matrix("user_factors").row(static_cast<Eigen::Index>(user)).transpose();
  };
  return im;
}

}  // namespace recsel::impl
