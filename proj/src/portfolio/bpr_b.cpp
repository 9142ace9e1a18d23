#include <cmath>
#include <vector>

#include "implementations.hpp"
#include "recsel/random.hpp"

namespace recsel::impl {

// BPR-MF with bootstrap sampling: each epoch draws |R| (user, item) positives
// with replacement, each paired with a uniform unseen negative.
Implementation bpr_b() {
  Implementation im;
  im.name = "bpr_b";
  im.family = Family::bpr;
  im.defaults = {{"factors", 64}, {"learning_rate", 0.01}, {"regularization", 0.001}, {"epochs", 50}};
  im.source_file = "src/portfolio/bpr_b.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    const int d = static_cast<int>(spec.param("factors", 64));
    const double lr = spec.param("learning_rate", 0.01);
    const double reg = spec.param("regularization", 0.001);
    const int epochs = static_cast<int>(spec.param("epochs", 50));
    const std::size_t n_items = train.n_items();

    Rng rng(spec.seed);
    Eigen::MatrixXd users(static_cast<Eigen::Index>(train.n_users()), d);
    Eigen::MatrixXd items(static_cast<Eigen::Index>(n_items), d);
    for (Eigen::Index k = 0; k < users.size(); ++k) users.data()[k] = 0.1 * normal01(rng);
    for (Eigen::Index k = 0; k < items.size(); ++k) items.data()[k] = 0.1 * normal01(rng);

    // Flattened (user, item) positives, skipping users who consumed everything.
    std::vector<std::size_t> pos_user, pos_item;
    std::vector<std::vector<char>> seen(train.n_users());
    for (std::size_t u = 0; u < train.n_users(); ++u) {
      const auto hist = train.items_of(u);
      if (hist.size() >= n_items) continue;
      seen[u].assign(n_items, 0);
      for (auto i : hist) {
        seen[u][i] = 1;
        pos_user.push_back(u);
        pos_item.push_back(i);
      }
    }
    const std::size_t n_pos = pos_user.size();
    if (n_pos == 0) return ModelState{{"user_factors", users}, {"item_factors", items}};

    for (int epoch = 0; epoch < epochs; ++epoch) {
      for (std::size_t step = 0; step < n_pos; ++step) {
        const std::size_t s = uniform_index(rng, n_pos);
        const auto u = static_cast<Eigen::Index>(pos_user[s]);
        const auto i = static_cast<Eigen::Index>(pos_item[s]);
        std::size_t neg;
        do {
          neg = uniform_index(rng, n_items);
        } while (seen[pos_user[s]][neg]);
        const auto j = static_cast<Eigen::Index>(neg);

        double x = 0.0;
        for (int f = 0; f < d; ++f) x += users(u, f) * (items(i, f) - items(j, f));
        const double sig = 1.0 / (1.0 + std::exp(x));
        for (int f = 0; f < d; ++f) {
          const double wu = users(u, f);
          const double hi = items(i, f);
          const double hj = items(j, f);
          users(u, f) += lr * (sig * (hi - hj) - reg * wu);
          items(i, f) += lr * (sig * wu - reg * hi);
          items(j, f) += lr * (-sig * wu - reg * hj);
        }
      }
    }
    return ModelState{{"user_factors", users}, {"item_factors", items}};
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    const auto& users = m.matrix("user_factors");
    const auto& items = m.matrix("item_factors");
    const auto u = static_cast<Eigen::Index>(user);
    for (Eigen::Index i = 0; i < items.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index f = 0; f < items.cols(); ++f) s += users(u, f) * items(i, f);
      out[i] = s;
    }
  };
  return im;
}

}  // namespace recsel::impl
