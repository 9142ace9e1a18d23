#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "implementations.hpp"
#include "recsel/random.hpp"

namespace recsel::impl {

namespace {

// (user, previous item, next item) from chronologically adjacent training events.
struct Transition {
  std::size_t user;
  std::size_t prev;
  std::size_t next;
};

std::vector<Transition> transitions(const Dataset& train) {
  std::vector<Transition> out;
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    const auto hist = train.history(u);
    if (train.items_of(u).size() >= train.n_items()) continue;
    for (std::size_t p = 1; p < hist.size(); ++p) {
      out.push_back({u, train.item_of(hist[p - 1]), train.item_of(hist[p])});
    }
  }
  return out;
}

}  // namespace

// Factorized personalized Markov chain:
//   x(u, l, i) = <UI_u, IU_i> + <IL_i, LI_l>
// trained with pairwise (BPR) updates against uniform unseen negatives.
Implementation fpmc() {
  Implementation im;
  im.name = "fpmc";
  im.family = Family::fpmc;
  im.defaults = {{"factors", 32}, {"learning_rate", 0.05}, {"regularization", 0.01}, {"epochs", 30}};
  im.source_file = "src/portfolio/fpmc.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    const auto d = static_cast<Eigen::Index>(spec.param("factors", 32));
    const double lr = spec.param("learning_rate", 0.05);
    const double reg = spec.param("regularization", 0.01);
    const int epochs = static_cast<int>(spec.param("epochs", 30));
    const auto n_users = static_cast<Eigen::Index>(train.n_users());
    const auto n_items = static_cast<Eigen::Index>(train.n_items());

    Rng rng(spec.seed);
    std::array<Eigen::MatrixXd, 4> f{Eigen::MatrixXd(n_users, d), Eigen::MatrixXd(n_items, d),
                                     Eigen::MatrixXd(n_items, d), Eigen::MatrixXd(n_items, d)};
    for (auto& m : f) {
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = 0.1 * normal01(rng);
    }
    auto& UI = f[0];
    auto& IU = f[1];
    auto& IL = f[2];
    auto& LI = f[3];

    auto trans = transitions(train);
    for (int epoch = 0; epoch < epochs; ++epoch) {
      shuffle(trans, rng);
      for (const auto& t : trans) {
        const auto hist = train.items_of(t.user);
        std::size_t neg = uniform_index(rng, train.n_items());
        while (std::binary_search(hist.begin(), hist.end(), neg)) neg = uniform_index(rng, train.n_items());

        const auto u = static_cast<Eigen::Index>(t.user);
        const auto l = static_cast<Eigen::Index>(t.prev);
        const auto i = static_cast<Eigen::Index>(t.next);
        const auto j = static_cast<Eigen::Index>(neg);
        const double x = UI.row(u).dot(IU.row(i) - IU.row(j)) + LI.row(l).dot(IL.row(i) - IL.row(j));
        const double g = 1.0 / (1.0 + std::exp(x));

        const Eigen::RowVectorXd ui = UI.row(u);
        const Eigen::RowVectorXd li = LI.row(l);
        const Eigen::RowVectorXd iu_diff = IU.row(i) - IU.row(j);
        const Eigen::RowVectorXd il_diff = IL.row(i) - IL.row(j);
        UI.row(u) += lr * (g * iu_diff - reg * ui);
        LI.row(l) += lr * (g * il_diff - reg * li);
        IU.row(i) += lr * (g * ui - reg * IU.row(i));
        IU.row(j) += lr * (-g * ui - reg * IU.row(j));
        IL.row(i) += lr * (g * li - reg * IL.row(i));
        IL.row(j) += lr * (-g * li - reg * IL.row(j));
      }
    }

    Eigen::MatrixXd last = Eigen::MatrixXd::Constant(n_users, 1, -1.0);
    for (std::size_t u = 0; u < train.n_users(); ++u) {
      const auto hist = train.history(u);
      if (!hist.empty()) last(static_cast<Eigen::Index>(u), 0) = static_cast<double>(train.item_of(hist.back()));
    }
    return ModelState{{"user_item", UI}, {"item_user", IU}, {"item_prev", IL}, {"prev_item", LI}, {"last_item", last}};
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    const auto u = static_cast<Eigen::Index>(user);
    out.noalias() = m.matrix("item_user") * m.matrix("user_item").row(u).transpose();
    const double last = m.matrix("last_item")(u, 0);
    if (last >= 0) {
      out.noalias() += m.matrix("item_prev") * m.matrix("prev_item").row(static_cast<Eigen::Index>(last)).transpose();
    }
  };
  return im;
}

}  // namespace recsel::impl
