#include <algorithm>
#include <vector>

#include "implementations.hpp"

namespace recsel::impl {

namespace {

struct ItemTally {
  double count = 0.0;
  double rating_sum = 0.0;
};

std::vector<ItemTally> tally(const Dataset& train, double& max_rating) {
  std::vector<ItemTally> out(train.n_items());
  max_rating = 0.0;
  bool seen = false;
  for (std::size_t r = 0; r < train.size(); ++r) {
    const double v = train.interactions()[r].value();
    auto& t = out[train.item_of(r)];
    t.count += 1.0;
    t.rating_sum += v;
    max_rating = seen ? std::max(max_rating, v) : v;
    seen = true;
  }
  return out;
}

}  // namespace

// Rating-damped popularity: count(i) * mean_rating(i) / max_rating.
// On implicit data every value is 1.0 and this reduces to pop_a.
Implementation pop_b() {
  Implementation im;
  im.name = "pop_b";
  im.family = Family::popularity;
  im.source_file = "src/portfolio/pop_b.cpp";
  im.fit = [](const RecommenderSpec&, const Dataset& train) {
    double max_rating = 0.0;
    const auto items = tally(train, max_rating);
    Eigen::MatrixXd score = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(items.size()));
    if (max_rating <= 0.0) {
      // Non-positive ratings carry no damping signal; fall back to counts.
      for (std::size_t i = 0; i < items.size(); ++i) score(0, static_cast<Eigen::Index>(i)) = items[i].count;
    } else {
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& t = items[i];
        if (t.count == 0.0) continue;
        const double mean = t.rating_sum / t.count;
        score(0, static_cast<Eigen::Index>(i)) = t.count * mean / max_rating;
      }
    }
    return ModelState{{"score", score}};
  };
  im.score = [](const FittedModel& m, std::size_t, Eigen::Ref<Eigen::VectorXd> out) {
    const auto& s = m.matrix("score");
    for (Eigen::Index i = 0; i < s.cols(); ++i) out[i] = s(0, i);
  };
  return im;
}

}  // namespace recsel::impl
