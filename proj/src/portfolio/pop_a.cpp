#include "implementations.hpp"

namespace recsel::impl {

// Most-popular baseline: score(i) = number of training interactions with i.
Implementation pop_a() {
  Implementation im;
  im.name = "pop_a";
  im.family = Family::popularity;
  im.source_file = "src/portfolio/pop_a.cpp";
  im.fit = [](const RecommenderSpec&, const Dataset& train) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(train.n_items()));
    for (std::size_t r = 0; r < train.size(); ++r) counts(0, static_cast<Eigen::Index>(train.item_of(r))) += 1.0;
    return ModelState{{"score", counts}};
  };
  im.score = [](const FittedModel& m, std::size_t, Eigen::Ref<Eigen::VectorXd> out) {
    out = m.matrix("score").row(0).transpose();
  };
  return im;
}

}  // namespace recsel::impl
