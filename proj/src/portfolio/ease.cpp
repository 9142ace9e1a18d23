#include "implementations.hpp"

namespace recsel::impl {

// Closed-form item-item autoencoder:
//   P = (X^T X + lambda I)^-1,  B = I - P diag(1/diag(P)),  diag(B) = 0.
Implementation ease() {
  Implementation im;
  im.name = "ease";
  im.family = Family::ease;
  im.defaults = {{"lambda", 100}};
  im.source_file = "src/portfolio/ease.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    const auto n = static_cast<Eigen::Index>(train.n_items());
    const double lambda = spec.param("lambda", 100);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t u = 0; u < train.n_users(); ++u) {
      const auto items = train.items_of(u);
      for (auto a : items) {
        for (auto b : items) G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
      }
    }
    G.diagonal().array() += lambda;
    const Eigen::MatrixXd P = G.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd B(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      B.col(j) = -P.col(j) / P(j, j);
      B(j, j) = 0.0;
    }
    return ModelState{{"weights", B}};
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    const auto& B = m.matrix("weights");
    out.setZero();
    for (auto i : m.history(user)) out += B.row(static_cast<Eigen::Index>(i)).transpose();
  };
  return im;
}

}  // namespace recsel::impl
