#include <map>
#include <vector>

#include "implementations.hpp"
#include "recsel/random.hpp"

namespace recsel::impl {

namespace {

struct Entry {
  std::size_t index;
  double strength;  // summed interaction values
};

// Sparse user->items and item->users views with aggregated strengths.
struct Observations {
  std::vector<std::vector<Entry>> by_user;
  std::vector<std::vector<Entry>> by_item;
};

Observations observe(const Dataset& train) {
  std::vector<std::map<std::size_t, double>> agg(train.n_users());
  for (std::size_t r = 0; r < train.size(); ++r) {
    agg[train.user_of(r)][train.item_of(r)] += train.interactions()[r].value();
  }
  Observations obs;
  obs.by_user.resize(train.n_users());
  obs.by_item.resize(train.n_items());
  for (std::size_t u = 0; u < agg.size(); ++u) {
    for (const auto& [i, s] : agg[u]) {
      obs.by_user[u].push_back({i, s});
      obs.by_item[i].push_back({u, s});
    }
  }
  return obs;
}

// Solves every row of `target` given fixed `other` factors:
// x = (O^T O + O^T (C - I) O + reg I)^-1 O^T C p, with p = 1 on observed cells.
void solve_side(const std::vector<std::vector<Entry>>& rows, const Eigen::MatrixXd& other,
                Eigen::MatrixXd& target, double alpha, double reg) {
  const auto d = other.cols();
  const Eigen::MatrixXd gram = other.transpose() * other;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += reg;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (const auto& e : rows[r]) {
      const double c = 1.0 + alpha * e.strength;
      const auto y = other.row(static_cast<Eigen::Index>(e.index)).transpose();
      A.noalias() += (c - 1.0) * y * y.transpose();
      b.noalias() += c * y;
    }
    target.row(static_cast<Eigen::Index>(r)) = A.ldlt().solve(b).transpose();
  }
}

}  // namespace

Implementation implicitmf() {
  Implementation im;
  im.name = "implicitmf";
  im.family = Family::implicitmf;
  im.defaults = {{"factors", 32}, {"alpha", 40}, {"regularization", 0.1}, {"sweeps", 15}};
  im.source_file = "src/portfolio/implicitmf.cpp";
  im.fit = [](const RecommenderSpec& spec, const Dataset& train) {
    const auto d = static_cast<Eigen::Index>(spec.param("factors", 32));
    const double alpha = spec.param("alpha", 40);
    const double reg = spec.param("regularization", 0.1);
    const int sweeps = static_cast<int>(spec.param("sweeps", 15));

    Rng rng(spec.seed);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(train.n_users()), d);
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(train.n_items()), d);
    for (Eigen::Index k = 0; k < X.size(); ++k) X.data()[k] = 0.01 * normal01(rng);
    for (Eigen::Index k = 0; k < Y.size(); ++k) Y.data()[k] = 0.01 * normal01(rng);

    const auto obs = observe(train);
    Eigen::MatrixXd loss(1, sweeps + 1);
    loss(0, 0) = detail::implicit_mf_objective(train, X, Y, alpha, reg);
    for (int s = 0; s < sweeps; ++s) {
      solve_side(obs.by_user, Y, X, alpha, reg);
      solve_side(obs.by_item, X, Y, alpha, reg);
      loss(0, s + 1) = detail::implicit_mf_objective(train, X, Y, alpha, reg);
    }
    return ModelState{{"user_factors", X}, {"item_factors", Y}, {"loss", loss}};
  };
  im.score = [](const FittedModel& m, std::size_t user, Eigen::Ref<Eigen::VectorXd> out) {
    out.noalias() = m.matrix("item_factors") * m.matrix("user_factors").row(static_cast<Eigen::Index>(user)).transpose();
  };
  return im;
}

}  // namespace recsel::impl

namespace recsel::detail {

double implicit_mf_objective(const Dataset& train, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             double alpha, double reg) {
  const auto obs = impl::observe(train);
  // Sum over all cells of (x.y)^2 expands to trace((X^T X)(Y^T Y)); observed
  // cells then correct for confidence and preference.
  const Eigen::MatrixXd gx = X.transpose() * X;
  const Eigen::MatrixXd gy = Y.transpose() * Y;
  double loss = (gx.array() * gy.array()).sum();
  for (std::size_t u = 0; u < obs.by_user.size(); ++u) {
    for (const auto& e : obs.by_user[u]) {
      const double pred = X.row(static_cast<Eigen::Index>(u)).dot(Y.row(static_cast<Eigen::Index>(e.index)));
      const double c = 1.0 + alpha * e.strength;
      loss += c * (1.0 - pred) * (1.0 - pred) - pred * pred;
    }
  }
  return loss + reg * (X.squaredNorm() + Y.squaredNorm());
}

}  // namespace recsel::detail
