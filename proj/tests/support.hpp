#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "recsel/dataset.hpp"
#include "recsel/features.hpp"
#include "recsel/ground_truth.hpp"
#include "recsel/random.hpp"
#include "recsel/user_features.hpp"
#include "recsel/code_metrics.hpp"

namespace testing {

inline const std::filesystem::path kSourceDir = RECSEL_SOURCE_DIR;

inline std::filesystem::path fixture(const std::string& name) { return kSourceDir / "fixtures" / name; }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("recsel_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// (user, item, timestamp) rows, implicit feedback.
inline recsel::Dataset make_dataset(const std::vector<std::tuple<std::string, std::string, std::int64_t>>& rows) {
  std::vector<recsel::Interaction> v;
  for (const auto& [u, i, t] : rows) v.push_back({u, i, t, std::nullopt});
  return recsel::Dataset(std::move(v));
}

struct Planted {
  recsel::PerformanceMatrix P;
  recsel::FeatureTable F;
  recsel::FeatureTable A;
};

inline recsel::FeatureTable random_table(const std::vector<std::string>& keys,
                                         const std::vector<std::string>& names, recsel::Rng& rng) {
  recsel::FeatureTable t;
  t.keys = keys;
  t.names = names;
  t.values.resize(static_cast<Eigen::Index>(keys.size()), static_cast<Eigen::Index>(names.size()));
  for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values.data()[i] = recsel::uniform01(rng);
  return t;
}

inline std::vector<std::string> user_feature_names() {
  return {recsel::kUserFeatureNames.begin(), recsel::kUserFeatureNames.end()};
}

inline std::vector<std::string> algo_feature_names() {
  return {recsel::code::kAlgoFeatureNames.begin(), recsel::code::kAlgoFeatureNames.end()};
}

inline std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = std::to_string(i);
    out.push_back(prefix + std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s);
  }
  return out;
}

inline double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// Best algorithm is a threshold function of user feature 0:
// a02 wins below 0.5, a06 above. Cell noise N(0, sigma).
inline Planted planted_user_threshold(std::uint64_t seed, std::size_t n_users, double sigma = 0.02) {
  recsel::Rng rng(seed);
  Planted p;
  p.P.user_ids = ids("u", n_users);
  p.P.algo_ids = ids("a", 9);
  p.F = random_table(p.P.user_ids, user_feature_names(), rng);
  p.A = random_table(p.P.algo_ids, algo_feature_names(), rng);
  p.P.values.resize(static_cast<Eigen::Index>(n_users), 9);
  for (Eigen::Index u = 0; u < p.P.values.rows(); ++u) {
    const bool low = p.F.values(u, 0) < 0.5;
    for (Eigen::Index a = 0; a < 9; ++a) {
      double v = 0.20 + 0.01 * static_cast<double>(a);
      if ((low && a == 2) || (!low && a == 6)) v += 0.25;
      p.P.values(u, a) = clip01(v + sigma * recsel::normal01(rng));
    }
  }
  return p;
}

// Algorithm quality follows one code metric; user features are pure noise.
// Every user shares the same per-algorithm offsets plus a user-level shift.
inline Planted planted_algo_offsets(std::uint64_t seed, std::size_t n_users, double sigma = 0.02) {
  recsel::Rng rng(seed);
  Planted p;
  p.P.user_ids = ids("u", n_users);
  p.P.algo_ids = ids("a", 9);
  p.F = random_table(p.P.user_ids, user_feature_names(), rng);
  p.A = random_table(p.P.algo_ids, algo_feature_names(), rng);
  p.P.values.resize(static_cast<Eigen::Index>(n_users), 9);
  for (Eigen::Index u = 0; u < p.P.values.rows(); ++u) {
    const double shift = 0.1 * recsel::uniform01(rng);
    for (Eigen::Index a = 0; a < 9; ++a) {
      const double offset = 0.15 + 0.1 * p.A.values(a, 0);
      p.P.values(u, a) = clip01(shift + offset + sigma * recsel::normal01(rng));
    }
  }
  return p;
}

}  // namespace testing
