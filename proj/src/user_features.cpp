#include "recsel/user_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "recsel/error.hpp"
#include "recsel/parallel.hpp"

namespace recsel {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double days(std::int64_t seconds) { return static_cast<double>(seconds) / static_cast<double>(kSecondsPerDay); }

}  // namespace

double entropy_of_counts(const std::vector<double>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

PopularityStats popularity_stats(const Dataset& train) {
  const std::size_t n = train.n_items();
  std::vector<double> counts(n, 0.0);
  for (std::size_t r = 0; r < train.size(); ++r) counts[train.item_of(r)] += 1.0;
  const double max_count = n ? *std::max_element(counts.begin(), counts.end()) : 0.0;

  PopularityStats out;
  out.popularity.resize(n, 0.0);
  if (max_count > 0.0) {
    for (std::size_t i = 0; i < n; ++i) out.popularity[i] = counts[i] / max_count;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  const auto head_size = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(n) - 1e-9));
  out.head.assign(n, 0);
  for (std::size_t r = 0; r < head_size && r < n; ++r) out.head[order[r]] = 1;
  return out;
}

UserFeatureVector extract_user_features(std::size_t user, const Dataset& train, std::int64_t split_point,
                                        const PopularityStats& pop) {
  const auto hist = train.history(user);
  if (hist.empty()) throw Error("user " + train.user_id(user) + " has no training interactions");
  const auto n = static_cast<double>(hist.size());
  const auto& rows = train.interactions();

  UserFeatureVector f;
  f.user_id = train.user_id(user);
  auto& v = f.values;

  // Activity
  const auto unique = static_cast<double>(train.items_of(user).size());
  v[0] = n;
  v[1] = unique;
  v[2] = 1.0 - unique / n;

  // Rating patterns
  std::vector<double> ratings;
  std::map<double, double> rating_counts;
  for (auto r : hist) {
    const double x = rows[r].value();
    ratings.push_back(x);
    rating_counts[x] += 1.0;
  }
  if (train.has_ratings()) {
    v[3] = mean_of(ratings);
    v[4] = std_of(ratings, v[3]);
    std::vector<double> counts;
    for (const auto& [_, c] : rating_counts) counts.push_back(c);
    v[5] = entropy_of_counts(counts);
  } else {
    v[3] = 1.0;
    v[4] = 0.0;
    v[5] = 0.0;
  }

  // Temporal dynamics; history is chronological.
  const std::int64_t first = rows[hist.front()].timestamp;
  const std::int64_t last = rows[hist.back()].timestamp;
  v[6] = days(last - first);
  v[7] = hist.size() > 1 ? v[6] / (n - 1.0) : 0.0;
  std::set<std::int64_t> active_days;
  for (auto r : hist) active_days.insert((rows[r].timestamp - first) / kSecondsPerDay);
  v[8] = n / static_cast<double>(active_days.size());
  v[9] = days(split_point - last);

  // Popularity preferences, one observation per interaction.
  std::vector<double> pops;
  double tail = 0.0;
  std::map<std::size_t, double> item_counts;
  for (auto r : hist) {
    const auto i = train.item_of(r);
    pops.push_back(pop.popularity[i]);
    if (!pop.head[i]) tail += 1.0;
    item_counts[i] += 1.0;
  }
  v[10] = mean_of(pops);
  v[11] = median_of(pops);
  v[12] = std_of(pops, v[10]);
  v[13] = tail / n;
  std::vector<double> counts;
  for (const auto& [_, c] : item_counts) counts.push_back(c);
  v[14] = entropy_of_counts(counts);
  return f;
}

std::vector<UserFeatureVector> extract_user_features(const SplitDataset& split, std::size_t threads) {
  const auto pop = popularity_stats(split.train);
  std::vector<std::size_t> users;
  for (std::size_t u = 0; u < split.train.n_users(); ++u) {
    if (!split.test[u].empty()) users.push_back(u);
  }
  std::vector<UserFeatureVector> out(users.size());
  parallel_for(users.size(), threads, [&](std::size_t k) {
    out[k] = extract_user_features(users[k], split.train, split.split_point[users[k]], pop);
  });
  return out;
}

FeatureTable to_feature_table(const std::vector<UserFeatureVector>& rows) {
  FeatureTable t;
  t.names.assign(kUserFeatureNames.begin(), kUserFeatureNames.end());
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kUserFeatureCount));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    t.keys.push_back(rows[r].user_id);
    for (std::size_t c = 0; c < kUserFeatureCount; ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].values[c];
    }
  }
  return t;
}

}  // namespace recsel
