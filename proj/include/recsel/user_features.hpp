#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "recsel/dataset.hpp"
#include "recsel/features.hpp"

namespace recsel {

inline constexpr std::size_t kUserFeatureCount = 15;

// Canonical order of the per-user meta-features.
inline constexpr std::array<std::string_view, kUserFeatureCount> kUserFeatureNames = {
    "n_interactions",         "n_unique_items",         "redundancy",
    "mean_rating",            "std_rating",             "rating_entropy",
    "history_duration",       "mean_gap_days",          "activity_rate",
    "recency_days",           "mean_item_popularity",   "median_item_popularity",
    "std_item_popularity",    "longtail_fraction",      "popularity_entropy"};

struct UserFeatureVector {
  std::string user_id;
  std::array<double, kUserFeatureCount> values{};
};

// Training-split item popularity shared by all users.
struct PopularityStats {
  std::vector<double> popularity;  // count / max count, in [0,1]
  std::vector<char> head;          // item is among the top 20% most popular
};

PopularityStats popularity_stats(const Dataset& train);

UserFeatureVector extract_user_features(std::size_t user, const Dataset& train, std::int64_t split_point,
                                        const PopularityStats& pop);

// One vector per train user with held-out items, in train user order.
std::vector<UserFeatureVector> extract_user_features(const SplitDataset& split, std::size_t threads = 1);

FeatureTable to_feature_table(const std::vector<UserFeatureVector>& rows);

// Shannon entropy (natural log) of a distribution given as counts.
double entropy_of_counts(const std::vector<double>& counts);

}  // namespace recsel
