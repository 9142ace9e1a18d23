#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace recsel {

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;  // epoch seconds
  std::optional<double> rating;  // absent => implicit feedback

  double value() const { return rating.value_or(1.0); }
};

// Immutable interaction log with dense user/item indices assigned in order of
// first appearance.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Interaction> interactions);

  const std::vector<Interaction>& interactions() const { return interactions_; }
  std::size_t size() const { return interactions_.size(); }
  bool empty() const { return interactions_.empty(); }

  std::size_t n_users() const { return user_ids_.size(); }
  std::size_t n_items() const { return item_ids_.size(); }

  const std::string& user_id(std::size_t u) const { return user_ids_[u]; }
  const std::string& item_id(std::size_t i) const { return item_ids_[i]; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  std::optional<std::size_t> find_user(const std::string& id) const;
  std::optional<std::size_t> find_item(const std::string& id) const;

  // Dense indices of interaction `row`.
  std::size_t user_of(std::size_t row) const { return row_user_[row]; }
  std::size_t item_of(std::size_t row) const { return row_item_[row]; }

  // Row indices of user `u`, chronological; ties keep input order.
  std::span<const std::size_t> history(std::size_t u) const {
    return {history_rows_.data() + history_offsets_[u],
            history_offsets_[u + 1] - history_offsets_[u]};
  }

  // Distinct item indices consumed by `u`, ascending.
  std::span<const std::size_t> items_of(std::size_t u) const {
    return {user_items_.data() + user_items_offsets_[u],
            user_items_offsets_[u + 1] - user_items_offsets_[u]};
  }

  // True when at least one interaction carries an explicit rating.
  bool has_ratings() const { return has_ratings_; }

 private:
  std::vector<Interaction> interactions_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, std::size_t> user_index_;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::vector<std::size_t> row_user_;
  std::vector<std::size_t> row_item_;
  std::vector<std::size_t> history_offsets_{0};
  std::vector<std::size_t> history_rows_;
  std::vector<std::size_t> user_items_offsets_{0};
  std::vector<std::size_t> user_items_;
  bool has_ratings_ = false;
};

struct SplitDataset {
  Dataset train;
  // Indexed by train user index.
  std::vector<std::vector<Interaction>> test;
  // Timestamp of each user's first held-out interaction.
  std::vector<std::int64_t> split_point;

  // Distinct held-out item ids of user `u`, sorted.
  std::vector<std::string> test_items(std::size_t u) const;

  // Held-out items as train item indices. Items unknown to the training
  // catalog get ids >= train.n_items() so they count as relevant but can
  // never be recommended.
  std::vector<std::size_t> relevant_items(std::size_t u) const;
};

struct DatasetStats {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_interactions = 0;
  double sparsity = 1.0;
};

enum class FileFormat { csv, tsv };
enum class ParseMode { strict, lenient };

struct Schema {
  std::string user = "user_id";
  std::string item = "item_id";
  std::string timestamp = "timestamp";
  std::optional<std::string> rating;
};

struct LoadResult {
  Dataset dataset;
  std::size_t skipped_rows = 0;
};

LoadResult load_interactions(const std::filesystem::path& path, FileFormat format,
                             const Schema& schema, ParseMode mode = ParseMode::strict);

// Parses an epoch-seconds integer or an ISO-8601 date / date-time.
std::optional<std::int64_t> parse_epoch_seconds(std::string_view s);
std::optional<std::int64_t> parse_iso8601(std::string_view s);

// Drops users with fewer than k interactions (single pass) and re-densifies.
Dataset filter_min_interactions(const Dataset& ds, std::size_t k = 10);

// Number of a user's n interactions that go to training.
std::size_t train_count(std::size_t n, double train_fraction);

SplitDataset temporal_split(const Dataset& ds, double train_fraction = 0.8);

DatasetStats dataset_stats(const Dataset& ds);
DatasetStats dataset_stats(std::size_t n_users, std::size_t n_items, std::size_t n_interactions);

}  // namespace recsel
