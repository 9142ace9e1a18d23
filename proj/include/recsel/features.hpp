#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace recsel {

// Named feature rows keyed by an identifier (user_id or algo_id).
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::string> keys;
  Eigen::MatrixXd values;  // keys.size() x names.size()

  std::size_t row_of(const std::string& key) const;  // throws if absent
  bool contains(const std::string& key) const;
  void validate_finite() const;
};

// CSV with header `<key_column>,<names...>`.
void write_feature_table(const FeatureTable& t, const std::string& key_column, const std::filesystem::path& path);
FeatureTable read_feature_table(const std::filesystem::path& path, const std::string& key_column);

}  // namespace recsel
