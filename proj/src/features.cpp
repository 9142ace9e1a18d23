#include "recsel/features.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "recsel/csv.hpp"
#include "recsel/error.hpp"

namespace recsel {

std::size_t FeatureTable::row_of(const std::string& key) const {
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (keys[r] == key) return r;
  }
  throw ValidationError("no feature row for '" + key + "'");
}

bool FeatureTable::contains(const std::string& key) const {
  for (const auto& k : keys) {
    if (k == key) return true;
  }
  return false;
}

void FeatureTable::validate_finite() const {
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (!std::isfinite(values(r, c))) {
        throw ValidationError("non-finite feature " + names[c] + " for " + keys[r]);
      }
    }
  }
}

void write_feature_table(const FeatureTable& t, const std::string& key_column, const std::filesystem::path& path) {
  std::ostringstream out;
  std::vector<std::string> header{key_column};
  header.insert(header.end(), t.names.begin(), t.names.end());
  out << csv::join(header) << '\n';
  for (std::size_t r = 0; r < t.keys.size(); ++r) {
    out << csv::escape(t.keys[r]);
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      out << ',' << csv::format_double(t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out << '\n';
  }
  csv::write_file(path, out.str());
}

FeatureTable read_feature_table(const std::filesystem::path& path, const std::string& key_column) {
  auto table = csv::read_table(path);
  const auto kc = table.column(key_column);
  if (kc == std::string::npos) throw SchemaError("missing key column '" + key_column + "' in " + path.string());
  FeatureTable t;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == kc) continue;
    t.names.push_back(table.header[c]);
    cols.push_back(c);
  }
  t.values.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    if (row.size() != table.header.size()) throw ParseError("wrong field count in " + path.string(), line);
    if (!seen.insert(row[kc]).second) throw ParseError("duplicate key '" + row[kc] + "'", line);
    t.keys.push_back(row[kc]);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      double v = 0.0;
      try {
        v = csv::parse_double(row[cols[c]]);
      } catch (const Error&) {
        throw ParseError("bad value for " + t.names[c], line);
      }
      if (!std::isfinite(v)) throw ParseError("non-finite value for " + t.names[c], line);
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return t;
}

}  // namespace recsel
