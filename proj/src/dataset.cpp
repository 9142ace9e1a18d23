#include "recsel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "recsel/csv.hpp"
#include "recsel/error.hpp"

namespace recsel {

Dataset::Dataset(std::vector<Interaction> interactions) : interactions_(std::move(interactions)) {
  row_user_.reserve(interactions_.size());
  row_item_.reserve(interactions_.size());
  for (const auto& it : interactions_) {
    if (it.timestamp < 0) throw ValidationError("negative timestamp for user " + it.user_id);
    if (it.rating && !std::isfinite(*it.rating)) {
      throw ValidationError("non-finite rating for user " + it.user_id);
    }
    has_ratings_ = has_ratings_ || it.rating.has_value();
    auto [u, new_user] = user_index_.try_emplace(it.user_id, user_ids_.size());
    if (new_user) user_ids_.push_back(it.user_id);
    auto [i, new_item] = item_index_.try_emplace(it.item_id, item_ids_.size());
    if (new_item) item_ids_.push_back(it.item_id);
    row_user_.push_back(u->second);
    row_item_.push_back(i->second);
  }

  // CSR of rows per user, chronological with stable ties.
  std::vector<std::size_t> counts(n_users(), 0);
  for (auto u : row_user_) ++counts[u];
  history_offsets_.assign(n_users() + 1, 0);
  for (std::size_t u = 0; u < n_users(); ++u) history_offsets_[u + 1] = history_offsets_[u] + counts[u];
  history_rows_.resize(interactions_.size());
  std::vector<std::size_t> cursor(history_offsets_.begin(), history_offsets_.end() - 1);
  for (std::size_t r = 0; r < interactions_.size(); ++r) history_rows_[cursor[row_user_[r]]++] = r;
  for (std::size_t u = 0; u < n_users(); ++u) {
    auto first = history_rows_.begin() + static_cast<std::ptrdiff_t>(history_offsets_[u]);
    auto last = history_rows_.begin() + static_cast<std::ptrdiff_t>(history_offsets_[u + 1]);
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return interactions_[a].timestamp < interactions_[b].timestamp;
    });
  }

  user_items_offsets_.assign(1, 0);
  for (std::size_t u = 0; u < n_users(); ++u) {
    std::vector<std::size_t> items;
    for (auto r : history(u)) items.push_back(row_item_[r]);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    user_items_.insert(user_items_.end(), items.begin(), items.end());
    user_items_offsets_.push_back(user_items_.size());
  }
}

std::optional<std::size_t> Dataset::find_user(const std::string& id) const {
  auto it = user_index_.find(id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Dataset::find_item(const std::string& id) const {
  auto it = item_index_.find(id);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> SplitDataset::test_items(std::size_t u) const {
  std::vector<std::string> ids;
  for (const auto& it : test[u]) ids.push_back(it.item_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::size_t> SplitDataset::relevant_items(std::size_t u) const {
  std::vector<std::size_t> out;
  std::size_t unknown = 0;
  for (const auto& id : test_items(u)) {
    if (auto i = train.find_item(id)) {
      out.push_back(*i);
    } else {
      out.push_back(train.n_items() + unknown++);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<int> parse_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) return std::nullopt;
  auto part = s.substr(pos, len);
  if (!all_digits(part)) return std::nullopt;
  int v = 0;
  std::from_chars(part.data(), part.data() + part.size(), v);
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

enum class TimeKind { unknown, epoch, iso };

}  // namespace

std::optional<std::int64_t> parse_epoch_seconds(std::string_view s) {
  s = trim(s);
  if (!all_digits(s)) return std::nullopt;
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) return std::nullopt;
  return v;
}

// YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z|(+|-)HH[:]MM]
std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  s = trim(s);
  auto y = parse_fixed(s, 0, 4);
  auto mo = parse_fixed(s, 5, 2);
  auto d = parse_fixed(s, 8, 2);
  if (!y || !mo || !d || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t secs = sys_days{ymd}.time_since_epoch().count() * kSecondsPerDay;
  std::size_t pos = 10;
  if (pos == s.size()) return secs;
  if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
  auto hh = parse_fixed(s, pos + 1, 2);
  auto mm = parse_fixed(s, pos + 4, 2);
  if (!hh || !mm || s[pos + 3] != ':' || *hh > 23 || *mm > 59) return std::nullopt;
  secs += *hh * 3600 + *mm * 60;
  pos += 6;
  if (pos < s.size() && s[pos] == ':') {
    auto ss = parse_fixed(s, pos + 1, 2);
    if (!ss || *ss > 60) return std::nullopt;
    secs += *ss;
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
  }
  if (pos == s.size()) return secs;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
  if (s[pos] == '+' || s[pos] == '-') {
    int sign = s[pos] == '+' ? 1 : -1;
    auto oh = parse_fixed(s, pos + 1, 2);
    std::size_t mpos = pos + 3;
    if (mpos < s.size() && s[mpos] == ':') ++mpos;
    auto om = parse_fixed(s, mpos, 2);
    if (!oh || !om || mpos + 2 != s.size()) return std::nullopt;
    return secs - sign * (*oh * 3600 + *om * 60);
  }
  return std::nullopt;
}

LoadResult load_interactions(const std::filesystem::path& path, FileFormat format,
                             const Schema& schema, ParseMode mode) {
  const char delim = format == FileFormat::tsv ? '\t' : ',';
  auto table = csv::read_table(path, delim);

  auto require = [&](const std::string& name, const char* role) {
    auto c = table.column(name);
    if (c == std::string::npos) {
      throw SchemaError(std::string("missing ") + role + " column '" + name + "' in " + path.string());
    }
    return c;
  };
  const auto cu = require(schema.user, "user");
  const auto ci = require(schema.item, "item");
  const auto ct = require(schema.timestamp, "timestamp");
  std::size_t cr = std::string::npos;
  if (schema.rating) cr = require(*schema.rating, "rating");

  LoadResult result;
  std::vector<Interaction> rows;
  rows.reserve(table.rows.size());
  TimeKind kind = TimeKind::unknown;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto line = table.line_numbers[r];
    try {
      if (f.size() != table.header.size()) {
        throw ParseError("expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(f.size()),
                         line);
      }
      Interaction it;
      it.user_id = std::string(trim(f[cu]));
      it.item_id = std::string(trim(f[ci]));
      if (it.user_id.empty() || it.item_id.empty()) throw ParseError("empty user or item id", line);

      std::optional<std::int64_t> ts;
      if (kind != TimeKind::iso) ts = parse_epoch_seconds(f[ct]);
      if (ts && kind == TimeKind::unknown) kind = TimeKind::epoch;
      if (!ts && kind != TimeKind::epoch) {
        ts = parse_iso8601(f[ct]);
        if (ts && kind == TimeKind::unknown) kind = TimeKind::iso;
      }
      if (!ts) throw ParseError("unparseable timestamp '" + f[ct] + "'", line);
      if (*ts < 0) throw ParseError("negative timestamp", line);
      it.timestamp = *ts;

      if (cr != std::string::npos && !trim(f[cr]).empty()) {
        double v = 0.0;
        try {
          v = csv::parse_double(f[cr]);
        } catch (const Error&) {
          throw ParseError("unparseable rating '" + f[cr] + "'", line);
        }
        if (!std::isfinite(v)) throw ParseError("non-finite rating", line);
        it.rating = v;
      }
      rows.push_back(std::move(it));
    } catch (const ParseError&) {
      if (mode == ParseMode::strict) throw;
      ++result.skipped_rows;
    }
  }
  result.dataset = Dataset(std::move(rows));
  return result;
}

// ---------------------------------------------------------------------------

Dataset filter_min_interactions(const Dataset& ds, std::size_t k) {
  if (k < 1) throw Error("filter_min_interactions: k must be >= 1");
  std::vector<Interaction> kept;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (ds.history(ds.user_of(r)).size() >= k) kept.push_back(ds.interactions()[r]);
  }
  if (kept.empty()) {
    throw EmptyDatasetError("no user has at least " + std::to_string(k) + " interactions");
  }
  return Dataset(std::move(kept));
}

std::size_t train_count(std::size_t n, double train_fraction) {
  // The epsilon keeps exact products such as 0.8 * 15 from rounding up.
  auto t = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  t = std::max<std::size_t>(t, 1);
  if (t >= n) t = n - 1;
  return t;
}

SplitDataset temporal_split(const Dataset& ds, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("temporal_split: train_fraction must be in (0, 1)");
  }
  std::vector<Interaction> train_rows;
  train_rows.reserve(ds.size());
  SplitDataset out;
  out.test.resize(ds.n_users());
  out.split_point.resize(ds.n_users());
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    auto hist = ds.history(u);
    if (hist.size() < 2) {
      throw DegenerateDataError("user " + ds.user_id(u) + " has fewer than 2 interactions");
    }
    const auto n_train = train_count(hist.size(), train_fraction);
    for (std::size_t p = 0; p < hist.size(); ++p) {
      const auto& it = ds.interactions()[hist[p]];
      if (p < n_train) {
        train_rows.push_back(it);
      } else {
        out.test[u].push_back(it);
      }
    }
    out.split_point[u] = out.test[u].front().timestamp;
  }
  // Train rows are grouped by user in original user order, so train user
  // indices coincide with ds user indices.
  out.train = Dataset(std::move(train_rows));
  return out;
}

DatasetStats dataset_stats(std::size_t n_users, std::size_t n_items, std::size_t n_interactions) {
  DatasetStats s{n_users, n_items, n_interactions, 1.0};
  if (n_users > 0 && n_items > 0) {
    double density = static_cast<double>(n_interactions) /
                      (static_cast<double>(n_users) * static_cast<double>(n_items));
    s.sparsity = std::clamp(1.0 - density, 0.0, 1.0);
  }
  return s;
}

DatasetStats dataset_stats(const Dataset& ds) {
  return dataset_stats(ds.n_users(), ds.n_items(), ds.size());
}

}  // namespace recsel
