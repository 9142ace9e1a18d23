#include "recsel/portfolio.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "implementations.hpp"
#include "recsel/csv.hpp"
#include "recsel/error.hpp"
#include "recsel/hash.hpp"

namespace recsel {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string to_string(Family f) {
  switch (f) {
    case Family::popularity: return "popularity";
    case Family::itemknn: return "itemknn";
    case Family::bpr: return "bpr";
    case Family::implicitmf: return "implicitmf";
    case Family::ease: return "ease";
    case Family::fpmc: return "fpmc";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  for (auto f : {Family::popularity, Family::itemknn, Family::bpr, Family::implicitmf, Family::ease, Family::fpmc}) {
    if (to_string(f) == s) return f;
  }
  throw ValidationError("unknown recommender family '" + s + "'");
}

const std::vector<Implementation>& implementations() {
  static const std::vector<Implementation> all = {
      impl::pop_a(), impl::pop_b(), impl::itemknn_a(), impl::itemknn_b(), impl::bpr_a(),
      impl::bpr_b(), impl::implicitmf(), impl::ease(),  impl::fpmc()};
  return all;
}

const Implementation& find_implementation(const std::string& name) {
  for (const auto& im : implementations()) {
    if (im.name == name) return im;
  }
  throw ValidationError("unknown recommender implementation '" + name + "'");
}

FittedModel::FittedModel(std::string algo_id, std::string implementation, std::size_t n_items,
                         ModelState state, std::vector<std::vector<std::size_t>> history)
    : algo_id_(std::move(algo_id)),
      implementation_(std::move(implementation)),
      n_items_(n_items),
      state_(std::move(state)),
      history_(std::move(history)) {}

const Eigen::MatrixXd& FittedModel::matrix(const std::string& name) const {
  auto it = state_.find(name);
  if (it == state_.end()) throw Error("model " + algo_id_ + " has no state matrix '" + name + "'");
  return it->second;
}

Eigen::VectorXd FittedModel::scores(std::size_t user) const {
  if (user >= n_users()) throw Error("user index out of range for model " + algo_id_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_items_));
  find_implementation(implementation_).score(*this, user, out);
  return out;
}

FittedModel fit(const RecommenderSpec& spec, const Dataset& train) {
  if (train.empty()) throw EmptyDatasetError("cannot fit " + spec.algo_id + " on an empty training set");
  const auto& im = find_implementation(spec.implementation.empty() ? spec.algo_id : spec.implementation);
  if (im.family != spec.family) {
    throw ValidationError("spec " + spec.algo_id + " declares family " + to_string(spec.family) +
                          " but implementation " + im.name + " is " + to_string(im.family));
  }
  std::vector<std::vector<std::size_t>> history(train.n_users());
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    auto items = train.items_of(u);
    history[u].assign(items.begin(), items.end());
  }
  return FittedModel(spec.algo_id, im.name, train.n_items(), im.fit(spec, train), std::move(history));
}

RankedList top_k(const Eigen::VectorXd& scores, std::span<const std::size_t> exclude, std::size_t k) {
  std::vector<std::size_t> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  auto ex = exclude.begin();
  for (std::size_t i = 0; i < static_cast<std::size_t>(scores.size()); ++i) {
    while (ex != exclude.end() && *ex < i) ++ex;
    if (ex != exclude.end() && *ex == i) continue;
    candidates.push_back(i);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    return sa != sb ? sa > sb : a < b;
  };
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                    better);
  RankedList out;
  out.items.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
  for (auto i : out.items) out.scores.push_back(scores[static_cast<Eigen::Index>(i)]);
  return out;
}

RankedList recommend(const FittedModel& model, std::size_t user, std::size_t k) {
  return top_k(model.scores(user), model.history(user), k);
}

std::vector<RecommenderSpec> default_portfolio(const std::filesystem::path& source_root) {
  std::vector<RecommenderSpec> out;
  for (const auto& im : implementations()) {
    RecommenderSpec s;
    s.algo_id = im.name;
    s.family = im.family;
    s.implementation = im.name;
    s.params = im.defaults;
    s.source_path = source_root / im.source_file;
    s.seed = 42;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

std::string strip(std::string s) {
  auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

struct Section {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, std::pair<std::string, std::size_t>> keys;
};

}  // namespace

std::vector<RecommenderSpec> load_portfolio_manifest(const std::filesystem::path& path) {
  std::istringstream in(csv::read_file(path));
  std::vector<Section> sections;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header in " + path.string(), lineno);
      sections.push_back({strip(line.substr(1, line.size() - 2)), lineno, {}});
      if (sections.back().name.empty()) throw ParseError("empty algo_id in " + path.string(), lineno);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value in " + path.string(), lineno);
    if (sections.empty()) throw ParseError("key outside of an [algo_id] section in " + path.string(), lineno);
    auto key = strip(line.substr(0, eq));
    auto value = strip(line.substr(eq + 1));
    if (!sections.back().keys.emplace(key, std::make_pair(value, lineno)).second) {
      throw ParseError("duplicate key '" + key + "' in " + path.string(), lineno);
    }
  }
  if (sections.empty()) throw ValidationError("portfolio manifest " + path.string() + " lists no recommenders");

  const auto base = path.parent_path();
  std::set<std::string> seen;
  std::vector<RecommenderSpec> specs;
  for (const auto& sec : sections) {
    auto fail = [&](const std::string& msg, std::size_t at) -> ValidationError {
      return ValidationError(path.string() + ":" + std::to_string(at) + ": [" + sec.name + "] " + msg);
    };
    if (!seen.insert(sec.name).second) throw fail("duplicate algo_id", sec.line);
    RecommenderSpec s;
    s.algo_id = sec.name;
    auto get = [&](const std::string& k) -> const std::pair<std::string, std::size_t>* {
      auto it = sec.keys.find(k);
      return it == sec.keys.end() ? nullptr : &it->second;
    };
    s.implementation = get("implementation") ? get("implementation")->first : sec.name;
    const Implementation* im = nullptr;
    try {
      im = &find_implementation(s.implementation);
    } catch (const ValidationError& e) {
      throw fail(e.what(), get("implementation") ? get("implementation")->second : sec.line);
    }
    s.family = im->family;
    if (auto f = get("family")) {
      Family declared;
      try {
        declared = family_from_string(f->first);
      } catch (const ValidationError& e) {
        throw fail(e.what(), f->second);
      }
      if (declared != im->family) throw fail("family does not match implementation " + im->name, f->second);
    }
    s.params = im->defaults;
    for (const auto& [key, val] : sec.keys) {
      if (key == "implementation" || key == "family") continue;
      if (key == "seed") {
        auto v = parse_epoch_seconds(val.first);
        if (!v) throw fail("seed must be a non-negative integer", val.second);
        s.seed = static_cast<std::uint64_t>(*v);
      } else if (key == "source") {
        s.source_path = std::filesystem::path(val.first);
        if (s.source_path.is_relative()) s.source_path = base / s.source_path;
        std::ifstream probe(s.source_path);
        if (!probe) throw fail("source file not readable: " + s.source_path.string(), val.second);
      } else if (key.rfind("param.", 0) == 0) {
        const auto name = key.substr(6);
        if (!im->defaults.count(name)) throw fail("unknown parameter '" + name + "' for " + im->name, val.second);
        try {
          s.params[name] = csv::parse_double(val.first);
        } catch (const Error&) {
          throw fail("parameter '" + name + "' is not a number", val.second);
        }
      } else {
        throw fail("unknown key '" + key + "'", val.second);
      }
    }
    if (s.source_path.empty()) throw fail("missing 'source' key", sec.line);
    specs.push_back(std::move(s));
  }
  return specs;
}

std::string write_portfolio_manifest(const std::vector<RecommenderSpec>& specs,
                                     const std::filesystem::path& relative_to) {
  std::ostringstream out;
  out << "# recsel portfolio manifest\n";
  for (const auto& s : specs) {
    out << "\n[" << s.algo_id << "]\n";
    out << "implementation = " << (s.implementation.empty() ? s.algo_id : s.implementation) << "\n";
    out << "family = " << to_string(s.family) << "\n";
    out << "source = " << s.source_path.lexically_relative(relative_to).generic_string() << "\n";
    out << "seed = " << s.seed << "\n";
    for (const auto& [k, v] : s.params) out << "param." << k << " = " << csv::format_double(v) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Hashing and serialization

std::uint64_t dataset_hash(const Dataset& ds) {
  Fnv1a h;
  h.str("recsel-dataset-v1").u64(ds.size());
  for (const auto& it : ds.interactions()) {
    h.str(it.user_id).str(it.item_id).u64(static_cast<std::uint64_t>(it.timestamp));
    h.u64(it.rating.has_value());
    if (it.rating) h.f64(*it.rating);
  }
  return h.value();
}

std::uint64_t spec_hash(const RecommenderSpec& spec) {
  Fnv1a h;
  h.str("recsel-spec-v1").str(spec.algo_id).str(spec.implementation).str(to_string(spec.family));
  h.u64(spec.seed).u64(spec.params.size());
  for (const auto& [k, v] : spec.params) h.str(k).f64(v);
  std::ifstream in(spec.source_path, std::ios::binary);
  if (in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    h.str(ss.str());
  }
  return h.value();
}

namespace {
constexpr int kModelFormatVersion = 1;
}

std::vector<std::uint8_t> serialize_model(const FittedModel& model) {
  nlohmann::json j;
  j["format"] = "recsel-model";
  j["version"] = kModelFormatVersion;
  j["algo_id"] = model.algo_id();
  j["implementation"] = model.implementation();
  j["n_items"] = model.n_items();
  auto& state = j["state"] = nlohmann::json::object();
  for (const auto& [name, m] : model.state()) {
    std::vector<double> data(m.data(), m.data() + m.size());
    state[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  }
  j["history"] = model.histories();
  return nlohmann::json::to_cbor(j);
}

FittedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::from_cbor(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("corrupt model blob: ") + e.what());
  }
  if (j.value("format", "") != "recsel-model") throw ValidationError("not a recsel model blob");
  if (j.value("version", 0) != kModelFormatVersion) {
    throw ValidationError("unsupported model format version " + std::to_string(j.value("version", 0)));
  }
  ModelState state;
  for (const auto& [name, m] : j.at("state").items()) {
    const auto rows = m.at("rows").get<Eigen::Index>();
    const auto cols = m.at("cols").get<Eigen::Index>();
    const auto data = m.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ValidationError("model matrix size mismatch");
    state[name] = Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
  }
  return FittedModel(j.at("algo_id").get<std::string>(), j.at("implementation").get<std::string>(),
                     j.at("n_items").get<std::size_t>(), std::move(state),
                     j.at("history").get<std::vector<std::vector<std::size_t>>>());
}

std::filesystem::path ModelCache::path_for(std::uint64_t data_hash, std::uint64_t spec_h) const {
  return dir_ / "models" / (hex64(data_hash) + "-" + hex64(spec_h) + ".cbor");
}

std::optional<FittedModel> ModelCache::load(std::uint64_t data_hash, std::uint64_t spec_h) const {
  const auto p = path_for(data_hash, spec_h);
  if (!std::filesystem::exists(p)) return std::nullopt;
  const auto raw = csv::read_file(p);
  try {
    return deserialize_model(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  } catch (const ValidationError&) {
    return std::nullopt;  // stale or corrupt entry; caller refits
  }
}

void ModelCache::store(std::uint64_t data_hash, std::uint64_t spec_h, const FittedModel& model) const {
  const auto bytes = serialize_model(model);
  const auto p = path_for(data_hash, spec_h);
  const auto tmp = p.string() + ".tmp";
  csv::write_file(tmp, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  std::filesystem::rename(tmp, p);
}

namespace detail {

std::vector<std::size_t> item_user_counts(const Dataset& train) {
  std::vector<std::size_t> out(train.n_items(), 0);
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    for (auto i : train.items_of(u)) ++out[i];
  }
  return out;
}

}  // namespace detail

}  // namespace recsel
