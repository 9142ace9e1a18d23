#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "recsel/code_metrics.hpp"
#include "recsel/csv.hpp"
#include "recsel/error.hpp"

namespace recsel::code {

HalsteadCounts halstead_counts(const CodeUnit& unit) {
  std::set<std::string, std::less<>> ops, opnds;
  HalsteadCounts c;
  for (const auto& t : unit.tokens) {
    if (t.cls == TokenClass::operator_) {
      ops.insert(t.text);
      ++c.total_operators;
    } else if (t.cls == TokenClass::operand) {
      opnds.insert(t.text);
      ++c.total_operands;
    }
  }
  c.distinct_operators = ops.size();
  c.distinct_operands = opnds.size();
  return c;
}

HalsteadMetrics halstead(const HalsteadCounts& c) {
  const auto n1 = static_cast<double>(c.distinct_operators);
  const auto n2 = static_cast<double>(c.distinct_operands);
  const auto vocabulary = n1 + n2;
  const auto length = static_cast<double>(c.total_operators + c.total_operands);
  HalsteadMetrics m;
  m.volume = vocabulary > 1 ? length * std::log2(vocabulary) : 0.0;
  m.difficulty = (n1 / 2.0) * (static_cast<double>(c.total_operands) / std::max(n2, 1.0));
  m.effort = m.difficulty * m.volume;
  return m;
}

HalsteadMetrics halstead(const CodeUnit& unit) { return halstead(halstead_counts(unit)); }

Cyclomatic cyclomatic(const CodeUnit& unit) {
  Cyclomatic c;
  c.blocks = unit.blocks.size();
  if (c.blocks == 0) return c;
  double total = 0.0;
  for (const auto& b : unit.blocks) total += 1.0 + static_cast<double>(b.decision_points);
  c.average = total / static_cast<double>(c.blocks);
  return c;
}

GraphMetrics ast_graph_metrics(const SyntaxGraph& graph) {
  GraphMetrics m;
  const std::size_t n = graph.size();
  m.node_count = n;
  if (n == 0) return m;

  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (auto c : graph.children[p]) {
      if (c == p) continue;
      adj[p].push_back(c);
      adj[c].push_back(p);
    }
  }
  std::size_t degree_sum = 0;
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    degree_sum += a.size();
    m.max_degree = std::max(m.max_degree, a.size());
  }
  m.edge_count = degree_sum / 2;
  m.avg_degree = static_cast<double>(degree_sum) / static_cast<double>(n);

  // Each triangle u < v < w is found once from edge (u, v).
  std::vector<double> tri(n, 0.0);
  double triangles = 0.0;
  std::vector<std::size_t> common;
  for (std::size_t u = 0; u < n; ++u) {
    for (auto v : adj[u]) {
      if (v <= u) continue;
      common.clear();
      std::set_intersection(adj[u].begin(), adj[u].end(), adj[v].begin(), adj[v].end(), std::back_inserter(common));
      for (auto w : common) {
        if (w <= v) continue;
        triangles += 1.0;
        tri[u] += 1.0;
        tri[v] += 1.0;
        tri[w] += 1.0;
      }
    }
  }
  double triads = 0.0;
  double clustering = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto d = static_cast<double>(adj[v].size());
    triads += d * (d - 1.0) / 2.0;
    if (adj[v].size() >= 2) clustering += 2.0 * tri[v] / (d * (d - 1.0));
  }
  m.transitivity = triads > 0.0 ? 3.0 * triangles / triads : 0.0;
  m.avg_clustering = clustering / static_cast<double>(n);

  std::vector<std::size_t> dist(n, SIZE_MAX);
  std::deque<std::size_t> queue{graph.root};
  dist[graph.root] = 0;
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    m.depth = std::max(m.depth, dist[v]);
    for (auto c : graph.children[v]) {
      if (dist[c] == SIZE_MAX) {
        dist[c] = dist[v] + 1;
        queue.push_back(c);
      }
    }
  }
  return m;
}

std::array<double, kAlgoFeatureCount> AlgoFeatureVector::values() const {
  return {sloc,           lloc,           average_cc_file,  num_complexity_blocks, hal_volume,
          hal_difficulty, hal_effort,     ast_node_count,   ast_edge_count,        ast_avg_degree,
          ast_max_degree, ast_transitivity, ast_avg_clustering, ast_depth};
}

AlgoFeatureVector AlgoFeatureVector::from_values(std::string algo_id, const std::array<double, kAlgoFeatureCount>& v) {
  AlgoFeatureVector f;
  f.algo_id = std::move(algo_id);
  f.sloc = v[0];
  f.lloc = v[1];
  f.average_cc_file = v[2];
  f.num_complexity_blocks = v[3];
  f.hal_volume = v[4];
  f.hal_difficulty = v[5];
  f.hal_effort = v[6];
  f.ast_node_count = v[7];
  f.ast_edge_count = v[8];
  f.ast_avg_degree = v[9];
  f.ast_max_degree = v[10];
  f.ast_transitivity = v[11];
  f.ast_avg_clustering = v[12];
  f.ast_depth = v[13];
  return f;
}

void validate(const AlgoFeatureVector& f) {
  const auto v = f.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k]) || v[k] < 0.0) {
      throw ValidationError(f.algo_id + ": " + std::string(kAlgoFeatureNames[k]) + " must be finite and >= 0");
    }
  }
  if (f.lloc > f.sloc) throw ValidationError(f.algo_id + ": lloc exceeds sloc");
  if (f.ast_transitivity > 1.0 || f.ast_avg_clustering > 1.0) {
    throw ValidationError(f.algo_id + ": transitivity and clustering must lie in [0,1]");
  }
  const double expected = f.hal_difficulty * f.hal_volume;
  if (std::abs(f.hal_effort - expected) > 1e-9 * std::max(std::abs(f.hal_effort), std::abs(expected))) {
    throw ValidationError(f.algo_id + ": hal_effort != hal_difficulty * hal_volume");
  }
}

AlgoFeatureVector algo_features(std::string algo_id, const CodeUnit& unit, const SyntaxGraph* ast_override) {
  AlgoFeatureVector f;
  f.algo_id = std::move(algo_id);
  f.sloc = static_cast<double>(unit.sloc);
  f.lloc = static_cast<double>(unit.lloc);
  const auto cc = cyclomatic(unit);
  f.average_cc_file = cc.average;
  f.num_complexity_blocks = static_cast<double>(cc.blocks);
  const auto h = halstead(unit);
  f.hal_volume = h.volume;
  f.hal_difficulty = h.difficulty;
  f.hal_effort = h.effort;
  const auto g = ast_graph_metrics(ast_override ? *ast_override : unit.tree);
  f.ast_node_count = static_cast<double>(g.node_count);
  f.ast_edge_count = static_cast<double>(g.edge_count);
  f.ast_avg_degree = g.avg_degree;
  f.ast_max_degree = static_cast<double>(g.max_degree);
  f.ast_transitivity = g.transitivity;
  f.ast_avg_clustering = g.avg_clustering;
  f.ast_depth = static_cast<double>(g.depth);
  return f;
}

AlgoFeatureVector extract_algo_features(std::string algo_id, const std::filesystem::path& source,
                                        const LanguageProfile& profile, const std::filesystem::path& ast_json) {
  const auto unit = analyze_file(source, profile);
  if (ast_json.empty()) return algo_features(std::move(algo_id), unit);
  const auto graph = read_ast_json(ast_json);
  return algo_features(std::move(algo_id), unit, &graph);
}

std::string feature_manifest_csv(const std::vector<AlgoFeatureVector>& rows) {
  std::ostringstream out;
  out << "algo_id";
  for (auto name : kAlgoFeatureNames) out << ',' << name;
  out << '\n';
  for (const auto& r : rows) {
    out << csv::escape(r.algo_id);
    for (double v : r.values()) out << ',' << csv::format_double(v);
    out << '\n';
  }
  return out.str();
}

void write_feature_manifest(const std::vector<AlgoFeatureVector>& rows, const std::filesystem::path& path) {
  csv::write_file(path, feature_manifest_csv(rows));
}

std::vector<AlgoFeatureVector> load_feature_manifest(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto id_col = table.column("algo_id");
  if (id_col == std::string::npos) throw ValidationError(path.string() + ": missing column algo_id");
  std::array<std::size_t, kAlgoFeatureCount> cols{};
  for (std::size_t k = 0; k < kAlgoFeatureCount; ++k) {
    cols[k] = table.column(kAlgoFeatureNames[k]);
    if (cols[k] == std::string::npos) {
      throw ValidationError(path.string() + ": missing column " + std::string(kAlgoFeatureNames[k]));
    }
  }
  if (table.header.size() != kAlgoFeatureCount + 1) {
    throw ValidationError(path.string() + ": unexpected extra columns in feature manifest");
  }
  std::vector<AlgoFeatureVector> out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + " row " + std::to_string(r + 1) + " (line " +
                              std::to_string(table.line_numbers[r]) + ")";
    if (row.size() != table.header.size()) throw ValidationError(where + ": wrong field count");
    std::array<double, kAlgoFeatureCount> v{};
    for (std::size_t k = 0; k < kAlgoFeatureCount; ++k) {
      try {
        v[k] = csv::parse_double(row[cols[k]]);
      } catch (const Error&) {
        throw ValidationError(where + ": " + std::string(kAlgoFeatureNames[k]) + " is not a number");
      }
    }
    auto f = AlgoFeatureVector::from_values(row[id_col], v);
    if (f.algo_id.empty()) throw ValidationError(where + ": empty algo_id");
    if (!ids.insert(f.algo_id).second) throw ValidationError(where + ": duplicate algo_id " + f.algo_id);
    try {
      validate(f);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    out.push_back(std::move(f));
  }
  return out;
}

FeatureTable to_feature_table(const std::vector<AlgoFeatureVector>& rows) {
  FeatureTable t;
  t.names.assign(kAlgoFeatureNames.begin(), kAlgoFeatureNames.end());
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kAlgoFeatureCount));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    t.keys.push_back(rows[r].algo_id);
    const auto v = rows[r].values();
    for (std::size_t c = 0; c < kAlgoFeatureCount; ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
    }
  }
  return t;
}

}  // namespace recsel::code
