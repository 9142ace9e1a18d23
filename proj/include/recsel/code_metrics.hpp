#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recsel/features.hpp"

namespace recsel::code {

enum class TokenClass { operator_, operand, keyword, comment, other };

struct Token {
  TokenClass cls = TokenClass::other;
  std::string text;
  std::size_t line = 0;      // 1-based line where the token starts
  std::size_t end_line = 0;  // last line it covers (multi-line strings/comments)
};

enum class NestingStyle { delimiters, indentation };

// Configuration of the lexer and structure recognizer for one language.
//
// Lexing rules shared by all profiles:
//  - identifiers and literals (numbers, strings, chars) are operands, unless
//    the identifier is listed in `operator_keywords` (operator) or
//    `keywords` (keyword, ignored by Halstead);
//  - punctuation is an operator, matched longest-first from `punctuators`;
//    an opening bracket stands for the bracket pair, so `)`, `]` and `}` are
//    classified as `other`;
//  - comments are kept as `comment` tokens, whitespace is dropped.
struct LanguageProfile {
  std::string name;
  std::vector<std::string> line_comments;
  std::vector<std::pair<std::string, std::string>> block_comments;
  bool triple_quoted_strings = false;
  std::string string_prefix_chars;  // letters allowed directly before a quote
  std::set<std::string, std::less<>> keywords;
  std::set<std::string, std::less<>> operator_keywords;
  // Each occurrence adds one to the enclosing block's cyclomatic complexity.
  std::set<std::string, std::less<>> decision_tokens;
  std::vector<std::string> punctuators;
  NestingStyle nesting = NestingStyle::delimiters;
  // Indentation profiles: keyword that opens a function block.
  std::string function_keyword;
};

const LanguageProfile& profile(std::string_view name);
// "python" for .py files, otherwise "cpp".
const LanguageProfile& profile_for(const std::filesystem::path& path);
std::vector<std::string> profile_names();

std::vector<Token> tokenize(std::string_view source, const LanguageProfile& profile);

// Rooted graph of syntax nodes; built-in analysis always yields a tree, an
// externally supplied export may carry cross edges.
struct SyntaxGraph {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> children;
  std::size_t root = 0;

  std::size_t size() const { return children.size(); }
  std::size_t add(std::string label, std::optional<std::size_t> parent);
  // Connected, acyclic, and every node but the root has exactly one parent.
  bool is_tree() const;
};

// Reads {"root": id?, "nodes": [{"id": .., "children": [..]}, ...]}. Without
// "root", the unique node that is nobody's child is the root.
SyntaxGraph read_ast_json(const std::filesystem::path& path);
SyntaxGraph parse_ast_json(std::string_view text);

struct Block {
  std::string name;
  std::size_t line = 0;
  std::size_t decision_points = 0;
};

struct CodeUnit {
  std::vector<Token> tokens;
  std::vector<Block> blocks;
  SyntaxGraph tree;
  std::size_t sloc = 0;
  std::size_t lloc = 0;
};

// SLOC counts physical lines covered by at least one non-comment token.
// LLOC counts lines holding a statement-bearing token: any non-comment token
// except bare grouping/separator punctuation ( ) [ ] { } ; , : and `\`.
CodeUnit analyze_source(std::string_view source, const LanguageProfile& profile);
CodeUnit analyze_file(const std::filesystem::path& path, const LanguageProfile& profile);

struct HalsteadCounts {
  std::size_t distinct_operators = 0;  // n1
  std::size_t distinct_operands = 0;   // n2
  std::size_t total_operators = 0;     // N1
  std::size_t total_operands = 0;      // N2
};

struct HalsteadMetrics {
  double volume = 0.0;
  double difficulty = 0.0;
  double effort = 0.0;
};

HalsteadCounts halstead_counts(const CodeUnit& unit);
HalsteadMetrics halstead(const HalsteadCounts& counts);
HalsteadMetrics halstead(const CodeUnit& unit);

struct Cyclomatic {
  double average = 0.0;
  std::size_t blocks = 0;
};

Cyclomatic cyclomatic(const CodeUnit& unit);

struct GraphMetrics {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double avg_degree = 0.0;
  std::size_t max_degree = 0;
  double transitivity = 0.0;
  double avg_clustering = 0.0;
  std::size_t depth = 0;
};

// Metrics of the graph viewed as undirected and simple; depth follows child
// links from the root (shortest distance to the farthest node).
GraphMetrics ast_graph_metrics(const SyntaxGraph& graph);

inline constexpr std::size_t kAlgoFeatureCount = 14;
inline constexpr std::array<std::string_view, kAlgoFeatureCount> kAlgoFeatureNames = {
    "sloc",           "lloc",           "average_cc_file",  "num_complexity_blocks", "hal_volume",
    "hal_difficulty", "hal_effort",     "ast_node_count",   "ast_edge_count",        "ast_avg_degree",
    "ast_max_degree", "ast_transitivity", "ast_avg_clustering", "ast_depth"};

struct AlgoFeatureVector {
  std::string algo_id;
  double sloc = 0, lloc = 0;
  double average_cc_file = 0, num_complexity_blocks = 0;
  double hal_volume = 0, hal_difficulty = 0, hal_effort = 0;
  double ast_node_count = 0, ast_edge_count = 0, ast_avg_degree = 0, ast_max_degree = 0;
  double ast_transitivity = 0, ast_avg_clustering = 0, ast_depth = 0;

  std::array<double, kAlgoFeatureCount> values() const;
  static AlgoFeatureVector from_values(std::string algo_id, const std::array<double, kAlgoFeatureCount>& v);
  bool operator==(const AlgoFeatureVector&) const = default;
};

// Throws ValidationError describing the first violated invariant.
void validate(const AlgoFeatureVector& f);

AlgoFeatureVector algo_features(std::string algo_id, const CodeUnit& unit,
                                const SyntaxGraph* ast_override = nullptr);
AlgoFeatureVector extract_algo_features(std::string algo_id, const std::filesystem::path& source,
                                        const LanguageProfile& profile,
                                        const std::filesystem::path& ast_json = {});

// Feature manifest CSV: algo_id plus the 14 canonical columns, any order.
void write_feature_manifest(const std::vector<AlgoFeatureVector>& rows, const std::filesystem::path& path);
std::string feature_manifest_csv(const std::vector<AlgoFeatureVector>& rows);
std::vector<AlgoFeatureVector> load_feature_manifest(const std::filesystem::path& path);

FeatureTable to_feature_table(const std::vector<AlgoFeatureVector>& rows);

}  // namespace recsel::code
