#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include <json.hpp>

#include "recsel/code_metrics.hpp"
#include "recsel/csv.hpp"
#include "recsel/error.hpp"

namespace recsel::code {

std::size_t SyntaxGraph::add(std::string label, std::optional<std::size_t> parent) {
  labels.push_back(std::move(label));
  children.emplace_back();
  const auto id = children.size() - 1;
  if (parent) children[*parent].push_back(id);
  return id;
}

bool SyntaxGraph::is_tree() const {
  if (children.empty() || root >= children.size()) return false;
  std::vector<std::size_t> parents(children.size(), 0);
  for (const auto& ch : children) {
    for (auto c : ch) {
      if (c >= children.size()) return false;
      ++parents[c];
    }
  }
  if (parents[root] != 0) return false;
  for (std::size_t v = 0; v < parents.size(); ++v) {
    if (v != root && parents[v] != 1) return false;
  }
  // With one parent per non-root node, reachability of all nodes rules out cycles.
  std::vector<char> seen(children.size(), 0);
  std::vector<std::size_t> stack{root};
  seen[root] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto c : children[v]) {
      if (!seen[c]) {
        seen[c] = 1;
        ++reached;
        stack.push_back(c);
      }
    }
  }
  return reached == children.size();
}

SyntaxGraph parse_ast_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid AST JSON: ") + e.what(), 0);
  }
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw ValidationError("AST JSON needs a 'nodes' array");
  std::map<std::string, std::size_t> index;
  auto key = [](const nlohmann::json& id) { return id.is_string() ? id.get<std::string>() : id.dump(); };
  SyntaxGraph g;
  for (const auto& node : j["nodes"]) {
    if (!node.contains("id")) throw ValidationError("AST JSON node without 'id'");
    if (!index.emplace(key(node["id"]), g.size()).second) {
      throw ValidationError("duplicate AST node id " + key(node["id"]));
    }
    g.add(node.value("type", std::string{}), std::nullopt);
  }
  if (g.size() == 0) throw ValidationError("AST JSON has no nodes");
  std::vector<std::size_t> indegree(g.size(), 0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto& node = j["nodes"][n];
    if (!node.contains("children")) continue;
    for (const auto& c : node["children"]) {
      auto it = index.find(key(c));
      if (it == index.end()) throw ValidationError("AST child references unknown id " + key(c));
      g.children[n].push_back(it->second);
      ++indegree[it->second];
    }
  }
  if (j.contains("root")) {
    auto it = index.find(key(j["root"]));
    if (it == index.end()) throw ValidationError("AST root id not found");
    g.root = it->second;
  } else {
    std::vector<std::size_t> roots;
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (indegree[n] == 0) roots.push_back(n);
    }
    if (roots.size() != 1) throw ValidationError("AST JSON must have exactly one parentless node or a 'root' field");
    g.root = roots.front();
  }
  // Every node must hang off the root.
  std::vector<char> seen(g.size(), 0);
  std::vector<std::size_t> stack{g.root};
  seen[g.root] = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto c : g.children[v]) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ValidationError("AST JSON has nodes unreachable from the root");
  }
  return g;
}

SyntaxGraph read_ast_json(const std::filesystem::path& path) { return parse_ast_json(csv::read_file(path)); }

namespace {

bool is_opener(const Token& t) {
  return t.cls == TokenClass::operator_ && (t.text == "(" || t.text == "[" || t.text == "{");
}
bool is_closer(const Token& t) { return t.cls == TokenClass::other && (t.text == ")" || t.text == "]" || t.text == "}"); }

char closer_for(const std::string& open) { return open == "(" ? ')' : open == "[" ? ']' : '}'; }

std::string group_label(const std::string& open) {
  return open == "(" ? "paren" : open == "[" ? "bracket" : "brace";
}

bool counts_as_decision(const Token& t, const LanguageProfile& p) {
  if (t.cls == TokenClass::comment || t.cls == TokenClass::other) return false;
  return p.decision_tokens.count(t.text) > 0;
}

// ---------------------------------------------------------------------------
// Delimiter-nested languages: braces delimit blocks, statements end at ';'.

class DelimiterParser {
 public:
  DelimiterParser(const std::vector<Token>& tokens, const LanguageProfile& p, CodeUnit& unit)
      : tokens_(tokens), p_(p), unit_(unit) {}

  void run() {
    auto& g = unit_.tree;
    g.root = g.add("unit", std::nullopt);
    frames_.push_back({g.root, '\0', 0, {}, {}, false});

    for (std::size_t k = 0; k < tokens_.size(); ++k) {
      const auto& t = tokens_[k];
      if (t.cls == TokenClass::comment) continue;
      code_.push_back(k);
      if (function_depth_ > 0 && counts_as_decision(t, p_)) ++unit_.blocks.back().decision_points;

      if (is_opener(t)) {
        const auto node = g.add(group_label(t.text), attach_point());
        bool is_function = false;
        if (t.text == "{" && function_depth_ == 0) {
          if (auto name = function_name()) {
            unit_.blocks.push_back({*name, t.line, 0});
            is_function = true;
          }
        }
        frames_.push_back({node, closer_for(t.text), t.line, {}, {}, is_function});
        if (is_function) ++function_depth_;
      } else if (is_closer(t)) {
        if (frames_.size() == 1 || frames_.back().closer != t.text[0]) {
          throw ParseError("unbalanced '" + t.text + "'", t.line);
        }
        const auto closed = frames_.back();
        frames_.pop_back();
        if (closed.is_function) --function_depth_;
        auto& top = frames_.back();
        if (closed.closer == '}' && statement_frame(top)) {
          top.last_stmt = top.stmt;
          top.stmt.reset();
        }
      } else {
        auto& top = frames_.back();
        if (t.text == ";" && statement_frame(top) && !top.stmt && top.last_stmt) {
          g.add("token", *top.last_stmt);  // `};` closes the statement the brace ended
          top.last_stmt.reset();
          continue;
        }
        g.add("token", attach_point());
        if (t.text == ";" && statement_frame(top)) {
          top.stmt.reset();
          top.last_stmt.reset();
        }
      }
    }
    if (frames_.size() > 1) throw ParseError("unclosed delimiter", frames_.back().open_line);
  }

 private:
  struct Frame {
    std::size_t node;
    char closer;
    std::size_t open_line;
    std::optional<std::size_t> stmt;
    std::optional<std::size_t> last_stmt;
    bool is_function;
  };

  bool statement_frame(const Frame& f) const { return f.closer == '\0' || f.closer == '}'; }

  std::size_t attach_point() {
    auto& top = frames_.back();
    if (!statement_frame(top)) return top.node;
    if (!top.stmt) {
      top.stmt = unit_.tree.add("stmt", top.node);
      top.last_stmt.reset();
    }
    return *top.stmt;
  }

  // If the '{' just read opens a function body, the function's name.
  // Accepts `name(...) [qualifiers] {` and constructor initializer lists.
  std::optional<std::string> function_name() const {
    static const std::set<std::string, std::less<>> trailing = {"const", "noexcept", "override", "final",
                                                               "mutable", "->", "::", "<", ">", "&", "&&",
                                                               "*", ","};
    if (code_.size() < 2) return std::nullopt;
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(code_.size()) - 2;  // token before '{'
    while (j >= 0) {
      const auto& t = tokens_[code_[static_cast<std::size_t>(j)]];
      if (t.text == ")") break;
      const bool word = t.cls == TokenClass::operand || t.cls == TokenClass::keyword;
      if (!word && !trailing.count(t.text)) return std::nullopt;
      if (t.cls == TokenClass::operand && t.text.front() == '"') return std::nullopt;
      --j;
    }
    if (j < 0) return std::nullopt;
    int depth = 0;
    for (; j >= 0; --j) {
      const auto& t = tokens_[code_[static_cast<std::size_t>(j)]];
      if (t.text == ")") ++depth;
      if (t.text == "(" && t.cls == TokenClass::operator_ && --depth == 0) break;
    }
    if (j <= 0) return std::nullopt;
    const auto& callee = tokens_[code_[static_cast<std::size_t>(j - 1)]];
    if (callee.cls == TokenClass::operand && ident_like(callee.text)) return callee.text;
    // operator overloads: `operator` followed by a symbol
    if (j >= 2 && tokens_[code_[static_cast<std::size_t>(j - 2)]].text == "operator") return "operator" + callee.text;
    return std::nullopt;
  }

  static bool ident_like(const std::string& s) {
    return !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_');
  }

  const std::vector<Token>& tokens_;
  const LanguageProfile& p_;
  CodeUnit& unit_;
  std::vector<Frame> frames_;
  std::vector<std::size_t> code_;  // indices of non-comment tokens seen so far
  int function_depth_ = 0;
};

// ---------------------------------------------------------------------------
// Indentation-nested languages: logical lines are statements, a line ending
// in ':' owns the more-indented suite that follows.

class IndentParser {
 public:
  IndentParser(const std::vector<Token>& tokens, const std::string_view source, const LanguageProfile& p,
               CodeUnit& unit)
      : tokens_(tokens), p_(p), unit_(unit) {
    std::size_t start = 0;
    while (start <= source.size()) {
      auto end = source.find('\n', start);
      if (end == std::string_view::npos) end = source.size();
      lines_.push_back(source.substr(start, end - start));
      start = end + 1;
    }
  }

  void run() {
    auto& g = unit_.tree;
    g.root = g.add("unit", std::nullopt);

    // Split into logical lines: physical lines joined while brackets are open.
    std::vector<std::vector<std::size_t>> logical;
    int depth = 0;
    std::size_t last_line = 0;
    std::vector<std::pair<std::string, std::size_t>> open;
    for (std::size_t k = 0; k < tokens_.size(); ++k) {
      const auto& t = tokens_[k];
      if (t.cls == TokenClass::comment) continue;
      if (depth == 0 && (logical.empty() || t.line != last_line)) logical.emplace_back();
      logical.back().push_back(k);
      last_line = t.end_line;
      if (is_opener(t)) {
        ++depth;
        open.emplace_back(t.text, t.line);
      } else if (is_closer(t)) {
        if (open.empty() || closer_for(open.back().first) != t.text[0]) {
          throw ParseError("unbalanced '" + t.text + "'", t.line);
        }
        open.pop_back();
        --depth;
      }
    }
    if (!open.empty()) throw ParseError("unclosed delimiter", open.back().second);

    struct Level {
      std::size_t indent;
      std::size_t suite;
      std::optional<std::size_t> block;  // index into unit.blocks
    };
    std::vector<Level> levels{{logical.empty() ? 0 : indent_of(tokens_[logical.front().front()].line), g.root, {}}};
    std::optional<std::size_t> pending_header;
    std::optional<std::size_t> pending_block;
    std::size_t pending_line = 0;

    for (const auto& stmt_tokens : logical) {
      const auto& first = tokens_[stmt_tokens.front()];
      const auto indent = indent_of(first.line);
      if (pending_header) {
        if (indent <= levels.back().indent) throw ParseError("expected an indented block", first.line);
        const auto suite = g.add("suite", *pending_header);
        levels.push_back({indent, suite, pending_block});
        pending_header.reset();
      } else if (indent > levels.back().indent) {
        throw ParseError("unexpected indent", first.line);
      }
      while (indent < levels.back().indent) {
        levels.pop_back();
        if (indent > levels.back().indent) throw ParseError("inconsistent dedent", first.line);
      }

      auto block = levels.back().block;
      const bool is_def = !block && starts_function(stmt_tokens);
      if (is_def) {
        std::string name;
        for (std::size_t k = 0; k + 1 < stmt_tokens.size(); ++k) {
          if (tokens_[stmt_tokens[k]].text == p_.function_keyword) {
            name = tokens_[stmt_tokens[k + 1]].text;
            break;
          }
        }
        unit_.blocks.push_back({name, first.line, 0});
        block = unit_.blocks.size() - 1;
      }

      const auto stmt = g.add("stmt", levels.back().suite);
      std::vector<std::size_t> groups{stmt};
      for (auto k : stmt_tokens) {
        const auto& t = tokens_[k];
        if (block && counts_as_decision(t, p_)) ++unit_.blocks[*block].decision_points;
        if (is_opener(t)) {
          groups.push_back(g.add(group_label(t.text), groups.back()));
        } else if (is_closer(t)) {
          groups.pop_back();
        } else {
          g.add("token", groups.back());
        }
      }
      if (tokens_[stmt_tokens.back()].text == ":") {
        pending_header = stmt;
        pending_block = block;
        pending_line = first.line;
      }
    }
    if (pending_header) throw ParseError("expected an indented block", pending_line);
  }

 private:
  bool starts_function(const std::vector<std::size_t>& stmt_tokens) const {
    for (auto k : stmt_tokens) {
      const auto& t = tokens_[k];
      if (t.text == p_.function_keyword) return true;
      if (t.text != "async") return false;
    }
    return false;
  }

  std::size_t indent_of(std::size_t line) const {
    std::size_t col = 0;
    for (char c : lines_[line - 1]) {
      if (c == ' ') {
        ++col;
      } else if (c == '\t') {
        col = (col / 8 + 1) * 8;
      } else {
        break;
      }
    }
    return col;
  }

  const std::vector<Token>& tokens_;
  const LanguageProfile& p_;
  CodeUnit& unit_;
  std::vector<std::string_view> lines_;
};

bool statement_bearing(const Token& t) {
  if (t.cls == TokenClass::comment) return false;
  static const std::set<std::string, std::less<>> grouping = {"(", ")", "[", "]", "{", "}", ";", ",", ":", "\\"};
  return !grouping.count(t.text);
}

}  // namespace

CodeUnit analyze_source(std::string_view source, const LanguageProfile& profile) {
  CodeUnit unit;
  unit.tokens = tokenize(source, profile);

  std::set<std::size_t> code_lines, logical_lines;
  for (const auto& t : unit.tokens) {
    if (t.cls == TokenClass::comment) continue;
    for (auto l = t.line; l <= t.end_line; ++l) code_lines.insert(l);
    if (statement_bearing(t)) logical_lines.insert(t.line);
  }
  unit.sloc = code_lines.size();
  unit.lloc = logical_lines.size();

  if (profile.nesting == NestingStyle::delimiters) {
    DelimiterParser(unit.tokens, profile, unit).run();
  } else {
    IndentParser(unit.tokens, source, profile, unit).run();
  }
  return unit;
}

CodeUnit analyze_file(const std::filesystem::path& path, const LanguageProfile& profile) {
  const std::string text = csv::read_file(path);
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    if (c >= 0x80) {
      if ((c >> 5) == 0x6) {
        extra = 1;
      } else if ((c >> 4) == 0xE) {
        extra = 2;
      } else if ((c >> 3) == 0x1E) {
        extra = 3;
      } else {
        throw IoError("not valid UTF-8: " + path.string());
      }
    }
    if (i + extra >= text.size() && extra > 0) throw IoError("not valid UTF-8: " + path.string());
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) throw IoError("not valid UTF-8: " + path.string());
    }
    i += extra + 1;
  }
  try {
    return analyze_source(text, profile);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.line());
  }
}

}  // namespace recsel::code
