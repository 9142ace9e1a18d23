#include <algorithm>
#include <cctype>

#include "recsel/code_metrics.hpp"
#include "recsel/error.hpp"

namespace recsel::code {

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool starts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
  return s.substr(pos, prefix.size()) == prefix;
}

class Lexer {
 public:
  Lexer(std::string_view src, const LanguageProfile& p) : src_(src), p_(p) {}

  std::vector<Token> run() {
    while (i_ < src_.size()) step();
    return std::move(out_);
  }

 private:
  void emit(TokenClass cls, std::size_t begin, std::size_t start_line) {
    out_.push_back({cls, std::string(src_.substr(begin, i_ - begin)), start_line, line_});
  }

  // Advances over [i_, end), counting newlines.
  void advance_to(std::size_t end) {
    for (; i_ < end; ++i_) {
      if (src_[i_] == '\n') ++line_;
    }
  }

  bool line_comment() {
    for (const auto& lc : p_.line_comments) {
      if (!starts_with(src_, i_, lc)) continue;
      const auto begin = i_;
      auto end = src_.find('\n', i_);
      i_ = end == std::string_view::npos ? src_.size() : end;
      emit(TokenClass::comment, begin, line_);
      return true;
    }
    return false;
  }

  bool block_comment() {
    for (const auto& [open, close] : p_.block_comments) {
      if (!starts_with(src_, i_, open)) continue;
      const auto begin = i_;
      const auto start_line = line_;
      auto end = src_.find(close, i_ + open.size());
      if (end == std::string_view::npos) throw ParseError("unterminated block comment", start_line);
      advance_to(end + close.size());
      emit(TokenClass::comment, begin, start_line);
      return true;
    }
    return false;
  }

  // String literal starting at the quote at `q`; `begin` includes any prefix.
  void string_literal(std::size_t begin, std::size_t q, bool raw) {
    const auto start_line = line_;
    const char quote = src_[q];
    if (raw && quote == '"' && p_.name == "cpp") {
      auto paren = src_.find('(', q);
      if (paren == std::string_view::npos) throw ParseError("malformed raw string", start_line);
      const std::string terminator = ")" + std::string(src_.substr(q + 1, paren - q - 1)) + "\"";
      auto end = src_.find(terminator, paren);
      if (end == std::string_view::npos) throw ParseError("unterminated raw string", start_line);
      advance_to(end + terminator.size());
      emit(TokenClass::operand, begin, start_line);
      return;
    }
    if (p_.triple_quoted_strings && src_.substr(q, 3) == std::string(3, quote)) {
      const std::string delim(3, quote);
      std::size_t j = q + 3;
      while (j < src_.size() && !starts_with(src_, j, delim)) j += (src_[j] == '\\' && !raw) ? 2 : 1;
      if (j >= src_.size()) throw ParseError("unterminated string", start_line);
      advance_to(j + 3);
      emit(TokenClass::operand, begin, start_line);
      return;
    }
    std::size_t j = q + 1;
    while (j < src_.size() && src_[j] != quote) {
      if (src_[j] == '\n') throw ParseError("unterminated string", start_line);
      j += (src_[j] == '\\') ? 2 : 1;
    }
    if (j >= src_.size()) throw ParseError("unterminated string", start_line);
    advance_to(j + 1);
    emit(TokenClass::operand, begin, start_line);
  }

  void number() {
    const auto begin = i_;
    while (i_ < src_.size()) {
      const char c = src_[i_];
      if (ident_char(static_cast<unsigned char>(c)) || c == '.' || (c == '\'' && p_.name == "cpp")) {
        ++i_;
      } else if ((c == '+' || c == '-') && i_ > begin && std::string_view("eEpP").find(src_[i_ - 1]) != std::string_view::npos) {
        ++i_;
      } else {
        break;
      }
    }
    emit(TokenClass::operand, begin, line_);
  }

  void identifier() {
    const auto begin = i_;
    while (i_ < src_.size() && ident_char(static_cast<unsigned char>(src_[i_]))) ++i_;
    const auto word = src_.substr(begin, i_ - begin);
    if (i_ < src_.size() && (src_[i_] == '"' || src_[i_] == '\'') && word.size() <= 3 &&
        std::all_of(word.begin(), word.end(), [&](char c) { return p_.string_prefix_chars.find(c) != std::string::npos; })) {
      const bool raw = word.find_first_of("rR") != std::string_view::npos;
      string_literal(begin, i_, raw);
      return;
    }
    TokenClass cls = TokenClass::operand;
    if (p_.operator_keywords.count(word)) {
      cls = TokenClass::operator_;
    } else if (p_.keywords.count(word)) {
      cls = TokenClass::keyword;
    }
    emit(cls, begin, line_);
  }

  void punctuation() {
    const auto begin = i_;
    for (std::size_t len = 3; len >= 1; --len) {
      const auto cand = src_.substr(i_, len);
      if (cand.size() != len) continue;
      if (std::find(p_.punctuators.begin(), p_.punctuators.end(), cand) != p_.punctuators.end()) {
        i_ += len;
        const bool closer = cand == ")" || cand == "]" || cand == "}";
        emit(closer ? TokenClass::other : TokenClass::operator_, begin, line_);
        return;
      }
    }
    ++i_;
    emit(TokenClass::other, begin, line_);
  }

  void step() {
    const char c = src_[i_];
    if (c == '\n') {
      ++line_;
      ++i_;
      return;
    }
    if (c == '\\' && (starts_with(src_, i_ + 1, "\n") || starts_with(src_, i_ + 1, "\r\n"))) {
      advance_to(src_.find('\n', i_) + 1);  // line continuation
      return;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i_;
      return;
    }
    if (line_comment() || block_comment()) return;
    if (c == '"' || c == '\'') {
      string_literal(i_, i_, false);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
      number();
      return;
    }
    if (ident_start(static_cast<unsigned char>(c))) {
      identifier();
      return;
    }
    punctuation();
  }

  std::string_view src_;
  const LanguageProfile& p_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, const LanguageProfile& profile) {
  return Lexer(source, profile).run();
}

}  // namespace recsel::code
