#include <algorithm>

#include "recsel/code_metrics.hpp"
#include "recsel/error.hpp"

namespace recsel::code {

namespace {

LanguageProfile make_cpp() {
  LanguageProfile p;
  p.name = "cpp";
  p.line_comments = {"//"};
  p.block_comments = {{"/*", "*/"}};
  p.string_prefix_chars = "uU8LR";
  p.keywords = {"auto",     "bool",      "char",     "class",    "const",     "constexpr", "consteval",
                "double",   "enum",      "explicit", "extern",   "float",     "friend",    "inline",
                "int",      "long",      "mutable",  "namespace", "private",  "protected", "public",
                "short",    "signed",    "static",   "struct",   "template",  "typename",  "union",
                "unsigned", "using",     "virtual",  "void",     "volatile",  "override",  "final",
                "noexcept", "typedef",   "concept",  "requires", "char8_t",   "wchar_t",   "constinit"};
  p.operator_keywords = {"if",        "else",   "for",          "while",       "do",       "switch",
                         "case",      "default", "break",       "continue",    "return",   "goto",
                         "try",       "catch",  "throw",        "new",         "delete",   "sizeof",
                         "alignof",   "decltype", "static_cast", "dynamic_cast", "const_cast",
                         "reinterpret_cast", "co_await", "co_return", "co_yield", "and", "or", "not",
                         "operator"};
  p.decision_tokens = {"if", "for", "while", "case", "catch", "&&", "||", "?", "and", "or"};
  p.punctuators = {"<<=", ">>=", "...", "->*", "<=>", "::", "->", "++", "--", "<<", ">>", "<=", ">=",
                   "==",  "!=",  "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=", "^=", ".*",
                   "+",   "-",   "*",   "/",   "%",   "=",  "<",  ">",  "!",  "~",  "&",  "|",  "^",
                   "?",   ":",   ";",   ",",   ".",   "(",  ")",  "[",  "]",  "{",  "}",  "#"};
  p.nesting = NestingStyle::delimiters;
  return p;
}

LanguageProfile make_python() {
  LanguageProfile p;
  p.name = "python";
  p.line_comments = {"#"};
  p.triple_quoted_strings = true;
  p.string_prefix_chars = "rRbBuUfF";
  p.operator_keywords = {"and",   "or",     "not",    "in",     "is",     "if",       "elif",  "else",
                         "for",   "while",  "return", "def",    "class",  "lambda",   "try",   "except",
                         "finally", "with", "as",     "import", "from",   "raise",    "yield", "pass",
                         "break", "continue", "del",  "global", "nonlocal", "assert", "await", "async"};
  p.decision_tokens = {"if", "elif", "for", "while", "except", "and", "or"};
  p.punctuators = {"**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=",
                   "==",  "!=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "@=", "+",  "-",
                   "*",   "/",   "%",   "@",   "=",   "<",  ">",  "&",  "|",  "^",  "~",  ":",  ";",
                   ",",   ".",   "(",   ")",   "[",   "]",  "{",  "}"};
  p.nesting = NestingStyle::indentation;
  p.function_keyword = "def";
  return p;
}

}  // namespace

const LanguageProfile& profile(std::string_view name) {
  static const LanguageProfile cpp = make_cpp();
  static const LanguageProfile python = make_python();
  if (name == "cpp" || name == "c++" || name == "c") return cpp;
  if (name == "python" || name == "py") return python;
  throw Error("unknown language profile '" + std::string(name) + "'");
}

const LanguageProfile& profile_for(const std::filesystem::path& path) {
  return path.extension() == ".py" ? profile("python") : profile("cpp");
}

std::vector<std::string> profile_names() { return {"cpp", "python"}; }

}  // namespace recsel::code
