#pragma once

// Line-oriented experiment definition format.
//
//   # comment
//   experiment conjunction_demo
//   seed 7
//   subjects 10
//   trials 52
//   set_sizes 1, 5, 15, 30
//   param p_sample_relevant 0.9
//   condition conjunction {
//     target = dark-green T1;
//     distractor = dark-green X;
//     distractor = brown T1;
//     salience shape 1.5;
//   }
//
// Condition statements: `target = <item>`, `distractor = <item>` (repeatable,
// one per distractor type), `salience <segment|label|index> <value>`,
// `emergent <salience>`, `higher_order [target|distractor] <arrow|triangle> <n>`.
// An item is `<color> <shape>` or `<relation>(<color> <shape>, <color> <shape>)`.
// Statements end at a newline or `;`.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "casper/engine.hpp"
#include "casper/error.hpp"
#include "casper/experiment_spec.hpp"
#include "casper/features.hpp"
#include "casper/stimuli.hpp"

namespace casper {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  if (res.ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, res.ptr);
}

namespace detail {

enum class TokenKind { Identifier, Number, Punct, Newline, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t line = 1;
  std::size_t col = 1;
  auto advance = [&](std::size_t n) {
    i += n;
    col += n;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      out.push_back({TokenKind::Newline, "\n", line, col});
      ++i;
      ++line;
      col = 1;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (is_ident_start(c)) {
      const std::size_t start = i;
      const std::size_t start_col = col;
      while (i < src.size() && is_ident_char(src[i])) advance(1);
      out.push_back({TokenKind::Identifier, std::string(src.substr(start, i - start)), line, start_col});
    } else if (is_digit(c) || ((c == '-' || c == '+' || c == '.') && i + 1 < src.size() &&
                               (is_digit(src[i + 1]) || src[i + 1] == '.'))) {
      const std::size_t start = i;
      const std::size_t start_col = col;
      if (c == '-' || c == '+') advance(1);
      while (i < src.size() && (is_digit(src[i]) || src[i] == '.')) advance(1);
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        advance(1);
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) advance(1);
        while (i < src.size() && is_digit(src[i])) advance(1);
      }
      out.push_back({TokenKind::Number, std::string(src.substr(start, i - start)), line, start_col});
    } else if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',' || c == ';' || c == '=') {
      out.push_back({TokenKind::Punct, std::string(1, c), line, col});
      advance(1);
    } else {
      throw ParseError(line, col, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({TokenKind::End, "", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  ExperimentSpec parse() {
    ExperimentSpec spec;
    bool have_name = false;
    bool have_sizes = false;
    skip_newlines();
    while (peek().kind != TokenKind::End) {
      const Token kw = expect_identifier("a statement keyword");
      if (kw.text == "experiment") {
        if (have_name) fail(kw, "experiment name declared twice");
        spec.name = expect_identifier("an experiment name").text;
        have_name = true;
      } else if (kw.text == "seed") {
        spec.seed = parse_unsigned("a seed");
      } else if (kw.text == "subjects") {
        spec.subjects = parse_count("a subject count");
      } else if (kw.text == "trials") {
        spec.trials = parse_count("a trial count");
      } else if (kw.text == "set_sizes") {
        if (have_sizes) fail(kw, "set_sizes declared twice");
        spec.set_sizes.push_back(parse_count("a set size"));
        while (accept_punct(",")) spec.set_sizes.push_back(parse_count("a set size"));
        have_sizes = true;
      } else if (kw.text == "param") {
        const Token key = expect_identifier("a parameter name");
        const Token value_tok = peek();
        const double value = parse_number("a parameter value");
        try {
          EngineParams probe;
          probe.set(key.text, value);
        } catch (const UnknownName&) {
          fail(key, "unknown parameter '" + key.text + "'");
        } catch (const Error& e) {
          fail(value_tok, e.what());
        }
        if (spec.params.count(key.text) != 0) fail(key, "parameter '" + key.text + "' set twice");
        spec.params[key.text] = value;
      } else if (kw.text == "condition") {
        parse_condition(spec);
        continue;  // the closing brace ends the statement
      } else {
        fail(kw, "unknown statement '" + kw.text + "'");
      }
      end_statement();
    }
    const Token& end = peek();
    if (!have_name) fail(end, "missing 'experiment <name>'");
    if (!have_sizes) fail(end, "missing 'set_sizes'");
    if (spec.conditions.empty()) fail(end, "experiment declares no conditions");
    try {
      spec.validate();
    } catch (const Error& e) {
      fail(end, e.what());
    }
    try {
      EngineParams resolved;
      for (const auto& [k, v] : spec.params) resolved.set(k, v);
      resolved.validate();
    } catch (const Error& e) {
      fail(end, e.what());
    }
    return spec;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;

  [[noreturn]] static void fail(const Token& at, const std::string& message) {
    throw ParseError(at.line, at.column, message);
  }

  const Token& peek() const { return tokens_[pos_]; }
  Token next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokenKind::Newline: return "end of line";
      case TokenKind::End: return "end of input";
      default: return "'" + t.text + "'";
    }
  }

  void skip_newlines() {
    while (peek().kind == TokenKind::Newline) ++pos_;
  }

  bool accept_punct(std::string_view p) {
    if (peek().kind == TokenKind::Punct && peek().text == p) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail(peek(), "expected '" + std::string(p) + "', found " + describe(peek()));
  }

  Token expect_identifier(const std::string& what) {
    if (peek().kind != TokenKind::Identifier) fail(peek(), "expected " + what + ", found " + describe(peek()));
    return next();
  }

  void end_statement() {
    const Token& t = peek();
    if (t.kind == TokenKind::End) return;
    if (t.kind == TokenKind::Newline || (t.kind == TokenKind::Punct && t.text == ";")) {
      ++pos_;
      skip_newlines();
      return;
    }
    fail(t, "expected end of statement, found " + describe(t));
  }

  double parse_number(const std::string& what) {
    const Token t = peek();
    if (t.kind != TokenKind::Number) fail(t, "expected " + what + ", found " + describe(t));
    ++pos_;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (*first == '+') ++first;
    double value = 0.0;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) fail(t, "malformed number '" + t.text + "'");
    return value;
  }

  std::uint64_t parse_unsigned(const std::string& what) {
    const Token t = peek();
    if (t.kind != TokenKind::Number) fail(t, "expected " + what + ", found " + describe(t));
    ++pos_;
    std::uint64_t value = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) fail(t, "expected a nonnegative integer, found '" + t.text + "'");
    return value;
  }

  std::size_t parse_count(const std::string& what) {
    const Token t = peek();
    const std::uint64_t v = parse_unsigned(what);
    if (v < 1) fail(t, what + " must be at least 1");
    if (v > std::numeric_limits<std::size_t>::max()) fail(t, what + " is too large");
    return static_cast<std::size_t>(v);
  }

  Filler parse_filler() {
    const Token color = expect_identifier("a color");
    const Token shape = expect_identifier("a shape");
    Filler f;
    try {
      f.color = std::string(canonical_color(color.text));
    } catch (const UnknownName&) {
      fail(color, "unknown color '" + color.text + "'");
    }
    try {
      f.shape = std::string(canonical_shape(shape.text));
    } catch (const UnknownName&) {
      fail(shape, "unknown shape '" + shape.text + "'");
    }
    return f;
  }

  ItemExpr parse_item() {
    ItemExpr expr;
    const std::size_t save = pos_;
    const Token head = expect_identifier("a color or relation");
    if (peek().kind == TokenKind::Punct && peek().text == "(") {
      ++pos_;
      try {
        expr.relation = std::string(find_relation(head.text).name);
      } catch (const UnknownName&) {
        fail(head, "unknown relation '" + head.text + "'");
      }
      expr.fillers.push_back(parse_filler());
      while (accept_punct(",")) expr.fillers.push_back(parse_filler());
      expect_punct(")");
      try {
        roles_of(expr);
      } catch (const Error& e) {
        fail(head, e.what());
      }
    } else {
      pos_ = save;
      expr.fillers.push_back(parse_filler());
    }
    return expr;
  }

  // Relational and plain items cannot share a condition: their role tables differ.
  void check_mix(const ItemExpr& first, const ItemExpr& next, const Token& at) {
    if (first.relational() != next.relational()) {
      fail(at, "a condition cannot mix relational and plain items");
    }
  }

  void parse_condition(ExperimentSpec& spec) {
    const Token name = expect_identifier("a condition name");
    for (const auto& c : spec.conditions) {
      if (c.name == name.text) fail(name, "duplicate condition '" + name.text + "'");
    }
    ConditionSpec cond;
    cond.name = name.text;
    bool have_target = false;
    std::vector<Token> item_starts;
    skip_newlines();
    expect_punct("{");
    skip_newlines();
    while (!accept_punct("}")) {
      if (peek().kind == TokenKind::Punct && peek().text == ";") {
        ++pos_;
        skip_newlines();
        continue;
      }
      const Token kw = expect_identifier("a condition statement");
      if (kw.text == "target") {
        if (have_target) fail(kw, "target declared twice");
        expect_punct("=");
        item_starts.push_back(peek());
        cond.target = parse_item();
        if (!cond.distractors.empty()) check_mix(cond.distractors.front(), cond.target, item_starts.back());
        have_target = true;
      } else if (kw.text == "distractor") {
        expect_punct("=");
        item_starts.push_back(peek());
        cond.distractors.push_back(parse_item());
        const ItemExpr& first = have_target ? cond.target : cond.distractors.front();
        check_mix(first, cond.distractors.back(), item_starts.back());
      } else if (kw.text == "salience") {
        const Token key = peek();
        if (key.kind != TokenKind::Identifier && key.kind != TokenKind::Number) {
          fail(key, "expected a segment, dimension label or index, found " + describe(key));
        }
        ++pos_;
        const Token value_tok = peek();
        const double value = parse_number("a salience value");
        if (!(value >= 0.0)) fail(value_tok, "salience must be nonnegative");
        cond.salience.push_back({key.text, value});
      } else if (kw.text == "emergent") {
        if (cond.emergent) fail(kw, "emergent declared twice");
        const Token value_tok = peek();
        const double value = parse_number("an emergent salience");
        if (!(value >= 0.0)) fail(value_tok, "salience must be nonnegative");
        cond.emergent = value;
      } else if (kw.text == "higher_order") {
        HigherOrderSpec h;
        Token t = expect_identifier("arrow, triangle, target or distractor");
        if (t.text == "target" || t.text == "distractor") {
          h.scope = t.text == "target" ? ItemScope::Target : ItemScope::Distractor;
          t = expect_identifier("arrow or triangle");
        }
        if (t.text == "arrow") h.kind = HigherOrderKind::Arrow;
        else if (t.text == "triangle") h.kind = HigherOrderKind::Triangle;
        else fail(t, "unknown higher-order kind '" + t.text + "'");
        h.n = parse_count("a higher-order width");
        cond.higher_order.push_back(h);
      } else {
        fail(kw, "unknown condition statement '" + kw.text + "'");
      }
      const Token& t = peek();
      if (t.kind == TokenKind::Punct && t.text == "}") continue;
      if (t.kind == TokenKind::Newline || (t.kind == TokenKind::Punct && t.text == ";")) {
        ++pos_;
        skip_newlines();
        continue;
      }
      fail(t, "expected ';' or end of line, found " + describe(t));
    }
    if (!have_target) fail(name, "condition '" + cond.name + "' has no target");
    if (cond.distractors.empty()) fail(name, "condition '" + cond.name + "' has no distractor");
    try {
      make_template(cond);
    } catch (const Error& e) {
      fail(name, e.what());
    }
    spec.conditions.push_back(std::move(cond));
    const Token& t = peek();
    if (t.kind == TokenKind::Newline || (t.kind == TokenKind::Punct && t.text == ";")) {
      ++pos_;
    } else if (t.kind != TokenKind::End) {
      fail(t, "expected end of line after '}', found " + describe(t));
    }
    skip_newlines();
  }
};

inline std::string item_text(const ItemExpr& expr) {
  auto filler = [](const Filler& f) { return f.color + " " + f.shape; };
  if (!expr.relational()) return filler(expr.fillers.at(0));
  std::string out = expr.relation + "(";
  for (std::size_t i = 0; i < expr.fillers.size(); ++i) {
    if (i > 0) out += ", ";
    out += filler(expr.fillers[i]);
  }
  return out + ")";
}

}  // namespace detail

/// Parses a definition document. Errors carry the line and column of the
/// offending token.
inline ExperimentSpec parse_experiment(std::string_view text) { return detail::Parser(text).parse(); }

/// Canonical text: fixed statement order, parameters sorted by key, numbers
/// in shortest round-trip form. parse_experiment() inverts it exactly.
inline std::string serialize_experiment(const ExperimentSpec& spec) {
  std::string out;
  out += "experiment " + spec.name + "\n";
  out += "seed " + std::to_string(spec.seed) + "\n";
  out += "subjects " + std::to_string(spec.subjects) + "\n";
  out += "trials " + std::to_string(spec.trials) + "\n";
  out += "set_sizes ";
  for (std::size_t i = 0; i < spec.set_sizes.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(spec.set_sizes[i]);
  }
  out += "\n";
  for (const auto& [key, value] : spec.params) out += "param " + key + " " + format_double(value) + "\n";
  for (const auto& c : spec.conditions) {
    out += "condition " + c.name + " {\n";
    out += "  target = " + detail::item_text(c.target) + ";\n";
    for (const auto& d : c.distractors) out += "  distractor = " + detail::item_text(d) + ";\n";
    for (const auto& s : c.salience) out += "  salience " + s.key + " " + format_double(s.value) + ";\n";
    if (c.emergent) out += "  emergent " + format_double(*c.emergent) + ";\n";
    for (const auto& h : c.higher_order) {
      out += "  higher_order ";
      if (h.scope == ItemScope::Target) out += "target ";
      if (h.scope == ItemScope::Distractor) out += "distractor ";
      out += h.kind == HigherOrderKind::Arrow ? "arrow " : "triangle ";
      out += std::to_string(h.n) + ";\n";
    }
    out += "}\n";
  }
  return out;
}

}  // namespace casper
