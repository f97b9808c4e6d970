#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vxp/common/error.hpp"
#include "vxp/lmp/ast.hpp"

namespace vxp::lmp {

/// Every callable name a program may reference. Kind-specific availability
/// is checked by the interpreter.
inline const std::set<std::string, std::less<>>& whitelist() {
  static const std::set<std::string, std::less<>> names = {
      "detect", "execute", "cm2index", "index2cm", "pointat2quat", "set_voxel_by_radius", "set_voxel_by_box",
      "get_empty_affordance_map", "get_empty_avoidance_map", "get_empty_rotation_map", "get_empty_velocity_map",
      "get_empty_gripper_map", "reset_to_default_pose", "parse_query_obj", "get_affordance_map",
      "get_avoidance_map", "get_rotation_map", "get_velocity_map", "get_gripper_map", "composer", "len", "abs",
      "min", "max", "round", "int", "norm", "normalize", "range"};
  return names;
}

/// Upper bound on a literal range() loop.
inline constexpr long kMaxLoopCount = 1'000'000;

[[noreturn]] inline void fail_at(ErrorKind kind, SourceLoc loc, const std::string& msg) {
  fail(kind, "line " + std::to_string(loc.line) + ", column " + std::to_string(loc.column) + ": " + msg);
}

enum class Tok { name, number, string, op, newline, indent, dedent, end };

struct Token {
  Tok type;
  std::string text;
  double number = 0.0;
  SourceLoc loc;
};

/// Python-style tokenizer: indentation becomes indent/dedent tokens and
/// newlines inside brackets are ignored.
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::vector<int> indents{0};
  int line = 1;
  std::size_t i = 0;
  int depth = 0;
  bool line_start = true;
  auto loc_of = [&](std::size_t pos) {
    std::size_t b = src.rfind('\n', pos == 0 ? 0 : pos - 1);
    const int col = static_cast<int>(b == std::string_view::npos || pos == 0 ? pos : pos - b - 1) + 1;
    return SourceLoc{line, col};
  };

  while (i < src.size()) {
    if (line_start && depth == 0) {
      int width = 0;
      std::size_t j = i;
      while (j < src.size() && (src[j] == ' ' || src[j] == '\t')) width += src[j++] == '\t' ? 4 : 1;
      if (j >= src.size()) break;
      if (src[j] == '\n' || src[j] == '#' || src[j] == '\r') {
        // Blank or comment-only line.
        while (j < src.size() && src[j] != '\n') ++j;
        i = j < src.size() ? j + 1 : j;
        ++line;
        continue;
      }
      const SourceLoc loc{line, width + 1};
      if (width > indents.back()) {
        indents.push_back(width);
        out.push_back({Tok::indent, "", 0, loc});
      } else {
        while (width < indents.back()) {
          indents.pop_back();
          out.push_back({Tok::dedent, "", 0, loc});
        }
        if (width != indents.back()) fail_at(ErrorKind::syntax, loc, "inconsistent indentation");
      }
      i = j;
      line_start = false;
    }
    const char c = src[i];
    if (c == '\n') {
      if (depth == 0) {
        out.push_back({Tok::newline, "", 0, loc_of(i)});
        line_start = true;
      }
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    const SourceLoc loc = loc_of(i);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::name, std::string(src.substr(i, j - i)), 0, loc});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        ++j;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      const std::string text(src.substr(i, j - i));
      double v = 0.0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        fail_at(ErrorKind::syntax, loc, "malformed number '" + text + "'");
      out.push_back({Tok::number, text, v, loc});
      i = j;
      continue;
    }
    if (c == '\'' || c == '"') {
      std::string s;
      std::size_t j = i + 1;
      while (true) {
        if (j >= src.size() || src[j] == '\n') fail_at(ErrorKind::syntax, loc, "unterminated string");
        if (src[j] == c) break;
        if (src[j] == '\\' && j + 1 < src.size()) {
          const char e = src[j + 1];
          s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          j += 2;
          continue;
        }
        s += src[j++];
      }
      out.push_back({Tok::string, s, 0, loc});
      i = j + 1;
      continue;
    }
    static const char* two[] = {"==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "**", "//"};
    std::string op(1, c);
    for (const char* t : two)
      if (src.substr(i, 2) == t) op = t;
    static const std::string singles = "+-*/%<>=()[],:.";
    if (op.size() == 1 && singles.find(c) == std::string::npos)
      fail_at(ErrorKind::syntax, loc, std::string("unexpected character '") + c + "'");
    if (op == "(" || op == "[") ++depth;
    if (op == ")" || op == "]") depth = std::max(0, depth - 1);
    out.push_back({Tok::op, op, 0, loc});
    i += op.size();
  }
  const SourceLoc eof{line, 1};
  if (!out.empty() && out.back().type != Tok::newline && out.back().type != Tok::dedent)
    out.push_back({Tok::newline, "", 0, eof});
  while (indents.size() > 1) {
    indents.pop_back();
    out.push_back({Tok::dedent, "", 0, eof});
  }
  out.push_back({Tok::end, "", 0, eof});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Block parse_program() {
    Block body;
    while (peek().type != Tok::end) {
      if (peek().type == Tok::newline) {
        ++p_;
        continue;
      }
      body.push_back(statement());
    }
    return body;
  }

 private:
  std::vector<Token> t_;
  std::size_t p_ = 0;

  const Token& peek(std::size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  bool is_op(std::string_view s, std::size_t k = 0) const {
    return peek(k).type == Tok::op && peek(k).text == s;
  }
  bool is_name(std::string_view s) const { return peek().type == Tok::name && peek().text == s; }
  const Token& next() { return t_[std::min(p_++, t_.size() - 1)]; }

  [[noreturn]] void error(const std::string& msg) const { fail_at(ErrorKind::syntax, peek().loc, msg); }

  void expect_op(std::string_view s) {
    if (!is_op(s)) error("expected '" + std::string(s) + "'" + found());
    ++p_;
  }
  std::string found() const {
    const Token& k = peek();
    switch (k.type) {
      case Tok::newline: return ", found end of line";
      case Tok::indent: return ", found indentation";
      case Tok::dedent: return ", found dedent";
      case Tok::end: return ", found end of program";
      default: return ", found '" + k.text + "'";
    }
  }
  void end_of_simple() {
    if (peek().type == Tok::newline) {
      ++p_;
      return;
    }
    if (peek().type == Tok::end || peek().type == Tok::dedent) return;
    error("expected end of statement" + found());
  }

  static bool reserved(std::string_view n) {
    static const std::set<std::string, std::less<>> words = {"if",  "elif",   "else", "for",  "in",    "return",
                                                             "pass", "and",   "or",   "not",  "True",  "False",
                                                             "None", "while", "def",  "lambda", "import", "from",
                                                             "class", "global", "nonlocal", "with", "try", "yield",
                                                             "del", "break", "continue", "async", "await", "raise"};
    return words.count(n) != 0;
  }

  void reject_unsupported() {
    if (peek().type != Tok::name) return;
    const std::string& n = peek().text;
    if (n == "while") fail_at(ErrorKind::unbounded_loop, peek().loc, "while loops are not allowed; use a bounded for");
    static const std::set<std::string, std::less<>> unsupported = {
        "def", "lambda", "import", "from", "class", "global", "nonlocal", "with", "try", "yield", "del", "async",
        "await", "raise", "break", "continue"};
    if (unsupported.count(n)) error("'" + n + "' is not part of the language");
  }

  Block block() {
    expect_op(":");
    if (peek().type != Tok::newline) error("expected a new line after ':'");
    ++p_;
    while (peek().type == Tok::newline) ++p_;
    if (peek().type != Tok::indent) error("expected an indented block");
    ++p_;
    Block b;
    while (peek().type != Tok::dedent && peek().type != Tok::end) {
      if (peek().type == Tok::newline) {
        ++p_;
        continue;
      }
      b.push_back(statement());
    }
    if (peek().type == Tok::dedent) ++p_;
    return b;
  }

  StmtPtr if_tail(SourceLoc loc) {
    auto s = std::make_shared<Stmt>();
    s->kind = StmtKind::if_;
    s->loc = loc;
    s->value = expression();
    s->body = block();
    if (is_name("elif")) {
      const SourceLoc l = next().loc;
      s->orelse.push_back(if_tail(l));
    } else if (is_name("else")) {
      ++p_;
      s->orelse = block();
    }
    return s;
  }

  StmtPtr statement() {
    reject_unsupported();
    const SourceLoc loc = peek().loc;
    if (peek().type == Tok::indent) error("unexpected indentation");
    if (is_name("if")) {
      ++p_;
      return if_tail(loc);
    }
    if (is_name("elif") || is_name("else")) error("'" + peek().text + "' without a matching 'if'");
    if (is_name("for")) {
      ++p_;
      auto s = std::make_shared<Stmt>();
      s->kind = StmtKind::for_;
      s->loc = loc;
      if (peek().type != Tok::name || reserved(peek().text)) error("expected a loop variable" + found());
      s->name = next().text;
      if (!is_name("in")) error("expected 'in'" + found());
      ++p_;
      s->value = loop_iterable();
      s->body = block();
      return s;
    }
    if (is_name("return")) {
      ++p_;
      auto s = std::make_shared<Stmt>();
      s->kind = StmtKind::ret;
      s->loc = loc;
      if (peek().type != Tok::newline && peek().type != Tok::end && peek().type != Tok::dedent)
        s->value = expression();
      end_of_simple();
      return s;
    }
    if (is_name("pass")) {
      ++p_;
      auto s = std::make_shared<Stmt>();
      s->kind = StmtKind::pass;
      s->loc = loc;
      end_of_simple();
      return s;
    }
    ExprPtr e = expression();
    auto s = std::make_shared<Stmt>();
    s->loc = loc;
    if (is_op("=") || is_op("+=") || is_op("-=") || is_op("*=") || is_op("/=")) {
      const std::string op = next().text;
      if (e->kind != ExprKind::name && e->kind != ExprKind::attr && e->kind != ExprKind::index)
        fail_at(ErrorKind::syntax, loc, "cannot assign to this expression");
      s->kind = StmtKind::assign;
      s->target = e;
      ExprPtr rhs = expression();
      if (op != "=") {
        // Augmented assignment desugars to the plain binary form.
        auto b = std::make_shared<Expr>();
        b->kind = ExprKind::binary;
        b->loc = rhs->loc;
        b->text = op.substr(0, 1);
        b->args = {e, rhs};
        rhs = b;
      }
      s->value = rhs;
    } else {
      s->kind = StmtKind::expr;
      s->value = e;
    }
    end_of_simple();
    return s;
  }

  /// range() bounds must be numeric literals so every loop is finite.
  ExprPtr loop_iterable() {
    if (peek().type == Tok::name && peek().text == "range" && is_op("(", 1)) {
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::call;
      e->loc = next().loc;
      e->text = "range";
      expect_op("(");
      while (!is_op(")")) {
        ExprPtr a = expression();
        const bool literal = a->kind == ExprKind::number ||
                             (a->kind == ExprKind::unary && a->text == "-" && a->args[0]->kind == ExprKind::number);
        if (!literal) fail_at(ErrorKind::unbounded_loop, a->loc, "range() bounds must be numeric literals");
        e->args.push_back(a);
        if (!is_op(",")) break;
        ++p_;
      }
      expect_op(")");
      if (e->args.empty() || e->args.size() > 3) fail_at(ErrorKind::syntax, e->loc, "range() takes 1 to 3 arguments");
      return e;
    }
    return expression();
  }

  ExprPtr make(ExprKind k, SourceLoc loc, std::string text, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->loc = loc;
    e->text = std::move(text);
    e->args = std::move(args);
    return e;
  }

  ExprPtr expression() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr l = and_expr();
    while (is_name("or")) {
      const SourceLoc loc = next().loc;
      l = make(ExprKind::binary, loc, "or", {l, and_expr()});
    }
    return l;
  }
  ExprPtr and_expr() {
    ExprPtr l = not_expr();
    while (is_name("and")) {
      const SourceLoc loc = next().loc;
      l = make(ExprKind::binary, loc, "and", {l, not_expr()});
    }
    return l;
  }
  ExprPtr not_expr() {
    if (is_name("not")) {
      const SourceLoc loc = next().loc;
      return make(ExprKind::unary, loc, "not", {not_expr()});
    }
    return comparison();
  }
  ExprPtr comparison() {
    ExprPtr l = additive();
    while (true) {
      std::string op;
      if (is_op("==") || is_op("!=") || is_op("<") || is_op("<=") || is_op(">") || is_op(">=")) op = peek().text;
      else if (is_name("in")) op = "in";
      else if (is_name("not") && peek(1).type == Tok::name && peek(1).text == "in") op = "not in";
      else break;
      const SourceLoc loc = next().loc;
      if (op == "not in") ++p_;
      l = make(ExprKind::binary, loc, op, {l, additive()});
    }
    return l;
  }
  ExprPtr additive() {
    ExprPtr l = term();
    while (is_op("+") || is_op("-")) {
      const Token& t = next();
      l = make(ExprKind::binary, t.loc, t.text, {l, term()});
    }
    return l;
  }
  ExprPtr term() {
    ExprPtr l = unary();
    while (is_op("*") || is_op("/") || is_op("%") || is_op("//")) {
      const Token& t = next();
      l = make(ExprKind::binary, t.loc, t.text, {l, unary()});
    }
    return l;
  }
  ExprPtr unary() {
    if (is_op("-") || is_op("+")) {
      const Token& t = next();
      return make(ExprKind::unary, t.loc, t.text, {unary()});
    }
    return power();
  }
  ExprPtr power() {
    ExprPtr base = postfix();
    if (is_op("**")) {
      const SourceLoc loc = next().loc;
      return make(ExprKind::binary, loc, "**", {base, unary()});
    }
    return base;
  }
  ExprPtr postfix() {
    ExprPtr e = atom();
    while (true) {
      if (is_op("(")) {
        if (e->kind == ExprKind::attr)
          fail_at(ErrorKind::unknown_call, e->loc, "method call '" + e->text + "' is not allowed");
        if (e->kind != ExprKind::name) fail_at(ErrorKind::syntax, e->loc, "only named functions can be called");
        e = call(e);
      } else if (is_op("[")) {
        const SourceLoc loc = next().loc;
        ExprPtr idx = expression();
        expect_op("]");
        e = make(ExprKind::index, loc, "", {e, idx});
      } else if (is_op(".")) {
        const SourceLoc loc = next().loc;
        if (peek().type != Tok::name) error("expected a field name" + found());
        e = make(ExprKind::attr, loc, next().text, {e});
      } else {
        return e;
      }
    }
  }
  ExprPtr call(const ExprPtr& callee) {
    const std::string& n = callee->text;
    if (!whitelist().count(n)) fail_at(ErrorKind::unknown_call, callee->loc, "call to undeclared API '" + n + "'");
    if (n == "range") fail_at(ErrorKind::unknown_call, callee->loc, "range() is only allowed as a loop bound");
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::call;
    e->loc = callee->loc;
    e->text = n;
    expect_op("(");
    while (!is_op(")")) {
      if (peek().type == Tok::name && is_op("=", 1)) {
        std::string key = next().text;
        ++p_;
        e->kwargs.emplace_back(std::move(key), expression());
      } else {
        if (!e->kwargs.empty()) error("positional argument after keyword argument");
        e->args.push_back(expression());
      }
      if (!is_op(",")) break;
      ++p_;
    }
    expect_op(")");
    return e;
  }
  ExprPtr atom() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::number: {
        ++p_;
        auto e = make(ExprKind::number, t.loc, "", {});
        std::const_pointer_cast<Expr>(e)->number = t.number;
        return e;
      }
      case Tok::string: {
        ++p_;
        return make(ExprKind::string, t.loc, t.text, {});
      }
      case Tok::name: {
        reject_unsupported();
        if (t.text == "True" || t.text == "False") {
          ++p_;
          auto e = make(ExprKind::boolean, t.loc, "", {});
          std::const_pointer_cast<Expr>(e)->number = t.text == "True" ? 1.0 : 0.0;
          return e;
        }
        if (t.text == "None") {
          ++p_;
          return make(ExprKind::none, t.loc, "", {});
        }
        if (reserved(t.text)) error("unexpected keyword '" + t.text + "'");
        ++p_;
        return make(ExprKind::name, t.loc, t.text, {});
      }
      case Tok::op:
        if (t.text == "(") {
          ++p_;
          ExprPtr e = expression();
          expect_op(")");
          return e;
        }
        if (t.text == "[") {
          const SourceLoc loc = next().loc;
          std::vector<ExprPtr> items;
          while (!is_op("]")) {
            items.push_back(expression());
            if (!is_op(",")) break;
            ++p_;
          }
          expect_op("]");
          return make(ExprKind::list, loc, "", std::move(items));
        }
        break;
      default:
        break;
    }
    error("unexpected token" + found());
  }
};

/// Parses program text; throws syntax, unknown_call or unbounded_loop errors
/// carrying a line and column.
inline Program parse_program(std::string_view text) {
  Program p;
  p.source = std::string(text);
  Parser parser(tokenize(text));
  p.body = parser.parse_program();
  return p;
}

}  // namespace vxp::lmp
