#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace vxp::lmp {

struct SourceLoc {
  int line = 1;
  int column = 1;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { number, string, boolean, none, name, list, unary, binary, call, attr, index };

/// One node type for every expression; unused fields stay empty.
struct Expr {
  ExprKind kind = ExprKind::none;
  SourceLoc loc;
  double number = 0.0;
  /// Literal text, identifier, operator, callee or attribute name.
  std::string text;
  std::vector<ExprPtr> args;
  std::vector<std::pair<std::string, ExprPtr>> kwargs;
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;
using Block = std::vector<StmtPtr>;

enum class StmtKind { assign, expr, if_, for_, ret, pass };

struct Stmt {
  StmtKind kind = StmtKind::pass;
  SourceLoc loc;
  /// assign: target; for: not used.
  ExprPtr target;
  /// assign/expr/return value, if condition, for iterable.
  ExprPtr value;
  /// for loop variable.
  std::string name;
  Block body;
  /// Else branch; an elif chain is a single nested if.
  Block orelse;
};

struct Program {
  std::string source;
  Block body;
};

// Structural equality ignores source locations.

bool equal(const Expr& a, const Expr& b);
bool equal(const Block& a, const Block& b);

inline bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}

inline bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.number != b.number || a.text != b.text) return false;
  if (a.args.size() != b.args.size() || a.kwargs.size() != b.kwargs.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal(a.args[i], b.args[i])) return false;
  for (std::size_t i = 0; i < a.kwargs.size(); ++i)
    if (a.kwargs[i].first != b.kwargs[i].first || !equal(a.kwargs[i].second, b.kwargs[i].second)) return false;
  return true;
}

inline bool equal(const Stmt& a, const Stmt& b) {
  return a.kind == b.kind && a.name == b.name && equal(a.target, b.target) && equal(a.value, b.value) &&
         equal(a.body, b.body) && equal(a.orelse, b.orelse);
}

inline bool equal(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!equal(*a[i], *b[i])) return false;
  return true;
}

inline bool operator==(const Program& a, const Program& b) { return equal(a.body, b.body); }

}  // namespace vxp::lmp
