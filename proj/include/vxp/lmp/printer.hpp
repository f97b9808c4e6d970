#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "vxp/lmp/ast.hpp"

namespace vxp::lmp {

/// Shortest text that reads back as exactly `v`.
inline std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return std::to_string(v);
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "'";
}

inline std::string print(const Expr& e);

inline std::string print_operand(const ExprPtr& e) {
  const bool atomic = e->kind != ExprKind::unary && e->kind != ExprKind::binary;
  return atomic ? print(*e) : "(" + print(*e) + ")";
}

inline std::string print(const Expr& e) {
  switch (e.kind) {
    case ExprKind::number: return format_number(e.number);
    case ExprKind::string: return quote(e.text);
    case ExprKind::boolean: return e.number != 0 ? "True" : "False";
    case ExprKind::none: return "None";
    case ExprKind::name: return e.text;
    case ExprKind::list: {
      std::string s = "[";
      for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + print(*e.args[i]);
      return s + "]";
    }
    case ExprKind::unary:
      return e.text == "not" ? "not " + print_operand(e.args[0]) : e.text + print_operand(e.args[0]);
    case ExprKind::binary: return print_operand(e.args[0]) + " " + e.text + " " + print_operand(e.args[1]);
    case ExprKind::call: {
      std::string s = e.text + "(";
      bool first = true;
      for (const auto& a : e.args) {
        s += (first ? "" : ", ") + print(*a);
        first = false;
      }
      for (const auto& [k, v] : e.kwargs) {
        s += (first ? "" : ", ") + k + "=" + print(*v);
        first = false;
      }
      return s + ")";
    }
    case ExprKind::attr: return print_operand(e.args[0]) + "." + e.text;
    case ExprKind::index: return print_operand(e.args[0]) + "[" + print(*e.args[1]) + "]";
  }
  return "";
}

inline void print_block(std::string& out, const Block& b, int indent);

inline void print_stmt(std::string& out, const Stmt& s, int indent, bool as_elif = false) {
  const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
  switch (s.kind) {
    case StmtKind::assign: out += pad + print(*s.target) + " = " + print(*s.value) + "\n"; break;
    case StmtKind::expr: out += pad + print(*s.value) + "\n"; break;
    case StmtKind::ret: out += pad + (s.value ? "return " + print(*s.value) : "return") + "\n"; break;
    case StmtKind::pass: out += pad + "pass\n"; break;
    case StmtKind::for_:
      out += pad + "for " + s.name + " in " + print(*s.value) + ":\n";
      print_block(out, s.body, indent + 1);
      break;
    case StmtKind::if_:
      out += pad + (as_elif ? "elif " : "if ") + print(*s.value) + ":\n";
      print_block(out, s.body, indent + 1);
      if (s.orelse.size() == 1 && s.orelse[0]->kind == StmtKind::if_) {
        print_stmt(out, *s.orelse[0], indent, true);
      } else if (!s.orelse.empty()) {
        out += pad + "else:\n";
        print_block(out, s.orelse, indent + 1);
      }
      break;
  }
}

inline void print_block(std::string& out, const Block& b, int indent) {
  if (b.empty()) out += std::string(static_cast<std::size_t>(indent) * 4, ' ') + "pass\n";
  for (const auto& s : b) print_stmt(out, *s, indent);
}

/// Canonical source text; parsing the result yields an equal AST.
inline std::string print(const Program& p) {
  std::string out;
  for (const auto& s : p.body) print_stmt(out, *s, 0);
  return out;
}

}  // namespace vxp::lmp
