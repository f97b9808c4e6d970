#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vxp {

/// Error classes surfaced by every module. Callers branch on `kind()`; the
/// message is for humans.
enum class ErrorKind {
  invalid_input,
  setup,
  syntax,
  unknown_call,
  unbounded_loop,
  step_budget,
  type_error,
  perception_failure,
  contract_violation,
  generation,
  composition,
  planning_infeasible,
  infeasible_start,
  divergence,
  io,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::setup: return "setup";
    case ErrorKind::syntax: return "syntax";
    case ErrorKind::unknown_call: return "unknown_call";
    case ErrorKind::unbounded_loop: return "unbounded_loop";
    case ErrorKind::step_budget: return "step_budget";
    case ErrorKind::type_error: return "type_error";
    case ErrorKind::perception_failure: return "perception_failure";
    case ErrorKind::contract_violation: return "contract_violation";
    case ErrorKind::generation: return "generation";
    case ErrorKind::composition: return "composition";
    case ErrorKind::planning_infeasible: return "planning_infeasible";
    case ErrorKind::infeasible_start: return "infeasible_start";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace vxp
