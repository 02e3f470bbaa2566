#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfo/ir/ir.hpp"

namespace cfo::ir {

struct Diagnostic {
  std::string function;
  std::optional<BlockId> block;
  std::string rule;
  std::string message;
};

std::string to_string(const Diagnostic& d);

/// Checks every structural and typing invariant of the IR. Empty result iff
/// the program is well formed.
std::vector<Diagnostic> verify(const Program& program);

}  // namespace cfo::ir
