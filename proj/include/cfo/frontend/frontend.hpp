#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/frontend/ast.hpp"
#include "cfo/ir/ir.hpp"

namespace cfo::frontend {

struct ParseResult {
  std::optional<Node> ast;  // set iff diagnostics is empty
  std::vector<SourceDiagnostic> diagnostics;
};

/// Lexes, parses and checks MiniLang source. On success the tree carries
/// resolved expression types.
ParseResult parse(std::string_view source);

/// Re-runs the checker over a (possibly rewritten) tree, refreshing types.
std::vector<SourceDiagnostic> check(Node& unit);

/// Lowers a checked unit to IR. Deterministic; output passes ir::verify.
/// Throws Error(InvalidInput) when the unit has no `main`.
ir::Program lower(const Node& unit);

/// Pretty-prints a unit back to MiniLang source.
std::string print_source(const Node& unit);

/// parse + lower; throws cfo::Error(InvalidInput) carrying the diagnostics.
ir::Program compile(std::string_view source);

}  // namespace cfo::frontend
