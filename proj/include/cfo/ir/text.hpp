#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/ir/ir.hpp"

namespace cfo::ir {

/// Canonical text form. Layout:
///
///   function <name>(%p, ...) -> <type>
///     regs %0:<type> %1:<type> ...
///     entry <block>
///   block <id>:
///     <one instruction per line>[ !<tag>]
///   trap <block> <start> <end> -> <handler> [kinds]
///   end
///
/// Spans are not serialized; everything else round-trips exactly.
std::string emit_text(const Program& program);
std::string emit_instruction(const Function& fn, const Instruction& in);

struct TextDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct TextParseResult {
  std::optional<Program> program;
  std::vector<TextDiagnostic> diagnostics;
};

TextParseResult parse_text(std::string_view text);

}  // namespace cfo::ir
