#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfo/transforms/transforms.hpp"

namespace cfo::catalog {

/// Program component a technique operates on.
enum class Level : std::uint8_t { Expression, Statement, BasicBlock, Method, Class };
enum class Paradigm : std::uint8_t {
  OpaquePredicate,
  Ordering,
  Substitution,
  LoopTransformation,
  CodeInsertion,
  MethodTransformation,
  ClassTransformation,
};

const char* to_string(Level l);
const char* to_string(Paradigm p);
std::optional<Level> parse_level(std::string_view s);
std::optional<Paradigm> parse_paradigm(std::string_view s);

struct TechniqueRecord {
  std::optional<transforms::PassId> pass;  // empty for out-of-scope rows
  std::string name;                         // row name as printed in the classification table
  Level level = Level::Expression;
  Paradigm paradigm = Paradigm::OpaquePredicate;
  bool in_literature = false;
  bool in_tools = false;
  bool dr = false;
  bool implemented = false;
  bool structural_only = false;  // counted apart from CFO techniques
  std::string note;              // why a row is out of scope

  bool both() const { return in_literature && in_tools; }
  friend bool operator==(const TechniqueRecord&, const TechniqueRecord&) = default;
};

/// The 43 classified techniques, in table order.
const std::vector<TechniqueRecord>& registry();

/// method_reordering: runnable, but structural rather than control flow, so it
/// is kept outside the 43 rows.
const TechniqueRecord& supplemental_method_reordering();

/// Record of a registry pass. Every PassId has exactly one.
const TechniqueRecord& classify(transforms::PassId pass);
/// By pass name; throws Error(UnknownPass) listing the valid names.
const TechniqueRecord& classify(std::string_view pass_name);

enum class Format : std::uint8_t { Text, Json };

/// The 43 rows with columns name, level, literature, tools, dr, paradigm, implemented.
std::string emit_table(Format format);
/// Parses the JSON form of emit_table back into records.
std::vector<TechniqueRecord> parse_table_json(std::string_view json);

}  // namespace cfo::catalog
