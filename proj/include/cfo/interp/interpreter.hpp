#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cfo/ir/ir.hpp"

namespace cfo::interp {

enum class Outcome : std::uint8_t { Returned, Trapped, FuelExhausted };

const char* to_string(Outcome o);

/// Trap codes raised by the machine itself. User traps carry their own code.
inline constexpr std::int64_t kNullAccessCode = 1;
inline constexpr std::int64_t kIndexOutOfBoundsCode = 2;
inline constexpr std::int64_t kDivByZeroCode = 3;

inline constexpr std::uint64_t kDefaultFuel = 10'000'000;
/// Allocation ceiling (total array elements over one run).
inline constexpr std::uint64_t kHeapLimit = std::uint64_t{1} << 25;
inline constexpr std::size_t kMaxCallDepth = 1 << 14;

struct ExecutionResult {
  Outcome outcome = Outcome::Returned;
  std::int64_t value = 0;  // return value (Returned) or trap code (Trapped)
  ir::TrapKind trap_kind = ir::TrapKind::User;
  std::vector<std::string> output;
  std::uint64_t steps = 0;

  friend bool operator==(const ExecutionResult&, const ExecutionResult&) = default;
};

/// One-line description of the outcome ("returned 4", "trapped index_out_of_bounds 2", ...).
std::string describe(const ExecutionResult& r);

struct CoverageMap {
  // (function, block, instruction index) -> count; index == instrs.size() is the terminator
  std::map<std::tuple<std::string, ir::BlockId, std::uint32_t>, std::uint64_t> counts;

  std::uint64_t total() const;
  friend bool operator==(const CoverageMap&, const CoverageMap&) = default;
};

/// Argument of main: a possibly-null int array.
struct Input {
  bool null = false;
  std::vector<std::int64_t> values;

  friend bool operator==(const Input&, const Input&) = default;
};

/// Whitespace-separated integers; the single token `null` denotes a null array.
std::optional<Input> parse_input(std::string_view text);
std::string to_string(const Input& in);

/// Fuel from CFO_FUEL when set to a positive integer, else kDefaultFuel.
std::uint64_t default_fuel();

struct BlockVisit {
  std::string function;
  ir::BlockId block;
  friend bool operator==(const BlockVisit&, const BlockVisit&) = default;
};

struct RunOptions {
  std::uint64_t fuel = kDefaultFuel;
  CoverageMap* coverage = nullptr;
  std::vector<BlockVisit>* trace = nullptr;  // every block entry, in order
};

ExecutionResult execute(const ir::Program& program, const Input& input, const RunOptions& options);
ExecutionResult run(const ir::Program& program, const Input& input, std::uint64_t fuel = default_fuel());
std::pair<ExecutionResult, CoverageMap> run_with_coverage(const ir::Program& program, const Input& input,
                                                          std::uint64_t fuel = default_fuel());

}  // namespace cfo::interp
