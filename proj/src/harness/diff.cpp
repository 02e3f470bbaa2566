#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/util/rng.hpp"

namespace cfo::harness {

using interp::ExecutionResult;
using interp::Input;

std::vector<Input> standard_inputs(std::size_t n, std::uint64_t seed) {
  std::vector<Input> out{
      Input{true, {}},
      Input{false, {}},
      Input{false, {7}},
      Input{false, {std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::max()}},
  };
  if (n <= out.size()) {
    out.resize(n);
    return out;
  }
  Rng rng(mix_seed(seed, 0x1D));
  while (out.size() < n) {
    Input in;
    auto len = rng.below(9);
    for (std::uint64_t i = 0; i < len; ++i) in.values.push_back(rng.range(-20, 50));
    // Half of the arrays are sorted, which suits the search-style corpus programs.
    if (rng.coin()) std::sort(in.values.begin(), in.values.end());
    out.push_back(std::move(in));
  }
  return out;
}

const char* to_string(DiffStatus s) {
  switch (s) {
    case DiffStatus::Equal: return "equal";
    case DiffStatus::Mismatch: return "mismatch";
    case DiffStatus::OriginalFuelExhausted: return "original_fuel_exhausted";
  }
  return "?";
}

namespace {

std::optional<Divergence> compare(const ExecutionResult& a, const ExecutionResult& b) {
  Divergence d;
  if (a.outcome != b.outcome) {
    d.aspect = "outcome";
    d.expected = interp::describe(a);
    d.actual = interp::describe(b);
    return d;
  }
  std::size_t common = std::min(a.output.size(), b.output.size());
  for (std::size_t i = 0; i <= common; ++i) {
    bool a_end = i == a.output.size(), b_end = i == b.output.size();
    if (a_end && b_end) break;
    if (a_end || b_end || a.output[i] != b.output[i]) {
      d.aspect = "output";
      d.position = i;
      d.expected = a_end ? "<end of output>" : a.output[i];
      d.actual = b_end ? "<end of output>" : b.output[i];
      return d;
    }
  }
  if (a.value != b.value) {
    d.aspect = "value";
    d.expected = interp::describe(a);
    d.actual = interp::describe(b);
    return d;
  }
  if (a.outcome == interp::Outcome::Trapped && a.trap_kind != b.trap_kind) {
    d.aspect = "trap_kind";
    d.expected = interp::describe(a);
    d.actual = interp::describe(b);
    return d;
  }
  return std::nullopt;
}

}  // namespace

DiffVerdict differential_test(const ir::Program& original, const ir::Program& transformed,
                              const std::vector<Input>& inputs, std::uint64_t fuel) {
  DiffVerdict v;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    ExecutionResult a = interp::run(original, inputs[i], fuel);
    if (a.outcome == interp::Outcome::FuelExhausted) {
      ++v.skipped;
      continue;
    }
    ExecutionResult b = interp::run(transformed, inputs[i], fuel * kTransformedFuelFactor);
    ++v.compared;
    if (auto d = compare(a, b)) {
      d->input = inputs[i];
      d->input_index = i;
      v.status = DiffStatus::Mismatch;
      v.first_divergence = std::move(d);
      return v;
    }
  }
  if (v.compared == 0 && v.skipped > 0) v.status = DiffStatus::OriginalFuelExhausted;
  return v;
}

DiffVerdict differential_test(const ir::Program& original, const ir::Program& transformed, std::size_t n_inputs,
                              std::uint64_t seed, std::uint64_t fuel) {
  return differential_test(original, transformed, standard_inputs(n_inputs, seed), fuel);
}

std::string describe(const DiffVerdict& v) {
  std::ostringstream os;
  os << to_string(v.status) << " (" << v.compared << " compared";
  if (v.skipped) os << ", " << v.skipped << " skipped";
  os << ')';
  if (v.first_divergence) {
    const auto& d = *v.first_divergence;
    os << "; input #" << d.input_index << " [" << interp::to_string(d.input) << "] differs in " << d.aspect;
    if (d.aspect == "output") os << " at item " << d.position;
    os << ": expected '" << d.expected << "', got '" << d.actual << "'";
  }
  return os.str();
}

CoverageVerdict dead_code_coverage_check(const ir::Program& transformed, const std::vector<Input>& inputs,
                                         std::uint64_t fuel) {
  CoverageVerdict v;
  std::map<std::tuple<std::string, ir::BlockId, std::uint32_t>, bool> dead;
  for (const auto& fn : transformed.functions)
    for (const auto& b : fn.blocks) {
      for (std::uint32_t i = 0; i <= b.instrs.size(); ++i) {
        const auto& in = i < b.instrs.size() ? b.instrs[i] : b.term;
        if (in.tag == ir::Tag::Dead) dead[{fn.name, b.id, i}] = true;
      }
    }
  v.dead_instructions = dead.size();
  std::map<std::tuple<std::string, ir::BlockId, std::uint32_t>, std::uint64_t> hits;
  for (const auto& in : inputs) {
    auto [result, cov] = interp::run_with_coverage(transformed, in, fuel);
    for (const auto& [key, count] : cov.counts)
      if (count > 0 && dead.count(key)) hits[key] += count;
  }
  for (const auto& [key, count] : hits)
    v.executed.push_back(DeadSite{std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
  v.clean = v.executed.empty();
  return v;
}

std::vector<CorpusProgram> load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::InvalidInput, "corpus directory not found: " + dir);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".mini") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<CorpusProgram> out;
  for (const auto& p : files) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    CorpusProgram c;
    c.name = p.stem().string();
    c.path = p.string();
    c.source = ss.str();
    auto parsed = frontend::parse(c.source);
    if (!parsed.ast)
      throw Error(ErrorCode::InvalidInput, c.path + ": " + frontend::to_string(parsed.diagnostics.front()));
    c.ast = std::move(*parsed.ast);
    c.program = frontend::lower(c.ast);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cfo::harness
