#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"

namespace support {

inline std::string corpus_dir() { return CFO_CORPUS_DIR; }

inline const std::vector<cfo::harness::CorpusProgram>& corpus() {
  static const auto programs = cfo::harness::load_corpus(corpus_dir());
  return programs;
}

inline const cfo::harness::CorpusProgram& corpus_program(const std::string& name) {
  for (const auto& c : corpus())
    if (c.name == name) return c;
  throw std::runtime_error("no corpus program " + name);
}

inline cfo::frontend::Node parse_ok(const std::string& source) {
  auto r = cfo::frontend::parse(source);
  if (!r.ast) throw std::runtime_error("parse failed: " + cfo::frontend::to_string(r.diagnostics.front()));
  return std::move(*r.ast);
}

}  // namespace support
