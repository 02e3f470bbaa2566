#include <algorithm>
#include <set>

#include "doctest.h"

#include "cfo/catalog/catalog.hpp"
#include "cfo/error.hpp"
#include "reference_table.hpp"

using namespace cfo;
using namespace cfo::catalog;

TEST_CASE("the registry matches the published table row for row") {
  auto expected = reference::classification_table();
  REQUIRE(expected.size() == 43);
  const auto& reg = registry();
  REQUIRE(reg.size() == expected.size());
  for (std::size_t i = 0; i < reg.size(); ++i) {
    CAPTURE(expected[i].name);
    CHECK(reg[i].name == expected[i].name);
    CHECK(to_string(reg[i].level) == expected[i].level);
    CHECK(reg[i].in_literature == expected[i].literature);
    CHECK(reg[i].in_tools == expected[i].tools);
    CHECK(reg[i].dr == expected[i].dr);
    CHECK(to_string(reg[i].paradigm) == expected[i].paradigm);
  }
}

TEST_CASE("provenance counts: 43 rows, 36 from the literature, 7 from tools only") {
  std::size_t lit = 0, tools_only = 0;
  std::set<Level> levels;
  for (const auto& r : registry()) {
    lit += r.in_literature;
    tools_only += r.in_tools && !r.in_literature;
    CHECK((r.in_literature || r.in_tools));
    levels.insert(r.level);
  }
  CHECK(registry().size() == 43);
  CHECK(lit == 36);
  CHECK(tools_only == 7);
  CHECK(levels.size() == 5);
}

TEST_CASE("classification of single passes") {
  const auto& cff = classify(transforms::PassId::ControlFlowFlattening);
  CHECK(cff.level == Level::BasicBlock);
  CHECK(cff.paradigm == Paradigm::CodeInsertion);
  CHECK(cff.in_literature);
  CHECK_FALSE(cff.in_tools);
  CHECK_FALSE(cff.dr);

  CHECK(classify(transforms::PassId::IntersectingLoops).dr);
  CHECK(classify("intersecting_loops").name == "Intersecting Loop");

  const auto& ti = classify("table_interpretation");
  CHECK(ti.level == Level::Method);
  CHECK(ti.paradigm == Paradigm::MethodTransformation);
  CHECK(ti.dr);

  const auto& mr = classify(transforms::PassId::MethodReordering);
  CHECK(&mr == &supplemental_method_reordering());
  CHECK(mr.structural_only);
  CHECK(mr.implemented);
}

TEST_CASE("unknown pass names are rejected with the valid list") {
  try {
    classify("not_a_pass");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownPass);
    CHECK(std::string(e.what()).find("control_flow_flattening") != std::string::npos);
  }
}

TEST_CASE("every pass has exactly one record") {
  for (auto p : transforms::all_passes()) {
    CAPTURE(transforms::to_string(p));
    std::size_t hits = 0;
    for (const auto& r : registry()) hits += r.pass == p;
    if (p == transforms::PassId::MethodReordering) CHECK(hits == 0);
    else CHECK(hits == 1);
    CHECK(classify(p).pass == p);
  }
}

TEST_CASE("36 table rows are implemented, the rest carry a reason") {
  std::size_t implemented = 0;
  for (const auto& r : registry()) {
    CHECK(r.implemented == r.pass.has_value());
    if (r.implemented) ++implemented;
    else CHECK_FALSE(r.note.empty());
    if (r.level == Level::Class) CHECK_FALSE(r.implemented);
  }
  CHECK(implemented == 36);
  CHECK(implemented + 1 == transforms::all_passes().size());
}

TEST_CASE("text table has a header and one line per row") {
  auto text = emit_table(Format::Text);
  std::size_t lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 44);
  CHECK(text.rfind("name", 0) == 0);
}

TEST_CASE("JSON table round-trips to the registry") {
  auto json = emit_table(Format::Json);
  CHECK(parse_table_json(json) == registry());
  CHECK_THROWS_AS(parse_table_json("{\"schema\": 1}"), Error);
  CHECK_THROWS_AS(parse_table_json("not json"), Error);
}

TEST_CASE("level and paradigm names round trip") {
  for (auto l : {Level::Expression, Level::Statement, Level::BasicBlock, Level::Method, Level::Class})
    CHECK(parse_level(to_string(l)) == l);
  for (auto p : {Paradigm::OpaquePredicate, Paradigm::Ordering, Paradigm::Substitution, Paradigm::LoopTransformation,
                 Paradigm::CodeInsertion, Paradigm::MethodTransformation, Paradigm::ClassTransformation})
    CHECK(parse_paradigm(to_string(p)) == p);
}
