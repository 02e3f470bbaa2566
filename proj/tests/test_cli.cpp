#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cfo/cli/report.hpp"
#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/ir/text.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace cfo;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "cfo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string corpus_file(const std::string& name) { return support::corpus_dir() + "/" + name + ".mini"; }

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "cfo_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("help and missing subcommands") {
  CHECK(invoke({"--help"}).code == 0);
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"frobnicate"}).code == 1);
}

TEST_CASE("run prints the program output and its result") {
  auto r = invoke({"run", corpus_file("binary_search"), "2", "3", "4", "10", "40"});
  CHECK(r.code == 0);
  CHECK(r.out == "2\n3\n4\n10\n40\nElement was found at index \n4\n");
  CHECK(r.err.find("4") != std::string::npos);
  auto n = invoke({"run", corpus_file("binary_search"), "--null"});
  CHECK(n.code == 0);
  CHECK(n.out.empty());
}

TEST_CASE("missing files and bad sources are user errors") {
  CHECK(invoke({"run", "/nonexistent.mini"}).code == 1);
  auto bad = scratch("bad.mini");
  std::ofstream(bad) << "fn main(args: int[]) -> int { if (";
  auto r = invoke({"metrics", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("end of input") != std::string::npos);
}

TEST_CASE("unknown passes list the valid ids") {
  auto r = invoke({"obfuscate", corpus_file("straight_line"), "--pass", "not_a_pass"});
  CHECK(r.code == 1);
  CHECK(r.err.find("control_flow_flattening") != std::string::npos);
}

TEST_CASE("an explicit pass list excludes a level") {
  auto r = invoke({"obfuscate", corpus_file("straight_line"), "--pass", "dead_code_insertion", "--level", "light"});
  CHECK(r.code == 1);
}

TEST_CASE("catalog formats") {
  auto text = invoke({"catalog"});
  CHECK(text.code == 0);
  CHECK(lines(text.out) == 44);
  auto json = invoke({"catalog", "--format", "json"});
  CHECK(json.code == 0);
  auto doc = nlohmann::json::parse(json.out);
  CHECK(doc["techniques"].size() == 43);
  auto preds = invoke({"catalog", "--predicates", "--format", "json"});
  CHECK(preds.code == 0);
  CHECK(nlohmann::json::parse(preds.out)["families"].size() == opaque::families().size());
}

TEST_CASE("diff compares two programs") {
  auto same = invoke({"diff", corpus_file("gcd_division"), corpus_file("gcd_division")});
  CHECK(same.code == 0);
  CHECK(same.out.find("equal (20 compared)") != std::string::npos);
  auto other = invoke({"diff", corpus_file("gcd_division"), corpus_file("straight_line")});
  CHECK(other.code == 1);
  CHECK(other.out.find("mismatch") != std::string::npos);
}

TEST_CASE("gen emits a program that compiles") {
  auto r = invoke({"gen", "--seed", "4", "--feature", "while", "--feature", "if"});
  CHECK(r.code == 0);
  CHECK(frontend::parse(r.out).ast);
  CHECK(invoke({"gen", "--seed", "4", "--feature", "while", "--feature", "if"}).out == r.out);
  CHECK(invoke({"gen", "--feature", "goto"}).code == 1);
}

TEST_CASE("metrics of a straight-line program") {
  auto r = invoke({"metrics", corpus_file("straight_line"), "--format", "json"});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["cyclomatic"] == 1);
  CHECK(j["irreducible"] == false);
}

TEST_CASE("obfuscate writes an artifact and a report that round-trips") {
  auto report = scratch("bs_report.json");
  auto artifact = scratch("bs.ir");
  auto r = invoke({"obfuscate", corpus_file("binary_search"), "--level", "aggressive", "--seed", "7", "--report",
                report.string(), "-o", artifact.string()});
  CHECK(r.code == 0);
  auto text = slurp(report);
  auto rep = cli::report_from_json(text);
  CHECK(cli::to_json(rep) == text);
  CHECK(rep.schema == cli::kReportSchema);
  CHECK(rep.level == "aggressive");
  CHECK(rep.seed == 7);
  CHECK(rep.diff.status == harness::DiffStatus::Equal);
  CHECK(rep.passes.size() == transforms::level_passes(transforms::Intensity::Aggressive).size());
  std::size_t applied = 0;
  for (const auto& p : rep.passes) applied += p.applied;
  CHECK(rep.dr_proxies.size() == applied);
  CHECK_FALSE(rep.classification.empty());

  // The artifact is IR text of the obfuscated program, equal in behaviour.
  auto parsed = ir::parse_text(slurp(artifact));
  REQUIRE(parsed.program);
  CHECK(invoke({"diff", corpus_file("binary_search"), artifact.string()}).code == 0);

  // Same inputs, same bytes.
  auto report2 = scratch("bs_report2.json");
  auto artifact2 = scratch("bs2.ir");
  CHECK(invoke({"obfuscate", corpus_file("binary_search"), "--level", "aggressive", "--seed", "7", "--report",
             report2.string(), "-o", artifact2.string()})
            .code == 0);
  CHECK(slurp(report2) == text);
  CHECK(slurp(artifact2) == slurp(artifact));
}

TEST_CASE("flattening then the irreducibility pass shows up in the proxies") {
  auto report = scratch("cff_r2i.json");
  auto r = invoke({"obfuscate", corpus_file("binary_search"), "--pass", "reducible_to_irreducible", "--pass",
                "control_flow_flattening", "--report", report.string(), "-o", scratch("cff_r2i.ir").string()});
  CHECK(r.code == 0);
  auto rep = cli::report_from_json(slurp(report));
  CHECK(rep.level == "custom");
  REQUIRE(rep.passes.size() == 2);
  CHECK(rep.passes[0].pass == transforms::PassId::ControlFlowFlattening);
  CHECK(rep.passes[1].pass == transforms::PassId::ReducibleToIrreducible);
  CHECK(rep.metrics_after.irreducible);
  CHECK(rep.deltas.dr_proxy_triggered);
  bool found = false;
  for (const auto& p : rep.dr_proxies)
    if (p.pass == transforms::PassId::ReducibleToIrreducible) {
      found = true;
      CHECK(p.check.proxy == "irreducible_cfg");
      CHECK(p.check.triggered);
    }
  CHECK(found);
}

TEST_CASE("source emission needs a source-level result") {
  auto ok = invoke({"obfuscate", corpus_file("for_loops"), "--pass", "code_clone_iv", "--emit", "src"});
  CHECK(ok.code == 0);
  CHECK(frontend::parse(ok.out).ast);
  auto no = invoke({"obfuscate", corpus_file("for_loops"), "--pass", "control_flow_flattening", "--emit", "src"});
  CHECK(no.code == 1);
}

TEST_CASE("IR text input is accepted") {
  auto path = scratch("straight.ir");
  std::ofstream(path) << ir::emit_text(support::corpus_program("straight_line").program);
  auto r = invoke({"run", path.string()});
  CHECK(r.code == 0);
  CHECK(r.out == invoke({"run", corpus_file("straight_line")}).out);
}

TEST_CASE("malformed reports are rejected") {
  CHECK_THROWS_AS(cli::report_from_json("{}"), Error);
  CHECK_THROWS_AS(cli::report_from_json("{\"schema\": 99}"), Error);
  CHECK_THROWS_AS(cli::report_from_json("["), Error);
}

TEST_CASE("bad parameters are user errors") {
  auto r = invoke({"obfuscate", corpus_file("for_loops"), "--pass", "loop_unrolling", "--param", "unroll_factor=1"});
  CHECK(r.code == 1);
  CHECK(invoke({"obfuscate", corpus_file("for_loops"), "--pass", "loop_unrolling", "--param", "oops"}).code == 1);
  CHECK(invoke({"obfuscate", corpus_file("for_loops"), "--site-fraction", "2"}).code == 1);
}
