#include "cfo/catalog/catalog.hpp"

#include <iomanip>
#include <sstream>

#include "cfo/error.hpp"
#include "json_io.hpp"

namespace cfo::catalog {

using transforms::PassId;

const char* to_string(Level l) {
  switch (l) {
    case Level::Expression: return "expression";
    case Level::Statement: return "statement";
    case Level::BasicBlock: return "basic_block";
    case Level::Method: return "method";
    case Level::Class: return "class";
  }
  return "?";
}

const char* to_string(Paradigm p) {
  switch (p) {
    case Paradigm::OpaquePredicate: return "opaque_predicate";
    case Paradigm::Ordering: return "ordering";
    case Paradigm::Substitution: return "substitution";
    case Paradigm::LoopTransformation: return "loop_transformation";
    case Paradigm::CodeInsertion: return "code_insertion";
    case Paradigm::MethodTransformation: return "method_transformation";
    case Paradigm::ClassTransformation: return "class_transformation";
  }
  return "?";
}

std::optional<Level> parse_level(std::string_view s) {
  for (auto l : {Level::Expression, Level::Statement, Level::BasicBlock, Level::Method, Level::Class})
    if (s == to_string(l)) return l;
  return std::nullopt;
}

std::optional<Paradigm> parse_paradigm(std::string_view s) {
  for (auto p : {Paradigm::OpaquePredicate, Paradigm::Ordering, Paradigm::Substitution, Paradigm::LoopTransformation,
                 Paradigm::CodeInsertion, Paradigm::MethodTransformation, Paradigm::ClassTransformation})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

namespace {

using L = Level;
using P = Paradigm;

TechniqueRecord row(std::optional<PassId> pass, const char* name, Level level, Paradigm paradigm, bool lit,
                    bool tools, bool dr, const char* note = "") {
  TechniqueRecord r;
  r.pass = pass;
  r.name = name;
  r.level = level;
  r.paradigm = paradigm;
  r.in_literature = lit;
  r.in_tools = tools;
  r.dr = dr;
  r.implemented = pass.has_value();
  r.note = note;
  return r;
}

constexpr bool Y = true;
constexpr bool N = false;

const char* const kNoClasses = "MiniLang has no classes or objects";

std::vector<TechniqueRecord> build() {
  // clang-format off
  return {
    row(PassId::ExtendConditionals, "Extending Conditionals", L::Expression, P::OpaquePredicate, Y, Y, N),
    row(PassId::AddRedundantOperands, "Adding Redundant Operands", L::Expression, P::OpaquePredicate, Y, Y, N),
    row(PassId::ReorderExpressions, "Reordering Expressions", L::Expression, P::Ordering, Y, Y, N),

    row(PassId::ReorderStatements, "Reordering Statements", L::Statement, P::Ordering, Y, Y, N),
    row(PassId::RemoveLibraryIdioms, "Remove Lib. and Program Idioms", L::Statement, P::Substitution, Y, Y, N),
    row(PassId::InstructionSubstitution, "Instruction Substitution", L::Statement, P::Substitution, Y, Y, N),
    row(PassId::GuardToTrap, "Replacing if(Non) Null Instructions With Try-Catch Block", L::Statement, P::Substitution, Y, Y, N),
    row(std::nullopt, "Converting Branches to jsr Instr.", L::Statement, P::Substitution, Y, Y, N,
        "jsr is a JVM-only instruction"),

    row(PassId::OpaqueBranchInsertion, "Opaque Branch Insertion", L::BasicBlock, P::OpaquePredicate, N, Y, N),
    row(PassId::DeadCodeInsertion, "Dead Code Insertion", L::BasicBlock, P::OpaquePredicate, Y, Y, N),
    row(PassId::DeadSwitch, "Adding Dead Code Switch Stmts.", L::BasicBlock, P::OpaquePredicate, Y, Y, N),
    row(PassId::ReorderLoops, "Reordering Loops", L::BasicBlock, P::Ordering, Y, N, N),
    row(PassId::ReorderBlocks, "Reordering Code Blocks", L::BasicBlock, P::Ordering, Y, N, N),
    row(PassId::DuplicateSequenceReuse, "Finding and Reusing Duplicate Seq.", L::BasicBlock, P::Ordering, Y, Y, N),
    row(PassId::HoistCommonBranchCode, "Reorder Load Instrs. Above if Instr.", L::BasicBlock, P::Ordering, Y, Y, N),
    row(PassId::LoopFission, "Loop Fission", L::BasicBlock, P::LoopTransformation, Y, N, N),
    row(PassId::LoopBlocking, "Loop Blocking", L::BasicBlock, P::LoopTransformation, Y, N, N),
    row(PassId::LoopUnrolling, "Loop Unrolling", L::BasicBlock, P::LoopTransformation, Y, N, N),
    row(PassId::IntersectingLoops, "Intersecting Loop", L::BasicBlock, P::LoopTransformation, Y, N, Y),
    row(PassId::ReplaceEquivalentCodes, "Replace with Equivalent Codes", L::BasicBlock, P::Substitution, Y, Y, N),
    row(PassId::CodeCloneIV, "Code Clone Type IV", L::BasicBlock, P::Substitution, Y, Y, N),
    row(PassId::BasicBlockFission, "Basic Block Fission", L::BasicBlock, P::CodeInsertion, Y, N, Y),
    row(PassId::InsertDummyLoop, "Insert Dummy Loop", L::BasicBlock, P::CodeInsertion, Y, Y, N),
    row(PassId::GotoAugmentation, "Goto Instruction Augmentation", L::BasicBlock, P::CodeInsertion, Y, Y, Y),
    row(PassId::IrrelevantCodeInsertion, "Irrelevant Code Insertion", L::BasicBlock, P::CodeInsertion, Y, Y, N),
    row(PassId::ControlFlowFlattening, "Control Flow Flattening", L::BasicBlock, P::CodeInsertion, Y, N, N),
    row(PassId::BooleanSplitter, "Boolean Splitter", L::BasicBlock, P::CodeInsertion, N, Y, N),
    row(PassId::ReducibleToIrreducible, "Convert Reducible to Non-reducible Flowgraph", L::BasicBlock, P::CodeInsertion, Y, Y, Y),
    row(PassId::PartiallyTrappingSwitch, "Partially Trapping Switch Stmts", L::BasicBlock, P::CodeInsertion, Y, Y, Y),
    row(std::nullopt, "Disobeying Constructor Conventions", L::BasicBlock, P::CodeInsertion, Y, Y, Y,
        "MiniLang has no constructors"),
    row(PassId::CombineTryCatch, "Combining Try Blocks with Their Catch Blocks", L::BasicBlock, P::CodeInsertion, Y, Y, N),
    row(PassId::IndirectIf, "Indirecting if Instructions", L::BasicBlock, P::CodeInsertion, N, Y, Y),

    row(PassId::InlineMethod, "Inline method", L::Method, P::MethodTransformation, Y, Y, N),
    row(PassId::OutlineMethod, "Outline Method", L::Method, P::MethodTransformation, Y, N, N),
    row(PassId::CloneMethod, "Clone Method", L::Method, P::MethodTransformation, Y, N, N),
    row(PassId::InterleaveMethods, "Interleave Methods", L::Method, P::MethodTransformation, Y, Y, N),
    row(std::nullopt, "Dynamic Inliner", L::Method, P::MethodTransformation, N, Y, N,
        "needs runtime class loading"),
    row(PassId::ApiBufferMethods, "Building API Buffer Methods", L::Method, P::MethodTransformation, N, Y, N),
    row(PassId::TableInterpretation, "Table Interpretation", L::Method, P::MethodTransformation, Y, N, Y),
    row(std::nullopt, "Parallelizing the Code", L::Method, P::MethodTransformation, Y, N, N,
        "MiniLang has no threads"),

    row(std::nullopt, "Split Objects", L::Class, P::ClassTransformation, N, Y, N, kNoClasses),
    row(std::nullopt, "Class Splitter", L::Class, P::ClassTransformation, N, Y, N, kNoClasses),
    row(std::nullopt, "Building Library Buffer Classes", L::Class, P::ClassTransformation, Y, Y, N, kNoClasses),
  };
  // clang-format on
}

}  // namespace

nlohmann::json to_json(const TechniqueRecord& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["pass"] = r.pass ? nlohmann::json(transforms::to_string(*r.pass)) : nlohmann::json(nullptr);
  j["level"] = to_string(r.level);
  j["paradigm"] = to_string(r.paradigm);
  j["literature"] = r.in_literature;
  j["tools"] = r.in_tools;
  j["dr"] = r.dr;
  j["implemented"] = r.implemented;
  j["structural_only"] = r.structural_only;
  j["note"] = r.note;
  return j;
}


TechniqueRecord record_from_json(const nlohmann::json& t) {
  TechniqueRecord r;
  r.name = t.at("name").get<std::string>();
  if (!t.at("pass").is_null()) {
    r.pass = transforms::parse_pass_id(t.at("pass").get<std::string>());
    if (!r.pass) throw Error(ErrorCode::InvalidInput, "unknown pass in catalog json");
  }
  auto level = parse_level(t.at("level").get<std::string>());
  auto paradigm = parse_paradigm(t.at("paradigm").get<std::string>());
  if (!level || !paradigm) throw Error(ErrorCode::InvalidInput, "bad level or paradigm in catalog json");
  r.level = *level;
  r.paradigm = *paradigm;
  r.in_literature = t.at("literature").get<bool>();
  r.in_tools = t.at("tools").get<bool>();
  r.dr = t.at("dr").get<bool>();
  r.implemented = t.at("implemented").get<bool>();
  r.structural_only = t.at("structural_only").get<bool>();
  r.note = t.at("note").get<std::string>();
  return r;
}

const std::vector<TechniqueRecord>& registry() {
  static const std::vector<TechniqueRecord> rows = build();
  return rows;
}

const TechniqueRecord& supplemental_method_reordering() {
  static const TechniqueRecord r = [] {
    auto x = row(PassId::MethodReordering, "Method Reordering", L::Method, P::Ordering, Y, N, N);
    x.structural_only = true;
    x.note = "alters program structure only, not control flow";
    return x;
  }();
  return r;
}

const TechniqueRecord& classify(PassId pass) {
  if (pass == PassId::MethodReordering) return supplemental_method_reordering();
  for (const auto& r : registry())
    if (r.pass == pass) return r;
  throw Error(ErrorCode::UnknownPass, std::string("no catalog record for ") + transforms::to_string(pass));
}

const TechniqueRecord& classify(std::string_view pass_name) {
  auto id = transforms::parse_pass_id(pass_name);
  if (!id) {
    std::string valid;
    for (auto p : transforms::all_passes()) valid += (valid.empty() ? "" : ", ") + std::string(transforms::to_string(p));
    throw Error(ErrorCode::UnknownPass, "unknown pass '" + std::string(pass_name) + "'; valid passes: " + valid);
  }
  return classify(*id);
}

std::string emit_table(Format format) {
  if (format == Format::Json) {
    nlohmann::json j;
    j["schema"] = 1;
    j["techniques"] = nlohmann::json::array();
    for (const auto& r : registry()) j["techniques"].push_back(to_json(r));
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  auto mark = [](bool b) { return b ? "Y" : "-"; };
  os << std::left << std::setw(58) << "name" << std::setw(13) << "level" << std::setw(5) << "lit" << std::setw(7)
     << "tools" << std::setw(4) << "dr" << std::setw(23) << "paradigm"
     << "implemented\n";
  for (const auto& r : registry()) {
    os << std::left << std::setw(58) << r.name << std::setw(13) << to_string(r.level) << std::setw(5)
       << mark(r.in_literature) << std::setw(7) << mark(r.in_tools) << std::setw(4) << mark(r.dr) << std::setw(23)
       << to_string(r.paradigm) << (r.implemented ? transforms::to_string(*r.pass) : "no") << '\n';
  }
  return os.str();
}

std::vector<TechniqueRecord> parse_table_json(std::string_view json) {
  std::vector<TechniqueRecord> out;
  try {
    auto j = nlohmann::json::parse(json);
    if (j.at("schema").get<int>() != 1) throw Error(ErrorCode::InvalidInput, "unsupported catalog schema");
    for (const auto& t : j.at("techniques")) out.push_back(record_from_json(t));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed catalog json: ") + e.what());
  }
  return out;
}

}  // namespace cfo::catalog
