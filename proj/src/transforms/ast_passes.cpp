#include <functional>
#include <limits>

#include "cfo/frontend/frontend.hpp"
#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms::detail {

using frontend::Node;
using frontend::NodeKind;

namespace {

const Node& require_ast(const Subject& s) {
  if (!s.ast) throw Error(ErrorCode::RequiresSource, "this pass rewrites source and needs a parsed program");
  return *s.ast;
}

TransformResult finish(Node ast, std::vector<Site> sites) {
  auto diags = frontend::check(ast);
  if (!diags.empty()) throw Error(ErrorCode::Internal, "rewritten source fails to check: " + to_string(diags[0]));
  TransformResult r;
  r.program = frontend::lower(ast);
  r.ast = std::move(ast);
  r.sites = std::move(sites);
  return r;
}

/// Deterministic pre-order site numbering. The first walk counts, the second
/// applies the rewrite to the chosen indices.
struct Picker {
  std::set<std::size_t> chosen;
  std::size_t next = 0;
  bool counting = true;
  bool take() {
    std::size_t i = next++;
    return !counting && chosen.count(i);
  }
};

Node block_of(std::vector<Node> stmts, frontend::Span sp) {
  Node b = frontend::make_node(NodeKind::Block, sp);
  b.children = std::move(stmts);
  return b;
}

/// Replaces `continue` at this loop level by `{update; continue;}`.
void expand_continues(Node& n, const Node& update) {
  for (auto& c : n.children) {
    if (c.kind == NodeKind::While || c.kind == NodeKind::For) continue;
    if (c.kind == NodeKind::Continue) {
      c = block_of({update, c}, c.span);
      continue;
    }
    expand_continues(c, update);
  }
}

bool is_statement_container(const Node& n) {
  return n.kind == NodeKind::Block || n.kind == NodeKind::If || n.kind == NodeKind::While ||
         n.kind == NodeKind::For || n.kind == NodeKind::Switch || n.kind == NodeKind::TryCatch;
}

// for (init; cond; upd) body  ->  { init; while (cond) { body; upd } }
// if (c) A else B            ->  if (!c) B else A
void clone_iv(Node& s, Picker& pick, std::vector<std::string>& notes) {
  if (!is_statement_container(s)) return;
  bool site = s.kind == NodeKind::For || s.kind == NodeKind::If;
  bool apply = site && pick.take();
  for (auto& c : s.children) clone_iv(c, pick, notes);
  if (!apply) return;
  if (s.kind == NodeKind::For) {
    Node init = s.children[0], cond = s.children[1], upd = s.children[2], body = s.children[3];
    expand_continues(body, upd);
    Node w = frontend::make_node(NodeKind::While, s.span);
    w.children = {cond, block_of({body, upd}, s.span)};
    s = block_of({init, w}, s.span);
    notes.push_back("for loop rewritten as while");
  } else {
    Node neg = frontend::make_node(NodeKind::UnaryOp, s.children[0].span);
    neg.name = "!";
    neg.children = {s.children[0]};
    Node then = s.children[1];
    Node other = s.children.size() > 2 ? s.children[2] : block_of({}, s.span);
    if (other.kind != NodeKind::Block) other = block_of({other}, other.span);
    s.children = {neg, other, then};
    notes.push_back("if branches swapped under a negated condition");
  }
}

void collect_names(const Node& n, std::set<std::string>& out) {
  if (!n.name.empty()) out.insert(n.name);
  for (const auto& p : n.params) out.insert(p.name);
  for (const auto& c : n.children) collect_names(c, out);
}

void rename(Node& n, const std::map<std::string, std::string>& map) {
  bool named = n.kind == NodeKind::VarRef || n.kind == NodeKind::VarDecl || n.kind == NodeKind::TryCatch;
  if (named) {
    auto it = map.find(n.name);
    if (it != map.end()) n.name = it->second;
  }
  for (auto& c : n.children) rename(c, map);
}

void declared(const Node& n, std::vector<std::string>& out) {
  if (n.kind == NodeKind::VarDecl || (n.kind == NodeKind::TryCatch && !n.name.empty())) out.push_back(n.name);
  for (const auto& c : n.children) declared(c, out);
}

class Equivalents {
 public:
  Equivalents(std::set<std::string> taken, Picker& pick, std::uint64_t seed)
      : taken_(std::move(taken)), pick_(pick), rng_(seed) {}

  std::string fresh() {
    static const char* const stems[] = {"t", "tmp", "v", "aux", "k", "r"};
    for (;;) {
      std::string n = std::string(stems[rng_.below(6)]) + std::to_string(rng_.range(0, 999));
      if (taken_.insert(n).second) return n;
    }
  }

  void function(Node& f, std::vector<Site>& sites) {
    if (pick_.take()) {
      std::map<std::string, std::string> map;
      std::vector<std::string> names;
      for (const auto& p : f.params) names.push_back(p.name);
      declared(f, names);
      for (const auto& n : names)
        if (!map.count(n)) map[n] = fresh();
      for (auto& p : f.params) p.name = map.at(p.name);
      rename(f, map);
      if (!map.empty()) sites.push_back(Site{f.name, std::nullopt, "locals renamed"});
    }
    statement(f.children[0], f.name, sites);
  }

 private:
  void statement(Node& s, const std::string& fn, std::vector<Site>& sites) {
    if (s.kind == NodeKind::IntrinsicCall && s.name == "print" && s.children[0].kind != NodeKind::VarRef) {
      bool apply = pick_.take();
      expression(s.children[0], fn, sites);
      if (apply) {
        Node decl = frontend::make_node(NodeKind::VarDecl, s.span);
        decl.name = fresh();
        decl.type = s.children[0].type;
        decl.children = {s.children[0]};
        Node ref = frontend::make_node(NodeKind::VarRef, s.span);
        ref.name = decl.name;
        Node print = s;
        print.children = {ref};
        s = block_of({decl, print}, s.span);
        sites.push_back(Site{fn, std::nullopt, "print argument moved into a temporary"});
      }
      return;
    }
    if (is_statement_container(s) || s.kind == NodeKind::Function) {
      for (auto& c : s.children) {
        if (is_statement_container(c) || c.kind == NodeKind::IntrinsicCall || c.kind == NodeKind::Call ||
            c.kind == NodeKind::VarDecl || c.kind == NodeKind::Assign || c.kind == NodeKind::Return ||
            c.kind == NodeKind::Throw)
          statement(c, fn, sites);
        else
          expression(c, fn, sites);
      }
      return;
    }
    for (auto& c : s.children) expression(c, fn, sites);
  }

  void expression(Node& e, const std::string& fn, std::vector<Site>& sites) {
    for (auto& c : e.children) expression(c, fn, sites);
    if (e.kind != NodeKind::Literal || e.type != Type::Int) return;
    if (e.value < std::numeric_limits<std::int64_t>::min() + 16) return;
    if (!pick_.take()) return;
    std::int64_t a = rng_.range(1, 9);
    Node lhs = e, rhs = e;
    lhs.value = a;
    rhs.value = e.value - a;
    Node sum = frontend::make_node(NodeKind::BinaryOp, e.span);
    sum.name = "+";
    sum.type = Type::Int;
    sum.children = {lhs, rhs};
    sites.push_back(Site{fn, std::nullopt, "literal " + std::to_string(e.value) + " split"});
    e = std::move(sum);
  }

  std::set<std::string> taken_;
  Picker& pick_;
  Rng rng_;
};

}  // namespace

TransformResult code_clone_iv(const Subject& s, const PassConfig& cfg) {
  Node ast = require_ast(s);
  Picker pick;
  std::vector<std::string> notes;
  for (auto c : ast.children) clone_iv(c.children[0], pick, notes);
  if (pick.next == 0) no_sites("no for loops or if statements");
  auto chosen = select_sites(pick.next, cfg.effective_fraction(), cfg.seed);
  pick = Picker{{chosen.begin(), chosen.end()}, 0, false};
  std::vector<Site> sites;
  for (auto& f : ast.children) {
    notes.clear();
    clone_iv(f.children[0], pick, notes);
    for (auto& n : notes) sites.push_back(Site{f.name, std::nullopt, n});
  }
  return finish(std::move(ast), std::move(sites));
}

TransformResult replace_equivalent_codes(const Subject& s, const PassConfig& cfg) {
  const Node& orig = require_ast(s);
  auto run = [&](Picker& pick, Node& ast, std::vector<Site>& sites) {
    for (std::size_t f = 0; f < ast.children.size(); ++f) {
      std::set<std::string> taken;
      collect_names(ast, taken);
      Equivalents eq(std::move(taken), pick, mix_seed(cfg.seed, 1000 + f));
      eq.function(ast.children[f], sites);
    }
  };
  Picker pick;
  {
    Node scratch = orig;
    std::vector<Site> ignored;
    run(pick, scratch, ignored);
  }
  if (pick.next == 0) no_sites("nothing to rewrite");
  auto chosen = select_sites(pick.next, cfg.effective_fraction(), cfg.seed);
  Picker apply{{chosen.begin(), chosen.end()}, 0, false};
  Node ast = orig;
  std::vector<Site> sites;
  run(apply, ast, sites);
  return finish(std::move(ast), std::move(sites));
}

}  // namespace cfo::transforms::detail
