#include <functional>
#include <algorithm>

#include "passes.hpp"
#include "util.hpp"

namespace cfo::transforms {

using namespace ir;
using namespace detail;

namespace {

Function make_function(std::string name, std::vector<Type> param_types, Type ret) {
  Function f;
  f.name = std::move(name);
  f.ret = ret;
  for (Type t : param_types) f.params.push_back(f.new_reg(t));
  return f;
}

/// Callee-register map into the caller plus copied blocks; returns the new entry id.
BlockId inline_call(Function& caller, const Function& callee, BlockId block, std::size_t index) {
  auto cov = covering_entries(caller, block, index);
  BlockId cont = split_block(caller, block, index + 1);
  Instruction call = caller.block(block).instrs[index];
  erase_instr(caller, block, index);

  std::map<Reg, Reg> regs;
  for (Reg r = 0; r < callee.regs.size(); ++r) regs[r] = caller.new_reg(callee.regs[r]);

  std::map<BlockId, BlockId> ids;
  BlockId cursor = block;
  for (const auto& b : callee.blocks) {
    BasicBlock copy = b;
    for (auto& in : copy.instrs) rename_registers(in, regs);
    rename_registers(copy.term, regs);
    cursor = add_block(caller, std::move(copy), cursor);
    ids[b.id] = cursor;
  }
  for (const auto& t : callee.traps) {
    TrapEntry c = t;
    c.block = ids.at(t.block);
    c.handler = ids.at(t.handler);
    caller.traps.push_back(c);
  }
  for (const auto& b : callee.blocks) {
    BlockId nb = ids.at(b.id);
    auto& term = caller.block(nb).term;
    if (term.op == Opcode::Return) {
      std::optional<Reg> v = term.args.empty() ? std::nullopt : std::optional<Reg>(term.args[0]);
      Tag tag = term.tag;
      if (call.dst && v) append_instrs(caller, nb, {make_move(*call.dst, *v, tag)});
      caller.block(nb).term = make_jump(cont, tag);
    } else {
      for (auto& t : term.targets) t = ids.at(t);
    }
  }
  // Faults leaving the inlined body are handled where the call was.
  for (const auto& b : callee.blocks) cover_block(caller, ids.at(b.id), cov);

  std::vector<Instruction> setup;
  std::set<Reg> params(callee.params.begin(), callee.params.end());
  for (std::size_t k = 0; k < callee.params.size(); ++k)
    setup.push_back(make_move(regs.at(callee.params[k]), call.args[k], call.tag));
  for (Reg r = 0; r < callee.regs.size(); ++r)
    if (!params.count(r)) setup.push_back(make_const(regs.at(r), default_value(callee.regs[r]), call.tag));
  append_instrs(caller, block, std::move(setup));
  caller.block(block).term = make_jump(ids.at(callee.entry), call.tag);
  return ids.at(callee.entry);
}

struct CallRef {
  std::size_t fn;
  BlockId block;
  std::size_t index;
};

std::vector<CallRef> call_sites(const Program& p, bool allow_self) {
  std::vector<CallRef> out;
  for (std::size_t f = 0; f < p.functions.size(); ++f)
    for (const auto& b : p.functions[f].blocks)
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const auto& in = b.instrs[i];
        if (in.op != Opcode::Call) continue;
        if (!allow_self && in.text == p.functions[f].name) continue;
        if (in.text == p.entry) continue;
        out.push_back({f, b.id, i});
      }
  return out;
}

}  // namespace

Program outline_region(const Program& program, const std::string& function, BlockId block, std::size_t begin,
                       std::size_t end, std::uint64_t seed) {
  Program p = program;
  Function* fnp = p.find(function);
  if (!fnp) throw Error(ErrorCode::IneligibleSite, "unknown function " + function);
  Function& fn = *fnp;
  const BasicBlock* bp = fn.find_block(block);
  if (!bp) throw Error(ErrorCode::IneligibleSite, "unknown block " + std::to_string(block));
  if (begin >= end) throw Error(ErrorCode::EmptyRegion, "empty region");
  if (end > bp->instrs.size()) throw Error(ErrorCode::RegionContainsTerminator, "region includes the terminator");
  for (std::size_t i = begin; i < end; ++i)
    if (bp->instrs[i].op == Opcode::Catch) throw Error(ErrorCode::IneligibleSite, "region includes catch");
  for (const auto& t : fn.traps) {
    if (t.block != block) continue;
    bool disjoint = t.end <= begin || t.start >= end;
    bool inside = t.start <= begin && end <= t.end;
    if (!disjoint && !inside) throw Error(ErrorCode::RegionCrossesTrap, "a trap range boundary falls inside the region");
    // A fault inside the callee would drop the region's earlier writes before
    // the handler sees them.
    if (inside) {
      bool wrote = false;
      for (std::size_t i = begin; i < end; ++i) {
        if (wrote && may_trap(bp->instrs[i]))
          throw Error(ErrorCode::IneligibleSite, "a covered region writes before it may fault");
        wrote = wrote || bp->instrs[i].dst.has_value();
      }
    }
  }

  std::vector<Reg> ins, outs;
  std::set<Reg> defined;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& in = bp->instrs[i];
    for (Reg a : in.args)
      if (!defined.count(a) && std::find(ins.begin(), ins.end(), a) == ins.end()) ins.push_back(a);
    if (in.dst) defined.insert(*in.dst);
  }
  auto lv = liveness(fn);
  auto after = live_before(fn, lv, block, end);
  for (Reg d : defined)
    if (after[d]) outs.push_back(d);
  if (outs.size() > 1)
    for (Reg o : outs)
      if (fn.regs[o] == Type::Array) throw Error(ErrorCode::IneligibleSite, "several outputs including an array");

  Type ret = outs.empty() ? Type::Void : outs.size() == 1 ? fn.regs[outs[0]] : Type::Array;
  std::vector<Type> ptypes;
  for (Reg r : ins) ptypes.push_back(fn.regs[r]);
  std::string name = unique_function_name(p, function + "_part");
  Function out = make_function(name, ptypes, ret);
  std::map<Reg, Reg> map;
  for (std::size_t k = 0; k < ins.size(); ++k) map[ins[k]] = out.params[k];
  for (Reg d : defined)
    if (!map.count(d)) map[d] = out.new_reg(fn.regs[d]);
  BasicBlock body;
  for (std::size_t i = begin; i < end; ++i) {
    Instruction in = bp->instrs[i];
    rename_registers(in, map);
    body.instrs.push_back(in);
  }
  if (outs.empty()) {
    body.term = make_return(std::nullopt);
  } else if (outs.size() == 1) {
    body.term = make_return(map.at(outs[0]));
  } else {
    Reg n = out.new_reg(Type::Int);
    Reg arr = out.new_reg(Type::Array);
    Reg one = out.new_reg(Type::Int);
    Reg zero = out.new_reg(Type::Int);
    body.instrs.push_back(make_const(n, static_cast<std::int64_t>(outs.size())));
    body.instrs.push_back(make_new_array(arr, n));
    body.instrs.push_back(make_const(one, 1));
    body.instrs.push_back(make_const(zero, 0));
    for (std::size_t j = 0; j < outs.size(); ++j) {
      Reg idx = out.new_reg(Type::Int);
      body.instrs.push_back(make_const(idx, static_cast<std::int64_t>(j)));
      Reg v = map.at(outs[j]);
      if (fn.regs[outs[j]] == Type::Bool) {
        Reg w = out.new_reg(Type::Int);
        body.instrs.push_back(make_select(w, v, one, zero));
        v = w;
      }
      body.instrs.push_back(make_store(arr, idx, v));
    }
    body.term = make_return(arr);
  }
  out.blocks.push_back(std::move(body));
  (void)seed;

  std::vector<Instruction> site;
  if (outs.size() <= 1) {
    site.push_back(make_call(outs.empty() ? std::nullopt : std::optional<Reg>(outs[0]), name, ins));
  } else {
    Reg t = fn.new_reg(Type::Array);
    site.push_back(make_call(t, name, ins));
    for (std::size_t j = 0; j < outs.size(); ++j) {
      Reg idx = fn.new_reg(Type::Int);
      site.push_back(make_const(idx, static_cast<std::int64_t>(j)));
      if (fn.regs[outs[j]] == Type::Bool) {
        Reg x = fn.new_reg(Type::Int);
        Reg z = fn.new_reg(Type::Int);
        site.push_back(make_load(x, t, idx));
        site.push_back(make_const(z, 0));
        site.push_back(make_binary(BinOp::Ne, outs[j], x, z));
      } else {
        site.push_back(make_load(outs[j], t, idx));
      }
    }
  }
  std::vector<std::vector<Instruction>> groups;
  const auto& instrs = fn.block(block).instrs;
  for (std::size_t i = 0; i < instrs.size(); ++i) {
    if (i == begin) groups.push_back(site);
    else if (i > begin && i < end) groups.emplace_back();
    else groups.push_back({instrs[i]});
  }
  replace_with_groups(fn, block, std::move(groups), {});
  std::size_t pos = static_cast<std::size_t>(fnp - p.functions.data());
  p.functions.insert(p.functions.begin() + static_cast<std::ptrdiff_t>(pos) + 1, std::move(out));
  return p;
}

Program interleave_functions(const std::string& fname, const std::string& gname, const Program& program) {
  if (fname == gname) throw Error(ErrorCode::SelfInterleave, "cannot interleave " + fname + " with itself");
  const Function* f = program.find(fname);
  const Function* g = program.find(gname);
  if (!f || !g) throw Error(ErrorCode::IneligibleSite, "unknown function " + (f ? gname : fname));
  if (fname == program.entry || gname == program.entry)
    throw Error(ErrorCode::IneligibleSite, "the entry function keeps its signature");
  if (f->param_types() != g->param_types() || f->ret != g->ret)
    throw Error(ErrorCode::SignatureMismatch, fname + " and " + gname + " have different signatures");

  Program p = program;
  std::vector<Type> ptypes{Type::Int};
  for (Type t : f->param_types()) ptypes.push_back(t);
  std::string name = unique_function_name(p, fname + "_" + gname);
  Function m = make_function(name, ptypes, f->ret);
  const Reg sel = m.params[0];

  BasicBlock entry;
  m.blocks.push_back(entry);
  m.entry = 0;
  std::map<BlockId, BlockId> entries;
  for (const Function* part : {f, g}) {
    std::map<Reg, Reg> regs;
    for (std::size_t k = 0; k < part->params.size(); ++k) regs[part->params[k]] = m.params[k + 1];
    for (Reg r = 0; r < part->regs.size(); ++r)
      if (!regs.count(r)) regs[r] = m.new_reg(part->regs[r]);
    std::map<BlockId, BlockId> ids;
    for (const auto& b : part->blocks) {
      BasicBlock copy = b;
      for (auto& in : copy.instrs) rename_registers(in, regs);
      rename_registers(copy.term, regs);
      ids[b.id] = add_block(m, std::move(copy));
    }
    for (const auto& b : part->blocks)
      for (auto& t : m.block(ids[b.id]).term.targets) t = ids.at(t);
    for (const auto& t : part->traps) {
      TrapEntry c = t;
      c.block = ids.at(t.block);
      c.handler = ids.at(t.handler);
      m.traps.push_back(c);
    }
    entries[part == f ? 0 : 1] = ids.at(part->entry);
  }
  Reg z = m.new_reg(Type::Int);
  Reg c = m.new_reg(Type::Bool);
  m.block(0).instrs = {make_const(z, 0, Tag::Dispatcher), make_binary(BinOp::Eq, c, sel, z, Tag::Dispatcher)};
  m.block(0).term = make_branch(c, entries[0], entries[1], Tag::Dispatcher);

  std::size_t pos = static_cast<std::size_t>(p.find(fname) - p.functions.data());
  p.functions[pos] = std::move(m);
  std::erase_if(p.functions, [&](const Function& fn) { return fn.name == gname; });

  for (auto& fn : p.functions) {
    for (auto& b : fn.blocks) {
      for (std::size_t i = b.instrs.size(); i-- > 0;) {
        auto& in = b.instrs[i];
        if (in.op != Opcode::Call || (in.text != fname && in.text != gname)) continue;
        Reg s = fn.new_reg(Type::Int);
        std::int64_t which = in.text == fname ? 0 : 1;
        in.text = name;
        in.args.insert(in.args.begin(), s);
        insert_instrs(fn, b.id, i, {make_const(s, which, Tag::Dispatcher)});
      }
    }
  }
  return p;
}

namespace detail {

TransformResult inline_method(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  auto sites = call_sites(r.program, false);
  if (sites.empty()) no_sites("no calls to other functions");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) { return sites[a].index > sites[b].index; });
  const Program original = r.program;
  for (std::size_t k : chosen) {
    auto& fn = r.program.functions[sites[k].fn];
    std::string callee = fn.block(sites[k].block).instrs[sites[k].index].text;
    inline_call(fn, *original.find(callee), sites[k].block, sites[k].index);
    r.sites.push_back(Site{fn.name, sites[k].block, "inlined " + callee});
  }
  return r;
}

TransformResult outline_method(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  struct Ref {
    std::string fn;
    BlockId block;
    std::vector<std::pair<std::size_t, std::size_t>> regions;
  };
  std::vector<Ref> sites;
  for (const auto& fn : r.program.functions)
    for (const auto& b : fn.blocks) {
      Ref ref{fn.name, b.id, {}};
      for (std::size_t len = 2; len <= 4; ++len)
        for (std::size_t i = 0; i + len <= b.instrs.size(); ++i) {
          try {
            outline_region(r.program, fn.name, b.id, i, i + len, 0);
            ref.regions.push_back({i, i + len});
          } catch (const Error&) {
          }
        }
      if (!ref.regions.empty()) sites.push_back(std::move(ref));
    }
  if (sites.empty()) no_sites("no outlinable region");
  for (std::size_t k : select_sites(sites.size(), cfg.effective_fraction(), cfg.seed)) {
    Rng rng(mix_seed(cfg.seed, 1000 + k));
    auto [b, e] = rng.pick(sites[k].regions);
    r.program = outline_region(r.program, sites[k].fn, sites[k].block, b, e, cfg.seed);
    r.sites.push_back(Site{sites[k].fn, sites[k].block,
                           "instructions [" + std::to_string(b) + ", " + std::to_string(e) + ") outlined"});
  }
  return r;
}

TransformResult clone_method(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  auto sites = call_sites(r.program, true);
  if (sites.empty()) no_sites("no calls");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) { return sites[a].index > sites[b].index; });
  std::map<std::string, std::string> clones;
  std::vector<std::pair<std::size_t, Instruction>> work;
  for (std::size_t k : chosen) {
    const auto& in = r.program.functions[sites[k].fn].block(sites[k].block).instrs[sites[k].index];
    if (!clones.count(in.text)) clones[in.text] = "";
  }
  for (auto& [orig, clone] : clones) {
    clone = unique_function_name(r.program, orig + "_clone");
    Function copy = *r.program.find(orig);
    copy.name = clone;
    std::size_t pos = static_cast<std::size_t>(r.program.find(orig) - r.program.functions.data());
    r.program.functions.insert(r.program.functions.begin() + static_cast<std::ptrdiff_t>(pos) + 1, std::move(copy));
  }
  // Re-resolve function indices after insertion.
  for (std::size_t k : chosen) {
    const std::string caller = s.ir.functions[sites[k].fn].name;
    Function& fn = *r.program.find(caller);
    const BlockId block = sites[k].block;
    const std::size_t index = sites[k].index;
    auto cov = covering_entries(fn, block, index);
    BlockId cont = split_block(fn, block, index + 1);
    Instruction call = fn.block(block).instrs[index];
    erase_instr(fn, block, index);
    Instruction other = call;
    other.text = clones.at(call.text);
    BasicBlock a, b;
    a.instrs = {call};
    a.term = make_jump(cont);
    b.instrs = {other};
    b.term = make_jump(cont);
    BlockId aid = add_block(fn, std::move(a), block);
    BlockId bid = add_block(fn, std::move(b), aid);
    cover_block(fn, aid, cov);
    cover_block(fn, bid, cov);
    std::vector<Instruction> code;
    Reg p = emit_predicate(fn, code, opaque::Truth::Contextual, mix_seed(cfg.seed, 1000 + k));
    append_instrs(fn, block, std::move(code));
    fn.block(block).term = make_branch(p, aid, bid, Tag::Opaque);
    r.sites.push_back(Site{fn.name, block, call.text + " or " + other.text});
  }
  return r;
}

TransformResult interleave_methods(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  std::vector<std::pair<std::string, std::string>> pairs;
  const auto& fs = r.program.functions;
  for (std::size_t i = 0; i < fs.size(); ++i)
    for (std::size_t j = i + 1; j < fs.size(); ++j) {
      if (fs[i].name == r.program.entry || fs[j].name == r.program.entry) continue;
      if (fs[i].param_types() == fs[j].param_types() && fs[i].ret == fs[j].ret) pairs.push_back({fs[i].name, fs[j].name});
    }
  if (pairs.empty()) no_sites("no two functions with the same signature");
  std::set<std::string> used;
  for (std::size_t k : select_sites(pairs.size(), cfg.effective_fraction(), cfg.seed)) {
    auto [f, g] = pairs[k];
    if (used.count(f) || used.count(g)) continue;
    used.insert(f);
    used.insert(g);
    r.program = interleave_functions(f, g, r.program);
    r.sites.push_back(Site{f, std::nullopt, "merged with " + g});
  }
  return r;
}

namespace {

struct Wrappers {
  Program& program;
  std::map<std::string, std::string> names;

  std::string get(const std::string& key, const std::function<Function(std::string)>& build) {
    auto it = names.find(key);
    if (it != names.end()) return it->second;
    std::string name = unique_function_name(program, key);
    program.functions.push_back(build(name));
    names[key] = name;
    return name;
  }
};

struct IntrinsicRef {
  std::size_t fn;
  BlockId block;
  std::size_t index;
};

std::vector<IntrinsicRef> intrinsic_sites(const Program& p, bool with_strings) {
  std::vector<IntrinsicRef> out;
  for (std::size_t f = 0; f < p.functions.size(); ++f)
    for (const auto& b : p.functions[f].blocks)
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const auto& in = b.instrs[i];
        if (in.op != Opcode::Intrinsic) continue;
        if (in.intrinsic == IntrinsicFn::PrintStr && !with_strings) continue;
        out.push_back({f, b.id, i});
      }
  return out;
}

Function single_block(std::string name, std::vector<Type> params, Type ret,
                      const std::function<void(Function&, BasicBlock&)>& fill) {
  Function f = make_function(std::move(name), std::move(params), ret);
  BasicBlock b;
  fill(f, b);
  f.blocks.push_back(std::move(b));
  return f;
}

}  // namespace

TransformResult remove_library_idioms(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  auto sites = intrinsic_sites(r.program, false);
  if (sites.empty()) no_sites("no print or min calls");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  const std::size_t original_count = r.program.functions.size();
  std::vector<Instruction> rewritten;
  Rng rng(mix_seed(cfg.seed, 0x11B));
  const std::int64_t mask = rng.range(1, 0x7FFF);
  std::vector<std::pair<IntrinsicRef, Instruction>> edits;
  Wrappers w{r.program, {}};
  for (std::size_t k : chosen) {
    const auto& site = sites[k];
    Instruction in = r.program.functions[site.fn].block(site.block).instrs[site.index];
    Instruction call;
    if (in.intrinsic == IntrinsicFn::Min) {
      std::string name = w.get("lib_min", [](std::string n) {
        Function f = make_function(std::move(n), {Type::Int, Type::Int}, Type::Int);
        Reg c = f.new_reg(Type::Bool);
        BasicBlock b0, b1, b2;
        b0.id = 0;
        b1.id = 1;
        b2.id = 2;
        b0.instrs = {make_binary(BinOp::Lt, c, f.params[0], f.params[1])};
        b0.term = make_branch(c, 1, 2);
        b1.term = make_return(f.params[0]);
        b2.term = make_return(f.params[1]);
        f.blocks = {b0, b1, b2};
        return f;
      });
      call = make_call(in.dst, name, in.args, in.tag);
    } else {
      Type t = r.program.functions[site.fn].regs[in.args[0]];
      std::string key = t == Type::Bool ? "lib_print_bool" : "lib_print_int";
      std::string name = w.get(key, [&](std::string n) {
        return single_block(std::move(n), {t}, Type::Void, [&](Function& f, BasicBlock& b) {
          Reg k = f.new_reg(t), m = f.new_reg(t), u = f.new_reg(t);
          b.instrs = {make_const(k, t == Type::Bool ? 1 : mask), make_binary(BinOp::Xor, m, f.params[0], k),
                      make_binary(BinOp::Xor, u, m, k), make_print(u)};
          b.term = make_return(std::nullopt);
        });
      });
      call = make_call(std::nullopt, name, in.args, in.tag);
    }
    edits.push_back({site, call});
  }
  for (auto& [site, call] : edits) {
    auto& fn = r.program.functions[site.fn];
    fn.block(site.block).instrs[site.index] = call;
    r.sites.push_back(Site{fn.name, site.block, "via " + call.text});
  }
  for (std::size_t i = original_count; i < r.program.functions.size(); ++i)
    r.notes.push_back("added " + r.program.functions[i].name);
  return r;
}

TransformResult api_buffer_methods(const Subject& s, const PassConfig& cfg) {
  TransformResult r;
  r.program = s.ir;
  auto sites = intrinsic_sites(r.program, true);
  if (sites.empty()) no_sites("no intrinsic calls");
  auto chosen = select_sites(sites.size(), cfg.effective_fraction(), cfg.seed);
  std::vector<std::pair<IntrinsicRef, Instruction>> edits;
  Wrappers w{r.program, {}};
  std::size_t literal = 0;
  std::map<std::string, std::string> literal_keys;
  for (std::size_t k : chosen) {
    const auto& site = sites[k];
    Instruction in = r.program.functions[site.fn].block(site.block).instrs[site.index];
    Instruction call;
    switch (in.intrinsic) {
      case IntrinsicFn::Min: {
        std::string name = w.get("buf_min", [](std::string n) {
          return single_block(std::move(n), {Type::Int, Type::Int}, Type::Int, [](Function& f, BasicBlock& b) {
            Reg d = f.new_reg(Type::Int);
            Instruction m;
            m.op = Opcode::Intrinsic;
            m.intrinsic = IntrinsicFn::Min;
            m.dst = d;
            m.args = {f.params[0], f.params[1]};
            m.tag = Tag::Buffer;
            b.instrs = {m};
            b.term = make_return(d, Tag::Buffer);
          });
        });
        call = make_call(in.dst, name, in.args, Tag::Buffer);
        break;
      }
      case IntrinsicFn::Print: {
        Type t = r.program.functions[site.fn].regs[in.args[0]];
        std::string name = w.get(t == Type::Bool ? "buf_print_bool" : "buf_print_int", [t](std::string n) {
          return single_block(std::move(n), {t}, Type::Void, [](Function& f, BasicBlock& b) {
            b.instrs = {make_print(f.params[0], Tag::Buffer)};
            b.term = make_return(std::nullopt, Tag::Buffer);
          });
        });
        call = make_call(std::nullopt, name, in.args, Tag::Buffer);
        break;
      }
      case IntrinsicFn::PrintStr: {
        auto it = literal_keys.find(in.text);
        if (it == literal_keys.end()) it = literal_keys.emplace(in.text, "buf_print_str_" + std::to_string(literal++)).first;
        std::string text = in.text;
        std::string name = w.get(it->second, [text](std::string n) {
          return single_block(std::move(n), {}, Type::Void, [&text](Function&, BasicBlock& b) {
            Instruction ps;
            ps.op = Opcode::Intrinsic;
            ps.intrinsic = IntrinsicFn::PrintStr;
            ps.text = text;
            ps.tag = Tag::Buffer;
            b.instrs = {ps};
            b.term = make_return(std::nullopt, Tag::Buffer);
          });
        });
        call = make_call(std::nullopt, name, {}, Tag::Buffer);
        break;
      }
    }
    edits.push_back({site, call});
  }
  for (auto& [site, call] : edits) {
    auto& fn = r.program.functions[site.fn];
    fn.block(site.block).instrs[site.index] = call;
    r.sites.push_back(Site{fn.name, site.block, "through " + call.text});
  }
  return r;
}

}  // namespace detail
}  // namespace cfo::transforms
