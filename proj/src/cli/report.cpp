#include <sstream>

#include "../catalog/json_io.hpp"
#include "cfo/cli/report.hpp"
#include "cfo/error.hpp"
#include "json.hpp"

namespace cfo::cli {

using nlohmann::json;

namespace {

json metrics_json(const metrics::CFGMetrics& m) {
  return json{{"functions", m.functions},       {"blocks", m.blocks},
              {"edges", m.edges},               {"trap_edges", m.trap_edges},
              {"instructions", m.instructions}, {"cyclomatic", m.cyclomatic},
              {"max_switch_fanout", m.max_switch_fanout}, {"trap_entries", m.trap_entries},
              {"irreducible", m.irreducible}};
}

metrics::CFGMetrics metrics_from(const json& j) {
  metrics::CFGMetrics m;
  j.at("functions").get_to(m.functions);
  j.at("blocks").get_to(m.blocks);
  j.at("edges").get_to(m.edges);
  j.at("trap_edges").get_to(m.trap_edges);
  j.at("instructions").get_to(m.instructions);
  j.at("cyclomatic").get_to(m.cyclomatic);
  j.at("max_switch_fanout").get_to(m.max_switch_fanout);
  j.at("trap_entries").get_to(m.trap_entries);
  j.at("irreducible").get_to(m.irreducible);
  return m;
}

json delta_json(const metrics::PotencyDelta& d) {
  return json{{"functions", d.functions},
              {"blocks", d.blocks},
              {"edges", d.edges},
              {"trap_edges", d.trap_edges},
              {"instructions", d.instructions},
              {"cyclomatic", d.cyclomatic},
              {"max_switch_fanout", d.max_switch_fanout},
              {"trap_entries", d.trap_entries},
              {"blocks_ratio", d.blocks_ratio},
              {"instructions_ratio", d.instructions_ratio},
              {"cyclomatic_ratio", d.cyclomatic_ratio},
              {"dr_proxy_triggered", d.dr_proxy_triggered}};
}

metrics::PotencyDelta delta_from(const json& j) {
  metrics::PotencyDelta d;
  j.at("functions").get_to(d.functions);
  j.at("blocks").get_to(d.blocks);
  j.at("edges").get_to(d.edges);
  j.at("trap_edges").get_to(d.trap_edges);
  j.at("instructions").get_to(d.instructions);
  j.at("cyclomatic").get_to(d.cyclomatic);
  j.at("max_switch_fanout").get_to(d.max_switch_fanout);
  j.at("trap_entries").get_to(d.trap_entries);
  j.at("blocks_ratio").get_to(d.blocks_ratio);
  j.at("instructions_ratio").get_to(d.instructions_ratio);
  j.at("cyclomatic_ratio").get_to(d.cyclomatic_ratio);
  j.at("dr_proxy_triggered").get_to(d.dr_proxy_triggered);
  return d;
}

transforms::PassId pass_from(const json& j) {
  auto id = transforms::parse_pass_id(j.get<std::string>());
  if (!id) throw Error(ErrorCode::InvalidInput, "unknown pass in report: " + j.get<std::string>());
  return *id;
}

json site_json(const transforms::Site& s) {
  return json{{"function", s.function}, {"block", s.block ? json(*s.block) : json(nullptr)}, {"detail", s.detail}};
}

transforms::Site site_from(const json& j) {
  transforms::Site s;
  j.at("function").get_to(s.function);
  if (!j.at("block").is_null()) s.block = j.at("block").get<ir::BlockId>();
  j.at("detail").get_to(s.detail);
  return s;
}

json input_json(const interp::Input& in) { return json{{"null", in.null}, {"values", in.values}}; }

interp::Input input_from(const json& j) {
  interp::Input in;
  j.at("null").get_to(in.null);
  j.at("values").get_to(in.values);
  return in;
}

json diff_json(const harness::DiffVerdict& v) {
  json j{{"status", harness::to_string(v.status)}, {"compared", v.compared}, {"skipped", v.skipped}};
  if (v.first_divergence) {
    const auto& d = *v.first_divergence;
    j["first_divergence"] = json{{"input", input_json(d.input)}, {"input_index", d.input_index},
                                 {"aspect", d.aspect},           {"position", d.position},
                                 {"expected", d.expected},       {"actual", d.actual}};
  } else {
    j["first_divergence"] = nullptr;
  }
  return j;
}

harness::DiffVerdict diff_from(const json& j) {
  harness::DiffVerdict v;
  auto status = j.at("status").get<std::string>();
  if (status == "equal") v.status = harness::DiffStatus::Equal;
  else if (status == "mismatch") v.status = harness::DiffStatus::Mismatch;
  else if (status == "original_fuel_exhausted") v.status = harness::DiffStatus::OriginalFuelExhausted;
  else throw Error(ErrorCode::InvalidInput, "unknown diff status in report: " + status);
  j.at("compared").get_to(v.compared);
  j.at("skipped").get_to(v.skipped);
  const auto& fd = j.at("first_divergence");
  if (!fd.is_null()) {
    harness::Divergence d;
    d.input = input_from(fd.at("input"));
    fd.at("input_index").get_to(d.input_index);
    fd.at("aspect").get_to(d.aspect);
    fd.at("position").get_to(d.position);
    fd.at("expected").get_to(d.expected);
    fd.at("actual").get_to(d.actual);
    v.first_divergence = std::move(d);
  }
  return v;
}

}  // namespace

ObfuscationReport build_report(std::string input, std::string level, std::uint64_t seed,
                               const ir::Program& original, const transforms::PipelineResult& run,
                               std::size_t n_inputs) {
  ObfuscationReport r;
  r.input = std::move(input);
  r.level = std::move(level);
  r.seed = seed;
  r.metrics_before = metrics::compute_metrics(original);
  r.metrics_after = metrics::compute_metrics(run.result.ir);
  r.deltas = metrics::potency_delta(r.metrics_before, r.metrics_after);
  for (std::size_t i = 0; i < run.steps.size(); ++i) {
    const auto& step = run.steps[i];
    r.passes.push_back(PassRecord{step.pass, step.seed, step.applied, step.skipped_reason, step.sites});
    if (!step.applied) continue;
    const ir::Program& after = i + 1 < run.steps.size() ? run.steps[i + 1].input : run.result.ir;
    r.dr_proxies.push_back(ProxyRecord{step.pass, harness::dr_proxy(step.pass, step.input, after)});
    const auto& rec = catalog::classify(step.pass);
    bool seen = false;
    for (const auto& c : r.classification) seen = seen || c.name == rec.name;
    if (!seen) r.classification.push_back(rec);
  }
  r.diff = harness::differential_test(original, run.result.ir, n_inputs, seed);
  return r;
}

std::string to_json(const ObfuscationReport& r) {
  json j;
  j["schema"] = r.schema;
  j["input"] = r.input;
  j["level"] = r.level;
  j["seed"] = r.seed;
  j["passes"] = json::array();
  for (const auto& p : r.passes) {
    json sites = json::array();
    for (const auto& s : p.sites) sites.push_back(site_json(s));
    j["passes"].push_back(json{{"pass", transforms::to_string(p.pass)},
                               {"seed", p.seed},
                               {"applied", p.applied},
                               {"skipped_reason", p.skipped_reason},
                               {"sites", std::move(sites)}});
  }
  j["metrics_before"] = metrics_json(r.metrics_before);
  j["metrics_after"] = metrics_json(r.metrics_after);
  j["deltas"] = delta_json(r.deltas);
  j["classification"] = json::array();
  for (const auto& c : r.classification) j["classification"].push_back(catalog::to_json(c));
  j["diff"] = diff_json(r.diff);
  j["dr_proxies"] = json::array();
  for (const auto& p : r.dr_proxies)
    j["dr_proxies"].push_back(json{{"pass", transforms::to_string(p.pass)},
                                   {"proxy", p.check.proxy},
                                   {"triggered", p.check.triggered},
                                   {"detail", p.check.detail}});
  return j.dump(2) + "\n";
}

ObfuscationReport report_from_json(std::string_view text) {
  ObfuscationReport r;
  try {
    auto j = json::parse(text);
    j.at("schema").get_to(r.schema);
    if (r.schema != kReportSchema)
      throw Error(ErrorCode::InvalidInput, "unsupported report schema " + std::to_string(r.schema));
    j.at("input").get_to(r.input);
    j.at("level").get_to(r.level);
    j.at("seed").get_to(r.seed);
    for (const auto& p : j.at("passes")) {
      PassRecord rec;
      rec.pass = pass_from(p.at("pass"));
      p.at("seed").get_to(rec.seed);
      p.at("applied").get_to(rec.applied);
      p.at("skipped_reason").get_to(rec.skipped_reason);
      for (const auto& s : p.at("sites")) rec.sites.push_back(site_from(s));
      r.passes.push_back(std::move(rec));
    }
    r.metrics_before = metrics_from(j.at("metrics_before"));
    r.metrics_after = metrics_from(j.at("metrics_after"));
    r.deltas = delta_from(j.at("deltas"));
    for (const auto& c : j.at("classification")) r.classification.push_back(catalog::record_from_json(c));
    r.diff = diff_from(j.at("diff"));
    for (const auto& p : j.at("dr_proxies")) {
      ProxyRecord rec;
      rec.pass = pass_from(p.at("pass"));
      p.at("proxy").get_to(rec.check.proxy);
      p.at("triggered").get_to(rec.check.triggered);
      p.at("detail").get_to(rec.check.detail);
      r.dr_proxies.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string metrics_to_json(const metrics::CFGMetrics& m) { return metrics_json(m).dump(2) + "\n"; }

std::string metrics_to_text(const metrics::CFGMetrics& m) {
  std::ostringstream os;
  os << "functions " << m.functions << '\n'
     << "blocks " << m.blocks << '\n'
     << "edges " << m.edges << '\n'
     << "trap_edges " << m.trap_edges << '\n'
     << "instructions " << m.instructions << '\n'
     << "cyclomatic " << m.cyclomatic << '\n'
     << "max_switch_fanout " << m.max_switch_fanout << '\n'
     << "trap_entries " << m.trap_entries << '\n'
     << "irreducible " << (m.irreducible ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace cfo::cli
