#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfo/catalog/catalog.hpp"
#include "cfo/cli/report.hpp"
#include "cfo/error.hpp"
#include "cfo/frontend/frontend.hpp"
#include "cfo/harness/harness.hpp"
#include "cfo/interp/interpreter.hpp"
#include "cfo/ir/text.hpp"
#include "cfo/ir/verify.hpp"
#include "cfo/metrics/metrics.hpp"
#include "cfo/opaque/opaque.hpp"
#include "json.hpp"

namespace cfo::cli {

namespace {

// Raised for user mistakes that are not library errors (bad flags, unreadable files).
struct UsageError {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError{"cannot read " + path};
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError{"cannot write " + path};
  f << text;
  if (!f) throw UsageError{"cannot write " + path};
}

struct Loaded {
  std::optional<frontend::Node> ast;
  ir::Program program;
};

// `.ir` files are IR text; everything else is MiniLang source.
Loaded load(const std::string& path) {
  std::string text = read_file(path);
  Loaded out;
  if (std::filesystem::path(path).extension() == ".ir") {
    auto parsed = ir::parse_text(text);
    if (!parsed.program) {
      std::string msg;
      for (const auto& d : parsed.diagnostics) msg += path + ":" + std::to_string(d.line) + ": " + d.message + "\n";
      throw UsageError{msg.empty() ? path + ": malformed IR" : msg.substr(0, msg.size() - 1)};
    }
    auto diags = ir::verify(*parsed.program);
    if (!diags.empty()) throw UsageError{path + ": " + ir::to_string(diags.front())};
    out.program = std::move(*parsed.program);
    return out;
  }
  auto parsed = frontend::parse(text);
  if (!parsed.ast) {
    std::string msg;
    for (const auto& d : parsed.diagnostics) msg += path + ":" + frontend::to_string(d) + "\n";
    throw UsageError{msg.substr(0, msg.size() - 1)};
  }
  out.program = frontend::lower(*parsed.ast);
  out.ast = std::move(parsed.ast);
  return out;
}

std::string valid_pass_list() {
  std::string s;
  for (auto id : transforms::all_passes()) s += std::string(s.empty() ? "" : ", ") + transforms::to_string(id);
  return s;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw UsageError{"bad integer for " + what + ": '" + s + "'"};
  return v;
}

struct ObfuscateArgs {
  std::string input;
  std::vector<std::string> passes;
  std::string level;
  std::uint64_t seed = 0;
  std::string report;
  std::string emit = "ir";
  std::string output;
  std::size_t inputs = 20;
  std::string variant;
  std::vector<std::string> params;
  double site_fraction = 0.0;
};

int cmd_obfuscate(const ObfuscateArgs& a, std::ostream& out, std::ostream& err) {
  transforms::PassConfig config;
  config.seed = a.seed;
  config.variant = a.variant;
  config.site_fraction = a.site_fraction;
  if (a.site_fraction < 0.0 || a.site_fraction > 1.0) throw UsageError{"--site-fraction must lie in [0, 1]"};
  for (const auto& p : a.params) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError{"--param expects key=value, got '" + p + "'"};
    config.params[p.substr(0, eq)] = parse_int(p.substr(eq + 1), "--param " + p.substr(0, eq));
  }

  std::vector<transforms::PassId> passes;
  std::string level_name;
  if (!a.passes.empty()) {
    for (const auto& name : a.passes) {
      auto id = transforms::parse_pass_id(name);
      if (!id) throw UsageError{"unknown pass '" + name + "'; valid ids: " + valid_pass_list()};
      passes.push_back(*id);
    }
    level_name = "custom";
  } else {
    auto level = transforms::parse_intensity(a.level.empty() ? "normal" : a.level);
    if (!level) throw UsageError{"unknown level '" + a.level + "'; expected light, normal or aggressive"};
    config.intensity = *level;
    passes = transforms::level_passes(*level);
    level_name = transforms::to_string(*level);
  }

  Loaded in = load(a.input);
  transforms::Subject subject{in.ast, in.program};
  auto run = transforms::run_pipeline(subject, passes, config);

  std::string artifact;
  if (a.emit == "src") {
    if (!run.result.ast)
      throw UsageError{"--emit src needs a MiniLang input and only source-level passes; use --emit ir"};
    artifact = frontend::print_source(*run.result.ast);
  } else {
    artifact = ir::emit_text(run.result.ir);
  }

  auto report = build_report(a.input, level_name, a.seed, in.program, run, a.inputs);
  if (!a.report.empty()) write_file(a.report, to_json(report));
  if (!a.output.empty()) write_file(a.output, artifact);
  else out << artifact;

  std::size_t applied = 0;
  for (const auto& p : report.passes) applied += p.applied;
  err << "applied " << applied << " of " << report.passes.size() << " passes; diff " << harness::describe(report.diff)
      << '\n';
  if (report.diff.status == harness::DiffStatus::Mismatch) {
    err << "error: transformed program diverges from the original\n";
    return 2;
  }
  return 0;
}

int cmd_run(const std::string& file, const std::vector<std::string>& values, bool null_input, std::ostream& out,
            std::ostream& err) {
  interp::Input input;
  input.null = null_input;
  if (null_input && !values.empty()) throw UsageError{"--null takes no values"};
  for (const auto& v : values) input.values.push_back(parse_int(v, "input value"));
  Loaded in = load(file);
  auto r = interp::run(in.program, input);
  for (const auto& item : r.output) out << item << '\n';
  err << interp::describe(r) << '\n';
  return 0;
}

int cmd_diff(const std::string& a, const std::string& b, std::size_t inputs, std::uint64_t seed, std::ostream& out) {
  Loaded x = load(a), y = load(b);
  auto v = harness::differential_test(x.program, y.program, inputs, seed);
  out << harness::describe(v) << '\n';
  return v.status == harness::DiffStatus::Mismatch ? 1 : 0;
}

int cmd_catalog(const std::string& format, bool predicates, std::ostream& out) {
  bool json = format == "json";
  if (!predicates) {
    out << catalog::emit_table(json ? catalog::Format::Json : catalog::Format::Text);
    return 0;
  }
  if (json) {
    nlohmann::json j;
    j["schema"] = 1;
    j["families"] = nlohmann::json::array();
    for (const auto& f : opaque::families())
      j["families"].push_back(
          {{"name", f.name}, {"truth", opaque::to_string(f.truth)}, {"shape", f.shape}, {"proof", f.proof}});
    out << j.dump(2) << '\n';
    return 0;
  }
  out << std::left << std::setw(22) << "family" << std::setw(14) << "truth" << std::setw(44) << "shape"
      << "proof\n";
  for (const auto& f : opaque::families())
    out << std::left << std::setw(22) << f.name << std::setw(14) << opaque::to_string(f.truth) << std::setw(44)
        << f.shape << f.proof << '\n';
  return 0;
}

int cmd_gen(harness::GenConfig config, const std::vector<std::string>& features, std::ostream& out) {
  if (!features.empty()) {
    config.features.clear();
    for (const auto& name : features) {
      auto f = harness::parse_feature(name);
      if (!f) {
        std::string valid;
        for (auto x : harness::all_features()) valid += std::string(valid.empty() ? "" : ", ") + harness::to_string(x);
        throw UsageError{"unknown feature '" + name + "'; valid features: " + valid};
      }
      config.features.insert(*f);
    }
  }
  out << harness::gen_program(config).text;
  return 0;
}

int cmd_metrics(const std::string& file, const std::string& format, std::ostream& out) {
  Loaded in = load(file);
  auto m = metrics::compute_metrics(in.program);
  out << (format == "json" ? metrics_to_json(m) : metrics_to_text(m));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cfo: control-flow obfuscation for MiniLang", "cfo"};
  app.require_subcommand(1);

  ObfuscateArgs ob;
  auto* obfuscate = app.add_subcommand("obfuscate", "Apply obfuscation passes to a program");
  obfuscate->add_option("input", ob.input, "MiniLang (.mini) or IR text (.ir) file")->required();
  auto* pass_opt = obfuscate->add_option("--pass", ob.passes, "Pass id (repeatable)");
  auto* level_opt = obfuscate->add_option("--level", ob.level, "Preset: light, normal or aggressive");
  pass_opt->excludes(level_opt);
  obfuscate->add_option("--seed", ob.seed, "Seed (default 0)");
  obfuscate->add_option("--report", ob.report, "Write the JSON report here");
  obfuscate->add_option("--emit", ob.emit, "Artifact kind: ir or src")->check(CLI::IsMember({"ir", "src"}));
  obfuscate->add_option("--output,-o", ob.output, "Write the artifact here instead of stdout");
  obfuscate->add_option("--inputs", ob.inputs, "Inputs for the differential check (default 20)");
  obfuscate->add_option("--variant", ob.variant, "Pass variant name");
  obfuscate->add_option("--param", ob.params, "Pass parameter key=value (repeatable)");
  obfuscate->add_option("--site-fraction", ob.site_fraction, "Fraction of eligible sites to transform");

  std::string run_file;
  std::vector<std::string> run_values;
  bool run_null = false;
  auto* run = app.add_subcommand("run", "Execute a program on one input");
  run->add_option("file", run_file, "MiniLang or IR text file")->required();
  run->add_option("values", run_values, "Input array elements (after --)");
  run->add_flag("--null", run_null, "Pass a null array");

  std::string diff_a, diff_b;
  std::size_t diff_inputs = 20;
  std::uint64_t diff_seed = 0;
  auto* diff = app.add_subcommand("diff", "Differential test of two programs");
  diff->add_option("a", diff_a, "Reference program")->required();
  diff->add_option("b", diff_b, "Candidate program")->required();
  diff->add_option("--inputs", diff_inputs, "Number of inputs (default 20)");
  diff->add_option("--seed", diff_seed, "Seed of the random inputs (default 0)");

  std::string cat_format = "text";
  bool cat_predicates = false;
  auto* cat = app.add_subcommand("catalog", "Print the technique classification");
  cat->add_option("--format", cat_format, "text or json")->check(CLI::IsMember({"text", "json"}));
  cat->add_flag("--predicates", cat_predicates, "List opaque predicate families instead");

  harness::GenConfig gen_config;
  std::vector<std::string> gen_features;
  auto* gen = app.add_subcommand("gen", "Generate a random terminating program");
  gen->add_option("--seed", gen_config.seed, "Seed (default 0)");
  gen->add_option("--feature", gen_features, "Restrict to these features (repeatable)");
  gen->add_option("--max-functions", gen_config.max_functions, "Functions including main")->check(CLI::Range(1, 16));
  gen->add_option("--max-blocks", gen_config.max_blocks_per_function, "Statement budget per function")
      ->check(CLI::Range(1, 64));
  gen->add_option("--max-loop-depth", gen_config.max_loop_depth, "Loop nesting limit")->check(CLI::Range(0, 3));

  std::string met_file, met_format = "text";
  auto* met = app.add_subcommand("metrics", "Print CFG metrics of a program");
  met->add_option("file", met_file, "MiniLang or IR text file")->required();
  met->add_option("--format", met_format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*obfuscate) return cmd_obfuscate(ob, out, err);
    if (*run) return cmd_run(run_file, run_values, run_null, out, err);
    if (*diff) return cmd_diff(diff_a, diff_b, diff_inputs, diff_seed, out);
    if (*cat) return cmd_catalog(cat_format, cat_predicates, out);
    if (*gen) return cmd_gen(gen_config, gen_features, out);
    if (*met) return cmd_metrics(met_file, met_format, out);
  } catch (const UsageError& e) {
    err << "error: " << e.message << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Internal ? 2 : 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace cfo::cli
