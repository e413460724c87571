// ajtsim: assemble, run and benchmark programs on the dual-thread core model.
//
// Exit codes: 0 ok, 1 usage, 2 assembly or config error, 3 simulation fault,
// 4 oracle failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ajt/assembler.hpp"
#include "ajt/bench.hpp"
#include "ajt/config.hpp"
#include "ajt/core.hpp"
#include "ajt/scenario.hpp"
#include "ajt/version.hpp"
#include "ajt/workloads.hpp"

namespace fs = std::filesystem;
using namespace ajt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kFault = 3, kOracle = 4 };

// Errors that map straight to an exit code.
struct Failure {
  int code;
  std::string message;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kInput, fmt::format("cannot read '{}'", path)};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kInput, fmt::format("cannot write '{}'", path)};
}

isa::Program assemble_file(const std::string& path) {
  auto r = assembler::assemble(read_text(path));
  if (!r.ok()) {
    std::string msg;
    for (const auto& e : r.errors) msg += fmt::format("{}:{}\n", path, assembler::format_error(e));
    if (!msg.empty()) msg.pop_back();
    throw Failure{kInput, msg};
  }
  return *r.program;
}

// A source file is assembled; anything else must be an AJTL image.
isa::Program load_program(const std::string& path) {
  if (fs::path(path).extension() == ".s") return assemble_file(path);
  try {
    return isa::read_image_file(path);
  } catch (const std::exception& e) {
    throw Failure{kInput, fmt::format("{}: {}", path, e.what())};
  }
}

core::CoreConfig load_config(const std::optional<std::string>& path) {
  try {
    return config::resolve(path);
  } catch (const mem::ConfigError& e) {
    throw Failure{kInput, fmt::format("config error: {}", e.what())};
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::uint32_t resolve_entry(const std::string& text, const std::vector<isa::Program>& images) {
  for (const auto& p : images)
    if (auto it = p.symbols.find(text); it != p.symbols.end()) return it->second;
  try {
    std::size_t used = 0;
    auto v = std::stoul(text, &used, 0);
    if (used == text.size()) return static_cast<std::uint32_t>(v);
  } catch (const std::exception&) {
  }
  throw Failure{kUsage, fmt::format("entry '{}' is neither a label nor an address", text)};
}

// ---------------------------------------------------------------------------

struct AsmArgs {
  std::string input;
  std::string output;
  bool disasm = false;
};

int cmd_asm(const AsmArgs& a) {
  if (a.disasm) {
    auto text = assembler::disassemble(load_program(a.input));
    if (a.output.empty()) std::cout << text;
    else write_text(a.output, text);
    return kOk;
  }
  auto p = assemble_file(a.input);
  auto out = a.output.empty() ? fs::path(a.input).replace_extension(".bin").string() : a.output;
  try {
    isa::write_image_file(out, p);
  } catch (const std::exception& e) {
    throw Failure{kInput, fmt::format("{}: {}", out, e.what())};
  }
  return kOk;
}

struct RunArgs {
  std::vector<std::string> images;
  std::optional<std::string> config;
  std::string scenario = "single";
  std::optional<std::uint64_t> max_cycles;
  std::string trace;
  std::string stats;
  std::string entry0;
  std::string entry1;
};

int cmd_run(const RunArgs& a) {
  auto base = load_config(a.config);
  if (a.max_cycles) base.max_cycles = *a.max_cycles;
  auto sc = scenario::parse(a.scenario);
  if (!sc) throw Failure{kUsage, fmt::format("unknown scenario '{}'", a.scenario)};
  auto cfg = scenario::configure(base, *sc);

  std::vector<isa::Program> images;
  for (const auto& path : a.images) images.push_back(load_program(path));

  core::Core core(cfg);
  for (const auto& p : images) core.load(p);
  core.set_entry(0, a.entry0.empty() ? images[0].entry() : resolve_entry(a.entry0, images));
  if (core.thread(1).active)
    core.set_entry(1, resolve_entry(a.entry1.empty() ? "_thread1" : a.entry1, images));

  std::ofstream trace_file;
  if (!a.trace.empty()) {
    trace_file.open(a.trace, std::ios::binary);
    if (!trace_file) throw Failure{kInput, fmt::format("cannot write '{}'", a.trace)};
    core.set_trace(&trace_file);
  } else if (cfg.trace) {
    core.set_trace(&std::cerr);
  }

  auto r = core.run();
  auto text = core::to_json(r).dump(2) + "\n";
  if (a.stats.empty()) std::cout << text;
  else write_text(a.stats, text);

  if (r.exit == core::ExitKind::Fault && r.fault) {
    std::cerr << fmt::format("fault: thread {} pc {:08x} cause {} addr {:08x}\n", r.fault->tid, r.fault->pc,
                             pipe::fault_name(r.fault->kind), r.fault->addr);
    return kFault;
  }
  if (r.exit == core::ExitKind::MaxCycles) {
    std::cerr << fmt::format("stopped: max cycles ({}) reached, thread 0 pc {:08x}\n", cfg.max_cycles,
                             core.thread(0).pc);
    return kFault;
  }
  return kOk;
}

struct BenchArgs {
  std::string workloads = "all";
  std::string scenarios = "all";
  std::string out;
  std::string csv;
  std::uint64_t seed = 1;
  std::optional<std::string> config;
  std::string sizes;
  bool serial = false;
};

nlohmann::json parse_sizes(const std::string& s) {
  if (s.empty()) return nlohmann::json::object();
  auto text = fs::exists(s) ? read_text(s) : s;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Failure{kInput, "--sizes must be a JSON object keyed by workload"};
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Failure{kInput, fmt::format("--sizes: {}", e.what())};
  }
}

bench::Options bench_options(const std::string& wl, const std::string& scen, std::uint64_t seed,
                             const std::optional<std::string>& cfg, const std::string& sizes) {
  bench::Options o;
  o.seed = seed;
  o.config = load_config(cfg);
  o.sizes = parse_sizes(sizes);
  if (wl != "all") {
    o.workloads = split_list(wl);
    for (const auto& n : o.workloads)
      if (std::find(workloads::names().begin(), workloads::names().end(), n) == workloads::names().end())
        throw Failure{kUsage, fmt::format("unknown workload '{}'", n)};
  }
  if (scen != "all") {
    for (const auto& n : split_list(scen)) {
      auto s = scenario::parse(n);
      if (!s) throw Failure{kUsage, fmt::format("unknown scenario '{}'", n)};
      o.scenarios.push_back(*s);
    }
  }
  for (const auto& [k, _] : o.sizes.items())
    if (std::find(workloads::names().begin(), workloads::names().end(), k) == workloads::names().end())
      throw Failure{kInput, fmt::format("--sizes: unknown workload '{}'", k)};
  return o;
}

int cmd_bench(const BenchArgs& a) {
  auto o = bench_options(a.workloads, a.scenarios, a.seed, a.config, a.sizes);
  auto rep = a.serial ? bench::run_serial(o) : bench::run_parallel(o);
  auto csv = bench::to_csv(rep);
  if (!a.out.empty()) write_text(a.out, bench::to_json(rep).dump(2) + "\n");
  if (!a.csv.empty()) write_text(a.csv, csv);
  std::cout << csv;

  int code = kOk;
  for (const auto& row : rep.rows) {
    if (row.status == bench::RowStatus::Ok) continue;
    std::cerr << fmt::format("{}: {}: {}\n", row.workload, bench::status_name(row.status), row.error);
    int c = row.status == bench::RowStatus::OracleFailed ? kOracle
            : row.status == bench::RowStatus::Fault      ? kFault
                                                         : kInput;
    code = std::max(code, c);
  }
  return code;
}

struct EmitArgs {
  std::string workloads = "all";
  std::string dir = "workloads";
  std::uint64_t seed = 1;
  std::optional<std::string> config;
  std::string sizes;
};

// Per workload: single.s, dual.s, their images, data.bin and manifest.json.
int cmd_emit(const EmitArgs& a) {
  auto o = bench_options(a.workloads, "all", a.seed, a.config, a.sizes);
  auto names = o.workloads.empty() ? workloads::names() : o.workloads;
  for (const auto& n : names) {
    workloads::BuildOptions b;
    b.seed = o.seed;
    b.channel_base = o.config.channel_base;
    if (o.sizes.contains(n)) b.sizes = o.sizes[n];
    workloads::Workload w;
    try {
      w = workloads::build(n, b);
    } catch (const std::exception& e) {
      throw Failure{kInput, fmt::format("{}: {}", n, e.what())};
    }
    auto d = fs::path(a.dir) / n;
    fs::create_directories(d);
    write_text((d / "single.s").string(), w.single.source);
    write_text((d / "dual.s").string(), w.dual.source);
    isa::write_image_file((d / "single.bin").string(), w.single.program);
    isa::write_image_file((d / "dual.bin").string(), w.dual.program);
    isa::write_image_file((d / "data.bin").string(), w.data);
    auto m = w.manifest();
    m["files"] = {{"single", "single.s"}, {"dual", "dual.s"}, {"single_image", "single.bin"},
                  {"dual_image", "dual.bin"}, {"data_image", "data.bin"}};
    m["entry_addresses"] = {{"single", {{"thread0", w.single.program.symbol("_start")},
                                        {"thread1", w.single.program.symbol("_thread1")}}},
                            {"dual", {{"thread0", w.dual.program.symbol("_start")},
                                      {"thread1", w.dual.program.symbol("_thread1")}}}};
    write_text((d / "manifest.json").string(), m.dump(2) + "\n");
    std::cout << d.string() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ajtsim: dual-thread core simulator"};
  app.set_version_flag("--version", ajt::kVersion);
  app.require_subcommand(1);

  AsmArgs asm_args;
  auto* asm_cmd = app.add_subcommand("asm", "assemble a source file, or disassemble an image");
  asm_cmd->add_option("input", asm_args.input, "source (.s), or image with --disasm")->required();
  asm_cmd->add_option("-o,--output", asm_args.output, "output path (default: input with .bin, or stdout)");
  asm_cmd->add_flag("--disasm", asm_args.disasm, "print a re-assemblable listing of an image");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "simulate one program");
  run_cmd->add_option("images", run_args.images, "images or .s sources; entry is the first one's _start")
      ->required();
  run_cmd->add_option("--config", run_args.config, "config JSON (default: $AJTSIM_CONFIG)");
  run_cmd->add_option("--scenario", run_args.scenario, "single|inactive|spinning|dual")
      ->check(CLI::IsMember({"single", "inactive", "spinning", "dual"}));
  run_cmd->add_option("--max-cycles", run_args.max_cycles, "cycle budget")->check(CLI::PositiveNumber);
  run_cmd->add_option("--trace", run_args.trace, "write a per-cycle trace");
  run_cmd->add_option("--stats", run_args.stats, "write stats JSON here instead of stdout");
  run_cmd->add_option("--entry0", run_args.entry0, "thread 0 entry label or address");
  run_cmd->add_option("--entry1", run_args.entry1, "thread 1 entry label or address (default _thread1)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "run the workload x scenario matrix");
  bench_cmd->add_option("--workloads", bench_args.workloads, "comma list or all");
  bench_cmd->add_option("--scenarios", bench_args.scenarios, "comma list or all");
  bench_cmd->add_option("--out", bench_args.out, "JSON report path");
  bench_cmd->add_option("--csv", bench_args.csv, "CSV table path");
  bench_cmd->add_option("--seed", bench_args.seed, "input data seed");
  bench_cmd->add_option("--config", bench_args.config, "config JSON (default: $AJTSIM_CONFIG)");
  bench_cmd->add_option("--sizes", bench_args.sizes, "JSON object or file: {\"fft\": {\"n\": 1024}}");
  bench_cmd->add_flag("--serial", bench_args.serial, "run cells one at a time");

  EmitArgs emit_args;
  auto* emit_cmd = app.add_subcommand("emit", "write workload sources, images and manifests");
  emit_cmd->add_option("--workloads", emit_args.workloads, "comma list or all");
  emit_cmd->add_option("--dir", emit_args.dir, "output directory");
  emit_cmd->add_option("--seed", emit_args.seed, "input data seed");
  emit_cmd->add_option("--config", emit_args.config, "config JSON (default: $AJTSIM_CONFIG)");
  emit_cmd->add_option("--sizes", emit_args.sizes, "JSON object or file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*asm_cmd) return cmd_asm(asm_args);
    if (*run_cmd) return cmd_run(run_args);
    if (*bench_cmd) return cmd_bench(bench_args);
    if (*emit_cmd) return cmd_emit(emit_args);
  } catch (const Failure& f) {
    std::cerr << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kUsage;
}
