#include "ajt/bench.hpp"

#include <exception>

#include <fmt/format.h>

#include "ajt/config.hpp"
#include "ajt/version.hpp"

namespace ajt::bench {

using scenario::Scenario;

namespace {

struct Plan {
  std::vector<std::string> names;
  std::vector<Scenario> scenarios;
};

Plan plan(const Options& opt) {
  Plan p;
  p.names = opt.workloads.empty() ? workloads::names() : opt.workloads;
  p.scenarios = opt.scenarios.empty() ? std::vector<Scenario>(scenario::kAll.begin(), scenario::kAll.end())
                                      : opt.scenarios;
  return p;
}

workloads::BuildOptions build_options(const Options& opt, const std::string& name) {
  workloads::BuildOptions b;
  b.seed = opt.seed;
  b.channel_base = opt.config.channel_base;
  if (opt.sizes.contains(name)) b.sizes = opt.sizes[name];
  return b;
}

// Builds one row's workload; a failure is recorded on the row.
std::optional<workloads::Workload> build_row(const Options& opt, Row& row) {
  try {
    auto w = workloads::build(row.workload, build_options(opt, row.workload));
    row.manifest = w.manifest();
    return w;
  } catch (const std::exception& e) {
    row.status = RowStatus::BuildError;
    row.error = e.what();
    return std::nullopt;
  }
}

Cell run_cell(const workloads::Workload& w, Scenario s, const core::CoreConfig& cfg) {
  Cell c;
  c.scenario = s;
  auto base = cfg;
  base.trace = false;
  auto r = scenario::run(w, s, base);
  c.exit = r.exit;
  c.fault = r.fault;
  c.stats = r.stats;
  if (r.ok()) c.oracle = w.oracle(*r.memory);
  else c.oracle = {false, fmt::format("run ended by {}", core::exit_name(r.exit))};
  return c;
}

// Row status and speedup from finished cells; the first failing cell in
// scenario order names the error.
void finish_row(Row& row) {
  if (row.status == RowStatus::BuildError) return;
  for (const auto& c : row.cells) {
    if (c.exit != core::ExitKind::Halted) {
      row.status = RowStatus::Fault;
      if (c.fault)
        row.error = fmt::format("{}: {} at pc {:08x} (thread {}, addr {:08x})", scenario::name(c.scenario),
                                pipe::fault_name(c.fault->kind), c.fault->pc, c.fault->tid, c.fault->addr);
      else
        row.error = fmt::format("{}: {}", scenario::name(c.scenario), core::exit_name(c.exit));
      return;
    }
    if (!c.oracle.ok) {
      row.status = RowStatus::OracleFailed;
      row.error = fmt::format("{}: {}", scenario::name(c.scenario), c.oracle.message);
      return;
    }
  }
  const auto* s = row.cell(Scenario::Single);
  const auto* d = row.cell(Scenario::Dual);
  if (s && d && d->stats.total_cycles > 0)
    row.speedup = static_cast<double>(s->stats.total_cycles) / static_cast<double>(d->stats.total_cycles);
}

Report header(const Options& opt, const Plan& p) {
  Report r;
  r.version = kVersion;
  r.seed = opt.seed;
  r.config_hash = config::hash(opt.config);
  r.config = config::to_json(opt.config);
  r.scenarios = p.scenarios;
  return r;
}

}  // namespace

std::string_view status_name(RowStatus s) {
  switch (s) {
    case RowStatus::Ok: return "ok";
    case RowStatus::BuildError: return "build_error";
    case RowStatus::Fault: return "fault";
    case RowStatus::OracleFailed: return "oracle_failed";
  }
  return "?";
}

const Cell* Row::cell(Scenario s) const {
  for (const auto& c : cells)
    if (c.scenario == s) return &c;
  return nullptr;
}

bool Report::all_ok() const {
  for (const auto& r : rows)
    if (r.status != RowStatus::Ok) return false;
  return true;
}

Report run_serial(const Options& opt) {
  const auto p = plan(opt);
  auto rep = header(opt, p);
  for (const auto& name : p.names) {
    Row row;
    row.workload = name;
    if (auto w = build_row(opt, row))
      for (auto s : p.scenarios) row.cells.push_back(run_cell(*w, s, opt.config));
    finish_row(row);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

Report run_parallel(const Options& opt) {
  const auto p = plan(opt);
  auto rep = header(opt, p);
  const auto nw = static_cast<long>(p.names.size());
  const auto ns = static_cast<long>(p.scenarios.size());
  rep.rows.resize(p.names.size());
  std::vector<std::optional<workloads::Workload>> built(p.names.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < nw; ++i) {
    rep.rows[i].workload = p.names[i];
    built[i] = build_row(opt, rep.rows[i]);
  }

  // every cell writes its own slot; rows are assembled afterwards
  std::vector<std::optional<Cell>> cells(static_cast<std::size_t>(nw * ns));
  std::vector<std::string> errors(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < nw * ns; ++k) {
    const auto i = k / ns;
    if (!built[i]) continue;
    try {
      cells[k] = run_cell(*built[i], p.scenarios[k % ns], opt.config);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }

  for (long i = 0; i < nw; ++i) {
    auto& row = rep.rows[i];
    for (long j = 0; j < ns && built[i]; ++j) {
      const auto k = i * ns + j;
      if (!errors[k].empty()) throw std::runtime_error(errors[k]);
      row.cells.push_back(*cells[k]);
    }
    finish_row(row);
  }
  return rep;
}

nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["tool"] = "ajtsim";
  j["version"] = r.version;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["config"] = r.config;
  auto& sc = j["scenarios"] = nlohmann::ordered_json::array();
  for (auto s : r.scenarios) sc.push_back(scenario::name(s));
  auto& rows = j["workloads"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json w;
    w["name"] = row.workload;
    w["status"] = status_name(row.status);
    if (!row.error.empty()) w["error"] = row.error;
    if (!row.manifest.is_null()) w["manifest"] = row.manifest;
    nlohmann::ordered_json cells = nlohmann::ordered_json::object();
    for (const auto& c : row.cells) {
      nlohmann::ordered_json cj;
      cj["total_cycles"] = c.stats.total_cycles;
      cj["exit"] = core::exit_name(c.exit);
      cj["oracle"] = {{"ok", c.oracle.ok}, {"message", c.oracle.message}};
      cj["stats"] = core::to_json(c.stats);
      cells[std::string(scenario::name(c.scenario))] = std::move(cj);
    }
    w["cells"] = std::move(cells);
    w["speedup"] = row.speedup ? nlohmann::ordered_json(*row.speedup) : nlohmann::ordered_json(nullptr);
    rows.push_back(std::move(w));
  }
  return j;
}

std::string to_csv(const Report& r) {
  std::string out = "workload,single,inactive,spinning,dual,speedup\n";
  for (const auto& row : r.rows) {
    out += row.workload;
    for (auto s : scenario::kAll) {
      out += ',';
      const auto* c = row.cell(s);
      if (c && row.status == RowStatus::Ok) out += std::to_string(c->stats.total_cycles);
    }
    out += ',';
    if (row.speedup) out += fmt::format("{:.4f}", *row.speedup);
    out += '\n';
  }
  return out;
}

}  // namespace ajt::bench
