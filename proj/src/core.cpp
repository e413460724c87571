#include "ajt/core.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace ajt::core {

using mem::CacheId;
using pipe::StallCause;
using pipe::ThreadState;

std::string_view mode_name(Thread1Mode m) {
  switch (m) {
    case Thread1Mode::Inactive: return "inactive";
    case Thread1Mode::Spinning: return "spinning";
    case Thread1Mode::Active: return "active";
  }
  return "?";
}

std::string_view exit_name(ExitKind k) {
  switch (k) {
    case ExitKind::Halted: return "halted";
    case ExitKind::MaxCycles: return "max_cycles";
    case ExitKind::Fault: return "fault";
  }
  return "?";
}

nlohmann::ordered_json to_json(const pipe::ThreadStats& s) {
  nlohmann::ordered_json stalls;
  for (int c = 0; c < pipe::kNumStallCauses; ++c) {
    stalls[std::string(pipe::cause_name(static_cast<StallCause>(c)))] = s.stall_cycles[c];
  }
  return {
      {"cycles_active", s.cycles_active},
      {"instructions_retired", s.instructions_retired},
      {"icache", {{"accesses", s.icache.accesses}, {"hits", s.icache.hits}}},
      {"dcache", {{"accesses", s.dcache.accesses}, {"hits", s.dcache.hits}}},
      {"ibuf_hits", s.ibuf_hits},
      {"stall_cycles", stalls},
      {"fp_ops", s.fp_ops},
      {"branches", s.branches},
      {"mispredicts", s.mispredicts},
      {"atomics", s.atomics},
  };
}

nlohmann::ordered_json to_json(const SimStats& s) {
  nlohmann::ordered_json j;
  j["total_cycles"] = s.total_cycles;
  j["smc_warnings"] = s.smc_warnings;
  j["threads"] = nlohmann::ordered_json::array({to_json(s.threads[0]), to_json(s.threads[1])});
  return j;
}

nlohmann::ordered_json to_json(const RunResult& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json exit{{"kind", exit_name(r.exit)}};
  if (r.fault) {
    exit["tid"] = r.fault->tid;
    exit["pc"] = fmt::format("0x{:08x}", r.fault->pc);
    exit["fault"] = pipe::fault_name(r.fault->kind);
    exit["addr"] = fmt::format("0x{:08x}", r.fault->addr);
  }
  j["exit"] = exit;
  j["stats"] = to_json(r.stats);
  j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------------------

Core::Core(const CoreConfig& cfg) : cfg_(cfg), mu_(cfg.memory) {
  if (cfg_.n_threads != 1 && cfg_.n_threads != 2) throw std::invalid_argument("n_threads must be 1 or 2");
  for (int t = 0; t < 2; ++t) pipe::reset_thread(threads_[t], t, 0, cfg_.stack_top(t));
  threads_[0].active = true;
  threads_[1].active = cfg_.n_threads == 2 && cfg_.thread1_mode != Thread1Mode::Inactive;

  mu_.add_observer([this](const mem::AccessEvent& ev) {
    if (ev.kind != mem::ReqKind::Store && ev.kind != mem::ReqKind::Tas) return;
    for (const auto& t : threads_) {
      if (t.ibuf.contains(ev.addr)) {
        ++smc_warnings_;
        if (warnings_.size() < 16) {
          warnings_.push_back(fmt::format("cycle {}: thread {} stored to 0x{:08x}, which thread {} holds as an instruction",
                                          ev.cycle, ev.tid, ev.addr, t.tid));
        }
        return;
      }
    }
  });
}

void Core::set_entry(int tid, std::uint32_t pc) {
  const bool active = threads_[tid].active;
  pipe::reset_thread(threads_[tid], tid, pc, cfg_.stack_top(tid));
  threads_[tid].active = active;
}

void Core::set_thread_active(int tid, bool active) {
  if (tid < 0 || tid > 1) throw std::invalid_argument("thread id must be 0 or 1");
  if (tid == 1 && cfg_.n_threads < 2 && active) throw std::invalid_argument("core configured with one thread");
  if (!active && !threads_[1 - tid].active) throw std::invalid_argument("cannot deactivate the only active thread");
  threads_[tid].active = active;
}

static StallCause cause_of(mem::MemoryUnit::Block b) {
  switch (b) {
    case mem::MemoryUnit::Block::OwnMiss: return StallCause::OwnMiss;
    case mem::MemoryUnit::Block::OtherMiss: return StallCause::BlockedByOtherMiss;
    case mem::MemoryUnit::Block::Locked: return StallCause::LockWait;
    case mem::MemoryUnit::Block::None: break;
  }
  return StallCause::ArbitrationLost;
}

void Core::arbitrate(CacheId c, std::array<std::optional<mem::MemRequest>, 2>& reqs, std::array<bool, 2>& go,
                     std::array<std::optional<mem::MemResponse>, 2>& resp) {
  std::array<bool, 2> eligible{};
  for (int t = 0; t < 2; ++t) {
    if (!reqs[t]) continue;
    auto b = mu_.blocked(t, c, cycle_);
    if (b == mem::MemoryUnit::Block::None) {
      eligible[t] = true;
    } else {
      pipe::charge_stall(threads_[t], cause_of(b));
      go[t] = false;
    }
  }
  if (!eligible[0] && !eligible[1]) return;
  const int g = mu_.grant(c, eligible);
  for (int t = 0; t < 2; ++t) {
    if (eligible[t] && t != g) {
      pipe::charge_stall(threads_[t], StallCause::ArbitrationLost);
      go[t] = false;
    }
  }
  if (reqs[g]->kind == mem::ReqKind::Tas) mu_.lock(g);
  resp[g] = mu_.access(*reqs[g], cycle_);
}

void Core::step() {
  const auto now = cycle_;
  for (auto& t : threads_) {
    if (t.unlock_after && now > *t.unlock_after) {
      mu_.unlock(t.tid);
      t.unlock_after.reset();
    }
  }

  std::array<pipe::ThreadStats, 2> before{};
  std::array<std::uint32_t, 2> pcs{threads_[0].pc, threads_[1].pc};
  if (trace_) before = {threads_[0].stats, threads_[1].stats};

  std::array<bool, 2> ran{};
  std::array<bool, 2> go{};
  for (int t = 0; t < 2; ++t) {
    ran[t] = threads_[t].running();
    go[t] = pipe::begin_cycle(threads_[t], now);
  }

  // instruction side
  std::array<std::optional<mem::MemRequest>, 2> reqs{};
  std::array<std::optional<mem::MemResponse>, 2> resp{};
  for (int t = 0; t < 2; ++t) {
    if (go[t]) reqs[t] = pipe::fetch_stage(threads_[t]);
  }
  if (reqs[0] || reqs[1]) {
    arbitrate(CacheId::I, reqs, go, resp);
    for (int t = 0; t < 2; ++t) {
      if (resp[t] && !pipe::complete_fetch(threads_[t], *resp[t], now)) go[t] = false;
    }
  }

  // operands and data side
  std::array<isa::Instruction, 2> in{};
  reqs = {};
  resp = {};
  for (int t = 0; t < 2; ++t) {
    if (!go[t]) continue;
    auto& th = threads_[t];
    in[t] = *th.cur;
    if (!pipe::operands_ready(th, in[t], now)) {
      pipe::charge_stall(th, StallCause::FpBusy);
      go[t] = false;
      continue;
    }
    if (pipe::is_memory(in[t])) {
      reqs[t] = pipe::mem_request(th, in[t]);
      if (!reqs[t]) go[t] = false;
    }
  }
  if (reqs[0] || reqs[1]) arbitrate(CacheId::D, reqs, go, resp);

  for (int t = 0; t < 2; ++t) {
    if (!go[t]) continue;
    auto& th = threads_[t];
    const auto pc = th.pc;
    const auto retired = th.stats.instructions_retired;
    pipe::execute(th, in[t], resp[t] ? &*resp[t] : nullptr, now, cfg_.pipeline);
    if (retire_hook_ && th.stats.instructions_retired != retired) retire_hook_(t, pc, in[t], now);
  }

  if (trace_) trace_cycle(before, pcs, ran);
  ++cycle_;
}

void Core::trace_cycle(const std::array<pipe::ThreadStats, 2>& before, const std::array<std::uint32_t, 2>& pcs,
                       const std::array<bool, 2>& ran) {
  for (int t = 0; t < 2; ++t) {
    if (!ran[t]) continue;
    const auto& s = threads_[t].stats;
    std::string_view op = "-";
    if (const auto* e = threads_[t].ibuf.lookup(pcs[t])) op = isa::mnemonic(e->instr.op);
    std::string_view event = "fault";
    std::string_view cause = "-";
    if (s.instructions_retired != before[t].instructions_retired) {
      event = "retire";
    } else {
      for (int c = 0; c < pipe::kNumStallCauses; ++c) {
        if (s.stall_cycles[c] != before[t].stall_cycles[c]) {
          event = "stall";
          cause = pipe::cause_name(static_cast<StallCause>(c));
        }
      }
    }
    *trace_ << fmt::format("{} {} {:08x} {} {} {}\n", cycle_, t, pcs[t], event, cause, op);
  }
}

std::optional<ExitKind> Core::finished() const {
  for (const auto& t : threads_) {
    if (t.fault) return ExitKind::Fault;
  }
  const auto& t0 = threads_[0];
  const auto& t1 = threads_[1];
  if (t0.halted && (!t1.running() || cfg_.thread1_daemon)) return ExitKind::Halted;
  if (!t0.running() && !t1.running()) return ExitKind::Halted;
  if (cycle_ >= cfg_.max_cycles) return ExitKind::MaxCycles;
  return std::nullopt;
}

// Skips cycles in which every running thread sits inside a stall window.
bool Core::fast_forward() {
  std::uint64_t target = cfg_.max_cycles;
  bool any = false;
  for (const auto& t : threads_) {
    if (!t.running()) continue;
    any = true;
    auto through = t.busy_through();
    if (!through || *through < cycle_) return false;
    target = std::min(target, *through + 1);
  }
  if (!any || target <= cycle_ + 1) return false;
  for (auto& t : threads_) {
    if (!t.running()) continue;
    std::uint64_t c = cycle_;
    for (int i = 0; i < t.n_windows && c < target; ++i) {
      if (t.windows[i].until < c) continue;
      const auto end = std::min(t.windows[i].until + 1, target);
      t.stats.stall_cycles[static_cast<int>(t.windows[i].cause)] += end - c;
      t.stats.cycles_active += end - c;
      c = end;
    }
  }
  cycle_ = target;
  return true;
}

std::optional<ExitKind> Core::run_until(const std::function<bool()>& pred) {
  while (true) {
    if (auto e = finished()) return e;
    if (pred && pred()) return std::nullopt;
    if (trace_ || !fast_forward()) step();
  }
}

RunResult Core::run() {
  RunResult r;
  r.exit = *run_until(nullptr);
  r.stats = stats();
  for (const auto& t : threads_) {
    if (t.fault) {
      r.fault = t.fault;
      break;
    }
  }
  r.memory = std::make_shared<mem::Memory>(mu_.backing());
  r.warnings = warnings_;
  return r;
}

SimStats Core::stats() const {
  SimStats s;
  s.threads = {threads_[0].stats, threads_[1].stats};
  s.total_cycles = cycle_;
  s.smc_warnings = smc_warnings_;
  return s;
}

RunResult run(std::span<const isa::Program> images, const CoreConfig& cfg,
              std::array<std::optional<std::uint32_t>, 2> entries) {
  if (images.empty()) throw std::invalid_argument("no program images");
  Core core(cfg);
  for (const auto& p : images) core.load(p);
  core.set_entry(0, entries[0].value_or(images[0].entry()));
  if (core.thread(1).active) {
    auto e1 = entries[1];
    for (const auto& p : images) {
      if (e1) break;
      if (auto it = p.symbols.find("_thread1"); it != p.symbols.end()) e1 = it->second;
    }
    if (!e1) throw std::invalid_argument("thread 1 is active but no thread-1 entry was given");
    core.set_entry(1, *e1);
  }
  return core.run();
}

double speedup(const RunResult& a, const RunResult& b) {
  if (b.stats.total_cycles == 0) throw std::domain_error("speedup against a run with zero cycles");
  return static_cast<double>(a.stats.total_cycles) / static_cast<double>(b.stats.total_cycles);
}

}  // namespace ajt::core
