#pragma once

// The dual-threaded core: two pipelines sharing one memory unit, driven by a
// global cycle loop. Within a cycle the instruction cache is arbitrated
// first, then the data cache; thread 0 is stepped before thread 1.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ajt/isa.hpp"
#include "ajt/memunit.hpp"
#include "ajt/pipeline.hpp"

namespace ajt::core {

enum class Thread1Mode : std::uint8_t { Inactive, Spinning, Active };
std::string_view mode_name(Thread1Mode m);

struct CoreConfig {
  int n_threads = 1;
  Thread1Mode thread1_mode = Thread1Mode::Inactive;
  // When set, thread 1 is a service loop that never halts: the run ends as
  // soon as thread 0 halts.
  bool thread1_daemon = true;
  mem::MemUnitConfig memory;
  pipe::PipelineConfig pipeline;
  std::uint64_t max_cycles = 4'000'000'000ull;
  std::uint32_t channel_base = 0x00010000;
  bool trace = false;

  std::uint32_t stack_top(int tid) const {
    return memory.memory_bytes - 16 - static_cast<std::uint32_t>(tid) * 0x10000u;
  }
};

struct SimStats {
  std::array<pipe::ThreadStats, 2> threads{};
  std::uint64_t total_cycles = 0;
  std::uint64_t smc_warnings = 0;

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

nlohmann::ordered_json to_json(const pipe::ThreadStats& s);
nlohmann::ordered_json to_json(const SimStats& s);

enum class ExitKind : std::uint8_t { Halted, MaxCycles, Fault };
std::string_view exit_name(ExitKind k);

struct RunResult {
  SimStats stats;
  ExitKind exit = ExitKind::Halted;
  std::optional<pipe::Fault> fault;
  std::shared_ptr<const mem::Memory> memory;  // final backing memory
  std::vector<std::string> warnings;

  bool ok() const { return exit == ExitKind::Halted; }
};

nlohmann::ordered_json to_json(const RunResult& r);

using RetireHook = std::function<void(int tid, std::uint32_t pc, const isa::Instruction& in, std::uint64_t cycle)>;

class Core {
 public:
  explicit Core(const CoreConfig& cfg);

  const CoreConfig& config() const { return cfg_; }
  mem::MemoryUnit& memory() { return mu_; }
  const mem::MemoryUnit& memory() const { return mu_; }
  pipe::ThreadState& thread(int tid) { return threads_[tid]; }
  const pipe::ThreadState& thread(int tid) const { return threads_[tid]; }
  std::uint64_t now() const { return cycle_; }

  void load(const isa::Program& p) { mu_.load_image(p); }
  /// Resets the thread's architectural state and points it at `pc`.
  void set_entry(int tid, std::uint32_t pc);
  /// Clock-gates a thread. Deactivating thread 0 while it is the only active
  /// thread throws std::invalid_argument.
  void set_thread_active(int tid, bool active);

  void set_retire_hook(RetireHook hook) { retire_hook_ = std::move(hook); }
  /// One line per running thread per cycle: "cycle tid pc event cause mnemonic",
  /// event retire, stall or fault, cause "-" unless stalled.
  void set_trace(std::ostream* out) { trace_ = out; }

  /// Simulates one cycle.
  void step();
  /// Exit condition at the current cycle, if any.
  std::optional<ExitKind> finished() const;
  /// Runs until an exit condition, fast-forwarding cycles in which every
  /// running thread is stalled.
  RunResult run();
  /// Runs until `pred` holds or an exit condition occurs.
  std::optional<ExitKind> run_until(const std::function<bool()>& pred);

  SimStats stats() const;

 private:
  void arbitrate(mem::CacheId c, std::array<std::optional<mem::MemRequest>, 2>& reqs, std::array<bool, 2>& go,
                 std::array<std::optional<mem::MemResponse>, 2>& resp);
  bool fast_forward();
  void trace_cycle(const std::array<pipe::ThreadStats, 2>& before, const std::array<std::uint32_t, 2>& pcs,
                   const std::array<bool, 2>& ran);

  CoreConfig cfg_;
  mem::MemoryUnit mu_;
  std::array<pipe::ThreadState, 2> threads_{};
  std::uint64_t cycle_ = 0;
  std::uint64_t smc_warnings_ = 0;
  std::vector<std::string> warnings_;
  RetireHook retire_hook_;
  std::ostream* trace_ = nullptr;
};

/// Loads every image, sets entries and runs to completion. A missing thread-1
/// entry falls back to the `_thread1` symbol of the first image defining it.
RunResult run(std::span<const isa::Program> images, const CoreConfig& cfg,
              std::array<std::optional<std::uint32_t>, 2> entries = {});

/// total_cycles(a) / total_cycles(b); throws std::domain_error when b has none.
double speedup(const RunResult& a, const RunResult& b);

}  // namespace ajt::core
