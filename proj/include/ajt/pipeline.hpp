#pragma once

// One hardware thread: paired fetch through a 128-entry instruction buffer,
// branch prediction, and an in-order single-issue execute model.
//
// A thread's cycle is split into stages so the core can arbitrate the shared
// caches between the two threads:
//   begin_cycle    charges pending multi-cycle stalls
//   fetch_stage    instruction buffer probe; on a miss the core issues IFETCH
//   complete_fetch fills the buffer from a granted IFETCH response
//   operands_ready FP / conversion scoreboard check
//   mem_request    address generation for memory instructions
//   execute        functional effect, retirement and timing bookkeeping
// Every active cycle ends in exactly one retirement or one stall.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "ajt/isa.hpp"
#include "ajt/memunit.hpp"

namespace ajt::pipe {

enum class StallCause : std::uint8_t {
  OwnMiss,
  BlockedByOtherMiss,
  ArbitrationLost,
  LockWait,
  FpBusy,
  Mispredict,
  Atomic,
  Count_
};
inline constexpr int kNumStallCauses = static_cast<int>(StallCause::Count_);
std::string_view cause_name(StallCause c);

enum class FaultKind : std::uint8_t { BusFault, Misaligned, IllegalInstruction };
std::string_view fault_name(FaultKind k);

struct Fault {
  int tid = 0;
  std::uint32_t pc = 0;
  FaultKind kind = FaultKind::BusFault;
  std::uint32_t addr = 0;

  friend bool operator==(const Fault&, const Fault&) = default;
};

struct PipelineConfig {
  std::uint32_t mispredict_penalty = 4;
  std::uint32_t int_div_cycles = 24;
  std::uint32_t fp_short_latency = 2;
  std::uint32_t fp_long_double = 24;
  std::uint32_t fp_long_single = 16;
};

struct Timing {
  std::uint32_t cost = 1;  // result latency (pipelined) or busy cycles (not pipelined)
  bool pipelined = true;
};

/// Issue cost of a non-memory instruction.
Timing execute_timing(const isa::Instruction& in, const PipelineConfig& cfg = {});

// ---------------------------------------------------------------------------

class Predictor {
 public:
  static constexpr int kBhtSize = 256;
  static constexpr int kBtbSize = 64;
  static constexpr int kRasSize = 8;

  std::uint8_t counter(std::uint32_t pc) const { return bht_[(pc >> 2) & (kBhtSize - 1)]; }
  std::optional<std::uint32_t> btb_lookup(std::uint32_t pc) const;
  void btb_insert(std::uint32_t pc, std::uint32_t target);
  void ras_push(std::uint32_t addr);
  std::uint32_t ras_pop();
  int ras_depth() const { return ras_depth_; }

  /// Updates the predictor with a resolved control transfer and returns true
  /// when the fetch direction or target would have been wrong.
  bool resolve(std::uint32_t pc, const isa::Instruction& in, bool taken, std::uint32_t target);

 private:
  struct BtbEntry {
    bool valid = false;
    std::uint32_t tag = 0;
    std::uint32_t target = 0;
  };
  std::array<std::uint8_t, kBhtSize> bht_ = [] {
    std::array<std::uint8_t, kBhtSize> a{};
    a.fill(1);
    return a;
  }();
  std::array<BtbEntry, kBtbSize> btb_{};
  std::array<std::uint32_t, kRasSize> ras_{};
  int ras_top_ = 0;  // next free slot
  int ras_depth_ = 0;
};

class InstrBuffer {
 public:
  static constexpr int kEntries = 128;

  struct Entry {
    bool valid = false;
    std::uint32_t tag = 0;
    std::uint32_t word = 0;
    isa::Instruction instr;
  };

  static std::uint32_t index(std::uint32_t addr) { return (addr >> 2) & (kEntries - 1); }
  static std::uint32_t tag(std::uint32_t addr) { return addr >> 9; }

  const Entry* lookup(std::uint32_t addr) const {
    const auto& e = entries_[index(addr)];
    return e.valid && e.tag == tag(addr) ? &e : nullptr;
  }
  void fill(std::uint32_t addr, std::uint32_t word);
  bool contains(std::uint32_t addr) const { return lookup(addr & ~3u) != nullptr; }

 private:
  std::array<Entry, kEntries> entries_{};
};

// ---------------------------------------------------------------------------

struct CacheCounters {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;

  friend bool operator==(const CacheCounters&, const CacheCounters&) = default;
};

struct ThreadStats {
  std::uint64_t cycles_active = 0;
  std::uint64_t instructions_retired = 0;
  CacheCounters icache;
  CacheCounters dcache;
  std::uint64_t ibuf_hits = 0;
  std::array<std::uint64_t, kNumStallCauses> stall_cycles{};
  std::uint64_t fp_ops = 0;
  std::uint64_t branches = 0;
  std::uint64_t mispredicts = 0;
  std::uint64_t atomics = 0;

  std::uint64_t total_stalls() const {
    std::uint64_t s = 0;
    for (auto v : stall_cycles) s += v;
    return s;
  }
  std::uint64_t stall(StallCause c) const { return stall_cycles[static_cast<int>(c)]; }
  friend bool operator==(const ThreadStats&, const ThreadStats&) = default;
};

struct ThreadState {
  int tid = 0;
  std::uint32_t pc = 0;
  std::array<std::uint32_t, isa::kNumIntRegs> r{};
  std::array<std::uint64_t, isa::kNumFpRegs> f{};  // IEEE-754 double bit patterns
  bool active = false;
  bool halted = false;
  std::optional<Fault> fault;

  Predictor predictor;
  InstrBuffer ibuf;

  // Up to two queued stall windows, each covering cycles up to and including `until`.
  struct Window {
    std::uint64_t until = 0;
    StallCause cause = StallCause::OwnMiss;
  };
  std::array<Window, 2> windows{};
  int n_windows = 0;

  std::array<std::uint64_t, isa::kNumFpRegs> f_ready{};   // first cycle the value may be read
  std::array<std::uint64_t, isa::kNumIntRegs> r_ready{};  // set only by fcvt.w.d
  std::optional<std::uint64_t> unlock_after;             // TAS holds the unit lock through this cycle

  ThreadStats stats;

  // Per-cycle scratch set by fetch_stage / complete_fetch.
  const isa::Instruction* cur = nullptr;

  double fd(int i) const;
  void set_fd(int i, double v);
  bool running() const { return active && !halted; }
  /// Last cycle covered by queued stall windows, or nullopt.
  std::optional<std::uint64_t> busy_through() const {
    if (n_windows == 0) return std::nullopt;
    return windows[n_windows - 1].until;
  }
};

void reset_thread(ThreadState& t, int tid, std::uint32_t pc, std::uint32_t sp);

/// Charges a stall for `now` and advances stall windows. Returns false when the
/// thread makes no attempt this cycle (inactive, halted, or inside a window).
bool begin_cycle(ThreadState& t, std::uint64_t now);

void charge_stall(ThreadState& t, StallCause c);
void push_window(ThreadState& t, std::uint64_t until, StallCause c);

/// Instruction buffer probe at pc. Returns the IFETCH request on a miss.
std::optional<mem::MemRequest> fetch_stage(ThreadState& t);

/// Consumes a granted IFETCH. Returns false when the thread must stall
/// (miss in flight, or fault).
bool complete_fetch(ThreadState& t, const mem::MemResponse& resp, std::uint64_t now);

bool operands_ready(const ThreadState& t, const isa::Instruction& in, std::uint64_t now);

bool is_memory(const isa::Instruction& in);

/// Data request for a memory instruction; nullopt (with a fault recorded) on
/// a misaligned address.
std::optional<mem::MemRequest> mem_request(ThreadState& t, const isa::Instruction& in);

/// Returns the misprediction penalty charged for a resolved control transfer.
std::uint32_t predict_and_redirect(ThreadState& t, const isa::Instruction& in, bool taken, std::uint32_t target,
                                   const PipelineConfig& cfg);

/// Executes the current instruction. `resp` is the granted data response for
/// memory instructions and must be null otherwise.
void execute(ThreadState& t, const isa::Instruction& in, const mem::MemResponse* resp, std::uint64_t now,
             const PipelineConfig& cfg);

// ---------------------------------------------------------------------------

/// Memory as seen by a lone thread: no arbitration partner.
class MemoryPort {
 public:
  virtual ~MemoryPort() = default;
  /// nullopt means not granted this cycle; `cause` receives the reason.
  virtual std::optional<mem::MemResponse> request(const mem::MemRequest& req, std::uint64_t now,
                                                  StallCause& cause) = 0;
  virtual void release(int tid, std::uint64_t now) = 0;
};

/// Port over a MemoryUnit driven by a single thread.
class SoloPort : public MemoryPort {
 public:
  explicit SoloPort(mem::MemoryUnit& mu) : mu_(mu) {}
  std::optional<mem::MemResponse> request(const mem::MemRequest& req, std::uint64_t now, StallCause& cause) override;
  void release(int tid, std::uint64_t now) override;

 private:
  mem::MemoryUnit& mu_;
};

/// Advances one thread by one cycle through every stage.
void step_thread(ThreadState& t, MemoryPort& port, std::uint64_t now, const PipelineConfig& cfg = {});

}  // namespace ajt::pipe
