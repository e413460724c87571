#pragma once

// Side-kick runtime: thread 0 hands function calls to thread 1 through one
// 64-byte shared-memory channel, without locks.
//
// Channel layout (byte offsets from the channel base):
//   0  status   0 IDLE, 1 REQUEST, 2 BUSY, 3 DONE
//   4  fn_id
//   8  args[8]
//   40 retval[2]
//
// Register use of the generated fragments:
//   dispatcher (thread 1)  r20..r25 are reserved for the loop; tasks get
//                          args in r4..r11 and return in r2/r3, and must
//                          preserve r20..r28, r29 (sp)
//   invoke / wait          clobber r18, r19; wait leaves the return values
//                          in r2 and r3

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ajt/core.hpp"

namespace ajt::sidekick {

enum Status : std::uint32_t { kIdle = 0, kRequest = 1, kBusy = 2, kDone = 3 };

inline constexpr std::uint32_t kStatusOffset = 0;
inline constexpr std::uint32_t kFnOffset = 4;
inline constexpr std::uint32_t kArgsOffset = 8;
inline constexpr std::uint32_t kRetOffset = 40;
inline constexpr int kNumArgs = 8;
inline constexpr int kNumRets = 2;
inline constexpr std::uint32_t kChannelBytes = 64;
inline constexpr std::uint32_t kErrorSentinel = 0xDEADDEADu;

/// Entry labels of thread-1 routines; fn_id i+1 calls labels[i]. fn_id 0 is
/// the built-in no-op.
struct TaskTable {
  std::vector<std::string> labels;
};

struct DispatcherOptions {
  // Filler instructions between two polls of the status word.
  std::uint32_t poll_delay = 8;
};

/// Thread-1 service loop, entered at label `_thread1`.
std::string emit_dispatcher(const TaskTable& table, std::uint32_t channel_base, const DispatcherOptions& opt = {});

/// Thread-0 request: stores args, fn_id, then REQUEST. Each arg is a register
/// name other than r18/r19.
std::string emit_invoke(std::uint32_t channel_base, int fn_id, std::span<const std::string> arg_regs);

/// Thread-0 completion wait: spins until DONE, resets to IDLE and loads the
/// return values into r2/r3. `label` must be unique within the program.
std::string emit_wait(std::uint32_t channel_base, std::string_view label);

struct RoundTrip {
  std::uint64_t min = 0;
  std::uint64_t median = 0;
  std::uint64_t max = 0;
  std::vector<std::uint64_t> samples;
};

/// Cycles from the first instruction of an invoke(0) to the first instruction
/// after its wait, over `reps` warm invocations (one extra warm-up is discarded).
RoundTrip measure_roundtrip(const core::CoreConfig& cfg, int reps, const DispatcherOptions& opt = {});

/// Channel-watching probe. Attach before running; it checks single-writer
/// discipline per field and phase, and that thread 1 reads the arguments
/// that were present when REQUEST was published.
class ChannelProbe {
 public:
  ChannelProbe(core::Core& core, std::uint32_t channel_base);

  std::uint64_t violations() const { return violations_; }
  std::uint64_t requests() const { return requests_; }
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  void on_access(const mem::AccessEvent& ev);
  void flag(std::string msg);

  std::uint32_t base_;
  std::uint32_t status_ = kIdle;
  std::array<std::uint32_t, kNumArgs + 1> published_{};  // fn_id + args at REQUEST time
  std::uint64_t violations_ = 0;
  std::uint64_t requests_ = 0;
  std::vector<std::string> messages_;
};

}  // namespace ajt::sidekick
