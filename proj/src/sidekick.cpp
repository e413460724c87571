#include "ajt/sidekick.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

#include "ajt/assembler.hpp"

namespace ajt::sidekick {

std::string emit_dispatcher(const TaskTable& table, std::uint32_t channel_base, const DispatcherOptions& opt) {
  if (channel_base % kChannelBytes != 0) throw std::invalid_argument("channel base must be 64-byte aligned");
  std::string filler;
  for (std::uint32_t i = 0; i < opt.poll_delay; ++i) filler += "    nop\n";

  std::string s = fmt::format(R"(
# side-kick dispatcher
    .align 8
_thread1:
    li   r20, 0x{base:x}
    la   r21, sk_task_table
    li   r22, {ntasks}
    li   r23, 1
    li   r24, 2
    li   r25, 3
sk_poll:
{filler}    lw   r1, 0(r20)
    bne  r1, r23, sk_poll
    sw   r24, 0(r20)
    lw   r1, 4(r20)
    blt  r1, r0, sk_bad
    bge  r1, r22, sk_bad
    lw   r4, 8(r20)
    lw   r5, 12(r20)
    lw   r6, 16(r20)
    lw   r7, 20(r20)
    lw   r8, 24(r20)
    lw   r9, 28(r20)
    lw   r10, 32(r20)
    lw   r11, 36(r20)
    add  r1, r1, r1
    add  r1, r1, r1
    add  r1, r21, r1
    lw   r1, 0(r1)
    jalr r31, r1, 0
    sw   r2, 40(r20)
    sw   r3, 44(r20)
    sw   r25, 0(r20)
    j    sk_poll
sk_bad:
    li   r2, 0x{err:x}
    sw   r2, 40(r20)
    sw   r2, 44(r20)
    sw   r25, 0(r20)
    j    sk_poll
sk_noop:
    ret
sk_task_table:
    .word sk_noop
)",
                              fmt::arg("base", channel_base), fmt::arg("ntasks", table.labels.size() + 1),
                              fmt::arg("filler", filler), fmt::arg("err", kErrorSentinel));
  for (const auto& l : table.labels) s += fmt::format("    .word {}\n", l);
  return s;
}

std::string emit_invoke(std::uint32_t channel_base, int fn_id, std::span<const std::string> arg_regs) {
  if (arg_regs.size() > static_cast<std::size_t>(kNumArgs)) throw std::invalid_argument("at most 8 arguments");
  std::string s = fmt::format("    li   r18, 0x{:x}\n", channel_base);
  for (std::size_t i = 0; i < arg_regs.size(); ++i) {
    if (arg_regs[i] == "r18" || arg_regs[i] == "r19") throw std::invalid_argument("r18/r19 are reserved by invoke");
    s += fmt::format("    sw   {}, {}(r18)\n", arg_regs[i], kArgsOffset + 4 * i);
  }
  s += fmt::format("    li   r19, {}\n    sw   r19, {}(r18)\n", fn_id, kFnOffset);
  s += fmt::format("    li   r19, {}\n    sw   r19, {}(r18)\n", static_cast<int>(kRequest), kStatusOffset);
  return s;
}

std::string emit_wait(std::uint32_t channel_base, std::string_view label) {
  return fmt::format(R"(    li   r18, 0x{base:x}
{label}:
    lw   r19, 0(r18)
    addi r19, r19, -3
    bne  r19, r0, {label}
    sw   r0, 0(r18)
    lw   r2, 40(r18)
    lw   r3, 44(r18)
)",
                     fmt::arg("base", channel_base), fmt::arg("label", label));
}

RoundTrip measure_roundtrip(const core::CoreConfig& base_cfg, int reps, const DispatcherOptions& opt) {
  if (reps < 1) throw std::invalid_argument("reps must be positive");
  const auto ch = base_cfg.channel_base;
  std::string src = fmt::format(R"(
    .global _start
_start:
    li   r16, {n}
rt_loop:
rt_begin:
    nop
{invoke}{wait}rt_end:
    nop
    addi r16, r16, -1
    bne  r16, r0, rt_loop
    halt
)",
                                fmt::arg("n", reps + 1), fmt::arg("invoke", emit_invoke(ch, 0, {})),
                                fmt::arg("wait", emit_wait(ch, "rt_wait")));
  src += emit_dispatcher(TaskTable{}, ch, opt);
  auto prog = assembler::assemble_or_throw(src);

  auto cfg = base_cfg;
  cfg.n_threads = 2;
  cfg.thread1_mode = core::Thread1Mode::Active;
  cfg.thread1_daemon = true;
  core::Core c(cfg);
  c.load(prog);
  c.set_entry(0, prog.symbol("_start"));
  c.set_entry(1, prog.symbol("_thread1"));

  const auto begin_pc = prog.symbol("rt_begin");
  const auto end_pc = prog.symbol("rt_end");
  std::vector<std::uint64_t> samples;
  std::uint64_t started = 0;
  c.set_retire_hook([&](int tid, std::uint32_t pc, const isa::Instruction&, std::uint64_t cycle) {
    if (tid != 0) return;
    if (pc == begin_pc) started = cycle;
    if (pc == end_pc) samples.push_back(cycle - started);
  });
  auto r = c.run();
  if (!r.ok()) throw std::runtime_error(fmt::format("round-trip probe ended with {}", core::exit_name(r.exit)));

  RoundTrip rt;
  rt.samples.assign(samples.begin() + 1, samples.end());
  auto sorted = rt.samples;
  std::sort(sorted.begin(), sorted.end());
  rt.min = sorted.front();
  rt.max = sorted.back();
  rt.median = sorted[sorted.size() / 2];
  return rt;
}

// ---------------------------------------------------------------------------

ChannelProbe::ChannelProbe(core::Core& core, std::uint32_t channel_base) : base_(channel_base) {
  status_ = core.memory().read_word(channel_base);
  core.memory().add_observer([this](const mem::AccessEvent& ev) { on_access(ev); });
}

void ChannelProbe::flag(std::string msg) {
  ++violations_;
  if (messages_.size() < 32) messages_.push_back(std::move(msg));
}

void ChannelProbe::on_access(const mem::AccessEvent& ev) {
  if (ev.addr < base_ || ev.addr >= base_ + kChannelBytes) return;
  const auto off = ev.addr - base_;
  const auto v = static_cast<std::uint32_t>(ev.data);
  if (ev.kind == mem::ReqKind::Tas) {
    flag(fmt::format("cycle {}: atomic on the channel by thread {}", ev.cycle, ev.tid));
    return;
  }
  if (ev.kind == mem::ReqKind::Load) {
    // thread 1 reading fn_id / args must see what was published with REQUEST
    if (ev.tid == 1 && off >= kFnOffset && off < kRetOffset && status_ == kBusy) {
      const auto idx = (off - kFnOffset) / 4;
      if (published_[idx] != v) {
        flag(fmt::format("cycle {}: thread 1 read 0x{:x} at +{} but 0x{:x} was published", ev.cycle, v, off,
                         published_[idx]));
      }
    }
    return;
  }
  if (ev.kind != mem::ReqKind::Store) return;
  if (off == kStatusOffset) {
    bool ok = false;
    switch (v) {
      case kRequest: ok = ev.tid == 0 && status_ == kIdle; break;
      case kBusy: ok = ev.tid == 1 && status_ == kRequest; break;
      case kDone: ok = ev.tid == 1 && status_ == kBusy; break;
      case kIdle: ok = ev.tid == 0 && status_ == kDone; break;
      default: break;
    }
    if (!ok) flag(fmt::format("cycle {}: thread {} moved status {} -> {}", ev.cycle, ev.tid, status_, v));
    if (v == kRequest) ++requests_;
    status_ = v;
    return;
  }
  if (off < kRetOffset) {
    if (ev.tid != 0 || status_ != kIdle) {
      flag(fmt::format("cycle {}: thread {} wrote +{} while status {}", ev.cycle, ev.tid, off, status_));
    }
    if (ev.width == 4) published_[(off - kFnOffset) / 4] = v;
  } else if (off < kRetOffset + 4 * kNumRets) {
    if (ev.tid != 1 || status_ != kBusy) {
      flag(fmt::format("cycle {}: thread {} wrote a return value while status {}", ev.cycle, ev.tid, status_));
    }
  }
}

}  // namespace ajt::sidekick
