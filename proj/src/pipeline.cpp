#include "ajt/pipeline.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace ajt::pipe {

using isa::Format;
using isa::Instruction;
using isa::OpClass;
using isa::Opcode;

std::string_view cause_name(StallCause c) {
  switch (c) {
    case StallCause::OwnMiss: return "own_miss";
    case StallCause::BlockedByOtherMiss: return "blocked_by_other_miss";
    case StallCause::ArbitrationLost: return "arbitration_lost";
    case StallCause::LockWait: return "lock_wait";
    case StallCause::FpBusy: return "fp_busy";
    case StallCause::Mispredict: return "mispredict";
    case StallCause::Atomic: return "atomic";
    case StallCause::Count_: break;
  }
  return "?";
}

std::string_view fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::BusFault: return "bus_fault";
    case FaultKind::Misaligned: return "misaligned";
    case FaultKind::IllegalInstruction: return "illegal_instruction";
  }
  return "?";
}

Timing execute_timing(const Instruction& in, const PipelineConfig& cfg) {
  switch (isa::op_class(in.op)) {
    case OpClass::FpShort: return {cfg.fp_short_latency, true};
    case OpClass::FpLong: return {in.mode ? cfg.fp_long_single : cfg.fp_long_double, false};
    case OpClass::IntDiv: return {cfg.int_div_cycles, false};
    default: return {1, true};
  }
}

// ---------------------------------------------------------------------------
// Predictor

std::optional<std::uint32_t> Predictor::btb_lookup(std::uint32_t pc) const {
  const auto& e = btb_[(pc >> 2) & (kBtbSize - 1)];
  if (e.valid && e.tag == pc >> 8) return e.target;
  return std::nullopt;
}

void Predictor::btb_insert(std::uint32_t pc, std::uint32_t target) {
  btb_[(pc >> 2) & (kBtbSize - 1)] = BtbEntry{true, pc >> 8, target};
}

void Predictor::ras_push(std::uint32_t addr) {
  ras_[ras_top_] = addr;
  ras_top_ = (ras_top_ + 1) % kRasSize;
  if (ras_depth_ < kRasSize) ++ras_depth_;
}

std::uint32_t Predictor::ras_pop() {
  ras_top_ = (ras_top_ + kRasSize - 1) % kRasSize;
  if (ras_depth_ > 0) --ras_depth_;
  return ras_[ras_top_];
}

bool Predictor::resolve(std::uint32_t pc, const Instruction& in, bool taken, std::uint32_t target) {
  auto btb_right = [&] {
    auto b = btb_lookup(pc);
    return b && *b == target;
  };
  switch (in.op) {
    case Opcode::Beq:
    case Opcode::Bne:
    case Opcode::Blt:
    case Opcode::Bge: {
      auto& c = bht_[(pc >> 2) & (kBhtSize - 1)];
      auto b = btb_lookup(pc);
      bool predicted_taken = c >= 2 && b.has_value();
      bool wrong = taken ? !(predicted_taken && *b == target) : predicted_taken;
      if (taken) {
        if (c < 3) ++c;
        btb_insert(pc, target);
      } else if (c > 0) {
        --c;
      }
      return wrong;
    }
    case Opcode::Jal: {
      bool wrong = !btb_right();
      btb_insert(pc, target);
      ras_push(pc + 4);
      return wrong;
    }
    case Opcode::Jalr: {
      if (in.rd == 0 && in.rs1 == isa::kLinkReg) return ras_pop() != target;
      bool wrong = !btb_right();
      btb_insert(pc, target);
      if (in.rd == isa::kLinkReg) ras_push(pc + 4);
      return wrong;
    }
    default: return false;
  }
}

void InstrBuffer::fill(std::uint32_t addr, std::uint32_t word) {
  auto& e = entries_[index(addr)];
  e.valid = true;
  e.tag = tag(addr);
  e.word = word;
  e.instr = isa::decode(word);
}

// ---------------------------------------------------------------------------
// Thread state

double ThreadState::fd(int i) const { return std::bit_cast<double>(f[i]); }
void ThreadState::set_fd(int i, double v) { f[i] = std::bit_cast<std::uint64_t>(v); }

void reset_thread(ThreadState& t, int tid, std::uint32_t pc, std::uint32_t sp) {
  t = ThreadState{};
  t.tid = tid;
  t.pc = pc;
  t.r[29] = sp;
}

void charge_stall(ThreadState& t, StallCause c) { ++t.stats.stall_cycles[static_cast<int>(c)]; }

void push_window(ThreadState& t, std::uint64_t until, StallCause c) {
  t.windows[t.n_windows++] = ThreadState::Window{until, c};
}

bool begin_cycle(ThreadState& t, std::uint64_t now) {
  if (!t.running()) return false;
  ++t.stats.cycles_active;
  t.cur = nullptr;
  while (t.n_windows > 0 && t.windows[0].until < now) {
    t.windows[0] = t.windows[1];
    --t.n_windows;
  }
  if (t.n_windows > 0) {
    charge_stall(t, t.windows[0].cause);
    return false;
  }
  return true;
}

static void raise_fault(ThreadState& t, FaultKind kind, std::uint32_t addr) {
  t.fault = Fault{t.tid, t.pc, kind, addr};
  t.halted = true;
  // the faulting cycle neither retires nor stalls
  --t.stats.cycles_active;
}

std::optional<mem::MemRequest> fetch_stage(ThreadState& t) {
  if (const auto* e = t.ibuf.lookup(t.pc)) {
    ++t.stats.ibuf_hits;
    t.cur = &e->instr;
    return std::nullopt;
  }
  return mem::MemRequest{t.tid, mem::ReqKind::IFetch, t.pc & ~7u, 8, 0};
}

bool complete_fetch(ThreadState& t, const mem::MemResponse& resp, std::uint64_t now) {
  ++t.stats.icache.accesses;
  if (resp.fault) {
    raise_fault(t, FaultKind::BusFault, t.pc);
    return false;
  }
  if (resp.hit) ++t.stats.icache.hits;
  const auto base = t.pc & ~7u;
  t.ibuf.fill(base, static_cast<std::uint32_t>(resp.data));
  t.ibuf.fill(base + 4, static_cast<std::uint32_t>(resp.data >> 32));
  if (!resp.hit) {
    push_window(t, now + resp.cycles_waited, StallCause::OwnMiss);
    charge_stall(t, StallCause::OwnMiss);
    return false;
  }
  t.cur = &t.ibuf.lookup(t.pc)->instr;
  return true;
}

bool operands_ready(const ThreadState& t, const Instruction& in, std::uint64_t now) {
  auto fr = [&](int i) { return t.f_ready[i] <= now; };
  auto rr = [&](int i) { return t.r_ready[i] <= now; };
  switch (isa::info(in.op).format) {
    case Format::R:
    case Format::Store:
    case Format::B:
      return rr(in.rs1) && rr(in.rs2);
    case Format::I:
    case Format::Mem:
    case Format::Jr:
    case Format::FMem:
      return rr(in.rs1);
    case Format::FR:
      return fr(in.rs1) && fr(in.rs2);
    case Format::FLong:
      return fr(in.rs1) && (in.op == Opcode::Fsqrt || fr(in.rs2));
    case Format::FCvt:
      return static_cast<isa::CvtMode>(in.mode) == isa::CvtMode::IntToDouble ? rr(in.rs1) : fr(in.rs1);
    case Format::FStore:
      return rr(in.rs1) && fr(in.rs2);
    default:
      return true;
  }
}

bool is_memory(const Instruction& in) {
  switch (isa::op_class(in.op)) {
    case OpClass::Load:
    case OpClass::Store:
    case OpClass::Atomic:
    case OpClass::FpMem:
      return true;
    default:
      return false;
  }
}

std::optional<mem::MemRequest> mem_request(ThreadState& t, const Instruction& in) {
  mem::MemRequest req;
  req.tid = t.tid;
  req.addr = t.r[in.rs1] + static_cast<std::uint32_t>(in.imm);
  switch (in.op) {
    case Opcode::Lw: req.kind = mem::ReqKind::Load; req.width = 4; break;
    case Opcode::Lb: req.kind = mem::ReqKind::Load; req.width = 1; break;
    case Opcode::Sw: req.kind = mem::ReqKind::Store; req.width = 4; req.data = t.r[in.rs2]; break;
    case Opcode::Sb: req.kind = mem::ReqKind::Store; req.width = 1; req.data = t.r[in.rs2] & 0xFFu; break;
    case Opcode::Tas: req.kind = mem::ReqKind::Tas; req.width = 1; break;
    case Opcode::Fld: req.kind = mem::ReqKind::Load; req.width = 8; break;
    case Opcode::Fst: req.kind = mem::ReqKind::Store; req.width = 8; req.data = t.f[in.rs2]; break;
    default: return std::nullopt;
  }
  if (req.addr % req.width != 0) {
    raise_fault(t, FaultKind::Misaligned, req.addr);
    return std::nullopt;
  }
  return req;
}

std::uint32_t predict_and_redirect(ThreadState& t, const Instruction& in, bool taken, std::uint32_t target,
                                   const PipelineConfig& cfg) {
  if (!t.predictor.resolve(t.pc, in, taken, target)) return 0;
  ++t.stats.mispredicts;
  return cfg.mispredict_penalty;
}

static std::int32_t to_int_trunc(double v) {
  if (std::isnan(v)) return 0;
  if (v >= 2147483647.0) return std::numeric_limits<std::int32_t>::max();
  if (v <= -2147483648.0) return std::numeric_limits<std::int32_t>::min();
  return static_cast<std::int32_t>(v);
}

void execute(ThreadState& t, const Instruction& in, const mem::MemResponse* resp, std::uint64_t now,
             const PipelineConfig& cfg) {
  auto& r = t.r;
  const auto a = r[in.rs1];
  const auto b = r[in.rs2];
  const auto sa = static_cast<std::int32_t>(a);
  const auto sb = static_cast<std::int32_t>(b);
  const auto uimm = static_cast<std::uint32_t>(in.imm);
  const auto zimm = uimm & 0xFFFFu;
  std::uint32_t next = t.pc + 4;

  if (resp) {
    ++t.stats.dcache.accesses;
    if (resp->fault) {
      raise_fault(t, FaultKind::BusFault, a + uimm);
      return;
    }
    if (resp->hit) ++t.stats.dcache.hits;
  }

  auto branch = [&](bool taken) {
    ++t.stats.branches;
    const auto target = t.pc + (uimm << 2);
    if (taken) next = target;
    if (auto p = predict_and_redirect(t, in, taken, target, cfg)) push_window(t, now + p, StallCause::Mispredict);
  };
  auto fp_short = [&](int dst, double v) {
    ++t.stats.fp_ops;
    t.set_fd(dst, v);
    t.f_ready[dst] = now + cfg.fp_short_latency;
  };
  auto fp_long = [&](int dst, double v) {
    ++t.stats.fp_ops;
    t.set_fd(dst, v);
    const auto cost = execute_timing(in, cfg).cost;
    if (cost > 1) push_window(t, now + cost - 1, StallCause::FpBusy);
  };
  auto divide = [&](std::uint32_t v) {
    if (in.rd) r[in.rd] = v;
    if (cfg.int_div_cycles > 1) push_window(t, now + cfg.int_div_cycles - 1, StallCause::FpBusy);
  };

  switch (in.op) {
    case Opcode::Add: r[in.rd] = a + b; break;
    case Opcode::Sub: r[in.rd] = a - b; break;
    case Opcode::And: r[in.rd] = a & b; break;
    case Opcode::Or: r[in.rd] = a | b; break;
    case Opcode::Xor: r[in.rd] = a ^ b; break;
    case Opcode::Sll: r[in.rd] = a << (b & 31); break;
    case Opcode::Srl: r[in.rd] = a >> (b & 31); break;
    case Opcode::Sra: r[in.rd] = static_cast<std::uint32_t>(sa >> (b & 31)); break;
    case Opcode::Slt: r[in.rd] = sa < sb ? 1 : 0; break;
    case Opcode::Mul: r[in.rd] = a * b; break;
    case Opcode::Addi: r[in.rd] = a + uimm; break;
    case Opcode::Andi: r[in.rd] = a & zimm; break;
    case Opcode::Ori: r[in.rd] = a | zimm; break;
    case Opcode::Xori: r[in.rd] = a ^ zimm; break;
    case Opcode::Slti: r[in.rd] = sa < in.imm ? 1 : 0; break;
    case Opcode::Lui: r[in.rd] = zimm << 16; break;

    case Opcode::Div:
      if (sb == 0) divide(0xFFFFFFFFu);
      else if (sa == std::numeric_limits<std::int32_t>::min() && sb == -1) divide(a);
      else divide(static_cast<std::uint32_t>(sa / sb));
      break;
    case Opcode::Rem:
      if (sb == 0) divide(a);
      else if (sa == std::numeric_limits<std::int32_t>::min() && sb == -1) divide(0);
      else divide(static_cast<std::uint32_t>(sa % sb));
      break;

    case Opcode::Lw: r[in.rd] = static_cast<std::uint32_t>(resp->data); break;
    case Opcode::Lb: r[in.rd] = static_cast<std::uint32_t>(static_cast<std::int8_t>(resp->data & 0xFF)); break;
    case Opcode::Sw:
    case Opcode::Sb:
    case Opcode::Fst:
      break;
    case Opcode::Fld: t.f[in.rd] = resp->data; break;
    case Opcode::Tas:
      ++t.stats.atomics;
      r[in.rd] = static_cast<std::uint32_t>(resp->data & 0xFF);
      t.unlock_after = resp->ready_at + 1;
      break;

    case Opcode::Beq: branch(a == b); break;
    case Opcode::Bne: branch(a != b); break;
    case Opcode::Blt: branch(sa < sb); break;
    case Opcode::Bge: branch(sa >= sb); break;
    case Opcode::Jal: {
      ++t.stats.branches;
      const auto target = t.pc + (uimm << 2);
      r[isa::kLinkReg] = t.pc + 4;
      next = target;
      if (auto p = predict_and_redirect(t, in, true, target, cfg)) push_window(t, now + p, StallCause::Mispredict);
      break;
    }
    case Opcode::Jalr: {
      const auto target = a + uimm;
      if (target & 3u) {
        raise_fault(t, FaultKind::Misaligned, target);
        return;
      }
      ++t.stats.branches;
      r[in.rd] = t.pc + 4;
      next = target;
      if (auto p = predict_and_redirect(t, in, true, target, cfg)) push_window(t, now + p, StallCause::Mispredict);
      break;
    }

    case Opcode::Fadd: fp_short(in.rd, t.fd(in.rs1) + t.fd(in.rs2)); break;
    case Opcode::Fsub: fp_short(in.rd, t.fd(in.rs1) - t.fd(in.rs2)); break;
    case Opcode::Fmul: fp_short(in.rd, t.fd(in.rs1) * t.fd(in.rs2)); break;
    case Opcode::Fcvt:
      switch (static_cast<isa::CvtMode>(in.mode)) {
        case isa::CvtMode::RoundSingle:
          fp_short(in.rd, static_cast<double>(static_cast<float>(t.fd(in.rs1))));
          break;
        case isa::CvtMode::IntToDouble:
          fp_short(in.rd, static_cast<double>(static_cast<std::int32_t>(a)));
          break;
        case isa::CvtMode::DoubleToInt:
          ++t.stats.fp_ops;
          if (in.rd) {
            r[in.rd] = static_cast<std::uint32_t>(to_int_trunc(t.fd(in.rs1)));
            t.r_ready[in.rd] = now + cfg.fp_short_latency;
          }
          break;
      }
      break;
    case Opcode::Fdiv:
      if (in.mode) fp_long(in.rd, static_cast<float>(t.fd(in.rs1)) / static_cast<float>(t.fd(in.rs2)));
      else fp_long(in.rd, t.fd(in.rs1) / t.fd(in.rs2));
      break;
    case Opcode::Fsqrt:
      if (in.mode) fp_long(in.rd, std::sqrt(static_cast<float>(t.fd(in.rs1))));
      else fp_long(in.rd, std::sqrt(t.fd(in.rs1)));
      break;

    case Opcode::Tid: r[in.rd] = static_cast<std::uint32_t>(t.tid); break;
    case Opcode::Nop: break;
    case Opcode::Halt:
      t.halted = true;
      next = t.pc;
      break;

    case Opcode::Illegal:
    case Opcode::Count_:
      raise_fault(t, FaultKind::IllegalInstruction, t.pc);
      return;
  }
  r[0] = 0;
  if (resp && !resp->hit) push_window(t, resp->ready_at, StallCause::OwnMiss);
  if (in.op == Opcode::Tas) push_window(t, resp->ready_at + 1, StallCause::Atomic);
  ++t.stats.instructions_retired;
  t.pc = next;
}

// ---------------------------------------------------------------------------

std::optional<mem::MemResponse> SoloPort::request(const mem::MemRequest& req, std::uint64_t now, StallCause& cause) {
  switch (mu_.blocked(req.tid, req.cache(), now)) {
    case mem::MemoryUnit::Block::None: break;
    case mem::MemoryUnit::Block::OwnMiss: cause = StallCause::OwnMiss; return std::nullopt;
    case mem::MemoryUnit::Block::OtherMiss: cause = StallCause::BlockedByOtherMiss; return std::nullopt;
    case mem::MemoryUnit::Block::Locked: cause = StallCause::LockWait; return std::nullopt;
  }
  std::array<bool, 2> want{req.tid == 0, req.tid == 1};
  mu_.grant(req.cache(), want);
  if (req.kind == mem::ReqKind::Tas) mu_.lock(req.tid);
  return mu_.access(req, now);
}

void SoloPort::release(int tid, std::uint64_t) { mu_.unlock(tid); }

void step_thread(ThreadState& t, MemoryPort& port, std::uint64_t now, const PipelineConfig& cfg) {
  if (t.unlock_after && now > *t.unlock_after) {
    port.release(t.tid, now);
    t.unlock_after.reset();
  }
  if (!begin_cycle(t, now)) return;
  StallCause cause = StallCause::ArbitrationLost;
  if (auto req = fetch_stage(t)) {
    auto resp = port.request(*req, now, cause);
    if (!resp) {
      charge_stall(t, cause);
      return;
    }
    if (!complete_fetch(t, *resp, now)) return;
  }
  const Instruction in = *t.cur;
  if (!operands_ready(t, in, now)) {
    charge_stall(t, StallCause::FpBusy);
    return;
  }
  if (!is_memory(in)) {
    execute(t, in, nullptr, now, cfg);
    return;
  }
  auto req = mem_request(t, in);
  if (!req) return;
  auto resp = port.request(*req, now, cause);
  if (!resp) {
    charge_stall(t, cause);
    return;
  }
  execute(t, in, &*resp, now, cfg);
}

}  // namespace ajt::pipe
