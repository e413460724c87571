#include "wl_common.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ajt/assembler.hpp"
#include "ajt/sidekick.hpp"

namespace ajt::workloads::detail {

isa::Program DataImage::program() const {
  isa::Program p;
  p.base_address = base_;
  auto padded = bytes_;
  padded.resize((padded.size() + 3) & ~std::size_t{3}, 0);
  p.words.resize(padded.size() / 4);
  if (!padded.empty()) std::memcpy(p.words.data(), padded.data(), padded.size());
  p.symbols = labels_;
  return p;
}

// ---------------------------------------------------------------------------

int MainBuilder::fn_id(const std::string& label) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i)
    if (tasks_[i] == label) return static_cast<int>(i) + 1;
  throw std::logic_error("task not in dispatcher table: " + label);
}

std::string MainBuilder::load_args(const Call& c) {
  if (c.args.size() > 8) throw std::logic_error("too many task arguments");
  std::string s;
  for (std::size_t i = 0; i < c.args.size(); ++i) s += fmt::format("    li   r{}, {}\n", 4 + i, c.args[i]);
  return s;
}

void MainBuilder::call(const Call& c) {
  body_ += load_args(c);
  body_ += fmt::format("    call {}\n", c.label);
}

void MainBuilder::pair(const Call& t1, const Call& t0) {
  if (!dual_) {
    call(t1);
    call(t0);
    return;
  }
  body_ += load_args(t1);
  std::vector<std::string> regs;
  for (std::size_t i = 0; i < t1.args.size(); ++i) regs.push_back(fmt::format("r{}", 4 + i));
  body_ += sidekick::emit_invoke(ch_, fn_id(t1.label), regs);
  call(t0);
  body_ += sidekick::emit_wait(ch_, fmt::format("m_wait{}", labels_++));
}

void MainBuilder::begin_reps(int reps) {
  if (reps < 1) throw std::invalid_argument("reps must be positive");
  if (rep_stack_.size() >= 3) throw std::logic_error("rep loops nest at most three deep");
  const int reg = 26 + static_cast<int>(rep_stack_.size());
  const int id = labels_++;
  body_ += fmt::format("    li   r{}, {}\nm_rep{}:\n", reg, reps, id);
  rep_stack_.push_back(id);
}

void MainBuilder::end_reps() {
  if (rep_stack_.empty()) throw std::logic_error("end_reps without begin_reps");
  const int reg = 26 + static_cast<int>(rep_stack_.size()) - 1;
  body_ += fmt::format("    addi r{0}, r{0}, -1\n    bne  r{0}, r0, m_rep{1}\n", reg, rep_stack_.back());
  rep_stack_.pop_back();
}

std::string MainBuilder::finish(const std::string& routines, const sidekick::DispatcherOptions& opt) const {
  if (!rep_stack_.empty()) throw std::logic_error("unterminated rep loop");
  std::string s = "    .global _start\n_start:\n" + body_ + "    halt\n\n" + routines;
  s += sidekick::emit_dispatcher(sidekick::TaskTable{tasks_}, ch_, opt);
  return s;
}

Variant assemble_variant(const std::string& source) {
  auto r = assembler::assemble(source);
  if (!r.ok()) {
    std::string msg = "generated kernel does not assemble:";
    for (const auto& e : r.errors) msg += fmt::format("\n  line {}: {}", e.line, e.message);
    throw std::logic_error(msg);
  }
  return Variant{source, std::move(*r.program)};
}

std::uint32_t read_u32(const mem::Memory& m, std::uint32_t addr) { return m.read_u32(addr); }

nlohmann::ordered_json merge_sizes(nlohmann::ordered_json defaults, const nlohmann::json& overrides,
                                   std::string_view workload) {
  if (overrides.is_null()) return defaults;
  if (!overrides.is_object()) throw std::invalid_argument("sizes must be a JSON object");
  for (const auto& [k, v] : overrides.items()) {
    if (!defaults.contains(k)) throw std::invalid_argument(fmt::format("{}: unknown size key '{}'", workload, k));
    if (defaults[k].is_number_integer() && !v.is_number_integer())
      throw std::invalid_argument(fmt::format("{}: size '{}' must be an integer", workload, k));
    if (defaults[k].is_number() && !v.is_number())
      throw std::invalid_argument(fmt::format("{}: size '{}' must be a number", workload, k));
    if (defaults[k].is_boolean() && !v.is_boolean())
      throw std::invalid_argument(fmt::format("{}: size '{}' must be a boolean", workload, k));
    defaults[k] = v;
  }
  return defaults;
}

Workload make_workload(std::string name, std::string partitioning, nlohmann::ordered_json sizes,
                       const BuildOptions& opt) {
  Workload w;
  w.name = std::move(name);
  w.partitioning = std::move(partitioning);
  w.sizes = std::move(sizes);
  w.notes = nlohmann::ordered_json::object();
  w.channel_base = opt.channel_base;
  w.seed = opt.seed;
  return w;
}

// ---------------------------------------------------------------------------
// FFT

std::string fft_stage_routine() {
  // Butterfly: t = b*w, b' = a - t, a' = a + t. Groups outer, j inner, so a
  // stage sweeps its region once.
  return R"(
fft_stage:
    add  r9, r14, r14
fs_g:
    mv   r1, r17
    mv   r6, r12
    add  r3, r12, r16
fs_j:
    add  r7, r6, r14
    fld  f0, 0(r7)
    fld  f1, 8(r7)
    fld  f4, 0(r1)
    fld  f5, 8(r1)
    fmul f6, f0, f4
    fmul f7, f1, f5
    fmul f8, f0, f5
    fmul f9, f1, f4
    fld  f2, 0(r6)
    fld  f3, 8(r6)
    fsub f10, f6, f7
    fadd f11, f8, f9
    add  r1, r1, r15
    fadd f12, f2, f10
    fsub f13, f2, f10
    fadd f14, f3, f11
    fsub f15, f3, f11
    fst  f12, 0(r6)
    fst  f14, 8(r6)
    fst  f13, 0(r7)
    fst  f15, 8(r7)
    addi r6, r6, 16
    blt  r6, r3, fs_j
    add  r12, r12, r9
    blt  r12, r13, fs_g
    ret
)";
}

std::string emit_stage_call(const Stage& s, std::uint32_t array, std::uint32_t tw) {
  return fmt::format(
      "    li   r12, {}\n    li   r13, {}\n    li   r14, {}\n    li   r15, {}\n    li   r16, {}\n"
      "    li   r17, {}\n    call fft_stage\n",
      array + (s.base + s.j0) * 16, array + s.end * 16, s.half * 16, 16, s.j_count * 16,
      tw + (twiddle_offset(s.half) + s.j0) * 16);
}

int log2_exact(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("size must be a power of two");
  int b = 0;
  while ((std::size_t{1} << b) < n) ++b;
  return b;
}

namespace {

void schedule_into(std::vector<Stage>& out, std::size_t base, std::size_t size, std::size_t block) {
  if (size <= block) {
    for (std::size_t half = 1; half < size; half *= 2) out.push_back({base, base + size, half, 0, half});
    return;
  }
  // depth first: both halves complete, then the stage joining them
  schedule_into(out, base, size / 2, block);
  schedule_into(out, base + size / 2, size / 2, block);
  out.push_back({base, base + size, size / 2, 0, size / 2});
}

}  // namespace

std::vector<Stage> sub_fft_schedule(std::size_t base, std::size_t m, std::size_t block) {
  log2_exact(m);
  log2_exact(std::max<std::size_t>(block, 1));
  std::vector<Stage> out;
  schedule_into(out, base, m, std::max<std::size_t>(block, 2));
  return out;
}

void host_stage(std::vector<cd>& w, const Stage& s, const std::vector<cd>& tw) {
  for (std::size_t g = s.base; g < s.end; g += 2 * s.half) {
    for (std::size_t j = s.j0; j < s.j0 + s.j_count; ++j) {
      const std::size_t p = g + j, q = p + s.half;
      const double br = w[q].real(), bi = w[q].imag();
      const cd t = tw[twiddle_offset(s.half) + j];
      const double wr = t.real(), wi = t.imag();
      const double p0 = br * wr, p1 = bi * wi, p2 = br * wi, p3 = bi * wr;
      const double tr = p0 - p1, ti = p2 + p3;
      const double ar = w[p].real(), ai = w[p].imag();
      w[p] = cd(ar + tr, ai + ti);
      w[q] = cd(ar - tr, ai - ti);
    }
  }
}

std::vector<cd> twiddles(std::size_t n, bool inverse) {
  std::vector<cd> base(n / 2);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    base[k] = cd(std::cos(a), sign * std::sin(a));
  }
  std::vector<cd> t;
  t.reserve(n - 1);
  for (std::size_t half = 1; half < n; half *= 2)
    for (std::size_t j = 0; j < half; ++j) t.push_back(base[j * (n / (2 * half))]);
  return t;
}

std::size_t bitrev(std::size_t k, int bits) {
  std::size_t r = 0;
  for (int i = 0; i < bits; ++i) r |= ((k >> i) & 1u) << (bits - 1 - i);
  return r;
}

}  // namespace ajt::workloads::detail

namespace ajt::workloads::detail {

OracleResult expect_f64(const mem::Memory& m, std::uint32_t addr, const std::vector<double>& want,
                        std::string_view what) {
  for (std::size_t i = 0; i < want.size(); ++i) {
    const auto bits = m.read_u64(addr + static_cast<std::uint32_t>(8 * i));
    std::uint64_t wbits;
    std::memcpy(&wbits, &want[i], 8);
    if (bits != wbits) {
      double got;
      std::memcpy(&got, &bits, 8);
      return {false, fmt::format("{}[{}] = {:.17g}, expected {:.17g}", what, i, got, want[i])};
    }
  }
  return pass();
}

OracleResult expect_i32(const mem::Memory& m, std::uint32_t addr, const std::vector<std::int32_t>& want,
                        std::string_view what) {
  for (std::size_t i = 0; i < want.size(); ++i) {
    const auto got = static_cast<std::int32_t>(m.read_u32(addr + static_cast<std::uint32_t>(4 * i)));
    if (got != want[i]) return {false, fmt::format("{}[{}] = {}, expected {}", what, i, got, want[i])};
  }
  return pass();
}

}  // namespace ajt::workloads::detail
