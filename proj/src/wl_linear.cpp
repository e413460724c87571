// dot_product, daxpy, mem_copy, mutexes

#include "wl_common.hpp"

namespace ajt::workloads {

using namespace detail;

namespace {

std::vector<double> random_doubles(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.unit() * 2.0 - 1.0;
  return v;
}

void check_even_split(int n, std::string_view what) {
  if (n < 4 || n % 4 != 0) throw std::invalid_argument(fmt::format("{}: n must be a positive multiple of 4", what));
}

}  // namespace

Workload build_dot_product(int n, int reps, const BuildOptions& opt) {
  check_even_split(n, "dot_product");
  auto w = make_workload("dot_product", "interleaved", {{"n", n}, {"reps", reps}}, opt);
  Rng rng(opt.seed);
  const auto x = random_doubles(rng, n);
  const auto y = random_doubles(rng, n);

  DataImage d;
  const auto ax = d.alloc(8u * n), ay = d.alloc(8u * n), ap = d.alloc(16), ar = d.alloc(8);
  d.label("x", ax);
  d.label("y", ay);
  d.label("result", ar);
  for (int i = 0; i < n; ++i) {
    d.put_f64(ax + 8 * i, x[i]);
    d.put_f64(ay + 8 * i, y[i]);
  }
  w.data = d.program();

  // r4 = parity; partial sum of products parity, parity+2, ... into P[parity]
  const auto routines = fmt::format(R"(
dot_part:
    add  r1, r4, r4
    add  r1, r1, r1
    add  r1, r1, r1
    li   r6, {x}
    add  r6, r6, r1
    li   r7, {y}
    add  r7, r7, r1
    li   r8, {xend}
    li   r9, {p}
    add  r9, r9, r1
    fcvt.d.w f0, r0
dp_loop:
    fld  f1, 0(r6)
    fld  f2, 0(r7)
    fmul f3, f1, f2
    addi r6, r6, 16
    addi r7, r7, 16
    fadd f0, f0, f3
    blt  r6, r8, dp_loop
    fst  f0, 0(r9)
    ret
)",
                                    fmt::arg("x", ax), fmt::arg("y", ay), fmt::arg("xend", ax + 8 * n),
                                    fmt::arg("p", ap));
  const std::string combine = fmt::format("    li   r6, {}\n    fld  f1, 0(r6)\n    fld  f2, 8(r6)\n"
                                          "    fadd f0, f1, f2\n    li   r6, {}\n    fst  f0, 0(r6)\n",
                                          ap, ar);
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"dot_part"});
    mb.begin_reps(reps);
    mb.pair({"dot_part", {0}}, {"dot_part", {1}});
    mb.raw(combine);
    mb.end_reps();
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines, opt.dispatcher));
  }

  double p[2] = {0.0, 0.0};
  for (int i = 0; i < n; ++i) p[i % 2] += x[i] * y[i];
  const std::vector<double> want{p[0], p[1], p[0] + p[1]};
  w.oracle = [=](const mem::Memory& m) {
    auto r = expect_f64(m, ap, {want[0], want[1]}, "partial");
    if (!r.ok) return r;
    return expect_f64(m, ar, {want[2]}, "dot");
  };
  return w;
}

Workload build_daxpy(int n, int reps, double a, const BuildOptions& opt) {
  check_even_split(n, "daxpy");
  auto w = make_workload("daxpy", "block-split", {{"n", n}, {"reps", reps}, {"a", a}}, opt);
  Rng rng(opt.seed);
  const auto x = random_doubles(rng, n);
  const auto y0 = random_doubles(rng, n);

  DataImage d;
  const auto aa = d.alloc(8), ax = d.alloc(8u * n), ay = d.alloc(8u * n);
  d.label("a", aa);
  d.label("x", ax);
  d.label("y", ay);
  d.put_f64(aa, a);
  for (int i = 0; i < n; ++i) {
    d.put_f64(ax + 8 * i, x[i]);
    d.put_f64(ay + 8 * i, y0[i]);
  }
  w.data = d.program();

  // r4 = first element, r5 = count (even); y[i] = a*x[i] + y[i], two per trip
  const auto routines = fmt::format(R"(
daxpy_part:
    add  r1, r4, r4
    add  r1, r1, r1
    add  r1, r1, r1
    li   r6, {x}
    add  r6, r6, r1
    li   r7, {y}
    add  r7, r7, r1
    li   r1, {a}
    fld  f4, 0(r1)
dx_loop:
    fld  f0, 0(r6)
    fld  f1, 8(r6)
    fld  f2, 0(r7)
    fmul f0, f4, f0
    fld  f3, 8(r7)
    fmul f1, f4, f1
    fadd f2, f2, f0
    addi r6, r6, 16
    fadd f3, f3, f1
    addi r5, r5, -2
    fst  f2, 0(r7)
    fst  f3, 8(r7)
    addi r7, r7, 16
    bne  r5, r0, dx_loop
    ret
)",
                                    fmt::arg("x", ax), fmt::arg("y", ay), fmt::arg("a", aa));
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"daxpy_part"});
    mb.begin_reps(reps);
    // thread 0 the first half, thread 1 the second
    mb.pair({"daxpy_part", {n / 2, n / 2}}, {"daxpy_part", {0, n / 2}});
    mb.end_reps();
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines, opt.dispatcher));
  }

  auto y = y0;
  for (int r = 0; r < reps; ++r)
    for (int i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
  w.oracle = [=](const mem::Memory& m) { return expect_f64(m, ay, y, "y"); };
  return w;
}

Workload build_mutexes(int increments, const BuildOptions& opt) {
  if (increments < 1) throw std::invalid_argument("mutexes: increments must be positive");
  auto w = make_workload("mutexes", "shared-counter", {{"increments", increments}}, opt);
  w.notes["pattern"] = "every thread bumps the counter under an error-checking mutex until it reaches the target";
  DataImage d;
  const auto mutex = d.alloc(8), counter = d.alloc(4), errors = d.alloc(4);
  d.label("mutex", mutex);
  d.label("counter", counter);
  d.label("errors", errors);
  w.data = d.program();

  // Shaped like the C it stands for:
  //   while (bump(&m, &counter, target, self)) {}
  // bump() takes the lock, increments unless the target is reached and
  // unlocks. The mutex is error-checking: a lock byte (test-and-test-and-set)
  // plus an owner word set on lock and verified on unlock.
  const auto routines = fmt::format(R"(
# r4 = owner id (nonzero)
mx_part:
    addi sp, sp, -8
    sw   r31, 0(sp)
    mv   r5, r4
mx_loop:
    li   r6, {mutex}
    li   r7, {counter}
    li   r8, {target}
    call mx_bump
    bne  r2, r0, mx_loop
    lw   r31, 0(sp)
    addi sp, sp, 8
    ret

# r5 = self, r6 = mutex, r7 = counter, r8 = target; r2 = 1 if it incremented
mx_bump:
    addi sp, sp, -8
    sw   r31, 0(sp)
    call mutex_lock
    lw   r2, 0(r7)
    bge  r2, r8, mx_full
    addi r2, r2, 1
    sw   r2, 0(r7)
    li   r2, 1
    j    mx_done
mx_full:
    li   r2, 0
mx_done:
    call mutex_unlock
    lw   r31, 0(sp)
    addi sp, sp, 8
    ret

# r5 = self, r6 = mutex {{ lock byte, owner word @4 }}
mutex_lock:
    lb   r1, 0(r6)
    bne  r1, r0, mutex_lock
    tas  r1, 0(r6)
    bne  r1, r0, mutex_lock
    sw   r5, 4(r6)
    ret
mutex_unlock:
    lw   r1, 4(r6)
    bne  r1, r5, mx_not_owner
    sw   r0, 4(r6)
    sb   r0, 0(r6)
    ret
mx_not_owner:
    li   r1, {errors}
    lw   r3, 0(r1)
    addi r3, r3, 1
    sw   r3, 0(r1)
    ret
)",
                                    fmt::arg("mutex", mutex), fmt::arg("counter", counter),
                                    fmt::arg("target", increments), fmt::arg("errors", errors));
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"mx_part"});
    mb.pair({"mx_part", {2}}, {"mx_part", {1}});
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines, opt.dispatcher));
  }
  w.oracle = [=](const mem::Memory& m) {
    if (m.read_u8(mutex) != 0 || m.read_u32(mutex + 4) != 0) return OracleResult{false, "mutex still held"};
    if (m.read_u32(errors) != 0) return OracleResult{false, "unlock by a thread not owning the mutex"};
    return expect_i32(m, counter, {increments}, "counter");
  };
  return w;
}

Workload build_mem_copy(std::uint32_t bytes, int block_lines, const BuildOptions& opt) {
  if (bytes < 64 || bytes % 64 != 0) throw std::invalid_argument("mem_copy: size must be a multiple of 64 bytes");
  const int lines = static_cast<int>(bytes / 64);
  if (block_lines < 1 || lines % block_lines != 0)
    throw std::invalid_argument("mem_copy: block_lines must divide the line count");
  const int blocks = lines / block_lines;
  auto w = make_workload("mem_copy", "interleaved", {{"bytes", bytes}, {"block_lines", block_lines}}, opt);
  w.notes["pattern"] = "blocked column copy: per block, word slot by word slot down the lines";
  Rng rng(opt.seed);

  DataImage d;
  const auto src = d.alloc(bytes), dst = d.alloc(bytes);
  d.label("src", src);
  d.label("dst", dst);
  std::vector<std::int32_t> want(bytes / 4);
  for (auto& v : want) v = static_cast<std::int32_t>(rng.next());
  for (std::size_t i = 0; i < want.size(); ++i) d.put_i32(src + 4 * static_cast<std::uint32_t>(i), want[i]);
  w.data = d.program();

  // r4 = first word slot (0 even / 1 odd), r5 = first block, r16 = line
  // rotation in bytes; visits every block once, wrapping. Inside a block:
  // slot by slot, each slot sweeping the lines from the rotation point round
  // to it again, so the two threads never walk the same lines in lockstep.
  const auto routines = fmt::format(R"(
mc_part:
    add  r1, r4, r4
    add  r12, r1, r1
    li   r13, {blocks}
    li   r14, {block_bytes}
    mul  r15, r5, r14
mc_block:
    mv   r3, r12
mc_slot:
    li   r6, {src}
    add  r6, r6, r15
    add  r6, r6, r3
    li   r7, {dst}
    add  r7, r7, r15
    add  r7, r7, r3
    add  r8, r6, r14
    add  r10, r6, r16
    mv   r9, r6
    add  r6, r6, r16
    add  r7, r7, r16
mc_line:
    lw   r1, 0(r6)
    sw   r1, 0(r7)
    addi r6, r6, 64
    addi r7, r7, 64
    blt  r6, r8, mc_line
    beq  r8, r10, mc_slot_done
    sub  r1, r6, r9
    sub  r6, r6, r1
    sub  r7, r7, r1
    mv   r8, r10
    blt  r6, r8, mc_line
mc_slot_done:
    addi r3, r3, 8
    li   r1, 64
    blt  r3, r1, mc_slot
    add  r15, r15, r14
    li   r1, {bytes}
    blt  r15, r1, mc_next
    li   r15, 0
mc_next:
    addi r13, r13, -1
    bne  r13, r0, mc_block
    ret
)",
                                    fmt::arg("blocks", blocks), fmt::arg("block_bytes", block_lines * 64),
                                    fmt::arg("src", src), fmt::arg("dst", dst), fmt::arg("bytes", bytes));
  std::string tasks = fmt::format("\nmc_part_t1:\n    li   r16, {}\n    j    mc_part\n"
                                  "mc_part_t0:\n    li   r16, 0\n    j    mc_part\n",
                                  block_lines / 2 * 64);
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"mc_part_t1", "mc_part_t0"});
    // odd words on thread 1, starting half-way through the blocks and lines
    mb.pair({"mc_part_t1", {1, blocks / 2}}, {"mc_part_t0", {0, 0}});
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines + tasks, opt.dispatcher));
  }
  w.oracle = [=](const mem::Memory& m) { return expect_i32(m, dst, want, "dst"); };
  return w;
}

}  // namespace ajt::workloads
