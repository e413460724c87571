// matrix_mult, merge_sort, bellman_ford

#include <algorithm>
#include <set>

#include "wl_common.hpp"

namespace ajt::workloads {

using namespace detail;

namespace {
constexpr std::int32_t kInf = 0x3FFFFFFF;
constexpr int kTile = 8;
}  // namespace

Workload build_matrix_mult(int n, int reps, const BuildOptions& opt) {
  if (n < kTile || n % kTile != 0 || n > 1024)
    throw std::invalid_argument("matrix_mult: n must be a multiple of 8 up to 1024");
  const int ld = n + 8;  // row padding keeps a column walk off a handful of sets
  auto w = make_workload("matrix_mult", "interleaved", {{"n", n}, {"reps", reps}}, opt);
  w.notes["row_stride_doubles"] = ld;
  Rng rng(opt.seed);
  std::vector<double> a(static_cast<std::size_t>(n * n)), b(a.size());
  for (auto& v : a) v = rng.unit() * 2.0 - 1.0;
  for (auto& v : b) v = rng.unit() * 2.0 - 1.0;

  DataImage d;
  const std::uint32_t mat_bytes = 8u * n * ld;
  const auto aa = d.alloc(mat_bytes), ab = d.alloc(mat_bytes), ac = d.alloc(mat_bytes);
  d.label("a", aa);
  d.label("b", ab);
  d.label("c", ac);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      d.put_f64(aa + 8 * (i * ld + k), a[i * n + k]);
      d.put_f64(ab + 8 * (i * ld + k), b[i * n + k]);
    }
  w.data = d.program();

  // r4 = first row, r5 = row step. Columns in tiles of 8 so the B column
  // strip stays cached across rows.
  const auto routines = fmt::format(R"(
mm_part:
    li   r12, 0
mm_jb:
    mv   r13, r4
mm_i:
    li   r1, {ldb}
    mul  r14, r13, r1
    li   r15, {a}
    add  r15, r15, r14
    li   r8, {nb}
    add  r8, r8, r15
    li   r16, {c}
    add  r16, r16, r14
    add  r16, r16, r12
    li   r17, {b}
    add  r17, r17, r12
    li   r3, {tile}
mm_j:
    fcvt.d.w f0, r0
    mv   r6, r15
    mv   r7, r17
mm_k:
    fld  f1, 0(r6)
    fld  f2, 0(r7)
    fmul f3, f1, f2
    addi r6, r6, 8
    addi r7, r7, {ldb}
    fadd f0, f0, f3
    bne  r6, r8, mm_k
    fst  f0, 0(r16)
    addi r16, r16, 8
    addi r17, r17, 8
    addi r3, r3, -1
    bne  r3, r0, mm_j
    add  r13, r13, r5
    li   r1, {n}
    blt  r13, r1, mm_i
    addi r12, r12, {tile_bytes}
    li   r1, {nb}
    blt  r12, r1, mm_jb
    ret
)",
                                    fmt::arg("ldb", 8 * ld), fmt::arg("nb", 8 * n), fmt::arg("a", aa),
                                    fmt::arg("b", ab), fmt::arg("c", ac), fmt::arg("n", n),
                                    fmt::arg("tile", kTile), fmt::arg("tile_bytes", 8 * kTile));
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"mm_part"});
    mb.begin_reps(reps);
    mb.pair({"mm_part", {0, 2}}, {"mm_part", {1, 2}});  // even rows on thread 1
    mb.end_reps();
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines, opt.dispatcher));
  }

  std::vector<double> c(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += a[i * n + k] * b[k * n + j];
      c[i * n + j] = s;
    }
  w.oracle = [=](const mem::Memory& m) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> row(c.begin() + i * n, c.begin() + (i + 1) * n);
      auto r = expect_f64(m, ac + 8 * i * ld, row, fmt::format("C[{}]", i));
      if (!r.ok) return r;
    }
    return pass();
  };
  return w;
}

// ---------------------------------------------------------------------------

Workload build_merge_sort(int n, int reps, const BuildOptions& opt) {
  if (n < 4 || (n & (n - 1)) != 0) throw std::invalid_argument("merge_sort: n must be a power of two >= 4");
  auto w = make_workload("merge_sort", "block-split", {{"n", n}, {"reps", reps}}, opt);
  Rng rng(opt.seed);
  std::vector<std::int32_t> in(static_cast<std::size_t>(n));
  for (auto& v : in) v = static_cast<std::int32_t>(rng.below(1u << 20)) - (1 << 19);

  DataImage d;
  const auto a_in = d.alloc(4u * n), a_work = d.alloc(4u * n), a_tmp = d.alloc(4u * n), a_out = d.alloc(4u * n);
  d.label("in", a_in);
  d.label("out", a_out);
  for (int i = 0; i < n; ++i) d.put_i32(a_in + 4 * i, in[i]);
  w.data = d.program();

  const int half = n / 2;
  // bottom-up passes alternate work -> tmp -> work ...
  const auto sorted_at = (log2_exact(static_cast<std::size_t>(half)) % 2 == 0) ? a_work : a_tmp;

  // ms_part: r4 = first element, r5 = count (power of two). Copies its slice
  // of the input, then bottom-up merges with ping-pong buffers.
  // ms_merge: r14 pA, r15 endA, r17 pB, r16 endB, r8 dst.
  const auto routines = fmt::format(R"(
ms_part:
    addi sp, sp, -8
    sw   r31, 0(sp)
    add  r1, r4, r4
    add  r1, r1, r1
    li   r6, {in}
    add  r6, r6, r1
    li   r10, {work}
    add  r10, r10, r1
    li   r11, {tmp}
    add  r11, r11, r1
    mv   r7, r10
    add  r2, r5, r5
    add  r2, r2, r2
    add  r9, r6, r2
ms_copy:
    lw   r3, 0(r6)
    addi r6, r6, 4
    sw   r3, 0(r7)
    addi r7, r7, 4
    blt  r6, r9, ms_copy
    li   r12, 4
ms_pass:
    li   r13, 0
ms_run:
    add  r14, r10, r13
    add  r15, r14, r12
    add  r16, r15, r12
    mv   r17, r15
    add  r8, r11, r13
    call ms_merge
    add  r13, r13, r12
    add  r13, r13, r12
    blt  r13, r2, ms_run
    mv   r1, r10
    mv   r10, r11
    mv   r11, r1
    add  r12, r12, r12
    blt  r12, r2, ms_pass
    lw   r31, 0(sp)
    addi sp, sp, 8
    ret

ms_merge:
    beq  r14, r15, mg_restb
    beq  r17, r16, mg_resta
mg_loop:
    lw   r6, 0(r14)
    lw   r7, 0(r17)
    blt  r7, r6, mg_takeb
    sw   r6, 0(r8)
    addi r14, r14, 4
    addi r8, r8, 4
    bne  r14, r15, mg_loop
    j    mg_restb
mg_takeb:
    sw   r7, 0(r8)
    addi r17, r17, 4
    addi r8, r8, 4
    bne  r17, r16, mg_loop
mg_resta:
    beq  r14, r15, mg_done
    lw   r6, 0(r14)
    addi r14, r14, 4
    sw   r6, 0(r8)
    addi r8, r8, 4
    j    mg_resta
mg_restb:
    beq  r17, r16, mg_done
    lw   r7, 0(r17)
    addi r17, r17, 4
    sw   r7, 0(r8)
    addi r8, r8, 4
    j    mg_restb
mg_done:
    ret
)",
                                    fmt::arg("in", a_in), fmt::arg("work", a_work), fmt::arg("tmp", a_tmp));
  const auto final_merge =
      fmt::format("    li   r14, {}\n    li   r15, {}\n    mv   r17, r15\n    li   r16, {}\n    li   r8, {}\n"
                  "    call ms_merge\n",
                  sorted_at, sorted_at + 4 * half, sorted_at + 4 * n, a_out);
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"ms_part"});
    mb.begin_reps(reps);
    mb.pair({"ms_part", {0, half}}, {"ms_part", {half, half}});
    mb.raw(final_merge);
    mb.end_reps();
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines, opt.dispatcher));
  }

  auto want = in;
  std::sort(want.begin(), want.end());
  w.oracle = [=](const mem::Memory& m) { return expect_i32(m, a_out, want, "out"); };
  return w;
}

// ---------------------------------------------------------------------------

std::vector<std::int32_t> floyd_warshall(int nodes, const std::vector<std::array<int, 3>>& edges) {
  const auto v = static_cast<std::size_t>(nodes);
  std::vector<std::int64_t> dist(v * v, kInf);
  for (std::size_t i = 0; i < v; ++i) dist[i * v + i] = 0;
  for (const auto& [a, b, wt] : edges) {
    auto& e = dist[static_cast<std::size_t>(a) * v + static_cast<std::size_t>(b)];
    e = std::min<std::int64_t>(e, wt);
  }
  for (std::size_t k = 0; k < v; ++k)
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t j = 0; j < v; ++j)
        dist[i * v + j] = std::min(dist[i * v + j], dist[i * v + k] + dist[k * v + j]);
  std::vector<std::int32_t> out(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) out[i] = static_cast<std::int32_t>(std::min<std::int64_t>(dist[i], kInf));
  return out;
}

Workload build_bellman_ford(int nodes, int edges, int reps, const BuildOptions& opt) {
  if (nodes < 2 || nodes > 4096) throw std::invalid_argument("bellman_ford: nodes must be in 2..4096");
  if (edges < 1 || edges > nodes * (nodes - 1)) throw std::invalid_argument("bellman_ford: bad edge count");
  auto w = make_workload("bellman_ford", "block-split", {{"nodes", nodes}, {"edges", edges}, {"reps", reps}}, opt);
  w.notes["graph"] = "directed cycle through a random node order, plus uniform random extra edges";
  w.notes["weights"] = "uniform integers 1..16";
  w.notes["inf"] = kInf;
  Rng rng(opt.seed);

  std::vector<int> perm(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) perm[i] = i;
  for (int i = nodes - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint32_t>(i + 1))]);
  std::vector<std::array<int, 3>> el;
  std::set<std::pair<int, int>> seen;
  auto add = [&](int a, int b) {
    seen.insert({a, b});
    el.push_back({a, b, 1 + static_cast<int>(rng.below(16))});
  };
  // spanning path, closed into a cycle when there are enough edges
  for (int i = 0; i + 1 < nodes && static_cast<int>(el.size()) < edges; ++i) add(perm[i], perm[i + 1]);
  if (static_cast<int>(el.size()) < edges && nodes > 2) add(perm[nodes - 1], perm[0]);
  while (static_cast<int>(el.size()) < edges) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint32_t>(nodes)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint32_t>(nodes)));
    if (a == b || seen.count({a, b})) continue;
    add(a, b);
  }
  for (std::size_t i = el.size() - 1; i > 0; --i) std::swap(el[i], el[rng.below(static_cast<std::uint32_t>(i + 1))]);

  DataImage d;
  const auto a_edges = d.alloc(8u * edges), a_dist = d.alloc(4u * nodes * nodes);
  d.label("edges", a_edges);
  d.label("dist", a_dist);
  for (int i = 0; i < edges; ++i) {
    d.put_i32(a_edges + 8 * i, 4 * el[i][0]);
    d.put_i32(a_edges + 8 * i + 4, (el[i][2] << 16) | (4 * el[i][1]));
  }
  w.data = d.program();
  nlohmann::ordered_json ej = nlohmann::ordered_json::array();
  for (const auto& e : el) ej.push_back({e[0], e[1], e[2]});
  w.notes["edge_list"] = std::move(ej);

  // r4 = first source, r5 = end source. Edge records are {u*4, weight<<16 | v*4};
  // row s of the distance matrix is relaxed in place, stopping early once a
  // round changes nothing.
  const auto routines = fmt::format(R"(
bf_part:
    bge  r4, r5, bf_done
    li   r10, {row}
    mul  r6, r4, r10
    li   r1, {dist}
    add  r6, r6, r1
bf_src:
    li   r7, 0
    li   r1, {inf}
bf_init:
    add  r8, r6, r7
    sw   r1, 0(r8)
    addi r7, r7, 4
    blt  r7, r10, bf_init
    add  r1, r4, r4
    add  r1, r1, r1
    add  r1, r6, r1
    sw   r0, 0(r1)
    li   r11, {rounds}
    li   r9, 16
bf_round:
    li   r3, 0
    li   r12, {edges}
    li   r13, {edges_end}
bf_edge:
    lw   r14, 0(r12)
    lw   r16, 4(r12)
    add  r14, r14, r6
    andi r15, r16, 0xFFFF
    lw   r14, 0(r14)
    add  r15, r15, r6
    srl  r16, r16, r9
    lw   r17, 0(r15)
    add  r14, r14, r16
    bge  r14, r17, bf_skip
    sw   r14, 0(r15)
    li   r3, 1
bf_skip:
    addi r12, r12, 8
    blt  r12, r13, bf_edge
    beq  r3, r0, bf_next
    addi r11, r11, -1
    bne  r11, r0, bf_round
bf_next:
    add  r6, r6, r10
    addi r4, r4, 1
    blt  r4, r5, bf_src
bf_done:
    ret
)",
                                    fmt::arg("row", 4 * nodes), fmt::arg("dist", a_dist), fmt::arg("inf", kInf),
                                    fmt::arg("rounds", nodes - 1 > 0 ? nodes - 1 : 1), fmt::arg("edges", a_edges),
                                    fmt::arg("edges_end", a_edges + 8 * edges));
  const int split = nodes / 2;
  for (bool dual : {false, true}) {
    MainBuilder mb(dual, opt.channel_base, {"bf_part"});
    mb.begin_reps(reps);
    mb.pair({"bf_part", {0, split}}, {"bf_part", {split, nodes}});
    mb.end_reps();
    (dual ? w.dual : w.single) = assemble_variant(mb.finish(routines, opt.dispatcher));
  }

  const auto want = floyd_warshall(nodes, el);
  w.oracle = [=](const mem::Memory& m) { return expect_i32(m, a_dist, want, "dist"); };
  return w;
}

}  // namespace ajt::workloads
