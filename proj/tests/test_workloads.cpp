#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ajt/scenario.hpp"
#include "ajt/workloads.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ajt;
using scenario::Scenario;
using testing::cd;
using testing::fft_output;
using testing::naive_dft;
using testing::read_complex;
using testing::rel_error;

namespace {

core::RunResult run(const workloads::Workload& w, Scenario s) {
  auto r = scenario::run(w, s, {});
  REQUIRE(r.ok());
  return r;
}

std::vector<std::uint8_t> region(const mem::Memory& m, std::uint32_t addr, std::uint32_t bytes) {
  auto b = m.bytes();
  return {b.begin() + addr, b.begin() + addr + bytes};
}

// Output regions that every scenario must leave identical.
std::vector<std::pair<std::string, std::uint32_t>> outputs(const workloads::Workload& w) {
  const auto& s = w.sizes;
  if (w.name == "matrix_mult") {
    const std::uint32_t ld = w.notes["row_stride_doubles"];
    return {{"c", 8u * ld * s["n"].get<std::uint32_t>()}};
  }
  if (w.name == "dot_product") return {{"result", 8}};
  if (w.name == "fft") {
    const std::uint32_t n = s["n"];
    return {{"out", 8 * n}, {"out_hi", 8 * n}};
  }
  if (w.name == "merge_sort") return {{"out", 4 * s["n"].get<std::uint32_t>()}};
  if (w.name == "bellman_ford") {
    const std::uint32_t v = s["nodes"];
    return {{"dist", 4 * v * v}};
  }
  if (w.name == "daxpy") return {{"y", 8 * s["n"].get<std::uint32_t>()}};
  if (w.name == "mem_copy") return {{"dst", s["bytes"].get<std::uint32_t>()}};
  if (w.name == "mutexes") return {{"counter", 4}, {"errors", 4}};
  if (w.name == "ecg") return {{"peak_count", 4}, {"peaks", 4}, {"coef", 8 * s["hermite_order"].get<std::uint32_t>()}};
  return {};
}

}  // namespace

TEST_SUITE("workloads") {

TEST_CASE("every oracle passes in every scenario") {
  for (std::uint64_t seed : {1u, 2u}) {
    for (const auto& name : workloads::names()) {
      auto w = testing::build_small(name, seed);
      for (auto s : scenario::kAll) {
        auto r = run(w, s);
        auto o = w.oracle(*r.memory);
        auto v = testing::reference_check(w, *r.memory);
        INFO(name, " ", scenario::name(s), " seed ", seed, ": ", o.message, " / ", v.message);
        CHECK(o.ok);
        CHECK(v.ok);
      }
    }
  }
}

TEST_CASE("single and dual variants write the same output") {
  for (const auto& name : workloads::names()) {
    auto w = testing::build_small(name);
    auto a = run(w, Scenario::Single), b = run(w, Scenario::Dual), c = run(w, Scenario::Spinning);
    for (const auto& [label, bytes] : outputs(w)) {
      INFO(name, " ", label);
      const auto addr = w.data.symbol(label);
      CHECK(region(*a.memory, addr, bytes) == region(*b.memory, addr, bytes));
      CHECK(region(*a.memory, addr, bytes) == region(*c.memory, addr, bytes));
    }
  }
}

TEST_CASE("a corrupted result fails the oracle") {
  for (const auto& name : workloads::names()) {
    auto w = testing::build_small(name);
    auto r = run(w, Scenario::Single);
    auto m = *r.memory;
    const auto addr = w.data.symbol(outputs(w).front().first);
    // both words, so a double's exponent end is hit too
    m.write_u32(addr, m.read_u32(addr) ^ 0x00100001u);
    m.write_u32(addr + 4, m.read_u32(addr + 4) ^ 0x00100001u);
    INFO(name);
    CHECK_FALSE(w.oracle(m).ok);
  }
}

TEST_CASE("matrix multiply equals the host triple loop exactly") {
  auto w = testing::build_small("matrix_mult");
  auto r = run(w, Scenario::Dual);
  const int n = w.sizes["n"];
  const std::uint32_t ld = w.notes["row_stride_doubles"];
  const auto a = w.data.symbol("a"), b = w.data.symbol("b"), c = w.data.symbol("c");
  const auto& m = *r.memory;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += m.read_f64(a + 8 * (i * ld + k)) * m.read_f64(b + 8 * (k * ld + j));
      REQUIRE(m.read_f64(c + 8 * (i * ld + j)) == s);
    }
}

TEST_CASE("merge sort output is a sorted permutation of its input") {
  for (int n : {4, 64, 256}) {
    workloads::BuildOptions o;
    o.sizes = {{"n", n}};
    auto w = workloads::build("merge_sort", o);
    auto r = run(w, Scenario::Dual);
    std::vector<std::int32_t> in(n), out(n);
    for (int i = 0; i < n; ++i) {
      in[i] = static_cast<std::int32_t>(r.memory->read_u32(w.data.symbol("in") + 4 * i));
      out[i] = static_cast<std::int32_t>(r.memory->read_u32(w.data.symbol("out") + 4 * i));
    }
    CHECK(std::is_sorted(out.begin(), out.end()));
    std::sort(in.begin(), in.end());
    CHECK(in == out);
  }
}

TEST_CASE("daxpy with a = 0 leaves y unchanged") {
  workloads::BuildOptions o;
  o.sizes = {{"n", 64}, {"a", 0.0}};
  auto w = workloads::build("daxpy", o);
  auto r = run(w, Scenario::Dual);
  const auto y = w.data.symbol("y");
  mem::Memory init(r.memory->size());
  init.load(w.data);
  CHECK(region(*r.memory, y, 8 * 64) == region(init, y, 8 * 64));
  CHECK(w.oracle(*r.memory).ok);
}

TEST_CASE("mem_copy copies every byte") {
  auto w = testing::build_small("mem_copy");
  auto r = run(w, Scenario::Dual);
  const std::uint32_t bytes = w.sizes["bytes"];
  CHECK(region(*r.memory, w.data.symbol("src"), bytes) == region(*r.memory, w.data.symbol("dst"), bytes));
}

TEST_CASE("fft matches a direct DFT at n = 256") {
  for (bool split : {false, true}) {
    auto w = workloads::build_fft(256, split, workloads::FftInput::Random, 64);
    for (auto s : {Scenario::Single, Scenario::Dual}) {
      auto r = run(w, s);
      auto x = read_complex(*r.memory, w.data.symbol("x"), 256);
      auto got = fft_output(w, *r.memory, 256);
      const auto err = rel_error(got, naive_dft(x));
      INFO("split ", split, " ", scenario::name(s), " error ", err);
      CHECK(err < 1e-9);
    }
  }
}

TEST_CASE("fft of zeros and of an impulse") {
  auto z = workloads::build_fft(128, true, workloads::FftInput::Zeros, 32);
  auto rz = run(z, Scenario::Dual);
  for (const auto& v : fft_output(z, *rz.memory, 128)) CHECK(v == cd(0, 0));
  auto d = workloads::build_fft(128, true, workloads::FftInput::Impulse, 32);
  auto rd = run(d, Scenario::Dual);
  for (const auto& v : fft_output(d, *rd.memory, 128)) CHECK(v == cd(1, 0));
  CHECK_THROWS(workloads::build_fft(100, true));
}

TEST_CASE("host dft helper agrees with the test-side transform") {
  std::vector<cd> x(64);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {std::sin(0.3 * i), std::cos(1.7 * i)};
  CHECK(rel_error(workloads::dft(x), naive_dft(x)) < 1e-14);
}

TEST_CASE("bellman-ford: all pairs equal a Floyd-Warshall closure") {
  for (auto [nodes, edges] : std::vector<std::pair<int, int>>{{2, 2}, {16, 32}, {64, 128}}) {
    workloads::BuildOptions o;
    o.sizes = {{"nodes", nodes}, {"edges", edges}};
    auto w = workloads::build("bellman_ford", o);
    auto r = run(w, Scenario::Dual);
    const std::int64_t inf = w.notes["inf"];
    std::vector<std::int64_t> d(nodes * nodes, inf);
    for (int v = 0; v < nodes; ++v) d[v * nodes + v] = 0;
    for (const auto& e : w.notes["edge_list"]) {
      const int u = e[0], v = e[1], wt = e[2];
      d[u * nodes + v] = std::min<std::int64_t>(d[u * nodes + v], wt);
    }
    for (int k = 0; k < nodes; ++k)
      for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j)
          d[i * nodes + j] = std::min(d[i * nodes + j], d[i * nodes + k] + d[k * nodes + j]);
    const auto dist = w.data.symbol("dist");
    for (int i = 0; i < nodes; ++i)
      for (int j = 0; j < nodes; ++j) {
        const auto got = static_cast<std::int32_t>(r.memory->read_u32(dist + 4 * (i * nodes + j)));
        if (i == j) REQUIRE(got == 0);
        REQUIRE(got == d[i * nodes + j]);
      }
    if (nodes == 2) {
      // two nodes joined both ways: each distance is its edge weight
      for (const auto& e : w.notes["edge_list"])
        CHECK(r.memory->read_u32(dist + 4 * (e[0].get<int>() * 2 + e[1].get<int>())) == e[2].get<std::uint32_t>());
    }
  }
}

TEST_CASE("ecg: one beat found near the truth, none on a flat record") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    workloads::EcgParams p;
    workloads::BuildOptions o;
    o.seed = seed;
    auto w = workloads::build_ecg(p, o);
    auto r = run(w, Scenario::Dual);
    const int truth = w.notes["r_peak"];
    INFO("seed ", seed);
    REQUIRE(r.memory->read_u32(w.data.symbol("peak_count")) == 1);
    const auto got = static_cast<std::int32_t>(r.memory->read_u32(w.data.symbol("peaks")));
    CHECK(std::abs(got - truth) <= 5);
    CHECK(w.oracle(*r.memory).ok);
  }
  workloads::EcgParams flat;
  flat.flat = true;
  flat.noise = 0;
  auto w = workloads::build_ecg(flat);
  auto r = run(w, Scenario::Dual);
  CHECK(r.memory->read_u32(w.data.symbol("peak_count")) == 0);
  CHECK(w.oracle(*r.memory).ok);
}

TEST_CASE("hermite basis is orthonormal and reconstruction improves with order") {
  const int L = 64;
  const double sigma = L / 8.0;
  auto h = workloads::hermite_basis(6, L, sigma);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      double dot = 0;
      for (int t = 0; t < L; ++t) dot += h[a * L + t] * h[b * L + t];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-2);  // sampled, truncated at the window edges
    }
  auto sig = workloads::synth_ecg(256, 1, 0.0, false);
  const int w0 = std::clamp(sig.r_peak - L / 2, 0, 256 - L);
  double mean = 0;
  for (int t = 0; t < L; ++t) mean += sig.samples[w0 + t];
  mean /= L;
  double prev = 1e300;
  for (int K = 2; K <= 6; ++K) {
    auto basis = workloads::hermite_basis(K, L, sigma);
    double err = 0;
    std::vector<double> c(K, 0.0);
    for (int k = 0; k < K; ++k)
      for (int t = 0; t < L; ++t) c[k] += (sig.samples[w0 + t] - mean) * basis[k * L + t];
    for (int t = 0; t < L; ++t) {
      double rec = 0;
      for (int k = 0; k < K; ++k) rec += c[k] * basis[k * L + t];
      err += std::pow(sig.samples[w0 + t] - mean - rec, 2);
    }
    INFO("K=", K, " err=", err);
    CHECK(err <= prev);
    prev = err;
  }
}

TEST_CASE("mutex counter is exact and run time is linear in the count") {
  std::uint64_t c1 = 0, c2 = 0;
  for (int n : {1024, 2048}) {
    workloads::BuildOptions o;
    o.sizes = {{"increments", n}};
    auto w = workloads::build("mutexes", o);
    for (auto s : scenario::kAll) {
      auto r = run(w, s);
      CHECK(r.memory->read_u32(w.data.symbol("counter")) == static_cast<std::uint32_t>(n));
      CHECK(r.memory->read_u32(w.data.symbol("errors")) == 0);
      if (s == Scenario::Dual) (n == 1024 ? c1 : c2) = r.stats.total_cycles;
    }
  }
  const double ratio = double(c2) / double(c1);
  CHECK(ratio > 1.9);
  CHECK(ratio < 2.1);
}

TEST_CASE("build errors") {
  CHECK_THROWS_AS(workloads::build("coremark"), workloads::UnknownWorkload);
  workloads::BuildOptions o;
  o.sizes = {{"nn", 3}};
  CHECK_THROWS_AS(workloads::build("matrix_mult", o), std::invalid_argument);
}

TEST_CASE("builds are deterministic and seeds change the data") {
  auto a = testing::build_small("daxpy", 7), b = testing::build_small("daxpy", 7), c = testing::build_small("daxpy", 8);
  CHECK(a.single.source == b.single.source);
  CHECK(a.dual.source == b.dual.source);
  CHECK(a.data.words == b.data.words);
  CHECK(a.data.words != c.data.words);
}

TEST_CASE("manifest") {
  for (const auto& name : workloads::names()) {
    auto w = testing::build_small(name);
    auto m = w.manifest();
    INFO(name);
    CHECK(m["name"] == name);
    CHECK(m["channel_base"] == w.channel_base);
    CHECK(m["entries"]["thread0"] == "_start");
    CHECK(m["entries"]["thread1"] == "_thread1");
    CHECK(m["oracle"] == name);
    CHECK(m["data"]["regions"].size() == w.data.symbols.size());
    CHECK_FALSE(m["sizes"].empty());
  }
}

}
