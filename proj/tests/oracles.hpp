#pragma once

// Test-side reference results, computed from each workload's initial data
// image without the library's own oracles.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ajt/workloads.hpp"
#include "helpers.hpp"

namespace ajt::testing {

using cd = std::complex<double>;

struct Verdict {
  bool ok = true;
  std::string message;
};

inline std::vector<cd> read_complex(const mem::Memory& m, std::uint32_t addr, std::size_t n) {
  std::vector<cd> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {m.read_f64(addr + 16 * i), m.read_f64(addr + 16 * i + 8)};
  return v;
}

// FFT result in natural order, reading the two halves when split.
inline std::vector<cd> fft_output(const workloads::Workload& w, const mem::Memory& m, std::size_t n) {
  if (!w.data.symbols.contains("out_hi")) return read_complex(m, w.data.symbol("out"), n);
  auto lo = read_complex(m, w.data.symbol("out"), n / 2);
  auto hi = read_complex(m, w.data.symbol("out_hi"), n / 2);
  lo.insert(lo.end(), hi.begin(), hi.end());
  return lo;
}

// O(n^2) transform in long double, exact index reduction.
inline std::vector<cd> naive_dft(const std::vector<cd>& x) {
  const auto n = x.size();
  std::vector<long double> c(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long double a = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(i) / n;
    c[i] = std::cos(a);
    s[i] = std::sin(a);
  }
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto t = (j * k) % n;
      re += x[j].real() * c[t] - x[j].imag() * s[t];
      im += x[j].real() * s[t] + x[j].imag() * c[t];
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

// max |got - want| over max |want|
inline double rel_error(const std::vector<cd>& got, const std::vector<cd>& want) {
  double err = 0, scale = 0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    err = std::max(err, std::abs(got[i] - want[i]));
    scale = std::max(scale, std::abs(want[i]));
  }
  return scale == 0 ? err : err / scale;
}

inline Verdict fail(std::string msg) { return {false, std::move(msg)}; }

// Checks the final memory `m` of a run of `w` against a brute-force result.
inline Verdict reference_check(const workloads::Workload& w, const mem::Memory& m) {
  mem::Memory init(m.size());
  init.load(w.data);
  const auto& sz = w.sizes;
  auto sym = [&](const char* s) { return w.data.symbol(s); };

  if (w.name == "matrix_mult") {
    const int n = sz["n"];
    const std::uint32_t ld = w.notes["row_stride_doubles"];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += init.read_f64(sym("a") + 8 * (i * ld + k)) * init.read_f64(sym("b") + 8 * (k * ld + j));
        if (m.read_f64(sym("c") + 8 * (i * ld + j)) != s) return fail(fmt::format("c[{}][{}]", i, j));
      }
    return {};
  }
  if (w.name == "dot_product") {
    const int n = sz["n"];
    long double s = 0;
    for (int i = 0; i < n; ++i) s += static_cast<long double>(init.read_f64(sym("x") + 8 * i)) * init.read_f64(sym("y") + 8 * i);
    const double got = m.read_f64(sym("result"));
    if (std::abs(got - static_cast<double>(s)) > 1e-12 * std::max(1.0, std::abs(static_cast<double>(s))))
      return fail(fmt::format("dot {} want {}", got, static_cast<double>(s)));
    return {};
  }
  if (w.name == "fft") {
    const std::size_t n = sz["n"];
    const auto err = rel_error(fft_output(w, m, n), naive_dft(read_complex(init, sym("x"), n)));
    if (!(err < 1e-9)) return fail(fmt::format("relative error {:.3g}", err));
    return {};
  }
  if (w.name == "merge_sort") {
    const int n = sz["n"];
    std::vector<std::int32_t> in(n), out(n);
    for (int i = 0; i < n; ++i) {
      in[i] = static_cast<std::int32_t>(init.read_u32(sym("in") + 4 * i));
      out[i] = static_cast<std::int32_t>(m.read_u32(sym("out") + 4 * i));
    }
    std::sort(in.begin(), in.end());
    if (in != out) return fail("out is not the sorted input");
    return {};
  }
  if (w.name == "bellman_ford") {
    const int v = sz["nodes"];
    const std::int64_t inf = w.notes["inf"];
    std::vector<std::int64_t> d(static_cast<std::size_t>(v) * v, inf);
    for (int i = 0; i < v; ++i) d[i * v + i] = 0;
    for (const auto& e : w.notes["edge_list"]) {
      const int a = e[0], b = e[1];
      d[a * v + b] = std::min<std::int64_t>(d[a * v + b], e[2].get<std::int64_t>());
    }
    for (int k = 0; k < v; ++k)
      for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j) d[i * v + j] = std::min(d[i * v + j], d[i * v + k] + d[k * v + j]);
    for (int i = 0; i < v * v; ++i)
      if (static_cast<std::int32_t>(m.read_u32(sym("dist") + 4 * i)) != d[i])
        return fail(fmt::format("dist({},{})", i / v, i % v));
    return {};
  }
  if (w.name == "daxpy") {
    const int n = sz["n"], reps = sz["reps"];
    const double a = init.read_f64(sym("a"));
    for (int i = 0; i < n; ++i) {
      const double x = init.read_f64(sym("x") + 8 * i);
      double y = init.read_f64(sym("y") + 8 * i);
      for (int r = 0; r < reps; ++r) {
        const double ax = a * x;
        y = y + ax;
      }
      if (m.read_f64(sym("y") + 8 * i) != y) return fail(fmt::format("y[{}]", i));
    }
    return {};
  }
  if (w.name == "mem_copy") {
    const std::uint32_t bytes = sz["bytes"];
    for (std::uint32_t i = 0; i < bytes; i += 4)
      if (m.read_u32(sym("dst") + i) != init.read_u32(sym("src") + i)) return fail(fmt::format("dst+{}", i));
    return {};
  }
  if (w.name == "mutexes") {
    const std::uint32_t want = sz["increments"];
    if (m.read_u32(sym("counter")) != want) return fail(fmt::format("counter {} want {}", m.read_u32(sym("counter")), want));
    if (m.read_u32(sym("errors")) != 0) return fail("lock errors");
    return {};
  }
  if (w.name == "ecg") {
    const int truth = w.notes["r_peak"];
    const auto count = m.read_u32(sym("peak_count"));
    if (truth < 0) return count == 0 ? Verdict{} : fail(fmt::format("{} peaks on a flat record", count));
    if (count != 1) return fail(fmt::format("{} peaks", count));
    const auto peak = static_cast<std::int32_t>(m.read_u32(sym("peaks")));
    if (std::abs(peak - truth) > 5) return fail(fmt::format("peak {} truth {}", peak, truth));
    return {};
  }
  return fail("no reference for " + w.name);
}

}  // namespace ajt::testing
