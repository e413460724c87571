// Wall time of the evaluation matrix, serial reference vs OpenMP runner.
//
//   ajt_matrix_bench [repeats]

#include <chrono>
#include <cstdlib>
#include <iostream>

#include <fmt/format.h>
#include <omp.h>

#include "ajt/bench.hpp"

using namespace ajt;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 1;
  bench::Options opt;
  bench::Report s, p;
  double ts = 1e300, tp = 1e300;
  for (int i = 0; i < repeats; ++i) {
    ts = std::min(ts, seconds([&] { s = bench::run_serial(opt); }));
    tp = std::min(tp, seconds([&] { p = bench::run_parallel(opt); }));
  }
  const bool same = bench::to_json(s).dump() == bench::to_json(p).dump();
  fmt::print("threads   {}\n", omp_get_max_threads());
  fmt::print("serial    {:.3f} s\n", ts);
  fmt::print("parallel  {:.3f} s\n", tp);
  fmt::print("ratio     {:.2f}x\n", ts / tp);
  fmt::print("reports   {}\n", same ? "identical" : "DIFFER");
  return same ? 0 : 1;
}
