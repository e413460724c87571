#pragma once

#include <string_view>

#include <json.hpp>

#include "ajt/assembler.hpp"
#include "ajt/core.hpp"
#include "ajt/workloads.hpp"

namespace ajt::testing {

// randomized cases per memory-unit property
inline constexpr int kPropertyCases = 10000;

inline core::CoreConfig solo_config() {
  core::CoreConfig cfg;
  cfg.max_cycles = 50'000'000;
  return cfg;
}

inline core::RunResult run_source(std::string_view src, core::CoreConfig cfg = solo_config()) {
  auto p = assembler::assemble_or_throw(src);
  std::vector<isa::Program> images{p};
  return core::run(images, cfg);
}

// Desk-test sizes: every workload finishes in well under a second.
inline const nlohmann::json& small_sizes() {
  static const nlohmann::json s = {
      {"matrix_mult", {{"n", 16}}},
      {"dot_product", {{"n", 64}, {"reps", 2}}},
      {"fft", {{"n", 64}, {"block", 16}}},
      {"merge_sort", {{"n", 64}}},
      {"bellman_ford", {{"nodes", 16}, {"edges", 32}}},
      {"daxpy", {{"n", 64}}},
      {"mem_copy", {{"bytes", 4096}, {"block_lines", 16}}},
      {"mutexes", {{"increments", 64}}},
      {"ecg", {{"n", 128}, {"hermite_window", 32}}},
  };
  return s;
}

inline workloads::Workload build_small(std::string_view name, std::uint64_t seed = 1) {
  workloads::BuildOptions o;
  o.seed = seed;
  o.sizes = small_sizes()[std::string(name)];
  return workloads::build(name, o);
}

}  // namespace ajt::testing
