#pragma once

// Shared plumbing for the kernel generators.

#include <fmt/format.h>

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ajt/workloads.hpp"

namespace ajt::workloads::detail {

// Zero-filled data image growing upward from a base address.
class DataImage {
 public:
  explicit DataImage(std::uint32_t base = kDataBase) : base_(base), top_(base) {}

  std::uint32_t alloc(std::uint32_t bytes, std::uint32_t align = 64) {
    top_ = (top_ + align - 1) & ~(align - 1);
    auto at = top_;
    top_ += bytes;
    bytes_.resize(top_ - base_, 0);
    return at;
  }
  void put_u32(std::uint32_t addr, std::uint32_t v) {
    bytes_.at(addr - base_ + 3);
    std::memcpy(bytes_.data() + (addr - base_), &v, 4);
  }
  void put_i32(std::uint32_t addr, std::int32_t v) { put_u32(addr, static_cast<std::uint32_t>(v)); }
  void put_f64(std::uint32_t addr, double v) {
    bytes_.at(addr - base_ + 7);
    std::memcpy(bytes_.data() + (addr - base_), &v, 8);
  }

  // Names a region; names become symbols of the data image.
  void label(const std::string& name, std::uint32_t addr) { labels_[name] = addr; }

  std::uint32_t top() const { return top_; }
  isa::Program program() const;

 private:
  std::uint32_t base_;
  std::uint32_t top_;
  std::vector<std::uint8_t> bytes_;
  std::map<std::string, std::uint32_t, std::less<>> labels_;
};

// A task call with immediate arguments in r4, r5, ...
struct Call {
  std::string label;
  std::vector<std::int64_t> args;
};

// Assembles the main program of one variant.
class MainBuilder {
 public:
  MainBuilder(bool dual, std::uint32_t channel_base, std::vector<std::string> tasks)
      : dual_(dual), ch_(channel_base), tasks_(std::move(tasks)) {}

  // Runs `t1` on thread 1 and `t0` on thread 0 (dual) or both on thread 0, t1 first.
  void pair(const Call& t1, const Call& t0);
  // Thread 0 only.
  void call(const Call& c);
  void raw(std::string_view s) { body_ += s; }
  void begin_reps(int reps);
  void end_reps();

  std::string finish(const std::string& routines, const sidekick::DispatcherOptions& opt) const;

 private:
  int fn_id(const std::string& label) const;
  static std::string load_args(const Call& c);

  bool dual_;
  std::uint32_t ch_;
  std::vector<std::string> tasks_;
  std::string body_;
  int labels_ = 0;
  std::vector<int> rep_stack_;
};

Variant assemble_variant(const std::string& source);

// Deterministic generator independent of standard-library distribution details.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  std::uint64_t next() { return g_(); }
  // Uniform in [0, n)
  std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>(next() % n); }
  // Uniform in [0, 1)
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 g_;
};

std::uint32_t read_u32(const mem::Memory& m, std::uint32_t addr);

// Sizes merged with defaults; throws std::invalid_argument on unknown keys.
nlohmann::ordered_json merge_sizes(nlohmann::ordered_json defaults, const nlohmann::json& overrides,
                                   std::string_view workload);

Workload make_workload(std::string name, std::string partitioning, nlohmann::ordered_json sizes,
                       const BuildOptions& opt);

// Radix-2 FFT helpers shared by the fft and ecg kernels.
//
// fft_stage routine ABI: r12 first group start (+ j0*16), r13 end of the
// groups region, r14 half-span bytes, r15 twiddle stride bytes (16 with the
// per-stage tables below), r16 bytes of j per group, r17 first twiddle address. Clobbers r1 r3 r6 r7 r9 r12
// f0..f15.
std::string fft_stage_routine();

// One butterfly stage in complex-element units: groups of 2*half starting at
// `base` up to `end`; inside each group j runs over [j0, j0+j_count).
struct Stage {
  std::size_t base, end, half, j0, j_count;
};

std::string emit_stage_call(const Stage& s, std::uint32_t array, std::uint32_t twiddles);

// Stages of an m-point transform at `base` (input already bit-reversed), in
// depth-first order: a `block`-point piece runs all its stages at once, and
// each larger stage follows as soon as its two halves are done, while they
// are still cached.
std::vector<Stage> sub_fft_schedule(std::size_t base, std::size_t m, std::size_t block);

using cd = std::complex<double>;

// Host mirror of the simulated butterfly (same operation order and rounding).
void host_stage(std::vector<cd>& w, const Stage& s, const std::vector<cd>& tw);

// One contiguous table per stage, so a stage streams its twiddles instead of
// striding through a shared one: the stage with half-span h owns entries
// [h-1, 2h-1), entry h-1+j = exp(-+2 pi i j / 2h). n-1 entries in all.
std::vector<cd> twiddles(std::size_t n, bool inverse);
inline std::size_t twiddle_offset(std::size_t half) { return half - 1; }

// Bit reversal of k over `bits` bits.
std::size_t bitrev(std::size_t k, int bits);

int log2_exact(std::size_t n);

}  // namespace ajt::workloads::detail

namespace ajt::workloads::detail {

// Exact comparison of a memory region against expected values.
OracleResult expect_f64(const mem::Memory& m, std::uint32_t addr, const std::vector<double>& want,
                        std::string_view what);
OracleResult expect_i32(const mem::Memory& m, std::uint32_t addr, const std::vector<std::int32_t>& want,
                        std::string_view what);
inline OracleResult pass() { return {true, "ok"}; }

}  // namespace ajt::workloads::detail
