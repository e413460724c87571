#pragma once

// Shared memory unit: instruction cache, data cache, one round-robin arbiter
// per cache, a whole-unit lock for atomics, and flat backing memory.
//
// Timing contract (cycles are global core cycles):
//  - a granted hit is served in the grant cycle;
//  - a granted miss at cycle t fills the line immediately (functionally) and
//    keeps the unit busy for cycles t..t+penalty; the requester may issue its
//    next request at t+penalty+1;
//  - while busy, no request from either thread is granted (unified blocking),
//    or only the other cache keeps serving (per-cache blocking);
//  - while one thread holds the lock, the other thread is never granted.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ajt/isa.hpp"

namespace ajt::mem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CacheConfig {
  std::uint32_t size_bytes = 32 * 1024;
  std::uint32_t assoc = 4;
  std::uint32_t line_bytes = 64;
  std::uint32_t hit_cycles = 1;
  std::uint32_t miss_penalty = 30;

  std::uint32_t num_sets() const { return size_bytes / (assoc * line_bytes); }
  /// Throws ConfigError unless 4K..32K power-of-two size, 1..8 ways, 64-byte
  /// lines and a power-of-two set count.
  void validate() const;

  friend bool operator==(const CacheConfig&, const CacheConfig&) = default;
};

enum class Blocking : std::uint8_t { Unified, PerCache };

enum class CacheId : std::uint8_t { I = 0, D = 1 };

enum class ReqKind : std::uint8_t { IFetch, Load, Store, Tas };

std::string_view kind_name(ReqKind k);

struct MemRequest {
  int tid = 0;
  ReqKind kind = ReqKind::Load;
  std::uint32_t addr = 0;
  std::uint8_t width = 4;  // 1, 4 or 8 bytes
  std::uint64_t data = 0;  // store payload (low `width` bytes)

  CacheId cache() const { return kind == ReqKind::IFetch ? CacheId::I : CacheId::D; }
};

struct MemResponse {
  std::uint64_t data = 0;           // loaded bytes, little-endian; TAS returns the old byte
  bool hit = false;
  bool fault = false;               // unmapped address
  std::uint32_t cycles_waited = 0;  // 0 on a hit, the miss penalty on a miss
  std::uint64_t ready_at = 0;       // last cycle the unit is busy for this request
};

/// Flat byte-addressed backing store mapped at [0, size).
class Memory {
 public:
  explicit Memory(std::uint32_t size_bytes);

  std::uint32_t size() const { return static_cast<std::uint32_t>(bytes_.size()); }
  bool mapped(std::uint32_t addr, std::uint32_t len) const {
    return static_cast<std::uint64_t>(addr) + len <= bytes_.size();
  }

  // Unchecked fast paths; callers check `mapped` first.
  std::uint64_t read(std::uint32_t addr, unsigned width) const;
  void write(std::uint32_t addr, unsigned width, std::uint64_t value);

  // Host-side accessors (throw BusError when unmapped).
  std::uint8_t read_u8(std::uint32_t addr) const;
  std::uint32_t read_u32(std::uint32_t addr) const;
  std::uint64_t read_u64(std::uint32_t addr) const;
  double read_f64(std::uint32_t addr) const;
  void write_u8(std::uint32_t addr, std::uint8_t v);
  void write_u32(std::uint32_t addr, std::uint32_t v);
  void write_u64(std::uint32_t addr, std::uint64_t v);
  void write_f64(std::uint32_t addr, double v);

  void load(const isa::Program& p);

  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> bytes() { return bytes_; }

 private:
  void check(std::uint32_t addr, std::uint32_t len) const;
  std::vector<std::uint8_t> bytes_;
};

struct Way {
  bool valid = false;
  std::uint32_t tag = 0;
};

/// Not-most-recently-used victim: the first invalid way if any, otherwise the
/// lowest-indexed way that is not `mru_way`.
std::uint32_t nmru_victim(std::span<const Way> set, std::uint32_t mru_way);

class Cache {
 public:
  explicit Cache(const CacheConfig& cfg);

  struct Probe {
    bool hit = false;
    std::uint32_t set = 0;
    std::uint32_t way = 0;
  };

  const CacheConfig& config() const { return cfg_; }
  Probe probe(std::uint32_t addr) const;
  /// Brings the line holding `addr` in from `backing`; returns the way used.
  std::uint32_t fill(std::uint32_t addr, const Memory& backing);
  void touch(std::uint32_t set, std::uint32_t way) { mru_[set] = way; }

  std::uint64_t read(const Probe& p, std::uint32_t addr, unsigned width) const;
  void write(const Probe& p, std::uint32_t addr, unsigned width, std::uint64_t value);
  /// Write-update of a resident copy (no allocation, no MRU change).
  void update_if_present(std::uint32_t addr, unsigned width, std::uint64_t value);

  void invalidate_all();
  std::span<const Way> set_ways(std::uint32_t set) const {
    return std::span<const Way>(ways_).subspan(static_cast<std::size_t>(set) * cfg_.assoc, cfg_.assoc);
  }
  std::uint32_t mru_way(std::uint32_t set) const { return mru_[set]; }
  std::uint32_t num_sets() const { return sets_; }

  /// True when every valid line equals the corresponding backing bytes.
  bool coherent_with(const Memory& backing) const;

 private:
  std::uint32_t set_of(std::uint32_t addr) const { return (addr >> line_shift_) & (sets_ - 1); }
  std::uint32_t tag_of(std::uint32_t addr) const { return addr >> (line_shift_ + set_shift_); }
  std::uint8_t* line(std::uint32_t set, std::uint32_t way) {
    return data_.data() + (static_cast<std::size_t>(set) * cfg_.assoc + way) * cfg_.line_bytes;
  }
  const std::uint8_t* line(std::uint32_t set, std::uint32_t way) const {
    return data_.data() + (static_cast<std::size_t>(set) * cfg_.assoc + way) * cfg_.line_bytes;
  }

  CacheConfig cfg_;
  std::uint32_t sets_ = 0;
  unsigned line_shift_ = 6;
  unsigned set_shift_ = 0;
  std::vector<Way> ways_;
  std::vector<std::uint32_t> mru_;
  std::vector<std::uint8_t> data_;
};

struct ArbiterState {
  int last_granted = 1;  // winner of the last contested cycle; thread 0 wins the first
};

/// Round-robin grant between the two hardware threads: when both request,
/// the one that lost the previous contest wins. Uncontested grants leave the
/// priority alone. Returns the granted thread, or -1 when nobody requests.
int arbiter_grant(std::array<bool, 2> requests, ArbiterState& st);

struct MemUnitConfig {
  CacheConfig icache;
  CacheConfig dcache;
  Blocking blocking = Blocking::Unified;
  std::uint32_t memory_bytes = 4u << 20;
};

/// One granted access as seen by observers (probes, tests).
struct AccessEvent {
  std::uint64_t cycle = 0;
  int tid = 0;
  ReqKind kind = ReqKind::Load;
  std::uint32_t addr = 0;
  std::uint8_t width = 0;
  std::uint64_t data = 0;  // value loaded, or value stored
  bool hit = false;
};

class MemoryUnit {
 public:
  enum class Block : std::uint8_t { None, OwnMiss, OtherMiss, Locked };

  explicit MemoryUnit(const MemUnitConfig& cfg);

  const MemUnitConfig& config() const { return cfg_; }
  Memory& backing() { return backing_; }
  const Memory& backing() const { return backing_; }
  Cache& cache(CacheId c) { return caches_[static_cast<int>(c)]; }
  const Cache& cache(CacheId c) const { return caches_[static_cast<int>(c)]; }

  /// Why `tid` cannot be granted `c` at `now`, or None.
  Block blocked(int tid, CacheId c, std::uint64_t now) const;
  bool busy(CacheId c, std::uint64_t now) const {
    auto i = static_cast<int>(c);
    return in_flight_[i] && now >= busy_from_[i] && now <= busy_until_[i];
  }

  /// Arbitrates between the eligible requesters of cache `c`.
  int grant(CacheId c, std::array<bool, 2> requests);
  const ArbiterState& arbiter(CacheId c) const { return arbiters_[static_cast<int>(c)]; }

  /// Serves a granted request. The caller must have won arbitration and the
  /// unit must not be blocked for `req.tid`.
  MemResponse access(const MemRequest& req, std::uint64_t now);

  void lock(int tid);
  void unlock(int tid);
  std::optional<int> lock_holder() const { return lock_holder_; }

  // Host-side access that bypasses timing.
  void load_image(const isa::Program& p, bool invalidate = true);
  std::uint32_t read_word(std::uint32_t addr) const { return backing_.read_u32(addr); }
  void write_word(std::uint32_t addr, std::uint32_t v);
  void invalidate_caches();

  bool caches_coherent() const;

  std::uint64_t grants() const { return grants_; }
  std::uint64_t responses() const { return responses_; }
  std::uint64_t grants_while_blocked() const { return grants_while_blocked_; }

  void add_observer(std::function<void(const AccessEvent&)> fn) { observers_.push_back(std::move(fn)); }

 private:
  void start_miss(CacheId c, int tid, std::uint64_t now, std::uint32_t penalty);

  MemUnitConfig cfg_;
  Memory backing_;
  std::array<Cache, 2> caches_;
  std::array<ArbiterState, 2> arbiters_{};
  std::array<bool, 2> in_flight_{};
  std::array<std::uint64_t, 2> busy_from_{};
  std::array<std::uint64_t, 2> busy_until_{};
  std::array<int, 2> busy_owner_{};
  std::optional<int> lock_holder_;
  std::uint64_t grants_ = 0;
  std::uint64_t responses_ = 0;
  std::uint64_t grants_while_blocked_ = 0;
  std::vector<std::function<void(const AccessEvent&)>> observers_;
};

}  // namespace ajt::mem
