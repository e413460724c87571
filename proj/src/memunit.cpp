#include "ajt/memunit.hpp"

#include <fmt/format.h>

#include <bit>
#include <cassert>
#include <cstring>

namespace ajt::mem {

std::string_view kind_name(ReqKind k) {
  switch (k) {
    case ReqKind::IFetch: return "ifetch";
    case ReqKind::Load: return "load";
    case ReqKind::Store: return "store";
    case ReqKind::Tas: return "tas";
  }
  return "?";
}

void CacheConfig::validate() const {
  auto pow2 = [](std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; };
  if (!pow2(size_bytes) || size_bytes < 4096 || size_bytes > 32768) {
    throw ConfigError(fmt::format("cache size {} must be a power of two in 4K..32K", size_bytes));
  }
  if (assoc < 1 || assoc > 8) throw ConfigError(fmt::format("associativity {} must be in 1..8", assoc));
  if (line_bytes != 64) throw ConfigError("cache line size is fixed at 64 bytes");
  if (size_bytes % (assoc * line_bytes) != 0 || !pow2(num_sets())) {
    throw ConfigError(fmt::format("size {} / ({} ways x 64) is not a power-of-two set count", size_bytes, assoc));
  }
  if (hit_cycles != 1) throw ConfigError("hit latency is fixed at one cycle");
  if (miss_penalty < 1) throw ConfigError("miss penalty must be at least one cycle");
}

// ---------------------------------------------------------------------------
// Memory

Memory::Memory(std::uint32_t size_bytes) : bytes_(size_bytes, 0) {}

std::uint64_t Memory::read(std::uint32_t addr, unsigned width) const {
  std::uint64_t v = 0;
  std::memcpy(&v, bytes_.data() + addr, width);
  return v;
}

void Memory::write(std::uint32_t addr, unsigned width, std::uint64_t value) {
  std::memcpy(bytes_.data() + addr, &value, width);
}

void Memory::check(std::uint32_t addr, std::uint32_t len) const {
  if (!mapped(addr, len)) throw BusError(fmt::format("unmapped address 0x{:08x}", addr));
}

std::uint8_t Memory::read_u8(std::uint32_t addr) const {
  check(addr, 1);
  return bytes_[addr];
}
std::uint32_t Memory::read_u32(std::uint32_t addr) const {
  check(addr, 4);
  return static_cast<std::uint32_t>(read(addr, 4));
}
std::uint64_t Memory::read_u64(std::uint32_t addr) const {
  check(addr, 8);
  return read(addr, 8);
}
double Memory::read_f64(std::uint32_t addr) const { return std::bit_cast<double>(read_u64(addr)); }
void Memory::write_u8(std::uint32_t addr, std::uint8_t v) {
  check(addr, 1);
  bytes_[addr] = v;
}
void Memory::write_u32(std::uint32_t addr, std::uint32_t v) {
  check(addr, 4);
  write(addr, 4, v);
}
void Memory::write_u64(std::uint32_t addr, std::uint64_t v) {
  check(addr, 8);
  write(addr, 8, v);
}
void Memory::write_f64(std::uint32_t addr, double v) { write_u64(addr, std::bit_cast<std::uint64_t>(v)); }

void Memory::load(const isa::Program& p) {
  check(p.base_address, static_cast<std::uint32_t>(p.words.size() * 4));
  for (std::size_t i = 0; i < p.words.size(); ++i) {
    write(p.base_address + static_cast<std::uint32_t>(4 * i), 4, p.words[i]);
  }
}

// ---------------------------------------------------------------------------
// Cache

std::uint32_t nmru_victim(std::span<const Way> set, std::uint32_t mru_way) {
  for (std::uint32_t w = 0; w < set.size(); ++w) {
    if (!set[w].valid) return w;
  }
  if (set.size() == 1) return 0;
  return mru_way == 0 ? 1 : 0;
}

Cache::Cache(const CacheConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  sets_ = cfg_.num_sets();
  line_shift_ = static_cast<unsigned>(std::countr_zero(cfg_.line_bytes));
  set_shift_ = static_cast<unsigned>(std::countr_zero(sets_));
  ways_.assign(static_cast<std::size_t>(sets_) * cfg_.assoc, Way{});
  mru_.assign(sets_, 0);
  data_.assign(static_cast<std::size_t>(sets_) * cfg_.assoc * cfg_.line_bytes, 0);
}

Cache::Probe Cache::probe(std::uint32_t addr) const {
  Probe p;
  p.set = set_of(addr);
  const auto tag = tag_of(addr);
  const Way* w = ways_.data() + static_cast<std::size_t>(p.set) * cfg_.assoc;
  for (std::uint32_t i = 0; i < cfg_.assoc; ++i) {
    if (w[i].valid && w[i].tag == tag) {
      p.hit = true;
      p.way = i;
      return p;
    }
  }
  return p;
}

std::uint32_t Cache::fill(std::uint32_t addr, const Memory& backing) {
  const auto set = set_of(addr);
  const auto way = nmru_victim(set_ways(set), mru_[set]);
  auto& w = ways_[static_cast<std::size_t>(set) * cfg_.assoc + way];
  w.valid = true;
  w.tag = tag_of(addr);
  const auto line_addr = addr & ~(cfg_.line_bytes - 1);
  std::memcpy(line(set, way), backing.bytes().data() + line_addr, cfg_.line_bytes);
  return way;
}

std::uint64_t Cache::read(const Probe& p, std::uint32_t addr, unsigned width) const {
  std::uint64_t v = 0;
  std::memcpy(&v, line(p.set, p.way) + (addr & (cfg_.line_bytes - 1)), width);
  return v;
}

void Cache::write(const Probe& p, std::uint32_t addr, unsigned width, std::uint64_t value) {
  std::memcpy(line(p.set, p.way) + (addr & (cfg_.line_bytes - 1)), &value, width);
}

void Cache::update_if_present(std::uint32_t addr, unsigned width, std::uint64_t value) {
  auto p = probe(addr);
  if (p.hit) write(p, addr, width, value);
}

void Cache::invalidate_all() {
  for (auto& w : ways_) w = Way{};
  std::fill(mru_.begin(), mru_.end(), 0);
}

bool Cache::coherent_with(const Memory& backing) const {
  for (std::uint32_t s = 0; s < sets_; ++s) {
    for (std::uint32_t w = 0; w < cfg_.assoc; ++w) {
      const auto& way = ways_[static_cast<std::size_t>(s) * cfg_.assoc + w];
      if (!way.valid) continue;
      const auto addr = ((way.tag << set_shift_) | s) << line_shift_;
      if (std::memcmp(line(s, w), backing.bytes().data() + addr, cfg_.line_bytes) != 0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Arbitration

int arbiter_grant(std::array<bool, 2> requests, ArbiterState& st) {
  // priority only moves on a contested cycle
  if (requests[0] && requests[1]) {
    st.last_granted = 1 - st.last_granted;
    return st.last_granted;
  }
  if (requests[0]) return 0;
  if (requests[1]) return 1;
  return -1;
}

// ---------------------------------------------------------------------------
// MemoryUnit

MemoryUnit::MemoryUnit(const MemUnitConfig& cfg)
    : cfg_(cfg), backing_(cfg.memory_bytes), caches_{Cache(cfg.icache), Cache(cfg.dcache)} {}

MemoryUnit::Block MemoryUnit::blocked(int tid, CacheId c, std::uint64_t now) const {
  if (lock_holder_ && *lock_holder_ != tid) return Block::Locked;
  auto check = [&](int i) -> Block {
    if (in_flight_[i] && now >= busy_from_[i] && now <= busy_until_[i]) {
      return busy_owner_[i] == tid ? Block::OwnMiss : Block::OtherMiss;
    }
    return Block::None;
  };
  if (auto b = check(static_cast<int>(c)); b != Block::None) return b;
  if (cfg_.blocking == Blocking::Unified) return check(1 - static_cast<int>(c));
  return Block::None;
}

int MemoryUnit::grant(CacheId c, std::array<bool, 2> requests) {
  int g = arbiter_grant(requests, arbiters_[static_cast<int>(c)]);
  if (g >= 0) ++grants_;
  return g;
}

void MemoryUnit::start_miss(CacheId c, int tid, std::uint64_t now, std::uint32_t penalty) {
  auto i = static_cast<int>(c);
  in_flight_[i] = true;
  busy_from_[i] = now;
  busy_until_[i] = now + penalty;
  busy_owner_[i] = tid;
}

MemResponse MemoryUnit::access(const MemRequest& req, std::uint64_t now) {
  const auto c = req.cache();
  if (blocked(req.tid, c, now) != Block::None) ++grants_while_blocked_;
  ++responses_;
  MemResponse resp;
  resp.ready_at = now;
  const unsigned width = req.kind == ReqKind::Tas ? 1u : req.width;
  assert(req.addr % width == 0);
  if (!backing_.mapped(req.addr, width)) {
    resp.fault = true;
    return resp;
  }
  auto& cache = caches_[static_cast<int>(c)];
  auto p = cache.probe(req.addr);
  resp.hit = p.hit;
  if (!p.hit) {
    p.way = cache.fill(req.addr, backing_);
    p.hit = true;
    const auto penalty = cache.config().miss_penalty;
    resp.cycles_waited = penalty;
    resp.ready_at = now + penalty;
    start_miss(c, req.tid, now, penalty);
  }
  cache.touch(p.set, p.way);

  std::uint64_t observed = 0;
  switch (req.kind) {
    case ReqKind::IFetch:
    case ReqKind::Load:
      resp.data = cache.read(p, req.addr, width);
      observed = resp.data;
      break;
    case ReqKind::Store:
      cache.write(p, req.addr, width, req.data);
      backing_.write(req.addr, width, req.data);
      caches_[static_cast<int>(CacheId::I)].update_if_present(req.addr, width, req.data);
      observed = req.data;
      break;
    case ReqKind::Tas:
      assert(lock_holder_ == req.tid);
      resp.data = cache.read(p, req.addr, 1);
      cache.write(p, req.addr, 1, 1);
      backing_.write(req.addr, 1, 1);
      caches_[static_cast<int>(CacheId::I)].update_if_present(req.addr, 1, 1);
      observed = resp.data;
      break;
  }
  if (!observers_.empty()) {
    AccessEvent ev{now, req.tid, req.kind, req.addr, static_cast<std::uint8_t>(width), observed, resp.hit};
    for (auto& fn : observers_) fn(ev);
  }
  return resp;
}

void MemoryUnit::lock(int tid) {
  if (lock_holder_ && *lock_holder_ != tid) {
    throw std::logic_error(fmt::format("thread {} locked the memory unit while thread {} holds it", tid, *lock_holder_));
  }
  lock_holder_ = tid;
}

void MemoryUnit::unlock(int tid) {
  if (!lock_holder_ || *lock_holder_ != tid) {
    throw std::logic_error(fmt::format("thread {} unlocked a memory unit it does not hold", tid));
  }
  lock_holder_.reset();
}

void MemoryUnit::load_image(const isa::Program& p, bool invalidate) {
  backing_.load(p);
  if (invalidate) invalidate_caches();
}

void MemoryUnit::write_word(std::uint32_t addr, std::uint32_t v) {
  backing_.write_u32(addr, v);
  for (auto& c : caches_) c.update_if_present(addr, 4, v);
}

void MemoryUnit::invalidate_caches() {
  for (auto& c : caches_) c.invalidate_all();
}

bool MemoryUnit::caches_coherent() const {
  return caches_[0].coherent_with(backing_) && caches_[1].coherent_with(backing_);
}

}  // namespace ajt::mem
