#include "ajt/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace ajt::config {

using mem::ConfigError;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string, std::less<>>& allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  for (const auto& [k, _] : j.items())
    if (!allowed.contains(k)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, k));
}

std::uint64_t get_uint(const json& j, std::string_view key, std::uint64_t max) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number_unsigned())
    throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
  auto u = v.get<std::uint64_t>();
  if (u > max) throw ConfigError(fmt::format("'{}' = {} is out of range", key, u));
  return u;
}

void read_cache(const json& j, std::string_view name, mem::CacheConfig& c) {
  reject_unknown(j, {"size", "assoc", "miss_penalty"}, name);
  constexpr auto u32 = std::numeric_limits<std::uint32_t>::max();
  if (j.contains("size")) c.size_bytes = static_cast<std::uint32_t>(get_uint(j, "size", u32));
  if (j.contains("assoc")) c.assoc = static_cast<std::uint32_t>(get_uint(j, "assoc", u32));
  if (j.contains("miss_penalty")) c.miss_penalty = static_cast<std::uint32_t>(get_uint(j, "miss_penalty", 100000));
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.what()));
  }
}

}  // namespace

core::CoreConfig from_json(const json& j) {
  core::CoreConfig c;
  if (j.is_null()) return c;
  reject_unknown(j,
                 {"icache", "dcache", "mispredict_penalty", "int_div_cycles", "channel_base", "trace", "blocking",
                  "max_cycles"},
                 "config");
  constexpr auto u32 = std::numeric_limits<std::uint32_t>::max();
  if (j.contains("icache")) read_cache(j["icache"], "icache", c.memory.icache);
  if (j.contains("dcache")) read_cache(j["dcache"], "dcache", c.memory.dcache);
  if (j.contains("mispredict_penalty"))
    c.pipeline.mispredict_penalty = static_cast<std::uint32_t>(get_uint(j, "mispredict_penalty", 1000));
  if (j.contains("int_div_cycles")) {
    c.pipeline.int_div_cycles = static_cast<std::uint32_t>(get_uint(j, "int_div_cycles", 1000));
    if (c.pipeline.int_div_cycles == 0) throw ConfigError("'int_div_cycles' must be at least 1");
  }
  if (j.contains("channel_base")) {
    c.channel_base = static_cast<std::uint32_t>(get_uint(j, "channel_base", u32));
    if (c.channel_base % 64 != 0 || c.channel_base + 64 > c.memory.memory_bytes)
      throw ConfigError("'channel_base' must be 64-byte aligned and inside memory");
  }
  if (j.contains("trace")) {
    if (!j["trace"].is_boolean()) throw ConfigError("'trace' must be true or false");
    c.trace = j["trace"].get<bool>();
  }
  if (j.contains("blocking")) {
    const auto& b = j["blocking"];
    if (b == "unified") c.memory.blocking = mem::Blocking::Unified;
    else if (b == "per_cache") c.memory.blocking = mem::Blocking::PerCache;
    else throw ConfigError("'blocking' must be \"unified\" or \"per_cache\"");
  }
  if (j.contains("max_cycles")) {
    c.max_cycles = get_uint(j, "max_cycles", std::numeric_limits<std::uint64_t>::max());
    if (c.max_cycles == 0) throw ConfigError("'max_cycles' must be at least 1");
  }
  return c;
}

core::CoreConfig parse(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON: {}", e.what()));
  }
  return from_json(j);
}

core::CoreConfig load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::optional<std::string> env_path() {
  const char* p = std::getenv(kEnvVar);
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::string(p);
}

core::CoreConfig resolve(const std::optional<std::string>& explicit_path) {
  if (explicit_path) return load_file(*explicit_path);
  if (auto p = env_path()) return load_file(*p);
  return {};
}

nlohmann::ordered_json to_json(const core::CoreConfig& c) {
  auto cache = [](const mem::CacheConfig& k) {
    nlohmann::ordered_json j;
    j["size"] = k.size_bytes;
    j["assoc"] = k.assoc;
    j["line"] = k.line_bytes;
    j["hit_cycles"] = k.hit_cycles;
    j["miss_penalty"] = k.miss_penalty;
    return j;
  };
  nlohmann::ordered_json j;
  j["icache"] = cache(c.memory.icache);
  j["dcache"] = cache(c.memory.dcache);
  j["blocking"] = c.memory.blocking == mem::Blocking::Unified ? "unified" : "per_cache";
  j["memory_bytes"] = c.memory.memory_bytes;
  j["mispredict_penalty"] = c.pipeline.mispredict_penalty;
  j["int_div_cycles"] = c.pipeline.int_div_cycles;
  j["fp_short_latency"] = c.pipeline.fp_short_latency;
  j["fp_long_double"] = c.pipeline.fp_long_double;
  j["fp_long_single"] = c.pipeline.fp_long_single;
  j["channel_base"] = c.channel_base;
  j["max_cycles"] = c.max_cycles;
  j["trace"] = c.trace;
  return j;
}

std::string hash(const core::CoreConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace ajt::config
