#pragma once

// The four measurement configurations of a workload:
//   single    one hardware thread, single-variant image
//   inactive  two threads, thread 1 never starts
//   spinning  two threads, thread 1 polls the side-kick channel but is never asked
//   dual      two threads, dual-variant image, thread 1 serves tasks

#include <array>
#include <optional>
#include <string_view>

#include "ajt/core.hpp"
#include "ajt/workloads.hpp"

namespace ajt::scenario {

enum class Scenario : std::uint8_t { Single, Inactive, Spinning, Dual };
inline constexpr std::array<Scenario, 4> kAll = {Scenario::Single, Scenario::Inactive, Scenario::Spinning,
                                                 Scenario::Dual};

std::string_view name(Scenario s);
std::optional<Scenario> parse(std::string_view s);

/// `base` with thread count and thread-1 mode set for `s`.
core::CoreConfig configure(const core::CoreConfig& base, Scenario s);

/// Runs one scenario of a workload: loads the matching variant and the data
/// image, entry points `_start` / `_thread1`.
core::RunResult run(const workloads::Workload& w, Scenario s, const core::CoreConfig& base);

}  // namespace ajt::scenario
