#include "ajt/scenario.hpp"

namespace ajt::scenario {

std::string_view name(Scenario s) {
  switch (s) {
    case Scenario::Single: return "single";
    case Scenario::Inactive: return "inactive";
    case Scenario::Spinning: return "spinning";
    case Scenario::Dual: return "dual";
  }
  return "?";
}

std::optional<Scenario> parse(std::string_view s) {
  for (auto sc : kAll)
    if (name(sc) == s) return sc;
  return std::nullopt;
}

core::CoreConfig configure(const core::CoreConfig& base, Scenario s) {
  auto cfg = base;
  cfg.thread1_daemon = true;
  switch (s) {
    case Scenario::Single:
      cfg.n_threads = 1;
      cfg.thread1_mode = core::Thread1Mode::Inactive;
      break;
    case Scenario::Inactive:
      cfg.n_threads = 2;
      cfg.thread1_mode = core::Thread1Mode::Inactive;
      break;
    case Scenario::Spinning:
      cfg.n_threads = 2;
      cfg.thread1_mode = core::Thread1Mode::Spinning;
      break;
    case Scenario::Dual:
      cfg.n_threads = 2;
      cfg.thread1_mode = core::Thread1Mode::Active;
      break;
  }
  return cfg;
}

core::RunResult run(const workloads::Workload& w, Scenario s, const core::CoreConfig& base) {
  auto cfg = configure(base, s);
  cfg.channel_base = w.channel_base;
  const auto& prog = s == Scenario::Dual ? w.dual.program : w.single.program;
  const std::array<isa::Program, 2> images = {prog, w.data};
  std::array<std::optional<std::uint32_t>, 2> entries;
  entries[0] = prog.symbol("_start");
  if (cfg.n_threads == 2) entries[1] = prog.symbol("_thread1");
  return core::run(images, cfg, entries);
}

}  // namespace ajt::scenario
