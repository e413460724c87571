#include <doctest.h>

#include <fmt/format.h>

#include "ajt/assembler.hpp"
#include "ajt/scenario.hpp"
#include "ajt/sidekick.hpp"
#include "helpers.hpp"

using namespace ajt;
using namespace ajt::sidekick;

namespace {

constexpr std::uint32_t kCh = 0x10000;

core::CoreConfig sidekick_config() {
  core::CoreConfig cfg;
  cfg.n_threads = 2;
  cfg.thread1_mode = core::Thread1Mode::Active;
  cfg.thread1_daemon = true;
  cfg.max_cycles = 10'000'000;
  cfg.channel_base = kCh;
  return cfg;
}

struct Run {
  isa::Program prog;
  core::RunResult result;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> retired0;  // thread 0 (pc, cycle)

  std::uint64_t at(std::string_view label, int occurrence = 0) const {
    for (auto [pc, c] : retired0)
      if (pc == prog.symbol(label) && occurrence-- == 0) return c;
    FAIL("not retired: ", label);
    return 0;
  }
};

// `main` is thread 0's program, `tasks` the thread-1 routines named in `table`.
Run run_sidekick(const std::string& main, const std::string& tasks, const TaskTable& table,
                 const DispatcherOptions& opt = {}) {
  Run r;
  r.prog = assembler::assemble_or_throw("_start:\n" + main + "  halt\n" + tasks + emit_dispatcher(table, kCh, opt) +
                                        ".org 0x8000\nresult: .space 64\n");
  core::Core c(sidekick_config());
  c.load(r.prog);
  c.set_entry(0, r.prog.symbol("_start"));
  c.set_entry(1, r.prog.symbol("_thread1"));
  ChannelProbe probe(c, kCh);
  c.set_retire_hook([&](int tid, std::uint32_t pc, const isa::Instruction&, std::uint64_t cyc) {
    if (tid == 0) r.retired0.push_back({pc, cyc});
  });
  r.result = c.run();
  CHECK(probe.violations() == 0);
  return r;
}

std::string invoke(int fn, std::vector<std::string> regs = {}) { return emit_invoke(kCh, fn, regs); }

}  // namespace

TEST_SUITE("sidekick") {

TEST_CASE("channel layout fits one line") {
  CHECK(kRetOffset + 4 * kNumRets <= kChannelBytes);
  CHECK(kArgsOffset + 4 * kNumArgs == kRetOffset);
  CHECK_THROWS(emit_dispatcher({}, kCh + 4));
}

TEST_CASE("no-op round trip leaves the channel idle") {
  auto r = run_sidekick(invoke(0) + emit_wait(kCh, "w") + "  la r1, result\n  lw r5, 0(r18)\n  sw r5, 0(r1)\n", "",
                        {});
  REQUIRE(r.result.ok());
  CHECK(r.result.memory->read_u32(kCh) == kIdle);
  CHECK(r.result.stats.threads[0].atomics == 0);
  CHECK(r.result.stats.threads[1].atomics == 0);
}

TEST_CASE("task arguments and return values") {
  const std::string tasks = "sum3:\n  add r2, r4, r5\n  add r2, r2, r6\n  sub r3, r4, r5\n  ret\n";
  auto r = run_sidekick("  li r4, 100\n  li r5, 20\n  li r6, 3\n" + invoke(1, {"r4", "r5", "r6"}) +
                            emit_wait(kCh, "w") + "  la r1, result\n  sw r2, 0(r1)\n  sw r3, 4(r1)\n",
                        tasks, {{"sum3"}});
  REQUIRE(r.result.ok());
  CHECK(r.result.memory->read_u32(0x8000) == 123);
  CHECK(r.result.memory->read_u32(0x8004) == 80);
}

TEST_CASE("unknown function id returns the error sentinel") {
  auto r = run_sidekick(invoke(7) + emit_wait(kCh, "w") + "  la r1, result\n  sw r2, 0(r1)\n", "", {});
  REQUIRE(r.result.ok());
  CHECK(r.result.memory->read_u32(0x8000) == kErrorSentinel);
  CHECK(r.result.memory->read_u32(kCh) == kIdle);
}

TEST_CASE("invoke rejects the reserved registers") {
  std::vector<std::string> bad{"r18"};
  CHECK_THROWS(emit_invoke(kCh, 1, bad));
  std::vector<std::string> nine(9, "r4");
  CHECK_THROWS(emit_invoke(kCh, 1, nine));
}

TEST_CASE("round trip is constant and under 100 cycles") {
  auto rt = measure_roundtrip(sidekick_config(), 1000);
  REQUIRE(rt.samples.size() == 1000);
  CHECK(rt.min == rt.max);
  CHECK(rt.median == rt.min);
  CHECK(rt.max < 100);
  CHECK_THROWS(measure_roundtrip(sidekick_config(), 0));
}

TEST_CASE("round trip does not depend on argument values") {
  auto cost = [](int a, int b) {
    auto main = fmt::format("  li r16, 20\nl:\n  li r4, {}\n  li r5, {}\nbeg: nop\n", a, b) + invoke(0, {"r4", "r5"}) +
                emit_wait(kCh, "w") + "fin: nop\n  addi r16, r16, -1\n  bne r16, r0, l\n";
    auto r = run_sidekick(main, "", {});
    REQUIRE(r.result.ok());
    return r.result.stats.total_cycles;
  };
  CHECK(cost(0, 0) == cost(12345, -7));
  CHECK(cost(1, 2) == cost(0x7fff, 0x1234));
}

TEST_CASE("an idle dispatcher runs from the instruction buffer") {
  auto spin = [](int n) {
    auto r = run_sidekick(fmt::format("  li r1, {}\nl: addi r1, r1, -1\n  bne r1, r0, l\n", n), "", {});
    REQUIRE(r.result.ok());
    return r.result.stats.threads[1];
  };
  auto a = spin(1000), b = spin(8000);
  CHECK(a.icache.accesses == b.icache.accesses);
  CHECK(b.instructions_retired > a.instructions_retired);
  CHECK(b.ibuf_hits > a.ibuf_hits);
}

TEST_CASE("dispatcher loop fits the instruction buffer") {
  auto p = assembler::assemble_or_throw(emit_dispatcher({{"a", "b", "c"}}, kCh) + "a:\nb:\nc: ret\n");
  CHECK(p.words.size() <= 128);
}

TEST_CASE("thread 0 overlaps its own work with the task") {
  // thread 1 spins T iterations, thread 0 spins K between invoke and wait
  const std::string tasks = "spin:\n  mv r1, r4\nsl: addi r1, r1, -1\n  bne r1, r0, sl\n  ret\n";
  const auto rt = measure_roundtrip(sidekick_config(), 10).max;
  for (auto [k, t] : std::vector<std::pair<int, int>>{{100, 1000}, {1000, 100}, {500, 500}}) {
    // second pass is measured, with warm caches
    auto main = fmt::format("  li r15, 2\nagain:\n  li r4, {}\nbeg: nop\n", t) + invoke(1, {"r4"}) +
                fmt::format("  li r1, {}\nml: addi r1, r1, -1\n  bne r1, r0, ml\n", k) + emit_wait(kCh, "w") +
                "fin: nop\n  addi r15, r15, -1\n  bne r15, r0, again\n";
    auto both = run_sidekick(main, tasks, {{"spin"}});
    REQUIRE(both.result.ok());
    const auto elapsed = both.at("fin", 1) - both.at("beg", 1);
    // a loop iteration is two cycles once warm
    const auto work = static_cast<std::uint64_t>(2 * std::max(k, t));
    INFO("K=", k, " T=", t, " elapsed=", elapsed);
    CHECK(elapsed <= work + rt + 40);
    CHECK(elapsed >= work);
  }
}

TEST_CASE("workload runs keep the channel discipline and never lock") {
  for (const auto& name : workloads::names()) {
    auto w = testing::build_small(name);
    for (auto s : {scenario::Scenario::Spinning, scenario::Scenario::Dual}) {
      auto cfg = scenario::configure({}, s);
      cfg.channel_base = w.channel_base;
      const auto& prog = s == scenario::Scenario::Dual ? w.dual.program : w.single.program;
      core::Core c(cfg);
      c.load(prog);
      c.load(w.data);
      c.set_entry(0, prog.symbol("_start"));
      c.set_entry(1, prog.symbol("_thread1"));
      ChannelProbe probe(c, w.channel_base);
      auto r = c.run();
      INFO(name, " ", scenario::name(s));
      REQUIRE(r.ok());
      CHECK(probe.violations() == 0);
      if (s == scenario::Scenario::Dual) CHECK(probe.requests() > 0);
      else CHECK(probe.requests() == 0);
      if (name != "mutexes") {
        CHECK(r.stats.threads[0].atomics == 0);
        CHECK(r.stats.threads[1].atomics == 0);
      }
    }
  }
}

TEST_CASE("args are published before the request under every poll phase") {
  const std::string tasks = "echo:\n  mv r2, r4\n  mv r3, r11\n  ret\n";
  for (std::uint32_t delay = 0; delay <= 9; ++delay) {
    std::string main = "  la r12, result\n  li r13, 6\nl:\n";
    main += "  addi r4, r13, 100\n  addi r11, r13, 200\n" + invoke(1, {"r4", "r5", "r6", "r7", "r8", "r9", "r10", "r11"}) +
            emit_wait(kCh, "w") + "  sw r2, 0(r12)\n  sw r3, 4(r12)\n  addi r12, r12, 8\n  addi r13, r13, -1\n"
            "  bne r13, r0, l\n";
    auto r = run_sidekick(main, tasks, {{"echo"}}, DispatcherOptions{delay});
    REQUIRE(r.result.ok());
    for (int i = 0; i < 6; ++i) {
      CHECK(r.result.memory->read_u32(0x8000 + 8 * i) == static_cast<std::uint32_t>(106 - i));
      CHECK(r.result.memory->read_u32(0x8004 + 8 * i) == static_cast<std::uint32_t>(206 - i));
    }
  }
}

}
