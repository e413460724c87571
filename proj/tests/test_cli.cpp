#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ajt/isa.hpp"

namespace fs = std::filesystem;

namespace {

struct Proc {
  int code = -1;
  std::string out;
};

// Runs ajtsim with `args`; stdout captured, stderr discarded.
Proc ajtsim(const std::string& args) {
  const std::string cmd = std::string(AJTSIM_PATH) + " " + args + " 2>/dev/null";
  Proc p;
  FILE* f = ::popen(cmd.c_str(), "r");
  REQUIRE(f);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
  const int st = ::pclose(f);
  p.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return p;
}

fs::path scratch(const std::string& name) {
  auto d = fs::path(AJT_TEST_TMP) / "cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  CHECK(ajtsim("").code == 1);
  CHECK(ajtsim("frobnicate").code == 1);
  CHECK(ajtsim("run").code == 1);
  CHECK(ajtsim("--help").code == 0);
  CHECK(ajtsim("--version").out.find("1.0.0") != std::string::npos);
}

TEST_CASE("asm writes an image that disassembles and reassembles") {
  const auto d = scratch("asm");
  put(d / "p.s", "_start:\n  addi r1, r0, 5\n  addi r2, r1, 7\n  halt\n");
  REQUIRE(ajtsim("asm " + (d / "p.s").string()).code == 0);
  const auto img = slurp(d / "p.bin");
  CHECK(img.substr(0, 4) == "AJTL");
  auto dis = ajtsim("asm --disasm " + (d / "p.bin").string());
  REQUIRE(dis.code == 0);
  put(d / "q.s", dis.out);
  REQUIRE(ajtsim("asm " + (d / "q.s").string() + " -o " + (d / "q.bin").string()).code == 0);
  CHECK(slurp(d / "q.bin") == img);
}

TEST_CASE("assembly errors exit 2") {
  const auto d = scratch("asmerr");
  put(d / "bad.s", "_start:\n  frob r1, r2\n  halt\n");
  CHECK(ajtsim("asm " + (d / "bad.s").string()).code == 2);
  CHECK(ajtsim("run " + (d / "bad.s").string()).code == 2);
  CHECK(ajtsim("asm " + (d / "missing.s").string()).code == 2);
}

TEST_CASE("run prints stats; halt-only retires one instruction") {
  const auto d = scratch("halt");
  put(d / "h.s", "_start:\n  halt\n");
  auto p = ajtsim("run " + (d / "h.s").string());
  REQUIRE(p.code == 0);
  auto j = nlohmann::json::parse(p.out);
  CHECK(j["exit"]["kind"] == "halted");
  CHECK(j["stats"]["threads"][0]["instructions_retired"] == 1);
}

TEST_CASE("faults and cycle limits exit 3") {
  const auto d = scratch("fault");
  put(d / "f.s", "_start:\n  addi r1, r0, 2\n  lw r2, 0(r1)\n  halt\n");
  CHECK(ajtsim("run " + (d / "f.s").string()).code == 3);
  put(d / "loop.s", "_start:\n  j _start\n");
  CHECK(ajtsim("run --max-cycles 1000 " + (d / "loop.s").string()).code == 3);
}

TEST_CASE("bad config exits 2; an empty one means defaults") {
  const auto d = scratch("cfg");
  put(d / "h.s", "_start:\n  halt\n");
  put(d / "bad.json", R"({"dcache": {"assoc": 3}})");
  put(d / "unknown.json", R"({"l3": 1})");
  put(d / "empty.json", "");
  const auto h = (d / "h.s").string();
  CHECK(ajtsim("run --config " + (d / "bad.json").string() + " " + h).code == 2);
  CHECK(ajtsim("run --config " + (d / "unknown.json").string() + " " + h).code == 2);
  CHECK(ajtsim("run --config " + (d / "empty.json").string() + " " + h).code == 0);
  CHECK(ajtsim("run --scenario sideways " + h).code == 1);
}

TEST_CASE("emitted workload: stats are byte-identical and single equals inactive") {
  const auto d = scratch("emit");
  REQUIRE(ajtsim("emit --workloads daxpy --dir " + d.string() + R"( --sizes '{"daxpy":{"n":64}}')").code == 0);
  const auto w = d / "daxpy";
  auto m = nlohmann::json::parse(slurp(w / "manifest.json"));
  CHECK(m["files"]["data_image"] == "data.bin");
  const auto imgs = (w / "single.bin").string() + " " + (w / "data.bin").string();
  const auto a = ajtsim("run --scenario single --stats " + (d / "a.json").string() + " " + imgs);
  const auto b = ajtsim("run --scenario single --stats " + (d / "b.json").string() + " " + imgs);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
  const auto c = ajtsim("run --scenario inactive " + imgs);
  REQUIRE(c.code == 0);
  const auto ja = nlohmann::json::parse(slurp(d / "a.json")), jc = nlohmann::json::parse(c.out);
  CHECK(ja["stats"]["total_cycles"] == jc["stats"]["total_cycles"]);
  // images carry no symbols; the manifest gives the entry addresses
  const std::uint32_t e1 = m["entry_addresses"]["dual"]["thread1"];
  const auto dual = ajtsim("run --scenario dual --entry1 " + std::to_string(e1) + " " + (w / "dual.bin").string() +
                           " " + (w / "data.bin").string());
  REQUIRE(dual.code == 0);
  CHECK(nlohmann::json::parse(dual.out)["stats"]["total_cycles"] < ja["stats"]["total_cycles"]);
}

TEST_CASE("trace lines") {
  const auto d = scratch("trace");
  put(d / "t.s", "_start:\n  addi r1, r0, 1\n  halt\n");
  REQUIRE(ajtsim("run --trace " + (d / "t.txt").string() + " " + (d / "t.s").string()).code == 0);
  std::istringstream in(slurp(d / "t.txt"));
  std::string line;
  int retires = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string cycle, tid, pc, event, cause, op;
    f >> cycle >> tid >> pc >> event >> cause >> op;
    CHECK(pc.size() == 8);
    if (event == "retire") {
      ++retires;
      CHECK(cause == "-");
    }
  }
  CHECK(retires == 2);
}

TEST_CASE("bench writes csv and json") {
  const auto d = scratch("bench");
  const auto p = ajtsim("bench --workloads daxpy,mutexes --out " + (d / "r.json").string() +
                        R"( --sizes '{"daxpy":{"n":64},"mutexes":{"increments":64}}')");
  REQUIRE(p.code == 0);
  CHECK(p.out.rfind("workload,single,inactive,spinning,dual,speedup\n", 0) == 0);
  auto j = nlohmann::json::parse(slurp(d / "r.json"));
  CHECK(j["workloads"].size() == 2);
  CHECK(ajtsim("bench --workloads nosuch").code != 0);
}

}
