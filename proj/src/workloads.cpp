#include "ajt/workloads.hpp"

#include <map>

#include "wl_common.hpp"

namespace ajt::workloads {

using detail::merge_sizes;
using Json = nlohmann::ordered_json;

namespace {

struct Entry {
  Json defaults;
  std::function<Workload(const Json&, const BuildOptions&)> make;
};

const std::map<std::string, Entry, std::less<>>& registry() {
  static const std::map<std::string, Entry, std::less<>> r = {
      {"matrix_mult",
       {{{"n", 128}, {"reps", 1}},
        [](const Json& s, const BuildOptions& o) { return build_matrix_mult(s["n"], s["reps"], o); }}},
      {"dot_product",
       {{{"n", 1024}, {"reps", 16}},
        [](const Json& s, const BuildOptions& o) { return build_dot_product(s["n"], s["reps"], o); }}},
      {"fft",
       {{{"n", 4096}, {"split", true}, {"input", "random"}, {"block", 256}, {"parallel_combine", false}},
        [](const Json& s, const BuildOptions& o) {
          const std::string in = s["input"];
          FftInput kind = FftInput::Random;
          if (in == "zeros") kind = FftInput::Zeros;
          else if (in == "impulse") kind = FftInput::Impulse;
          else if (in != "random") throw std::invalid_argument("fft: input must be random, zeros or impulse");
          return build_fft(s["n"], s["split"], kind, s["block"], s["parallel_combine"], o);
        }}},
      {"merge_sort",
       {{{"n", 1024}, {"reps", 1}},
        [](const Json& s, const BuildOptions& o) { return build_merge_sort(s["n"], s["reps"], o); }}},
      {"bellman_ford",
       {{{"nodes", 64}, {"edges", 128}, {"reps", 1}},
        [](const Json& s, const BuildOptions& o) {
          return build_bellman_ford(s["nodes"], s["edges"], s["reps"], o);
        }}},
      {"daxpy",
       {{{"n", 1024}, {"reps", 1}, {"a", 3.0}},
        [](const Json& s, const BuildOptions& o) { return build_daxpy(s["n"], s["reps"], s["a"], o); }}},
      {"mem_copy",
       {{{"bytes", 32768}, {"block_lines", 256}},
        [](const Json& s, const BuildOptions& o) { return build_mem_copy(s["bytes"], s["block_lines"], o); }}},
      {"mutexes",
       {{{"increments", 4096}}, [](const Json& s, const BuildOptions& o) { return build_mutexes(s["increments"], o); }}},
      {"ecg",
       {{{"n", 256}, {"hermite_order", 6}, {"hermite_window", 64}, {"noise", 12.0}, {"flat", false}},
        [](const Json& s, const BuildOptions& o) {
          EcgParams p;
          p.n = s["n"];
          p.hermite_order = s["hermite_order"];
          p.hermite_window = s["hermite_window"];
          p.noise = s["noise"];
          p.flat = s["flat"];
          return build_ecg(p, o);
        }}},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& names() {
  // row order of the results table
  static const std::vector<std::string> n = {"matrix_mult", "dot_product", "fft",     "merge_sort", "bellman_ford",
                                             "daxpy",       "mem_copy",    "mutexes", "ecg"};
  return n;
}

Workload build(std::string_view name, const BuildOptions& opt) {
  const auto& r = registry();
  auto it = r.find(name);
  if (it == r.end()) throw UnknownWorkload(fmt::format("unknown workload '{}'", name));
  return it->second.make(merge_sizes(it->second.defaults, opt.sizes, name), opt);
}

Json Workload::manifest() const {
  Json j;
  j["name"] = name;
  j["partitioning"] = partitioning;
  j["sizes"] = sizes;
  j["seed"] = seed;
  j["channel_base"] = channel_base;
  j["data"] = {{"base", data.base_address}, {"bytes", data.words.size() * 4}};
  for (const auto& [k, v] : data.symbols) j["data"]["regions"][k] = v;
  j["entries"] = {{"thread0", "_start"}, {"thread1", "_thread1"}};
  j["code_bytes"] = {{"single", single.program.words.size() * 4}, {"dual", dual.program.words.size() * 4}};
  j["oracle"] = name;
  j["notes"] = notes;
  return j;
}

}  // namespace ajt::workloads
