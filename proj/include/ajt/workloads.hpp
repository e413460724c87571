#pragma once

// The nine benchmark kernels. Each is generated as assembly in two variants
// that share their task routines:
//   single  thread 0 calls every task itself, one after another
//   dual    thread 0 hands one task to thread 1 through the side-kick
//           channel and runs the other half itself
// Both variants contain the thread-1 dispatcher, so the single image is also
// the one run in the spinning scenario.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ajt/isa.hpp"
#include "ajt/memunit.hpp"
#include "ajt/sidekick.hpp"

namespace ajt::workloads {

inline constexpr std::uint32_t kDataBase = 0x00020000;

struct BuildOptions {
  std::uint64_t seed = 1;
  std::uint32_t channel_base = 0x00010000;
  sidekick::DispatcherOptions dispatcher;
  // Per-workload size overrides, e.g. {"n": 64, "reps": 2}. Unknown keys are rejected.
  nlohmann::json sizes = nlohmann::json::object();
};

struct Variant {
  std::string source;
  isa::Program program;
};

struct OracleResult {
  bool ok = false;
  std::string message;
};

using Oracle = std::function<OracleResult(const mem::Memory&)>;

struct Workload {
  std::string name;
  std::string partitioning;  // none | interleaved | block-split
  nlohmann::ordered_json sizes;
  nlohmann::ordered_json notes;  // generator facts (ground truth, graph model, ...)
  std::uint32_t channel_base = 0;
  std::uint64_t seed = 0;
  Variant single;
  Variant dual;
  isa::Program data;
  Oracle oracle;

  nlohmann::ordered_json manifest() const;
};

class UnknownWorkload : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& names();
Workload build(std::string_view name, const BuildOptions& opt = {});

// Direct builders for tests and sensitivity runs.
Workload build_matrix_mult(int n, int reps, const BuildOptions& opt = {});
Workload build_dot_product(int n, int reps, const BuildOptions& opt = {});
Workload build_daxpy(int n, int reps, double a, const BuildOptions& opt = {});
/// `block_lines` 64-byte lines are copied word slot by word slot before moving on.
Workload build_mem_copy(std::uint32_t bytes, int block_lines, const BuildOptions& opt = {});
Workload build_mutexes(int increments, const BuildOptions& opt = {});
Workload build_merge_sort(int n, int reps, const BuildOptions& opt = {});
Workload build_bellman_ford(int nodes, int edges, int reps, const BuildOptions& opt = {});
enum class FftInput { Random, Zeros, Impulse };
/// n-point FFT; with `split` the even and odd n/2-point halves run on
/// separate threads and thread 0 combines (both threads share the combine
/// when `parallel_combine`). Stages run depth first on `block`-point pieces.
Workload build_fft(int n, bool split, FftInput input = FftInput::Random, int block = 256,
                   bool parallel_combine = false, const BuildOptions& opt = {});

struct EcgParams {
  int n = 256;             // FFT size = analysed window
  int hermite_order = 6;   // number of Hermite coefficients
  int hermite_window = 64; // samples around the detected peak
  double noise = 12.0;     // uniform noise amplitude (sample units)
  bool flat = false;       // constant baseline only
};
Workload build_ecg(const EcgParams& p, const BuildOptions& opt = {});

// ---------------------------------------------------------------------------
// Host-side helpers shared with tests.

/// Direct O(n^2) DFT, exact angle reduction, long double accumulation.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x);

/// Floyd-Warshall over an edge list; INF for unreachable pairs.
std::vector<std::int32_t> floyd_warshall(int nodes, const std::vector<std::array<int, 3>>& edges);

struct SyntheticEcg {
  std::vector<std::int32_t> samples;
  int r_peak = -1;  // ground-truth R peak, -1 for a flat record
};
SyntheticEcg synth_ecg(int n, std::uint64_t seed, double noise, bool flat);

/// Hermite functions sampled at (t - window/2) / sigma and scaled by
/// 1/sqrt(sigma), so rows are orthonormal under the plain sum. Row-major
/// [order][window].
std::vector<double> hermite_basis(int order, int window, double sigma);

}  // namespace ajt::workloads
