#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace ternkit {

struct BenchReport {
  std::string operation;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t repetitions = 0;
  std::uint64_t total_ns = 0;
  double per_call_ns = 0.0;
  std::size_t operand_bytes = 0;
  bool single_thread = true;
};

struct GemvBench {
  BenchReport dense;
  BenchReport packed;
  double latency_ratio = 0.0;   // packed / dense per-call time
  double storage_ratio = 0.0;   // packed record bytes / dense f32 bytes
  double plane_ratio = 0.0;     // bit-plane bytes / dense f32 bytes
  double max_abs_error = 0.0;   // packed vs dense gamma·W̃·x oracle
  bool verified = false;        // max_abs_error within 1e-5 · (1 + |oracle|∞)
};

// Times a dense f32 GEMV on a Gaussian W against the packed GEMV of its
// beta = 2 ternarization, single-threaded after one warm-up call each.
// The packed output is checked once against a double-precision dense
// evaluation of gamma·W̃·x.
GemvBench bench_gemv(std::size_t rows, std::size_t cols, std::size_t reps, std::uint64_t seed);

std::string to_json(const BenchReport& report);

}  // namespace ternkit
