#include "ternkit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "ternkit/packed.hpp"
#include "ternkit/ternarizer.hpp"

namespace ternkit {

namespace {

std::vector<float> dense_gemv(const DenseMatrix& w, const std::vector<float>& x) {
  std::vector<float> y(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    float acc = 0.0f;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

template <typename F>
BenchReport time_calls(const std::string& name, std::size_t rows, std::size_t cols,
                       std::size_t reps, std::size_t bytes, F&& call) {
  volatile float sink = call().front();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < reps; ++i) sink = call().front();
  const auto stop = std::chrono::steady_clock::now();
  (void)sink;
  const auto ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
  BenchReport report{name, rows, cols, reps, std::max<std::uint64_t>(ns, 1), 0.0, bytes, true};
  report.per_call_ns = static_cast<double>(report.total_ns) / static_cast<double>(reps);
  return report;
}

}  // namespace

GemvBench bench_gemv(std::size_t rows, std::size_t cols, std::size_t reps, std::uint64_t seed) {
  if (reps == 0) throw std::invalid_argument("bench_gemv: reps must be >= 1");
  Rng rng(seed);
  const DenseMatrix w = gaussian_fill(rng, rows, cols, 1.0f);
  std::vector<float> x(cols);
  for (float& v : x) v = static_cast<float>(rng.normal());
  const TernaryMatrix t = ternarize(w, compute_threshold(w, kDefaultBeta));
  const PackedTernaryMatrix p = pack(t);

  GemvBench out;
  const std::size_t dense_bytes = sizeof(float) * rows * cols;
  out.dense = time_calls("dense_f32_gemv", rows, cols, reps, dense_bytes,
                         [&] { return dense_gemv(w, x); });
  out.packed = time_calls("packed_ternary_gemv", rows, cols, reps, storage_bytes(p),
                          [&] { return packed_gemv(p, x); });
  out.latency_ratio = out.packed.per_call_ns / out.dense.per_call_ns;
  out.storage_ratio = static_cast<double>(storage_bytes(p)) / static_cast<double>(dense_bytes);
  out.plane_ratio = static_cast<double>(2 * rows * p.row_bytes()) / static_cast<double>(dense_bytes);

  const std::vector<float> y = packed_gemv(p, x);
  double max_err = 0.0, max_ref = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double ref = 0.0;
    for (std::size_t c = 0; c < cols; ++c) ref += static_cast<double>(t.at(r, c)) * x[c];
    ref *= t.gamma;
    max_ref = std::max(max_ref, std::fabs(ref));
    max_err = std::max(max_err, std::fabs(ref - y[r]));
  }
  out.max_abs_error = max_err;
  out.verified = max_err <= 1e-5 * (1.0 + max_ref);
  return out;
}

std::string to_json(const BenchReport& r) {
  return nlohmann::json{{"operation", r.operation},
                        {"rows", r.rows},
                        {"cols", r.cols},
                        {"repetitions", r.repetitions},
                        {"total_ns", r.total_ns},
                        {"per_call_ns", r.per_call_ns},
                        {"operand_bytes", r.operand_bytes},
                        {"single_thread", r.single_thread}}
      .dump();
}

}  // namespace ternkit
