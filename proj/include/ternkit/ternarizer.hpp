#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ternkit/tensor.hpp"

namespace ternkit {

inline constexpr float kDefaultBeta = 2.0f;
inline constexpr float kTwnBeta = 0.75f;

// Signed trit matrix plus the per-matrix scale. The effective weight is
// gamma * trits.
struct TernaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int8_t> trits;  // row-major, each in {-1, 0, +1}
  float gamma = 0.0f;

  std::int8_t at(std::size_t r, std::size_t c) const { return trits[r * cols + c]; }

  // gamma * trits as a dense matrix.
  DenseMatrix dequantize() const;

  friend bool operator==(const TernaryMatrix&, const TernaryMatrix&) = default;
};

struct TernarizeConfig {
  float beta = kDefaultBeta;
  bool twn_mode = false;  // use the 0.75 TWN multiplier instead of beta

  float effective_beta() const { return twn_mode ? kTwnBeta : beta; }
  void validate() const;
};

// gamma = beta / (rows * cols) * sum |w_ij|
float compute_threshold(const DenseMatrix& w, float beta);

// +1 where w > gamma, -1 where w < -gamma, 0 on the closed band [-gamma, gamma].
TernaryMatrix ternarize(const DenseMatrix& w, float gamma);

TernaryMatrix ternarize(const DenseMatrix& w, const TernarizeConfig& config);

// Fraction of zero trits.
double sparsity(const TernaryMatrix& t);

struct SweepRow {
  float beta;
  float gamma;
  double sparsity;
};

// One row per beta, sorted ascending by beta.
std::vector<SweepRow> beta_sweep(const DenseMatrix& w, std::span<const float> betas);

}  // namespace ternkit
