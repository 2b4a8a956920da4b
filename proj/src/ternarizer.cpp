#include "ternkit/ternarizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ternkit {

DenseMatrix TernaryMatrix::dequantize() const {
  DenseMatrix out(rows, cols);
  auto dst = out.data();
  for (std::size_t i = 0; i < trits.size(); ++i) dst[i] = gamma * static_cast<float>(trits[i]);
  return out;
}

void TernarizeConfig::validate() const {
  if (!twn_mode && !(beta > 0.0f)) throw std::invalid_argument("beta must be positive");
}

float compute_threshold(const DenseMatrix& w, float beta) {
  if (w.empty()) throw ShapeError("compute_threshold: empty matrix");
  if (!(beta > 0.0f)) throw std::invalid_argument("compute_threshold: beta must be positive");
  double abs_sum = 0.0;
  for (float v : w.data()) abs_sum += std::fabs(static_cast<double>(v));
  return static_cast<float>(static_cast<double>(beta) / static_cast<double>(w.size()) * abs_sum);
}

TernaryMatrix ternarize(const DenseMatrix& w, float gamma) {
  if (!(gamma >= 0.0f)) throw std::invalid_argument("ternarize: gamma must be non-negative");
  TernaryMatrix t{w.rows(), w.cols(), std::vector<std::int8_t>(w.size()), gamma};
  const auto src = w.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    t.trits[i] = src[i] > gamma ? 1 : (src[i] < -gamma ? -1 : 0);
  }
  return t;
}

TernaryMatrix ternarize(const DenseMatrix& w, const TernarizeConfig& config) {
  config.validate();
  return ternarize(w, compute_threshold(w, config.effective_beta()));
}

double sparsity(const TernaryMatrix& t) {
  if (t.trits.empty()) return 0.0;
  const auto zeros = std::count(t.trits.begin(), t.trits.end(), std::int8_t{0});
  return static_cast<double>(zeros) / static_cast<double>(t.trits.size());
}

std::vector<SweepRow> beta_sweep(const DenseMatrix& w, std::span<const float> betas) {
  if (betas.empty()) throw std::invalid_argument("beta_sweep: no betas given");
  std::vector<float> sorted(betas.begin(), betas.end());
  for (float b : sorted) {
    if (!(b > 0.0f)) throw std::invalid_argument("beta_sweep: beta must be positive");
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<SweepRow> rows;
  rows.reserve(sorted.size());
  for (float b : sorted) {
    const float gamma = compute_threshold(w, b);
    rows.push_back({b, gamma, sparsity(ternarize(w, gamma))});
  }
  return rows;
}

}  // namespace ternkit
