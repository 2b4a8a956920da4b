#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ternkit/rng.hpp"

namespace ternkit {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Row-major matrix of 32-bit floats. A batch of vectors is stored one
// vector per row.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<float>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

std::string shape_string(const DenseMatrix& m);

// a · b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a · bᵀ
DenseMatrix matmul_transposed(const DenseMatrix& a, const DenseMatrix& b);
// aᵀ · b
DenseMatrix transposed_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

DenseMatrix gaussian_fill(Rng& rng, std::size_t rows, std::size_t cols, float sigma);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, float factor);
// Adds `bias` to every row.
DenseMatrix add_row_bias(const DenseMatrix& a, std::span<const float> bias);

// Exact GELU: x·Φ(x).
float gelu(float x);
// d/dx of gelu.
float gelu_derivative(float x);
DenseMatrix gelu(const DenseMatrix& a);

inline constexpr float kLayerNormEps = 1e-5f;

struct RowNormalization {
  DenseMatrix normalized;       // (x - mean) / sqrt(var + eps), per row
  std::vector<float> inv_std;  // 1 / sqrt(var + eps), per row
};

RowNormalization normalize_rows(const DenseMatrix& x, float eps = kLayerNormEps);

DenseMatrix layer_norm(const DenseMatrix& x, std::span<const float> gain,
                       std::span<const float> shift, float eps = kLayerNormEps);

// Scales each row to unit L2 norm; all-zero rows stay zero.
DenseMatrix l2_normalize_rows(const DenseMatrix& x);

}  // namespace ternkit
