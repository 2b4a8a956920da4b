#include "ternkit/tensor.hpp"

#include <cmath>
#include <numbers>

namespace ternkit {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {
  if (rows == 0 || cols == 0) throw ShapeError("DenseMatrix: dimensions must be positive");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw ShapeError("DenseMatrix: dimensions must be positive");
  if (data_.size() != rows * cols) {
    throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<float> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

bool DenseMatrix::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_string(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_string(a) + " * " + shape_string(b));
  }
  DenseMatrix out(a.rows(), b.cols());
  std::vector<double> acc(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) acc[j] += aik * brow[j];
    }
    auto orow = out.row(i);
    for (std::size_t j = 0; j < b.cols(); ++j) orow[j] = static_cast<float>(acc[j]);
  }
  return out;
}

DenseMatrix matmul_transposed(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: " + shape_string(a) + " * T(" + shape_string(b) + ")");
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<double>(arow[k]) * brow[k];
      out(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

DenseMatrix transposed_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("transposed_matmul: T(" + shape_string(a) + ") * " + shape_string(b));
  }
  std::vector<double> acc(a.cols() * b.cols(), 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* dst = acc.data() + i * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aki * brow[j];
    }
  }
  std::vector<float> data(acc.begin(), acc.end());
  return DenseMatrix(a.cols(), b.cols(), std::move(data));
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix gaussian_fill(Rng& rng, std::size_t rows, std::size_t cols, float sigma) {
  if (!(sigma > 0.0f)) throw std::invalid_argument("gaussian_fill: sigma must be positive");
  DenseMatrix out(rows, cols);
  for (float& v : out.data()) v = static_cast<float>(rng.normal() * sigma);
  return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "sub");
  DenseMatrix out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

DenseMatrix scale(const DenseMatrix& a, float factor) {
  DenseMatrix out = a;
  for (float& v : out.data()) v *= factor;
  return out;
}

DenseMatrix add_row_bias(const DenseMatrix& a, std::span<const float> bias) {
  if (bias.size() != a.cols()) {
    throw ShapeError("add_row_bias: bias length " + std::to_string(bias.size()) +
                     " vs cols " + std::to_string(a.cols()));
  }
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
  return out;
}

float gelu(float x) {
  const double xd = x;
  return static_cast<float>(0.5 * xd * (1.0 + std::erf(xd / std::numbers::sqrt2)));
}

float gelu_derivative(float x) {
  const double xd = x;
  const double cdf = 0.5 * (1.0 + std::erf(xd / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * std::numbers::pi);
  return static_cast<float>(cdf + xd * pdf);
}

DenseMatrix gelu(const DenseMatrix& a) {
  DenseMatrix out = a;
  for (float& v : out.data()) v = gelu(v);
  return out;
}

RowNormalization normalize_rows(const DenseMatrix& x, float eps) {
  RowNormalization result{DenseMatrix(x.rows(), x.cols()), std::vector<float>(x.rows())};
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double mean = 0.0;
    for (float v : row) mean += v;
    mean /= n;
    double var = 0.0;
    for (float v : row) var += (v - mean) * (v - mean);
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    result.inv_std[i] = static_cast<float>(inv_std);
    auto out = result.normalized.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      out[j] = static_cast<float>((row[j] - mean) * inv_std);
    }
  }
  return result;
}

DenseMatrix layer_norm(const DenseMatrix& x, std::span<const float> gain,
                       std::span<const float> shift, float eps) {
  if (gain.size() != x.cols() || shift.size() != x.cols()) {
    throw ShapeError("layer_norm: gain/shift length must equal cols");
  }
  DenseMatrix out = normalize_rows(x, eps).normalized;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * gain[j] + shift[j];
  }
  return out;
}

DenseMatrix l2_normalize_rows(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : row) v = static_cast<float>(v * inv);
  }
  return out;
}

}  // namespace ternkit
