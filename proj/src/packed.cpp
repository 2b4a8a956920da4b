#include "ternkit/packed.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace ternkit {

void PackedTernaryMatrix::validate() const {
  const std::size_t expected = rows * row_bytes();
  if (plus_plane.size() != expected || minus_plane.size() != expected) {
    throw IntegrityError("packed matrix: plane length does not match " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
  if (bias && bias->size() != rows) throw IntegrityError("packed matrix: bias length != rows");
  const unsigned tail_bits = cols % 8;
  const std::uint8_t pad_mask =
      tail_bits == 0 ? 0 : static_cast<std::uint8_t>(0xFFu << tail_bits);
  const std::size_t stride = row_bytes();
  for (std::size_t i = 0; i < expected; ++i) {
    if (plus_plane[i] & minus_plane[i]) {
      throw IntegrityError("packed matrix: overlapping plus/minus bits at byte " +
                           std::to_string(i));
    }
    if (pad_mask && i % stride == stride - 1 && ((plus_plane[i] | minus_plane[i]) & pad_mask)) {
      throw IntegrityError("packed matrix: non-zero padding bits in row " +
                           std::to_string(i / stride));
    }
  }
}

PackedTernaryMatrix pack(const TernaryMatrix& t, std::optional<std::vector<float>> bias) {
  if (bias && bias->size() != t.rows) {
    throw ShapeError("pack: bias length " + std::to_string(bias->size()) + " != rows " +
                     std::to_string(t.rows));
  }
  PackedTernaryMatrix p;
  p.rows = t.rows;
  p.cols = t.cols;
  p.gamma = t.gamma;
  p.bias = std::move(bias);
  const std::size_t stride = p.row_bytes();
  p.plus_plane.assign(t.rows * stride, 0);
  p.minus_plane.assign(t.rows * stride, 0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      const std::int8_t v = t.at(r, c);
      const auto bit = static_cast<std::uint8_t>(1u << (c % 8));
      if (v > 0) {
        p.plus_plane[r * stride + c / 8] |= bit;
      } else if (v < 0) {
        p.minus_plane[r * stride + c / 8] |= bit;
      }
    }
  }
  return p;
}

TernaryMatrix unpack(const PackedTernaryMatrix& p) {
  p.validate();
  TernaryMatrix t{p.rows, p.cols, std::vector<std::int8_t>(p.rows * p.cols, 0), p.gamma};
  const std::size_t stride = p.row_bytes();
  for (std::size_t r = 0; r < p.rows; ++r) {
    for (std::size_t c = 0; c < p.cols; ++c) {
      const std::size_t byte = r * stride + c / 8;
      const unsigned shift = c % 8;
      if ((p.plus_plane[byte] >> shift) & 1u) {
        t.trits[r * p.cols + c] = 1;
      } else if ((p.minus_plane[byte] >> shift) & 1u) {
        t.trits[r * p.cols + c] = -1;
      }
    }
  }
  return t;
}

namespace {

// Sum of x_j over the set bits of one plane row. Reads the row in 64-bit
// little-endian words so bit k of word w is column 64*w + k.
float masked_sum(const std::uint8_t* plane_row, std::size_t row_bytes, const float* x) {
  float acc = 0.0f;
  std::size_t byte = 0;
  for (; byte + 8 <= row_bytes; byte += 8) {
    std::uint64_t word;
    std::memcpy(&word, plane_row + byte, sizeof(word));
    if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap64(word);
    const float* base = x + byte * 8;
    while (word) {
      acc += base[std::countr_zero(word)];
      word &= word - 1;
    }
  }
  for (; byte < row_bytes; ++byte) {
    unsigned bits = plane_row[byte];
    const float* base = x + byte * 8;
    while (bits) {
      acc += base[std::countr_zero(bits)];
      bits &= bits - 1;
    }
  }
  return acc;
}

void gemv_into(const PackedTernaryMatrix& p, const float* x, float* y, std::size_t y_stride) {
  const std::size_t stride = p.row_bytes();
  for (std::size_t r = 0; r < p.rows; ++r) {
    const float pos = masked_sum(p.plus_plane.data() + r * stride, stride, x);
    const float neg = masked_sum(p.minus_plane.data() + r * stride, stride, x);
    float out = p.gamma * (pos - neg);
    if (p.bias) out += (*p.bias)[r];
    y[r * y_stride] = out;
  }
}

}  // namespace

std::vector<float> packed_gemv(const PackedTernaryMatrix& p, std::span<const float> x) {
  if (x.size() != p.cols) {
    throw ShapeError("packed_gemv: input length " + std::to_string(x.size()) + " != cols " +
                     std::to_string(p.cols));
  }
  std::vector<float> y(p.rows);
  gemv_into(p, x.data(), y.data(), 1);
  return y;
}

DenseMatrix packed_gemm(const PackedTernaryMatrix& p, const DenseMatrix& x) {
  if (x.rows() != p.cols) {
    throw ShapeError("packed_gemm: input " + shape_string(x) + " needs " +
                     std::to_string(p.cols) + " rows");
  }
  DenseMatrix out(p.rows, x.cols());
  std::vector<float> column(p.cols);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t r = 0; r < p.cols; ++r) column[r] = x(r, c);
    gemv_into(p, column.data(), out.data().data() + c, x.cols());
  }
  return out;
}

DenseMatrix packed_apply_rows(const PackedTernaryMatrix& p, const DenseMatrix& x) {
  if (x.cols() != p.cols) {
    throw ShapeError("packed_apply_rows: input " + shape_string(x) + " needs " +
                     std::to_string(p.cols) + " cols");
  }
  DenseMatrix out(x.rows(), p.rows);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    gemv_into(p, x.row(b).data(), out.row(b).data(), 1);
  }
  return out;
}

std::size_t storage_bytes(const PackedTernaryMatrix& p) {
  return 2 * p.rows * p.row_bytes() + sizeof(float) + (p.bias ? sizeof(float) * p.rows : 0) +
         kPackedLayerHeaderBytes;
}

}  // namespace ternkit
