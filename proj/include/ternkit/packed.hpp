#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ternkit/tensor.hpp"
#include "ternkit/ternarizer.hpp"

namespace ternkit {

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inference payload of a ternary layer.
//
// Each plane stores one bitmask per row, padded to a whole byte. Bit j of a
// row lives in byte j / 8 at bit position j % 8 (least-significant bit
// first). plus_plane marks +1 trits, minus_plane marks -1 trits; the planes
// are disjoint and padding bits are zero.
struct PackedTernaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> plus_plane;
  std::vector<std::uint8_t> minus_plane;
  float gamma = 0.0f;
  std::optional<std::vector<float>> bias;

  std::size_t row_bytes() const { return (cols + 7) / 8; }

  // Throws IntegrityError if any layout invariant is broken.
  void validate() const;

  friend bool operator==(const PackedTernaryMatrix&, const PackedTernaryMatrix&) = default;
};

// Fixed part of the on-disk packed layer record, excluding gamma:
// magic(4) + version(2) + rows(4) + cols(4) + bias flag(1).
inline constexpr std::size_t kPackedLayerHeaderBytes = 15;

PackedTernaryMatrix pack(const TernaryMatrix& t,
                         std::optional<std::vector<float>> bias = std::nullopt);

TernaryMatrix unpack(const PackedTernaryMatrix& p);

// y_i = gamma * (sum of x_j over +1 bits - sum of x_j over -1 bits) + bias_i.
// The per-row loop only adds and subtracts.
std::vector<float> packed_gemv(const PackedTernaryMatrix& p, std::span<const float> x);

// Applies packed_gemv to every column of x. x is cols × batch; the result is
// rows × batch.
DenseMatrix packed_gemm(const PackedTernaryMatrix& p, const DenseMatrix& x);

// Applies packed_gemv to every row of x. x is batch × cols; the result is
// batch × rows. This is the layout the encoder uses for activations.
DenseMatrix packed_apply_rows(const PackedTernaryMatrix& p, const DenseMatrix& x);

// Serialized size of the layer record in bytes.
std::size_t storage_bytes(const PackedTernaryMatrix& p);

}  // namespace ternkit
