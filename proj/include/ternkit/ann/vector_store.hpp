#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ternkit/tensor.hpp"

namespace ternkit::ann {

// Vectors with stable ids 0..N-1, stored contiguously.
class VectorStore {
 public:
  VectorStore() = default;
  explicit VectorStore(const DenseMatrix& vectors);
  VectorStore(std::size_t dim, std::vector<float> data);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
  std::span<const float> operator[](std::size_t id) const { return {data_.data() + id * dim_, dim_}; }

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct Neighbor {
  float distance;
  std::uint32_t id;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Orders by distance, then by id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

// Squared L2 distance, accumulated left to right in float. Every index uses
// this so exact indexes agree bit for bit.
float l2_squared(std::span<const float> a, std::span<const float> b);

std::vector<std::uint32_t> ids_of(std::span<const Neighbor> neighbors);

void require_query(const VectorStore& store, std::span<const float> query, std::size_t k);

}  // namespace ternkit::ann
