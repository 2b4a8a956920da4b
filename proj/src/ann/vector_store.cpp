#include "ternkit/ann/vector_store.hpp"

#include <string>

namespace ternkit::ann {

VectorStore::VectorStore(const DenseMatrix& vectors)
    : dim_(vectors.cols()), data_(vectors.values()) {
  if (dim_ == 0) throw ShapeError("VectorStore: dimension must be positive");
}

VectorStore::VectorStore(std::size_t dim, std::vector<float> data)
    : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) throw ShapeError("VectorStore: dimension must be positive");
  if (data_.size() % dim_ != 0) throw ShapeError("VectorStore: data is not a multiple of dim");
}

float l2_squared(std::span<const float> a, std::span<const float> b) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::vector<std::uint32_t> ids_of(std::span<const Neighbor> neighbors) {
  std::vector<std::uint32_t> ids;
  ids.reserve(neighbors.size());
  for (const auto& n : neighbors) ids.push_back(n.id);
  return ids;
}

void require_query(const VectorStore& store, std::span<const float> query, std::size_t k) {
  if (query.size() != store.dim()) {
    throw ShapeError("query has dimension " + std::to_string(query.size()) + ", index has " +
                     std::to_string(store.dim()));
  }
  if (k == 0 || k > store.size()) {
    throw std::invalid_argument("k must be in [1, " + std::to_string(store.size()) + "], got " +
                                std::to_string(k));
  }
}

}  // namespace ternkit::ann
