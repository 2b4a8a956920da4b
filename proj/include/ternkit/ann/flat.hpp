#pragma once

#include <span>
#include <vector>

#include "ternkit/ann/vector_store.hpp"

namespace ternkit::ann {

// Exact top-k by ascending L2 distance, ties broken by smaller id.
std::vector<Neighbor> flat_search(const VectorStore& store, std::span<const float> query,
                                  std::size_t k);

// Keeps the k closest of `candidates` in (distance, id) order.
std::vector<Neighbor> top_k(std::vector<Neighbor> candidates, std::size_t k);

}  // namespace ternkit::ann
