#include "ternkit/ann/flat.hpp"

#include <algorithm>

namespace ternkit::ann {

std::vector<Neighbor> top_k(std::vector<Neighbor> candidates, std::size_t k) {
  k = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), closer);
  candidates.resize(k);
  return candidates;
}

std::vector<Neighbor> flat_search(const VectorStore& store, std::span<const float> query,
                                  std::size_t k) {
  require_query(store, query, k);
  std::vector<Neighbor> all(store.size());
  for (std::size_t id = 0; id < store.size(); ++id) {
    all[id] = {l2_squared(query, store[id]), static_cast<std::uint32_t>(id)};
  }
  return top_k(std::move(all), k);
}

}  // namespace ternkit::ann
