#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ternkit/ann/vector_store.hpp"

namespace ternkit::ann {

struct IvfParams {
  std::size_t nlist = 1;
  std::size_t nprobe = 1;
  std::size_t kmeans_iters = 10;
  std::uint64_t seed = 0;
};

// Inverted lists over a seeded Lloyd k-means partition. Search scans the
// lists of the nprobe closest centroids exactly. If those lists hold fewer
// than k vectors, further lists are probed in centroid order until k
// candidates exist.
class IvfIndex {
 public:
  static IvfIndex build(VectorStore store, const IvfParams& params);

  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const;

  const IvfParams& params() const { return params_; }
  const std::vector<std::vector<float>>& centroids() const { return centroids_; }
  const std::vector<std::vector<std::uint32_t>>& lists() const { return lists_; }
  const VectorStore& store() const { return store_; }

 private:
  VectorStore store_;
  IvfParams params_;
  std::vector<std::vector<float>> centroids_;
  std::vector<std::vector<std::uint32_t>> lists_;
};

}  // namespace ternkit::ann
