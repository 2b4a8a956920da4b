#include "ternkit/ann/ivf.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ternkit/ann/flat.hpp"
#include "ternkit/rng.hpp"

namespace ternkit::ann {

namespace {

std::size_t nearest_centroid(const std::vector<std::vector<float>>& centroids,
                             std::span<const float> v) {
  std::size_t best = 0;
  float best_dist = l2_squared(v, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const float d = l2_squared(v, centroids[c]);
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

IvfIndex IvfIndex::build(VectorStore store, const IvfParams& params) {
  const std::size_t n = store.size();
  if (params.nlist == 0 || params.nlist > n) {
    throw std::invalid_argument("ivf: nlist must be in [1, " + std::to_string(n) + "]");
  }
  if (params.nprobe == 0 || params.nprobe > params.nlist) {
    throw std::invalid_argument("ivf: nprobe must be in [1, nlist]");
  }
  if (params.kmeans_iters == 0) throw std::invalid_argument("ivf: kmeans_iters must be >= 1");

  IvfIndex index;
  index.params_ = params;
  const std::size_t dim = store.dim();

  Rng rng(params.seed);
  const auto order = permutation(n, rng);
  for (std::size_t c = 0; c < params.nlist; ++c) {
    const auto v = store[order[c]];
    index.centroids_.emplace_back(v.begin(), v.end());
  }

  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t iter = 0; iter < params.kmeans_iters; ++iter) {
    for (std::size_t id = 0; id < n; ++id) assignment[id] = nearest_centroid(index.centroids_, store[id]);
    std::vector<std::vector<double>> sums(params.nlist, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(params.nlist, 0);
    for (std::size_t id = 0; id < n; ++id) {
      const auto v = store[id];
      auto& sum = sums[assignment[id]];
      for (std::size_t j = 0; j < dim; ++j) sum[j] += v[j];
      ++counts[assignment[id]];
    }
    for (std::size_t c = 0; c < params.nlist; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < dim; ++j) {
        index.centroids_[c][j] = static_cast<float>(sums[c][j] / static_cast<double>(counts[c]));
      }
    }
  }

  index.lists_.assign(params.nlist, {});
  for (std::size_t id = 0; id < n; ++id) {
    index.lists_[nearest_centroid(index.centroids_, store[id])].push_back(
        static_cast<std::uint32_t>(id));
  }
  index.store_ = std::move(store);
  return index;
}

std::vector<Neighbor> IvfIndex::search(std::span<const float> query, std::size_t k) const {
  require_query(store_, query, k);
  std::vector<Neighbor> probes(centroids_.size());
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    probes[c] = {l2_squared(query, centroids_[c]), static_cast<std::uint32_t>(c)};
  }
  std::sort(probes.begin(), probes.end(), closer);

  std::vector<Neighbor> candidates;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    if (p >= params_.nprobe && candidates.size() >= k) break;
    for (std::uint32_t id : lists_[probes[p].id]) {
      candidates.push_back({l2_squared(query, store_[id]), id});
    }
  }
  return top_k(std::move(candidates), k);
}

}  // namespace ternkit::ann
