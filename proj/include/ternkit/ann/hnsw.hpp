#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ternkit/ann/vector_store.hpp"

namespace ternkit::ann {

struct HnswParams {
  std::size_t M = 16;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 128;
  std::uint64_t seed = 0;
  bool single_layer = false;  // put every node on layer 0
  bool heuristic = false;     // diversity pruning instead of plain nearest-M
};

// Hierarchical navigable small world graph.
//
// Node levels are geometric with multiplier 1/ln(M). Inserts descend
// greedily through the upper layers, then run a beam search of width
// ef_construction on each layer the node joins and link it to the M
// nearest results. Lists over capacity (M, or 2M on layer 0) keep their
// nearest entries. Nodes are inserted in id order.
class HnswIndex {
 public:
  static HnswIndex build(VectorStore store, const HnswParams& params);

  // Requires ef_search >= k.
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const;
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k,
                               std::size_t ef_search) const;

  std::size_t size() const { return store_.size(); }
  int max_level() const { return max_level_; }
  int level(std::size_t id) const { return levels_[id]; }
  std::uint32_t entry_point() const { return entry_point_; }
  std::span<const std::uint32_t> neighbors(std::size_t id, int layer) const {
    return links_[id][static_cast<std::size_t>(layer)];
  }
  std::size_t max_neighbors(int layer) const { return layer == 0 ? 2 * params_.M : params_.M; }
  const HnswParams& params() const { return params_; }

  // Nodes reachable from the entry point along layer-0 links.
  std::size_t layer0_reachable() const;

 private:
  std::vector<Neighbor> search_layer(std::span<const float> query,
                                     const std::vector<Neighbor>& entry, std::size_t ef,
                                     int layer) const;
  Neighbor greedy_descent(std::span<const float> query, int target_layer) const;
  void insert(std::uint32_t id, int level);
  std::vector<Neighbor> select(std::vector<Neighbor> candidates, std::size_t m) const;
  void shrink(std::uint32_t id, int layer);

  VectorStore store_;
  HnswParams params_;
  std::vector<int> levels_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // node → layer → ids
  std::uint32_t entry_point_ = 0;
  int max_level_ = -1;
};

}  // namespace ternkit::ann
