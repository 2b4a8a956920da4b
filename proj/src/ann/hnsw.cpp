#include "ternkit/ann/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

#include "ternkit/ann/flat.hpp"
#include "ternkit/rng.hpp"

namespace ternkit::ann {

namespace {

constexpr int kMaxLevel = 16;

struct Farther {
  bool operator()(const Neighbor& a, const Neighbor& b) const { return closer(b, a); }
};
struct Closer {
  bool operator()(const Neighbor& a, const Neighbor& b) const { return closer(a, b); }
};

}  // namespace

std::vector<Neighbor> HnswIndex::select(std::vector<Neighbor> candidates, std::size_t m) const {
  std::sort(candidates.begin(), candidates.end(), closer);
  if (!params_.heuristic) {
    if (candidates.size() > m) candidates.resize(m);
    return candidates;
  }
  // Keep a candidate only if it is closer to the base than to every kept one.
  std::vector<Neighbor> kept;
  for (const auto& c : candidates) {
    if (kept.size() >= m) break;
    const bool diverse = std::all_of(kept.begin(), kept.end(), [&](const Neighbor& k) {
      return l2_squared(store_[c.id], store_[k.id]) > c.distance;
    });
    if (diverse) kept.push_back(c);
  }
  return kept;
}

HnswIndex HnswIndex::build(VectorStore store, const HnswParams& params) {
  if (params.M < 2) throw std::invalid_argument("hnsw: M must be >= 2");
  if (params.ef_construction == 0 || params.ef_search == 0) {
    throw std::invalid_argument("hnsw: ef values must be >= 1");
  }
  HnswIndex index;
  index.params_ = params;
  index.store_ = std::move(store);
  const std::size_t n = index.store_.size();
  index.levels_.resize(n);
  index.links_.resize(n);

  Rng rng(params.seed);
  const double level_mult = 1.0 / std::log(static_cast<double>(params.M));
  for (std::size_t id = 0; id < n; ++id) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const int level =
        params.single_layer ? 0 : std::min(kMaxLevel, static_cast<int>(-std::log(u) * level_mult));
    index.levels_[id] = level;
    index.links_[id].resize(static_cast<std::size_t>(level) + 1);
  }
  for (std::size_t id = 0; id < n; ++id) {
    index.insert(static_cast<std::uint32_t>(id), index.levels_[id]);
  }
  return index;
}

std::vector<Neighbor> HnswIndex::search_layer(std::span<const float> query,
                                              const std::vector<Neighbor>& entry, std::size_t ef,
                                              int layer) const {
  std::vector<std::uint8_t> visited(store_.size(), 0);
  // candidates: closest first; results: farthest on top.
  std::priority_queue<Neighbor, std::vector<Neighbor>, Farther> candidates;
  std::priority_queue<Neighbor, std::vector<Neighbor>, Closer> results;
  for (const auto& e : entry) {
    visited[e.id] = 1;
    candidates.push(e);
    results.push(e);
    if (results.size() > ef) results.pop();
  }
  while (!candidates.empty()) {
    const Neighbor current = candidates.top();
    if (results.size() >= ef && closer(results.top(), current)) break;
    candidates.pop();
    for (std::uint32_t next : links_[current.id][static_cast<std::size_t>(layer)]) {
      if (visited[next]) continue;
      visited[next] = 1;
      const Neighbor cand{l2_squared(query, store_[next]), next};
      if (results.size() < ef || closer(cand, results.top())) {
        candidates.push(cand);
        results.push(cand);
        if (results.size() > ef) results.pop();
      }
    }
  }
  std::vector<Neighbor> out;
  out.reserve(results.size());
  while (!results.empty()) {
    out.push_back(results.top());
    results.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Neighbor HnswIndex::greedy_descent(std::span<const float> query, int target_layer) const {
  Neighbor best{l2_squared(query, store_[entry_point_]), entry_point_};
  for (int layer = max_level_; layer > target_layer; --layer) {
    best = search_layer(query, {best}, 1, layer).front();
  }
  return best;
}

void HnswIndex::shrink(std::uint32_t id, int layer) {
  auto& list = links_[id][static_cast<std::size_t>(layer)];
  const std::size_t cap = max_neighbors(layer);
  if (list.size() <= cap) return;
  std::vector<Neighbor> scored;
  scored.reserve(list.size());
  for (std::uint32_t other : list) scored.push_back({l2_squared(store_[id], store_[other]), other});
  list = ids_of(select(std::move(scored), cap));
}

void HnswIndex::insert(std::uint32_t id, int level) {
  if (max_level_ < 0) {
    entry_point_ = id;
    max_level_ = level;
    return;
  }
  const auto query = store_[id];
  std::vector<Neighbor> entry{greedy_descent(query, level)};
  for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
    std::vector<Neighbor> found = search_layer(query, entry, params_.ef_construction, layer);
    const std::vector<Neighbor> selected = select(found, params_.M);
    auto& own = links_[id][static_cast<std::size_t>(layer)];
    for (const auto& nb : selected) {
      own.push_back(nb.id);
      links_[nb.id][static_cast<std::size_t>(layer)].push_back(id);
      shrink(nb.id, layer);
    }
    entry = std::move(found);
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_point_ = id;
  }
}

std::vector<Neighbor> HnswIndex::search(std::span<const float> query, std::size_t k) const {
  return search(query, k, params_.ef_search);
}

std::vector<Neighbor> HnswIndex::search(std::span<const float> query, std::size_t k,
                                        std::size_t ef_search) const {
  require_query(store_, query, k);
  if (ef_search < k) {
    throw std::invalid_argument("hnsw: ef_search " + std::to_string(ef_search) +
                                " is smaller than k " + std::to_string(k));
  }
  const Neighbor start = greedy_descent(query, 0);
  return top_k(search_layer(query, {start}, ef_search, 0), k);
}

std::size_t HnswIndex::layer0_reachable() const {
  if (store_.size() == 0) return 0;
  std::vector<std::uint8_t> seen(store_.size(), 0);
  std::vector<std::uint32_t> stack{entry_point_};
  seen[entry_point_] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::uint32_t id = stack.back();
    stack.pop_back();
    for (std::uint32_t next : links_[id][0]) {
      if (!seen[next]) {
        seen[next] = 1;
        ++count;
        stack.push_back(next);
      }
    }
  }
  return count;
}

}  // namespace ternkit::ann
