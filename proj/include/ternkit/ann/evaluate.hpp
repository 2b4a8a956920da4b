#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ternkit/ann/hnsw.hpp"
#include "ternkit/ann/ivf.hpp"
#include "ternkit/ann/lsh.hpp"
#include "ternkit/ann/metrics.hpp"
#include "ternkit/ann/vector_store.hpp"

namespace ternkit::ann {

enum class IndexKind { flat, ivf, lsh, hnsw };

const char* to_string(IndexKind kind);
// Accepts flat, ivf, lsh, hnsw. Throws std::invalid_argument otherwise.
IndexKind index_kind_from_string(const std::string& name);

struct IndexSettings {
  IvfParams ivf;
  LshParams lsh;
  HnswParams hnsw;
};

// nlist = round(sqrt(N)), nprobe = min(8, nlist), 10 k-means iterations,
// nbits = min(4 * dim, 512), M = 16, ef_construction = 200, ef_search = 128.
IndexSettings default_index_settings(std::size_t n, std::size_t dim, std::uint64_t seed);

class FlatIndex {
 public:
  explicit FlatIndex(VectorStore store) : store_(std::move(store)) {}
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const;

 private:
  VectorStore store_;
};

// One of the four index types behind a common search call.
class AnnIndex {
 public:
  static AnnIndex build(IndexKind kind, VectorStore store, const IndexSettings& settings);

  IndexKind kind() const { return kind_; }
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const;

 private:
  IndexKind kind_ = IndexKind::flat;
  std::variant<FlatIndex, IvfIndex, LshIndex, HnswIndex> impl_{FlatIndex(VectorStore{})};
};

struct RetrievalMetrics {
  std::vector<std::size_t> ks;
  std::vector<double> precision;  // mean precision@k over queries, aligned with ks
  std::vector<double> recall;     // mean recall@k over queries, aligned with ks
};

// Searches each query row for max(ks) results and averages the metrics.
RetrievalMetrics evaluate_retrieval(const AnnIndex& index, const DenseMatrix& queries,
                                    std::span<const RelevantSet> relevant,
                                    std::span<const std::size_t> ks);

// relevant[q] = corpus ids sharing query q's label.
std::vector<RelevantSet> relevant_by_label(std::span<const std::uint32_t> corpus_labels,
                                           std::span<const std::uint32_t> query_labels);

// relevant[q] = exact FlatL2 top-k of query q over the corpus.
std::vector<RelevantSet> relevant_by_exact_search(const VectorStore& corpus,
                                                  const DenseMatrix& queries, std::size_t k);

}  // namespace ternkit::ann
