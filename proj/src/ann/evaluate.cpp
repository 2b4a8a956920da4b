#include "ternkit/ann/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "ternkit/ann/flat.hpp"

namespace ternkit::ann {

const char* to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::flat: return "flat";
    case IndexKind::ivf: return "ivf";
    case IndexKind::lsh: return "lsh";
    case IndexKind::hnsw: return "hnsw";
  }
  return "unknown";
}

IndexKind index_kind_from_string(const std::string& name) {
  if (name == "flat") return IndexKind::flat;
  if (name == "ivf") return IndexKind::ivf;
  if (name == "lsh") return IndexKind::lsh;
  if (name == "hnsw") return IndexKind::hnsw;
  throw std::invalid_argument("unknown index: " + name);
}

IndexSettings default_index_settings(std::size_t n, std::size_t dim, std::uint64_t seed) {
  IndexSettings s;
  const auto nlist = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
  s.ivf = {nlist, std::min<std::size_t>(8, nlist), 10, seed};
  s.lsh = {std::min<std::size_t>(4 * dim, 512), seed};
  s.hnsw = {16, 200, 128, seed, false};
  return s;
}

std::vector<Neighbor> FlatIndex::search(std::span<const float> query, std::size_t k) const {
  return flat_search(store_, query, k);
}

AnnIndex AnnIndex::build(IndexKind kind, VectorStore store, const IndexSettings& settings) {
  AnnIndex index;
  index.kind_ = kind;
  switch (kind) {
    case IndexKind::flat: index.impl_ = FlatIndex(std::move(store)); break;
    case IndexKind::ivf: index.impl_ = IvfIndex::build(std::move(store), settings.ivf); break;
    case IndexKind::lsh: index.impl_ = LshIndex::build(std::move(store), settings.lsh); break;
    case IndexKind::hnsw: index.impl_ = HnswIndex::build(std::move(store), settings.hnsw); break;
  }
  return index;
}

std::vector<Neighbor> AnnIndex::search(std::span<const float> query, std::size_t k) const {
  return std::visit([&](const auto& impl) { return impl.search(query, k); }, impl_);
}

RetrievalMetrics evaluate_retrieval(const AnnIndex& index, const DenseMatrix& queries,
                                    std::span<const RelevantSet> relevant,
                                    std::span<const std::size_t> ks) {
  if (ks.empty()) throw std::invalid_argument("evaluate_retrieval: no k values");
  if (relevant.size() != queries.rows()) {
    throw std::invalid_argument("evaluate_retrieval: one relevant set per query required");
  }
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  RetrievalMetrics m{{ks.begin(), ks.end()},
                     std::vector<double>(ks.size(), 0.0),
                     std::vector<double>(ks.size(), 0.0)};
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto ids = ids_of(index.search(queries.row(q), max_k));
    for (std::size_t i = 0; i < ks.size(); ++i) {
      m.precision[i] += precision_at_k(ids, relevant[q], ks[i]);
      m.recall[i] += recall_at_k(ids, relevant[q], ks[i]);
    }
  }
  const auto nq = static_cast<double>(queries.rows());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    m.precision[i] /= nq;
    m.recall[i] /= nq;
  }
  return m;
}

std::vector<RelevantSet> relevant_by_label(std::span<const std::uint32_t> corpus_labels,
                                           std::span<const std::uint32_t> query_labels) {
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> members;
  for (std::size_t id = 0; id < corpus_labels.size(); ++id) {
    members[corpus_labels[id]].push_back(static_cast<std::uint32_t>(id));
  }
  std::vector<RelevantSet> out;
  out.reserve(query_labels.size());
  for (std::uint32_t label : query_labels) {
    const auto it = members.find(label);
    out.emplace_back(it == members.end() ? RelevantSet{}
                                         : RelevantSet(it->second.begin(), it->second.end()));
  }
  return out;
}

std::vector<RelevantSet> relevant_by_exact_search(const VectorStore& corpus,
                                                  const DenseMatrix& queries, std::size_t k) {
  std::vector<RelevantSet> out;
  out.reserve(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const auto ids = ids_of(flat_search(corpus, queries.row(q), k));
    out.emplace_back(ids.begin(), ids.end());
  }
  return out;
}

}  // namespace ternkit::ann
