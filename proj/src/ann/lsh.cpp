#include "ternkit/ann/lsh.hpp"

#include <bit>
#include <stdexcept>

#include "ternkit/ann/flat.hpp"
#include "ternkit/rng.hpp"

namespace ternkit::ann {

LshIndex LshIndex::build(VectorStore store, const LshParams& params) {
  if (params.nbits == 0) throw std::invalid_argument("lsh: nbits must be >= 1");
  LshIndex index;
  index.params_ = params;
  index.words_ = (params.nbits + 63) / 64;
  Rng rng(params.seed);
  index.hyperplanes_.resize(params.nbits * store.dim());
  for (float& v : index.hyperplanes_) v = static_cast<float>(rng.normal());
  index.codes_.reserve(store.size() * index.words_);
  for (std::size_t id = 0; id < store.size(); ++id) {
    const auto code = index.hash(store[id]);
    index.codes_.insert(index.codes_.end(), code.begin(), code.end());
  }
  index.store_ = std::move(store);
  return index;
}

std::vector<std::uint64_t> LshIndex::hash(std::span<const float> v) const {
  const std::size_t dim = v.size();
  std::vector<std::uint64_t> code(words_, 0);
  for (std::size_t b = 0; b < params_.nbits; ++b) {
    const float* plane = hyperplanes_.data() + b * dim;
    double dot = 0.0;
    for (std::size_t j = 0; j < dim; ++j) dot += static_cast<double>(plane[j]) * v[j];
    if (dot > 0.0) code[b / 64] |= std::uint64_t{1} << (b % 64);
  }
  return code;
}

std::vector<Neighbor> LshIndex::search(std::span<const float> query, std::size_t k) const {
  require_query(store_, query, k);
  const auto q = hash(query);
  std::vector<Neighbor> all(store_.size());
  for (std::size_t id = 0; id < store_.size(); ++id) {
    const auto c = code(id);
    int distance = 0;
    for (std::size_t w = 0; w < words_; ++w) distance += std::popcount(c[w] ^ q[w]);
    all[id] = {static_cast<float>(distance), static_cast<std::uint32_t>(id)};
  }
  return top_k(std::move(all), k);
}

}  // namespace ternkit::ann
