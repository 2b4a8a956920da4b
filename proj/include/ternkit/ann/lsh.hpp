#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ternkit/ann/vector_store.hpp"

namespace ternkit::ann {

struct LshParams {
  std::size_t nbits = 64;
  std::uint64_t seed = 0;
};

// Random-hyperplane LSH. Bit b of a code is 1 iff <h_b, x> > 0, with h_b
// drawn from N(0, I). Search ranks every stored code by Hamming distance to
// the query code (ties by id); there is no re-ranking by true distance.
class LshIndex {
 public:
  static LshIndex build(VectorStore store, const LshParams& params);

  // Neighbor::distance holds the Hamming distance.
  std::vector<Neighbor> search(std::span<const float> query, std::size_t k) const;

  std::vector<std::uint64_t> hash(std::span<const float> v) const;
  std::span<const std::uint64_t> code(std::size_t id) const {
    return {codes_.data() + id * words_, words_};
  }
  const LshParams& params() const { return params_; }

 private:
  VectorStore store_;
  LshParams params_;
  std::size_t words_ = 0;
  std::vector<float> hyperplanes_;  // nbits × dim
  std::vector<std::uint64_t> codes_;
};

}  // namespace ternkit::ann
