#include "ternkit/ann/metrics.hpp"

#include <stdexcept>
#include <string>

namespace ternkit::ann {

namespace {

std::size_t hits(std::span<const std::uint32_t> retrieved, const RelevantSet& relevant,
                 std::size_t k) {
  if (k == 0 || k > retrieved.size()) {
    throw std::invalid_argument("metrics: k=" + std::to_string(k) + " with " +
                                std::to_string(retrieved.size()) + " retrieved ids");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < k; ++i) count += relevant.count(retrieved[i]);
  return count;
}

}  // namespace

double precision_at_k(std::span<const std::uint32_t> retrieved, const RelevantSet& relevant,
                      std::size_t k) {
  return static_cast<double>(hits(retrieved, relevant, k)) / static_cast<double>(k);
}

double recall_at_k(std::span<const std::uint32_t> retrieved, const RelevantSet& relevant,
                   std::size_t k) {
  if (relevant.empty()) throw std::invalid_argument("recall_at_k: empty relevant set");
  return static_cast<double>(hits(retrieved, relevant, k)) /
         static_cast<double>(relevant.size());
}

}  // namespace ternkit::ann
