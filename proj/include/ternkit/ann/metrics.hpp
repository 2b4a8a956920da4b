#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_set>

namespace ternkit::ann {

using RelevantSet = std::unordered_set<std::uint32_t>;

// |top-k ∩ relevant| / k. Requires k <= retrieved.size().
double precision_at_k(std::span<const std::uint32_t> retrieved, const RelevantSet& relevant,
                      std::size_t k);

// |top-k ∩ relevant| / |relevant|. The relevant set must be non-empty.
double recall_at_k(std::span<const std::uint32_t> retrieved, const RelevantSet& relevant,
                   std::size_t k);

}  // namespace ternkit::ann
