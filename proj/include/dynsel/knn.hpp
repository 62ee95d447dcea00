#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dynsel/common.hpp"

namespace dynsel {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

/// Neighbour rows ordered by ascending Euclidean distance, ties by row index.
struct Neighbors {
    std::vector<std::size_t> indices;
    std::vector<double> distances;

    std::size_t size() const { return indices.size(); }
};

/// The min(k, available) nearest rows of `reference` to `query`, skipping row
/// `exclude`.
Neighbors nearest(const Matrix& reference, std::span<const double> query, std::size_t k,
                  std::size_t exclude = kNoIndex);

}  // namespace dynsel
