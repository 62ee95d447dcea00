#include "dynsel/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace dynsel {

Neighbors nearest(const Matrix& reference, std::span<const double> query, std::size_t k, std::size_t exclude) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(reference.rows());
    for (std::size_t i = 0; i < reference.rows(); ++i)
        if (i != exclude) cand.emplace_back(squared_distance(reference.row(i), query), i);
    k = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(k), cand.end());
    Neighbors out;
    out.indices.reserve(k);
    out.distances.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.indices.push_back(cand[i].second);
        out.distances.push_back(std::sqrt(cand[i].first));
    }
    return out;
}

}  // namespace dynsel
