#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dynsel/cart.hpp"
#include "dynsel/common.hpp"
#include "dynsel/knn.hpp"

// Hot loops of the pipeline. Every kernel has a plain serial reference and an
// OpenMP version; both must return identical results.
namespace dynsel::kernels {

enum class Exec { Serial, Parallel };

/// k nearest rows of `reference` for every query row. `exclude`, when
/// non-empty, holds one reference row per query to skip (kNoIndex for none).
std::vector<Neighbors> knn_batch(const Matrix& reference, const Matrix& queries, std::size_t k, Exec exec,
                                 std::span<const std::size_t> exclude = {});

/// Outputs of every tree on every sample, sample-major so that the output
/// profile of one sample is contiguous.
struct PoolOutputs {
    std::size_t n_samples = 0;
    std::size_t n_trees = 0;
    int n_classes = 0;
    std::vector<int> predictions;  // [sample * n_trees + tree]
    std::vector<int> leaves;       // same layout
    std::vector<double> supports;  // [(sample * n_trees + tree) * n_classes + class]

    int prediction(std::size_t sample, std::size_t tree) const { return predictions[sample * n_trees + tree]; }
    int leaf(std::size_t sample, std::size_t tree) const { return leaves[sample * n_trees + tree]; }
    std::span<const int> profile(std::size_t sample) const {
        return {predictions.data() + sample * n_trees, n_trees};
    }
    std::span<const double> support(std::size_t sample, std::size_t tree) const {
        return {supports.data() + (sample * n_trees + tree) * static_cast<std::size_t>(n_classes),
                static_cast<std::size_t>(n_classes)};
    }
    /// All supports of one sample, n_trees x n_classes.
    std::span<const double> supports_of(std::size_t sample) const {
        const std::size_t w = n_trees * static_cast<std::size_t>(n_classes);
        return {supports.data() + sample * w, w};
    }

    friend bool operator==(const PoolOutputs&, const PoolOutputs&) = default;
};

PoolOutputs pool_outputs(std::span<const cart::DecisionTree> trees, const Matrix& x, Exec exec);

}  // namespace dynsel::kernels
