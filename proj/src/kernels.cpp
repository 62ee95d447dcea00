#include "dynsel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace dynsel::kernels {

namespace {

std::size_t excluded(std::span<const std::size_t> exclude, std::size_t q) {
    return exclude.empty() ? kNoIndex : exclude[q];
}

// Bounded selection: keeps the k best (distance, index) pairs without sorting
// the full candidate list.
Neighbors select_k(const Matrix& reference, std::span<const double> query, std::size_t k, std::size_t skip,
                   std::vector<std::pair<double, std::size_t>>& scratch) {
    scratch.clear();
    for (std::size_t i = 0; i < reference.rows(); ++i)
        if (i != skip) scratch.emplace_back(squared_distance(reference.row(i), query), i);
    k = std::min(k, scratch.size());
    if (k < scratch.size()) std::nth_element(scratch.begin(), scratch.begin() + static_cast<long>(k), scratch.end());
    std::sort(scratch.begin(), scratch.begin() + static_cast<long>(k));
    Neighbors out;
    out.indices.resize(k);
    out.distances.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.indices[i] = scratch[i].second;
        out.distances[i] = std::sqrt(scratch[i].first);
    }
    return out;
}

}  // namespace

std::vector<Neighbors> knn_batch(const Matrix& reference, const Matrix& queries, std::size_t k, Exec exec,
                                 std::span<const std::size_t> exclude) {
    if (!exclude.empty() && exclude.size() != queries.rows()) throw Error("exclude list must match query count");
    if (queries.rows() > 0 && reference.cols() != queries.cols()) throw Error("knn: feature arity mismatch");
    const auto n = static_cast<long>(queries.rows());
    std::vector<Neighbors> out(queries.rows());
    if (exec == Exec::Serial) {
        for (long q = 0; q < n; ++q)
            out[q] = nearest(reference, queries.row(q), k, excluded(exclude, static_cast<std::size_t>(q)));
        return out;
    }
#pragma omp parallel
    {
        std::vector<std::pair<double, std::size_t>> scratch;
        scratch.reserve(reference.rows());
#pragma omp for schedule(static)
        for (long q = 0; q < n; ++q)
            out[q] = select_k(reference, queries.row(q), k, excluded(exclude, static_cast<std::size_t>(q)), scratch);
    }
    return out;
}

PoolOutputs pool_outputs(std::span<const cart::DecisionTree> trees, const Matrix& x, Exec exec) {
    PoolOutputs out;
    out.n_samples = x.rows();
    out.n_trees = trees.size();
    out.n_classes = trees.empty() ? 0 : trees.front().n_classes();
    const auto L = static_cast<std::size_t>(out.n_classes);
    out.predictions.resize(out.n_samples * out.n_trees);
    out.leaves.resize(out.n_samples * out.n_trees);
    out.supports.resize(out.n_samples * out.n_trees * L);

    if (exec == Exec::Serial) {
        for (std::size_t s = 0; s < out.n_samples; ++s)
            for (std::size_t t = 0; t < out.n_trees; ++t) {
                const auto cell = s * out.n_trees + t;
                out.predictions[cell] = trees[t].predict(x.row(s));
                out.leaves[cell] = trees[t].leaf_index(x.row(s));
                const auto sup = trees[t].predict_support(x.row(s));
                std::copy(sup.begin(), sup.end(), out.supports.begin() + static_cast<long>(cell * L));
            }
        return out;
    }

    // One traversal per (sample, tree); leaf supports are computed once per tree.
    std::vector<std::vector<double>> leaf_support(out.n_trees);
    std::vector<std::vector<int>> leaf_label(out.n_trees);
    const auto m = static_cast<long>(out.n_trees);
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < m; ++t) {
        const auto& nodes = trees[t].nodes();
        leaf_support[t].assign(nodes.size() * L, 0.0);
        leaf_label[t].assign(nodes.size(), -1);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i].is_leaf()) continue;
            const auto sup = trees[t].leaf_support(static_cast<int>(i));
            std::copy(sup.begin(), sup.end(), leaf_support[t].begin() + static_cast<long>(i * L));
            leaf_label[t][i] = static_cast<int>(argmax(std::span<const int>(nodes[i].class_counts)));
        }
    }
    const auto n = static_cast<long>(out.n_samples);
#pragma omp parallel for schedule(static)
    for (long s = 0; s < n; ++s)
        for (std::size_t t = 0; t < out.n_trees; ++t) {
            const auto cell = static_cast<std::size_t>(s) * out.n_trees + t;
            const int leaf = trees[t].leaf_index(x.row(static_cast<std::size_t>(s)));
            out.leaves[cell] = leaf;
            out.predictions[cell] = leaf_label[t][static_cast<std::size_t>(leaf)];
            std::copy_n(leaf_support[t].begin() + static_cast<long>(static_cast<std::size_t>(leaf) * L), L,
                        out.supports.begin() + static_cast<long>(cell * L));
        }
    return out;
}

}  // namespace dynsel::kernels
