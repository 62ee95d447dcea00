#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynsel/cart.hpp"
#include "dynsel/data.hpp"
#include "dynsel/kernels.hpp"
#include "dynsel/resample.hpp"

namespace dynsel::pool {

struct PoolConfig {
    std::size_t size = 100;
    double bootstrap_fraction = 0.5;
    int max_redraws = 10;
    cart::TreeConfig tree;
    resample::ResampleConfig resample;
};

struct Pool {
    std::vector<cart::DecisionTree> trees;
    resample::Variant variant = resample::Variant::Ba;
    std::uint64_t seed = 0;
    int n_classes = 0;
    std::size_t n_features = 0;

    std::size_t size() const { return trees.size(); }
};

/// ceil(fraction * n) row indices drawn with replacement. A draw that misses a
/// class present in `labels` is repeated up to `max_redraws` times.
std::vector<std::size_t> draw_bootstrap(std::span<const int> labels, int n_classes, double fraction, int max_redraws,
                                        Rng& rng);

/// Bagging with the variant applied to every bootstrap. Tree i uses its own
/// source seeded with derive_seed(seed, i), so the result does not depend on
/// `exec`.
Pool generate_pool(const data::Dataset& train, resample::Variant variant, const PoolConfig& config, std::uint64_t seed,
                   kernels::Exec exec = kernels::Exec::Parallel);

struct DselSet {
    data::Dataset data;
    std::size_t n_original = 0;  // rows [0, n_original) are the training rows, in order
    std::string source;
};

/// Training rows followed by the synthetic rows the variant produces on the
/// whole training set. For Random Balance the under-sampling is ignored.
DselSet build_dsel(const data::Dataset& train, resample::Variant variant, const resample::ResampleConfig& config,
                   std::uint64_t seed);

/// Directory layout: manifest.txt plus one tree_NNN.txt per classifier.
void save_pool(const Pool& pool, const std::filesystem::path& dir, const std::string& scaling_ref = {});
Pool load_pool(const std::filesystem::path& dir);

}  // namespace dynsel::pool
