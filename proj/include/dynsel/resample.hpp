#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynsel/common.hpp"
#include "dynsel/data.hpp"

namespace dynsel::resample {

/// Preprocessing applied to each bootstrap and to the DSEL.
enum class Variant { Ba, RM100, RM, SM100, SM, RB };

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
inline constexpr std::array<Variant, 6> kAllVariants = {Variant::Ba,    Variant::RM100, Variant::RM,
                                                        Variant::SM100, Variant::SM,    Variant::RB};

struct RamoConfig {
    int k1 = 10;       // neighbourhood over the whole dataset, for the weights
    int k2 = 5;        // SMOTE neighbourhood among the minority class
    double alpha = 0.3;
};

struct ResampleConfig {
    int smote_k = 5;
    RamoConfig ramo;
};

struct Provenance {
    std::size_t seed;      // row index in the minority matrix
    std::size_t neighbor;  // row index in the minority matrix
    double gap;            // synthetic = seed + gap * (neighbor - seed)
};

struct SyntheticBatch {
    Matrix samples;
    int class_id = -1;
    std::vector<Provenance> provenance;

    std::size_t size() const { return samples.rows(); }
};

/// CSV dump (seed,neighbor,gap,x0,x1,...) for auditing synthetic rows.
std::string provenance_csv(const SyntheticBatch& batch);

/// Uniform sample of `target` distinct entries of `samples`.
std::vector<std::size_t> rus(std::span<const std::size_t> samples, std::size_t target, Rng& rng);

/// SMOTE as the classic procedure: `n_percent` < 100 picks a random subset of
/// seeds with one synthetic row each; otherwise every seed yields
/// floor(n_percent / 100) rows. `k` is clamped to |minority| - 1.
SyntheticBatch smote(const Matrix& minority, double n_percent, int k, Rng& rng);

/// SMOTE producing exactly `amount` rows: every seed contributes
/// amount / T rows and a random subset of amount % T seeds one more.
SyntheticBatch smote_count(const Matrix& minority, std::size_t amount, int k, Rng& rng);

/// Logistic weight of a minority sample with `m` other-class samples among
/// its k1 nearest neighbours.
double ramo_weight(int m, double alpha);

/// Weights for the rows of `minority_class`, in row order.
std::vector<double> ramo_weights(const Matrix& features, std::span<const int> labels, int minority_class, int k1,
                                 double alpha);

/// `amount` draws with replacement, P(i) proportional to weights[i].
std::vector<std::size_t> draw_weighted(std::span<const double> weights, std::size_t amount, Rng& rng);

/// RAMO oversampling of one class against the full dataset it lives in.
SyntheticBatch ramo(const Matrix& features, std::span<const int> labels, int minority_class, std::size_t amount,
                    const RamoConfig& config, Rng& rng);

/// Two-class Random Balance. The total size is preserved: the class that
/// shrinks is under-sampled and the one that grows is topped up with SMOTE.
struct TwoClassBalance {
    std::size_t new_majority_size = 0;
    std::vector<std::size_t> kept_minority;  // rows of the minority matrix
    std::vector<std::size_t> kept_majority;  // rows of the majority matrix
    SyntheticBatch synthetic_minority;
    SyntheticBatch synthetic_majority;

    std::size_t size() const {
        return kept_minority.size() + kept_majority.size() + synthetic_minority.size() + synthetic_majority.size();
    }
};

TwoClassBalance random_balance(const Matrix& minority, const Matrix& majority, int k, Rng& rng);
/// Same, with the new majority size fixed instead of drawn.
TwoClassBalance random_balance_to(const Matrix& minority, const Matrix& majority, std::size_t new_majority_size, int k,
                                  Rng& rng);

/// Result of resampling a dataset: the source rows that survive plus the
/// synthetic rows appended after them.
struct Resampled {
    std::vector<std::size_t> kept;
    Matrix synthetic;
    std::vector<int> synthetic_labels;
    std::vector<int> skipped_classes;  // minority classes too small to oversample

    std::size_t size() const { return kept.size() + synthetic_labels.size(); }
};

data::Dataset materialize(const data::Dataset& source, const Resampled& r);

/// Random Balance over any number of classes: target sizes (each >= 2,
/// summing to the input size) are drawn one class at a time in random order.
Resampled random_balance_multiclass(const data::Dataset& dataset, int k, Rng& rng);

/// Applies a variant treating the largest class as majority and every other
/// class as minority.
Resampled apply_multiclass(const data::Dataset& dataset, Variant variant, const ResampleConfig& config, Rng& rng);

}  // namespace dynsel::resample
