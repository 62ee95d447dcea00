#include "dynsel/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dynsel/knn.hpp"

namespace dynsel::resample {

namespace {

constexpr std::array<std::string_view, 6> kNames = {"Ba", "Ba-RM100", "Ba-RM", "Ba-SM100", "Ba-SM", "Ba-RB"};

SyntheticBatch empty_batch(std::size_t cols) {
    SyntheticBatch b;
    b.samples = Matrix(0, cols);
    return b;
}

void check_seeds(const Matrix& minority) {
    if (minority.rows() < 2) throw Error("SMOTE needs >= 2 seeds");
}

std::size_t clamp_k(int k, std::size_t t) {
    if (k < 1) throw Error("SMOTE neighbourhood must be >= 1");
    return std::min<std::size_t>(static_cast<std::size_t>(k), t - 1);
}

// One interpolated row. A single gap is drawn per row so the result lies on
// the segment between seed and neighbour.
void interpolate(SyntheticBatch& out, const Matrix& minority, std::size_t seed, const Neighbors& nn, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, nn.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t nb = nn.indices[pick(rng)];
    const double gap = unit(rng);
    const auto a = minority.row(seed);
    const auto b = minority.row(nb);
    std::vector<double> row(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) row[j] = a[j] + gap * (b[j] - a[j]);
    out.samples.append_row(row);
    out.provenance.push_back({seed, nb, gap});
}

std::vector<Neighbors> minority_neighbors(const Matrix& minority, std::size_t k) {
    std::vector<Neighbors> nn(minority.rows());
    for (std::size_t i = 0; i < minority.rows(); ++i) nn[i] = nearest(minority, minority.row(i), k, i);
    return nn;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// Grows `rows` (a class with at least one sample) by exactly `amount`.
// Single-sample classes cannot be interpolated, so the sample is repeated.
SyntheticBatch grow(const Matrix& rows, std::size_t amount, int k, Rng& rng) {
    if (rows.rows() >= 2) return smote_count(rows, amount, k, rng);
    SyntheticBatch b = empty_batch(rows.cols());
    for (std::size_t i = 0; i < amount; ++i) {
        b.samples.append_row(rows.row(0));
        b.provenance.push_back({0, 0, 0.0});
    }
    return b;
}

std::vector<std::size_t> rows_of_class(std::span<const int> labels, int c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == c) idx.push_back(i);
    return idx;
}

}  // namespace

std::string_view variant_name(Variant v) { return kNames[static_cast<std::size_t>(v)]; }

std::optional<Variant> parse_variant(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<Variant>(i);
    return std::nullopt;
}

std::string provenance_csv(const SyntheticBatch& batch) {
    std::string out = "seed,neighbor,gap";
    for (std::size_t j = 0; j < batch.samples.cols(); ++j) out += fmt::format(",x{}", j);
    out += '\n';
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& p = batch.provenance[i];
        out += fmt::format("{},{},{:.17g}", p.seed, p.neighbor, p.gap);
        for (double v : batch.samples.row(i)) out += fmt::format(",{:.17g}", v);
        out += '\n';
    }
    return out;
}

std::vector<std::size_t> rus(std::span<const std::size_t> samples, std::size_t target, Rng& rng) {
    if (target > samples.size())
        throw Error(fmt::format("RUS target {} exceeds {} samples", target, samples.size()));
    std::vector<std::size_t> pool(samples.begin(), samples.end());
    for (std::size_t i = 0; i < target; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(target);
    return pool;
}

SyntheticBatch smote(const Matrix& minority, double n_percent, int k, Rng& rng) {
    check_seeds(minority);
    SyntheticBatch out = empty_batch(minority.cols());
    const auto kk = clamp_k(k, minority.rows());
    std::vector<std::size_t> seeds = iota_indices(minority.rows());
    std::size_t per_seed = 0;
    if (n_percent < 100.0) {
        std::shuffle(seeds.begin(), seeds.end(), rng);
        seeds.resize(static_cast<std::size_t>(std::floor(n_percent / 100.0 * static_cast<double>(minority.rows()))));
        per_seed = 1;
    } else {
        per_seed = static_cast<std::size_t>(std::floor(n_percent / 100.0));
    }
    out.samples.reserve_rows(seeds.size() * per_seed);
    for (auto s : seeds) {
        const Neighbors nn = nearest(minority, minority.row(s), kk, s);
        for (std::size_t r = 0; r < per_seed; ++r) interpolate(out, minority, s, nn, rng);
    }
    return out;
}

SyntheticBatch smote_count(const Matrix& minority, std::size_t amount, int k, Rng& rng) {
    SyntheticBatch out = empty_batch(minority.cols());
    if (amount == 0) return out;
    check_seeds(minority);
    const std::size_t t = minority.rows();
    const auto nn = minority_neighbors(minority, clamp_k(k, t));
    out.samples.reserve_rows(amount);
    const std::size_t rounds = amount / t;
    for (std::size_t s = 0; s < t; ++s)
        for (std::size_t r = 0; r < rounds; ++r) interpolate(out, minority, s, nn[s], rng);
    const auto all = iota_indices(t);
    auto extra = rus(all, amount % t, rng);
    std::sort(extra.begin(), extra.end());
    for (auto s : extra) interpolate(out, minority, s, nn[s], rng);
    return out;
}

double ramo_weight(int m, double alpha) { return 1.0 / (1.0 + std::exp(-alpha * m)); }

std::vector<double> ramo_weights(const Matrix& features, std::span<const int> labels, int minority_class, int k1,
                                 double alpha) {
    if (k1 < 1) throw Error("RAMO k1 must be >= 1");
    std::vector<double> w;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != minority_class) continue;
        const Neighbors nn = nearest(features, features.row(i), static_cast<std::size_t>(k1), i);
        int m = 0;
        for (auto j : nn.indices) m += labels[j] != minority_class;
        w.push_back(ramo_weight(m, alpha));
    }
    return w;
}

std::vector<std::size_t> draw_weighted(std::span<const double> weights, std::size_t amount, Rng& rng) {
    std::vector<std::size_t> out;
    if (amount == 0) return out;
    if (weights.empty()) throw Error("cannot draw from an empty weight vector");
    std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
    out.reserve(amount);
    for (std::size_t i = 0; i < amount; ++i) out.push_back(dist(rng));
    return out;
}

SyntheticBatch ramo(const Matrix& features, std::span<const int> labels, int minority_class, std::size_t amount,
                    const RamoConfig& config, Rng& rng) {
    const auto idx = rows_of_class(labels, minority_class);
    const Matrix minority = features.take_rows(idx);
    SyntheticBatch out = empty_batch(features.cols());
    out.class_id = minority_class;
    if (amount == 0) return out;
    check_seeds(minority);
    const auto w = ramo_weights(features, labels, minority_class, config.k1, config.alpha);
    const auto nn = minority_neighbors(minority, clamp_k(config.k2, minority.rows()));
    out.samples.reserve_rows(amount);
    for (auto s : draw_weighted(w, amount, rng)) interpolate(out, minority, s, nn[s], rng);
    return out;
}

TwoClassBalance random_balance(const Matrix& minority, const Matrix& majority, int k, Rng& rng) {
    const std::size_t total = minority.rows() + majority.rows();
    if (total < 4) throw Error("Random Balance needs at least 4 samples");
    std::uniform_int_distribution<std::size_t> size(2, total - 2);
    return random_balance_to(minority, majority, size(rng), k, rng);
}

TwoClassBalance random_balance_to(const Matrix& minority, const Matrix& majority, std::size_t new_majority_size, int k,
                                  Rng& rng) {
    const std::size_t total = minority.rows() + majority.rows();
    if (total < 4) throw Error("Random Balance needs at least 4 samples");
    if (new_majority_size < 2 || new_majority_size > total - 2)
        throw Error(fmt::format("new majority size {} outside [2, {}]", new_majority_size, total - 2));
    const std::size_t new_minority_size = total - new_majority_size;
    TwoClassBalance r;
    r.new_majority_size = new_majority_size;
    const auto min_all = iota_indices(minority.rows());
    const auto maj_all = iota_indices(majority.rows());
    if (new_majority_size < majority.rows()) {
        r.kept_minority = min_all;
        r.kept_majority = rus(maj_all, new_majority_size, rng);
        r.synthetic_minority = grow(minority, new_minority_size - minority.rows(), k, rng);
        r.synthetic_majority = empty_batch(majority.cols());
    } else {
        r.kept_majority = maj_all;
        r.kept_minority = rus(min_all, new_minority_size, rng);
        r.synthetic_majority = grow(majority, new_majority_size - majority.rows(), k, rng);
        r.synthetic_minority = empty_batch(minority.cols());
    }
    return r;
}

data::Dataset materialize(const data::Dataset& source, const Resampled& r) {
    data::Dataset out = source.subset(r.kept);
    out.features.reserve_rows(r.size());
    for (std::size_t i = 0; i < r.synthetic_labels.size(); ++i) {
        out.features.append_row(r.synthetic.row(i));
        out.labels.push_back(r.synthetic_labels[i]);
    }
    return out;
}

namespace {

void append_batch(Resampled& r, const SyntheticBatch& b, int class_id) {
    for (std::size_t i = 0; i < b.size(); ++i) {
        r.synthetic.append_row(b.samples.row(i));
        r.synthetic_labels.push_back(class_id);
    }
}

}  // namespace

Resampled random_balance_multiclass(const data::Dataset& dataset, int k, Rng& rng) {
    const auto counts = data::class_counts(dataset.labels, dataset.n_classes());
    std::vector<int> present;
    for (int c = 0; c < dataset.n_classes(); ++c)
        if (counts[static_cast<std::size_t>(c)] > 0) present.push_back(c);
    const std::size_t total = dataset.size();
    if (present.size() < 2 || total < 2 * present.size())
        throw Error("Random Balance needs two present classes and at least two samples per class on average");

    std::shuffle(present.begin(), present.end(), rng);
    std::vector<std::size_t> target(static_cast<std::size_t>(dataset.n_classes()), 0);
    std::size_t remaining = total;
    for (std::size_t i = 0; i < present.size(); ++i) {
        const std::size_t left_after = present.size() - i - 1;
        std::size_t t = remaining;
        if (left_after > 0) {
            std::uniform_int_distribution<std::size_t> draw(2, remaining - 2 * left_after);
            t = draw(rng);
        }
        target[static_cast<std::size_t>(present[i])] = t;
        remaining -= t;
    }

    Resampled r;
    r.synthetic = Matrix(0, dataset.n_features());
    for (int c = 0; c < dataset.n_classes(); ++c) {
        const auto idx = rows_of_class(dataset.labels, c);
        if (idx.empty()) continue;
        const std::size_t t = target[static_cast<std::size_t>(c)];
        if (t <= idx.size()) {
            auto kept = rus(idx, t, rng);
            r.kept.insert(r.kept.end(), kept.begin(), kept.end());
        } else {
            r.kept.insert(r.kept.end(), idx.begin(), idx.end());
            append_batch(r, grow(dataset.features.take_rows(idx), t - idx.size(), k, rng), c);
        }
    }
    std::sort(r.kept.begin(), r.kept.end());
    return r;
}

Resampled apply_multiclass(const data::Dataset& dataset, Variant variant, const ResampleConfig& config, Rng& rng) {
    Resampled r;
    r.kept = iota_indices(dataset.size());
    r.synthetic = Matrix(0, dataset.n_features());
    if (variant == Variant::Ba) return r;
    if (variant == Variant::RB) return random_balance_multiclass(dataset, config.smote_k, rng);

    const auto counts = data::class_counts(dataset.labels, dataset.n_classes());
    const int majority = static_cast<int>(argmax(std::span<const int>(counts)));
    const auto maj = static_cast<std::size_t>(counts[static_cast<std::size_t>(majority)]);
    const bool ramo_based = variant == Variant::RM || variant == Variant::RM100;
    const bool doubling = variant == Variant::RM100 || variant == Variant::SM100;

    for (int c = 0; c < dataset.n_classes(); ++c) {
        const auto n = static_cast<std::size_t>(counts[static_cast<std::size_t>(c)]);
        if (c == majority || n == 0) continue;
        const std::size_t amount = doubling ? std::min(n, maj - n) : maj - n;
        if (amount == 0) continue;
        if (n < 2) {
            r.skipped_classes.push_back(c);
            spdlog::debug("{}: class '{}' has {} sample(s), not oversampled", dataset.name,
                          dataset.class_names[static_cast<std::size_t>(c)], n);
            continue;
        }
        const SyntheticBatch b =
            ramo_based ? ramo(dataset.features, dataset.labels, c, amount, config.ramo, rng)
                       : smote_count(dataset.features.take_rows(rows_of_class(dataset.labels, c)), amount,
                                     config.smote_k, rng);
        append_batch(r, b, c);
    }
    return r;
}

}  // namespace dynsel::resample
