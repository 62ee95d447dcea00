#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynsel/common.hpp"

namespace dynsel::data {

struct AttributeSpec {
    enum class Kind { Numeric, Nominal };
    std::string name;
    Kind kind = Kind::Numeric;
    std::vector<std::string> categories;  // nominal only; column holds the category index

    bool nominal() const { return kind == Kind::Nominal; }
};

/// Feature matrix plus integer labels in [0, L-1].
///
/// Datasets produced by the parsers satisfy the full invariant set (every
/// class present, L >= 2). Derived datasets (folds, bootstraps, resampled
/// sets) keep the parent's class list and may lack some classes.
struct Dataset {
    std::string name;
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::vector<AttributeSpec> attributes;

    std::size_t size() const { return labels.size(); }
    std::size_t n_features() const { return features.cols(); }
    int n_classes() const { return static_cast<int>(class_names.size()); }

    /// Rows in the given order; class list and attributes are carried over.
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// Throws if row count, label range, class presence or L >= 2 is violated.
void validate(const Dataset& dataset);

std::vector<int> class_counts(std::span<const int> labels, int n_classes);

struct ImbalanceProfile {
    std::vector<int> class_counts;
    int majority_class = 0;
    double imbalance_ratio = 1.0;  // over classes that are present
};

ImbalanceProfile imbalance_profile(const Dataset& dataset);

Dataset parse_keel(std::string_view text, std::string_view name = {});

/// `label_column` may be negative to count from the end (-1 = last column).
Dataset parse_csv(std::string_view text, int label_column, std::string_view name = {});

/// Loads by extension: `.dat` is KEEL, anything else is CSV with the label in
/// the last column.
Dataset load_file(const std::string& path);

/// One-hot expansion of nominal columns; numeric columns pass through.
Dataset encode_nominals(const Dataset& dataset);

struct ScalingParams {
    std::vector<double> mean;
    std::vector<double> scale;  // population std; 0 for constant columns

    void apply(Matrix& features) const;
    std::string to_text() const;
    static ScalingParams from_text(std::string_view text);
};

ScalingParams fit_scaling(const Matrix& train);

struct Standardized {
    Dataset train;
    std::vector<Dataset> others;
    ScalingParams params;
};

/// Z-scores every feature with statistics fitted on `train` only.
Standardized standardize(const Dataset& train, const std::vector<Dataset>& others = {});

struct FoldPair {
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
};

struct SplitPlan {
    std::array<FoldPair, 5> replications;
    std::uint64_t seed = 0;
    std::vector<int> singleton_classes;  // assigned wholly to fold A
};

SplitPlan stratified_5x2(const Dataset& dataset, std::uint64_t seed);

}  // namespace dynsel::data
