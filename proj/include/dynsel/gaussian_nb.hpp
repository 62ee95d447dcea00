#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dynsel/common.hpp"

namespace dynsel {

/// Two-class Gaussian naive Bayes. Per-feature variances are smoothed by
/// 1e-9 times the largest feature variance.
class GaussianNB {
public:
    void fit(const Matrix& x, std::span<const int> y);

    /// P(class 1 | x).
    double posterior(std::span<const double> x) const;

    /// True when training saw a single class; posterior() is then constant.
    bool degenerate() const { return constant_.has_value(); }

private:
    std::optional<double> constant_;
    double log_prior_[2] = {0.0, 0.0};
    std::vector<double> mean_[2];
    std::vector<double> var_[2];
};

}  // namespace dynsel
