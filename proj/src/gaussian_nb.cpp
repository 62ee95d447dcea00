#include "dynsel/gaussian_nb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dynsel {

void GaussianNB::fit(const Matrix& x, std::span<const int> y) {
    if (x.rows() == 0 || x.rows() != y.size()) throw Error("naive Bayes: bad training set");
    const std::size_t d = x.cols();
    std::size_t count[2] = {0, 0};
    for (int v : y) {
        if (v != 0 && v != 1) throw Error("naive Bayes: labels must be 0 or 1");
        ++count[v];
    }
    constant_.reset();
    if (count[0] == 0 || count[1] == 0) {
        constant_ = count[1] > 0 ? 1.0 : 0.0;
        return;
    }

    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0, s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) m += x(i, j);
        m /= static_cast<double>(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) s += (x(i, j) - m) * (x(i, j) - m);
        max_var = std::max(max_var, s / static_cast<double>(x.rows()));
    }
    const double eps = 1e-9 * max_var;

    for (int c = 0; c < 2; ++c) {
        mean_[c].assign(d, 0.0);
        var_[c].assign(d, 0.0);
        log_prior_[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(x.rows()));
    }
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) mean_[y[i]][j] += x(i, j);
    for (int c = 0; c < 2; ++c)
        for (auto& m : mean_[c]) m /= static_cast<double>(count[c]);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = x(i, j) - mean_[y[i]][j];
            var_[y[i]][j] += dv * dv;
        }
    for (int c = 0; c < 2; ++c)
        for (auto& v : var_[c]) v = v / static_cast<double>(count[c]) + eps;
}

double GaussianNB::posterior(std::span<const double> x) const {
    if (constant_) return *constant_;
    if (mean_[0].empty() && x.size() > 0) throw Error("naive Bayes: not fitted");
    double ll[2];
    for (int c = 0; c < 2; ++c) {
        double s = log_prior_[c];
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double v = var_[c][j];
            if (v <= 0.0) {
                // zero-variance feature with zero smoothing: a point mass
                s += x[j] == mean_[c][j] ? 0.0 : -std::numeric_limits<double>::infinity();
                continue;
            }
            const double dv = x[j] - mean_[c][j];
            s += -0.5 * std::log(2.0 * std::numbers::pi * v) - dv * dv / (2.0 * v);
        }
        ll[c] = s;
    }
    if (std::isinf(ll[0]) && std::isinf(ll[1])) return ll[1] > ll[0] ? 1.0 : 0.0;
    const double hi = std::max(ll[0], ll[1]);
    const double e0 = std::exp(ll[0] - hi);
    const double e1 = std::exp(ll[1] - hi);
    return e1 / (e0 + e1);
}

}  // namespace dynsel
