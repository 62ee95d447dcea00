#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynsel/common.hpp"

namespace dynsel::eval {

enum class Metric { Auc, FMeasure, GMean };

std::string_view metric_name(Metric m);  // auc | fmeasure | gmean
std::optional<Metric> parse_metric(std::string_view name);

/// Hand and Till multi-class AUC from an n x L score matrix. Class pairs with
/// an absent side are skipped.
double auc_multiclass(const Matrix& scores, std::span<const int> labels);

/// Prevalence-weighted one-vs-rest F1.
double f_measure_weighted(std::span<const int> predictions, std::span<const int> labels);

/// Geometric mean of the recalls of the classes present in `labels`.
double g_mean(std::span<const int> predictions, std::span<const int> labels);

double score(Metric m, std::span<const int> predictions, const Matrix& supports, std::span<const int> labels);

/// Fractional ranking: rank 1 is best, tied values share the mean rank.
std::vector<double> fractional_ranks(std::span<const double> values, bool higher_is_better = true);

struct RankTable {
    std::vector<std::string> methods;
    Matrix ranks;  // datasets x methods
    std::vector<double> average;
};

/// `scores` is datasets x methods.
RankTable average_ranks(const Matrix& scores, std::vector<std::string> methods, bool higher_is_better = true);

double two_sided_normal_p(double z);

/// p-values of the rank z-tests of every method against the best-ranked one
/// (whose own entry is 1).
std::vector<double> rank_test_pvalues(std::span<const double> average_ranks, std::size_t n_datasets);

struct FinnerResult {
    std::vector<double> adjusted;  // in input order
    std::vector<bool> reject;
};

FinnerResult finner_stepdown(std::span<const double> p_values, double alpha = 0.05);

struct SignTestResult {
    bool significant = false;
    int critical_value = 0;
    int effective_wins = 0;
};

/// Smallest w with P(W >= w) <= alpha for W ~ Binomial(n, 1/2); n + 1 if none.
int sign_test_critical_value(int n, double alpha);
SignTestResult sign_test(int wins, int ties, int losses, double alpha);

}  // namespace dynsel::eval
