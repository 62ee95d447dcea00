#include "dynsel/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace dynsel::eval {

namespace {

constexpr std::array<std::string_view, 3> kNames = {"auc", "fmeasure", "gmean"};

int label_span(std::span<const int> predictions, std::span<const int> labels) {
    int L = 0;
    for (int v : labels) L = std::max(L, v + 1);
    for (int v : predictions) L = std::max(L, v + 1);
    return L;
}

void check_pair(std::span<const int> predictions, std::span<const int> labels) {
    if (labels.empty()) throw Error("metric over an empty sample");
    if (predictions.size() != labels.size()) throw Error("predictions and labels differ in length");
}

}  // namespace

std::string_view metric_name(Metric m) { return kNames[static_cast<std::size_t>(m)]; }

std::optional<Metric> parse_metric(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<Metric>(i);
    return std::nullopt;
}

std::vector<double> fractional_ranks(std::span<const double> values, bool higher_is_better) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher_is_better ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mean;
        i = j + 1;
    }
    return rank;
}

double auc_multiclass(const Matrix& scores, std::span<const int> labels) {
    if (scores.rows() != labels.size()) throw Error("score rows and labels differ in length");
    const std::size_t L = scores.cols();
    std::vector<std::vector<std::size_t>> members(L);
    for (std::size_t s = 0; s < labels.size(); ++s) {
        if (labels[s] < 0 || static_cast<std::size_t>(labels[s]) >= L) throw Error("label outside score columns");
        members[static_cast<std::size_t>(labels[s])].push_back(s);
    }
    // A(i|j): probability that a class-i sample scores higher on column i than
    // a class-j sample, from the rank sum of the class-i samples.
    auto a_given = [&](std::size_t i, std::size_t j) {
        std::vector<double> v;
        v.reserve(members[i].size() + members[j].size());
        for (auto s : members[i]) v.push_back(scores(s, i));
        for (auto s : members[j]) v.push_back(scores(s, i));
        const auto r = fractional_ranks(v, false);
        const auto ni = static_cast<double>(members[i].size());
        const auto nj = static_cast<double>(members[j].size());
        const double sum = std::accumulate(r.begin(), r.begin() + static_cast<long>(members[i].size()), 0.0);
        return (sum - ni * (ni + 1.0) / 2.0) / (ni * nj);
    };
    double total = 0.0;
    std::size_t pairs = 0, skipped = 0;
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = i + 1; j < L; ++j) {
            if (members[i].empty() || members[j].empty()) {
                ++skipped;
                continue;
            }
            total += (a_given(i, j) + a_given(j, i)) / 2.0;
            ++pairs;
        }
    if (pairs == 0) throw Error("AUC needs at least two classes present");
    if (skipped > 0) spdlog::debug("AUC: {} class pair(s) skipped for an absent class", skipped);
    return total / static_cast<double>(pairs);
}

double f_measure_weighted(std::span<const int> predictions, std::span<const int> labels) {
    check_pair(predictions, labels);
    const auto L = static_cast<std::size_t>(label_span(predictions, labels));
    std::vector<double> tp(L, 0), predicted(L, 0), actual(L, 0);
    for (std::size_t s = 0; s < labels.size(); ++s) {
        ++predicted[static_cast<std::size_t>(predictions[s])];
        ++actual[static_cast<std::size_t>(labels[s])];
        if (predictions[s] == labels[s]) ++tp[static_cast<std::size_t>(labels[s])];
    }
    double f = 0.0;
    for (std::size_t c = 0; c < L; ++c) {
        if (actual[c] == 0) continue;
        const double precision = predicted[c] > 0 ? tp[c] / predicted[c] : 0.0;
        const double recall = tp[c] / actual[c];
        const double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        f += actual[c] / static_cast<double>(labels.size()) * f1;
    }
    return f;
}

double g_mean(std::span<const int> predictions, std::span<const int> labels) {
    check_pair(predictions, labels);
    const auto L = static_cast<std::size_t>(label_span(predictions, labels));
    std::vector<double> tp(L, 0), actual(L, 0);
    for (std::size_t s = 0; s < labels.size(); ++s) {
        ++actual[static_cast<std::size_t>(labels[s])];
        if (predictions[s] == labels[s]) ++tp[static_cast<std::size_t>(labels[s])];
    }
    double log_sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < L; ++c) {
        if (actual[c] == 0) continue;
        if (tp[c] == 0) return 0.0;
        log_sum += std::log(tp[c] / actual[c]);
        ++present;
    }
    return std::exp(log_sum / present);
}

double score(Metric m, std::span<const int> predictions, const Matrix& supports, std::span<const int> labels) {
    switch (m) {
        case Metric::Auc: return auc_multiclass(supports, labels);
        case Metric::FMeasure: return f_measure_weighted(predictions, labels);
        case Metric::GMean: return g_mean(predictions, labels);
    }
    throw Error("unknown metric");
}

RankTable average_ranks(const Matrix& scores, std::vector<std::string> methods, bool higher_is_better) {
    if (methods.size() != scores.cols()) throw Error("method names do not match score columns");
    RankTable t;
    t.methods = std::move(methods);
    t.ranks = Matrix(scores.rows(), scores.cols());
    t.average.assign(scores.cols(), 0.0);
    for (std::size_t d = 0; d < scores.rows(); ++d) {
        const auto r = fractional_ranks(scores.row(d), higher_is_better);
        for (std::size_t m = 0; m < r.size(); ++m) {
            if (std::isnan(scores(d, m))) throw Error("missing score cell");
            t.ranks(d, m) = r[m];
            t.average[m] += r[m];
        }
    }
    if (scores.rows() > 0)
        for (auto& a : t.average) a /= static_cast<double>(scores.rows());
    return t;
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::vector<double> rank_test_pvalues(std::span<const double> average_ranks, std::size_t n_datasets) {
    if (average_ranks.empty() || n_datasets == 0) throw Error("rank test needs methods and datasets");
    const auto m = static_cast<double>(average_ranks.size());
    const double se = std::sqrt(m * (m + 1.0) / (6.0 * static_cast<double>(n_datasets)));
    const std::size_t best = static_cast<std::size_t>(std::min_element(average_ranks.begin(), average_ranks.end()) -
                                                      average_ranks.begin());
    std::vector<double> p(average_ranks.size(), 1.0);
    for (std::size_t i = 0; i < average_ranks.size(); ++i)
        if (i != best) p[i] = two_sided_normal_p((average_ranks[i] - average_ranks[best]) / se);
    return p;
}

FinnerResult finner_stepdown(std::span<const double> p_values, double alpha) {
    if (p_values.empty()) throw Error("Finner procedure needs at least one p-value");
    const std::size_t k = p_values.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    FinnerResult r;
    r.adjusted.assign(k, 1.0);
    r.reject.assign(k, false);
    double running = 0.0;
    bool rejecting = true;
    for (std::size_t j = 0; j < k; ++j) {
        const double p = p_values[order[j]];
        const double adj = 1.0 - std::pow(1.0 - p, static_cast<double>(k) / static_cast<double>(j + 1));
        running = std::max(running, adj);
        r.adjusted[order[j]] = std::min(1.0, running);
        rejecting = rejecting && running <= alpha;
        r.reject[order[j]] = rejecting;
    }
    return r;
}

int sign_test_critical_value(int n, double alpha) {
    if (n <= 0) throw Error("sign test needs at least one comparison");
    // tail[w] = P(W >= w); computed from the top down in log space
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    for (int w = 0; w <= n; ++w)
        pmf[static_cast<std::size_t>(w)] =
            std::exp(std::lgamma(n + 1.0) - std::lgamma(w + 1.0) - std::lgamma(n - w + 1.0) - n * std::log(2.0));
    double tail = 0.0;
    int critical = n + 1;
    for (int w = n; w >= 0; --w) {
        tail += pmf[static_cast<std::size_t>(w)];
        if (tail <= alpha) critical = w;
        else break;
    }
    return critical;
}

SignTestResult sign_test(int wins, int ties, int losses, double alpha) {
    if (wins < 0 || ties < 0 || losses < 0) throw Error("negative sign-test counts");
    const int n = wins + ties + losses;
    SignTestResult r;
    r.critical_value = sign_test_critical_value(n, alpha);
    r.effective_wins = wins + ties / 2;
    r.significant = r.effective_wins >= r.critical_value;
    return r;
}

}  // namespace dynsel::eval
