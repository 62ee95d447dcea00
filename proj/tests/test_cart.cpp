#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "dynsel/cart.hpp"

using namespace dynsel;
using namespace dynsel::cart;

namespace {

TreeConfig exact() {
    TreeConfig c;
    c.min_impurity_decrease = 0.0;
    return c;
}

DecisionTree single_leaf(std::vector<int> counts) {
    Node leaf;
    leaf.class_counts = std::move(counts);
    const int L = static_cast<int>(leaf.class_counts.size());
    return DecisionTree({leaf}, L, 1);
}

struct Data {
    Matrix x;
    std::vector<int> y;
};

Data random_points(std::uint64_t seed, int n, int d, int L) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    Data out;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<std::size_t>(d));
        for (auto& v : row) v = u(rng);
        out.x.append_row(row);
        out.y.push_back(static_cast<int>(rng() % static_cast<unsigned>(L)));
    }
    return out;
}

}  // namespace

TEST(Cart, SingleClassIsOneLeaf) {
    Matrix x;
    for (double v : {1.0, 2.0, 3.0}) x.append_row(std::vector<double>{v});
    const std::vector<int> y = {1, 1, 1};
    Rng rng(1);
    const auto t = fit_tree(x, y, 2, TreeConfig{}, rng);
    EXPECT_EQ(t.leaf_count(), 1u);
    EXPECT_EQ(t.predict(std::vector<double>{7.0}), 1);
}

TEST(Cart, XorIsSeparated) {
    Matrix x;
    const std::vector<std::vector<double>> pts = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    for (const auto& p : pts) x.append_row(p);
    const std::vector<int> y = {0, 0, 1, 1};
    Rng rng(1);
    const auto t = fit_tree(x, y, 2, exact(), rng);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(t.predict(x.row(i)), y[i]);
    EXPECT_EQ(t.depth(), 2);
}

TEST(Cart, ImpurityThresholdStops) {
    // x = 0..3 class 0, 4..8 class 1, 9 class 0: best split at 3.5 with
    // weighted decrease 0.5 - 0.6 * (10/36) = 1/3.
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        x.append_row(std::vector<double>{static_cast<double>(i)});
        y.push_back(i < 4 || i == 9 ? 0 : 1);
    }
    Rng rng(1);
    TreeConfig c;
    c.min_impurity_decrease = 0.5;
    EXPECT_EQ(fit_tree(x, y, 2, c, rng).leaf_count(), 1u);
    c.min_impurity_decrease = 0.3;
    const auto t = fit_tree(x, y, 2, c, rng);
    ASSERT_GT(t.leaf_count(), 1u);
    EXPECT_EQ(t.nodes()[0].threshold, 3.5);
}

TEST(Cart, PredictArgmaxAndTieRule) {
    EXPECT_EQ(single_leaf({3, 1, 0}).predict(std::vector<double>{0}), 0);
    EXPECT_EQ(single_leaf({2, 2, 0}).predict(std::vector<double>{0}), 0);
    EXPECT_EQ(single_leaf({0, 2, 2}).predict(std::vector<double>{0}), 1);
}

TEST(Cart, SupportNormalised) {
    EXPECT_EQ(single_leaf({3, 1}).predict_support(std::vector<double>{0}), (std::vector<double>{0.75, 0.25}));
    EXPECT_EQ(single_leaf({0, 4, 0}).predict_support(std::vector<double>{0}), (std::vector<double>{0, 1, 0}));
}

TEST(Cart, ArityMismatch) {
    EXPECT_THROW(single_leaf({1, 1}).predict(std::vector<double>{0, 1}), Error);
}

TEST(Cart, EmptyInput) {
    Rng rng(1);
    EXPECT_THROW(fit_tree(Matrix(), std::vector<int>{}, 2, TreeConfig{}, rng), Error);
}

TEST(Cart, MemorisesDistinctPoints) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto d = random_points(s, 60, 3, 4);
        Rng rng(s);
        const auto t = fit_tree(d.x, d.y, 4, exact(), rng);
        for (std::size_t i = 0; i < d.y.size(); ++i) EXPECT_EQ(t.predict(d.x.row(i)), d.y[i]);
    }
}

TEST(Cart, PredictIsArgmaxOfSupportAndSupportOnSimplex) {
    const auto d = random_points(5, 200, 4, 3);
    Rng rng(5);
    const auto t = fit_tree(d.x, d.y, 3, TreeConfig{}, rng);
    const auto probes = random_points(6, 300, 4, 3);
    for (std::size_t i = 0; i < probes.y.size(); ++i) {
        const auto s = t.predict_support(probes.x.row(i));
        double sum = 0;
        for (double v : s) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_EQ(static_cast<std::size_t>(t.predict(probes.x.row(i))), argmax(std::span<const double>(s)));
    }
}

TEST(Cart, DeterministicGivenSeed) {
    const auto d = random_points(8, 150, 5, 3);
    TreeConfig c;
    c.max_features = 2;
    Rng a(99), b(99);
    EXPECT_EQ(fit_tree(d.x, d.y, 3, c, a), fit_tree(d.x, d.y, 3, c, b));
}

TEST(Cart, SplitTieBreaksToLowestFeature) {
    // Two identical columns: equal decrease, feature 0 must win.
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 8; ++i) {
        x.append_row(std::vector<double>{static_cast<double>(i), static_cast<double>(i)});
        y.push_back(i < 4 ? 0 : 1);
    }
    Rng rng(1);
    const auto t = fit_tree(x, y, 2, exact(), rng);
    EXPECT_EQ(t.nodes()[0].feature, 0);
}

TEST(Cart, LeavesHoldSamplesAndChildrenAreValid) {
    const auto d = random_points(12, 120, 3, 3);
    Rng rng(12);
    const auto t = fit_tree(d.x, d.y, 3, TreeConfig{}, rng);
    for (const auto& n : t.nodes()) {
        if (n.is_leaf()) {
            EXPECT_GE(std::accumulate(n.class_counts.begin(), n.class_counts.end(), 0), 1);
        } else {
            EXPECT_GT(n.left, 0);
            EXPECT_GT(n.right, 0);
        }
    }
}

TEST(Cart, SerializationRoundTrip) {
    const auto d = random_points(3, 100, 3, 3);
    Rng rng(3);
    const auto t = fit_tree(d.x, d.y, 3, TreeConfig{}, rng);
    const auto back = DecisionTree::deserialize(t.serialize());
    EXPECT_EQ(back, t);
    EXPECT_THROW(DecisionTree::deserialize("garbage"), Error);
}
