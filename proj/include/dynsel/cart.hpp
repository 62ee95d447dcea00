#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynsel/common.hpp"

namespace dynsel::cart {

struct TreeConfig {
    /// A node splits only when its best split reaches this weighted Gini
    /// decrease, (n_node / n_total) * (gini - weighted child gini).
    double min_impurity_decrease = 0.05;
    std::optional<int> max_depth;
    /// Features examined per node; all when unset. When set, a random subset
    /// is drawn from the tree's random source.
    std::optional<std::size_t> max_features;
};

struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<int> class_counts;

    bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<Node> nodes, int n_classes, std::size_t n_features);

    int n_classes() const { return n_classes_; }
    std::size_t n_features() const { return n_features_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t leaf_count() const;
    int depth() const;

    /// Index of the leaf reached by x.
    int leaf_index(std::span<const double> x) const;
    int predict(std::span<const double> x) const;
    std::vector<double> predict_support(std::span<const double> x) const;
    /// Support of a given leaf (leaf counts normalised to sum 1).
    std::vector<double> leaf_support(int leaf) const;

    std::string serialize() const;
    static DecisionTree deserialize(std::string_view text);

    friend bool operator==(const DecisionTree& a, const DecisionTree& b);

private:
    void check_arity(std::span<const double> x) const;

    std::vector<Node> nodes_;
    int n_classes_ = 0;
    std::size_t n_features_ = 0;
};

/// Greedy CART induction with Gini impurity and no pruning. Split ties break
/// by lowest feature index, then lowest threshold.
DecisionTree fit_tree(const Matrix& x, std::span<const int> y, int n_classes, const TreeConfig& config, Rng& rng);

}  // namespace dynsel::cart
