#include "dynsel/cart.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace dynsel::cart {

namespace {

double gini(std::span<const int> counts, int n) {
    if (n == 0) return 0.0;
    double sq = 0.0;
    for (int c : counts) sq += static_cast<double>(c) * c;
    return 1.0 - sq / (static_cast<double>(n) * n);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = -1.0;
};

class Builder {
public:
    Builder(const Matrix& x, std::span<const int> y, int n_classes, const TreeConfig& config, Rng& rng)
        : x_(x), y_(y), n_classes_(n_classes), config_(config), rng_(rng), n_total_(static_cast<double>(y.size())) {}

    std::vector<Node> build() {
        std::vector<std::size_t> all(y_.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        grow(all, 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        std::vector<int> counts(static_cast<std::size_t>(n_classes_), 0);
        for (auto i : idx) ++counts[static_cast<std::size_t>(y_[i])];
        const int n = static_cast<int>(idx.size());
        const int nonzero = static_cast<int>(std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }));
        nodes_[id].class_counts = counts;

        if (nonzero <= 1 || n < 2 || (config_.max_depth && depth >= *config_.max_depth)) return id;

        const Split best = best_split(idx, counts);
        constexpr double tol = 1e-12;
        if (best.feature < 0 || best.decrease + tol < config_.min_impurity_decrease) return id;

        std::vector<std::size_t> left, right;
        for (auto i : idx) (x_(i, best.feature) <= best.threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        const int l = grow(left, depth + 1);
        nodes_[id].left = l;
        const int r = grow(right, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    std::vector<std::size_t> candidate_features() {
        std::vector<std::size_t> feats(x_.cols());
        std::iota(feats.begin(), feats.end(), std::size_t{0});
        if (config_.max_features && *config_.max_features < feats.size()) {
            std::shuffle(feats.begin(), feats.end(), rng_);
            feats.resize(std::max<std::size_t>(1, *config_.max_features));
            std::sort(feats.begin(), feats.end());
        }
        return feats;
    }

    Split best_split(const std::vector<std::size_t>& idx, const std::vector<int>& counts) {
        const int n = static_cast<int>(idx.size());
        const double parent = gini(counts, n);
        const double weight = n / n_total_;
        Split best;
        std::vector<std::size_t> order = idx;
        std::vector<int> left(counts.size()), right(counts.size());

        for (auto f : candidate_features()) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            for (int k = 1; k < n; ++k) {
                const int cls = y_[order[k - 1]];
                ++left[static_cast<std::size_t>(cls)];
                --right[static_cast<std::size_t>(cls)];
                const double lo = x_(order[k - 1], f);
                const double hi = x_(order[k], f);
                if (!(lo < hi)) continue;
                const double child = (k * gini(left, k) + (n - k) * gini(right, n - k)) / n;
                const double decrease = weight * (parent - child);
                if (decrease > best.decrease + 1e-12) {
                    double mid = lo + (hi - lo) / 2.0;
                    if (mid >= hi) mid = lo;
                    best = {static_cast<int>(f), mid, decrease};
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const int> y_;
    int n_classes_;
    const TreeConfig& config_;
    Rng& rng_;
    double n_total_;
    std::vector<Node> nodes_;
};

}  // namespace

DecisionTree::DecisionTree(std::vector<Node> nodes, int n_classes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_classes_(n_classes), n_features_(n_features) {}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.is_leaf()) continue;
        d[n.left] = d[n.right] = d[i] + 1;
        deepest = std::max(deepest, d[i] + 1);
    }
    return deepest;
}

void DecisionTree::check_arity(std::span<const double> x) const {
    if (x.size() != n_features_)
        throw Error(fmt::format("arity mismatch: tree expects {} features, got {}", n_features_, x.size()));
}

int DecisionTree::leaf_index(std::span<const double> x) const {
    check_arity(x);
    int i = 0;
    while (!nodes_[i].is_leaf()) i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return i;
}

int DecisionTree::predict(std::span<const double> x) const {
    return static_cast<int>(argmax(std::span<const int>(nodes_[leaf_index(x)].class_counts)));
}

std::vector<double> DecisionTree::leaf_support(int leaf) const {
    const auto& counts = nodes_[leaf].class_counts;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> s(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) s[c] = counts[c] / total;
    return s;
}

std::vector<double> DecisionTree::predict_support(std::span<const double> x) const {
    return leaf_support(leaf_index(x));
}

std::string DecisionTree::serialize() const {
    std::string out = fmt::format("dynsel-tree 1\nclasses {}\nfeatures {}\nnodes {}\n", n_classes_, n_features_, nodes_.size());
    for (const auto& n : nodes_) {
        out += fmt::format("{} {:.17g} {} {}", n.feature, n.threshold, n.left, n.right);
        for (int c : n.class_counts) out += fmt::format(" {}", c);
        out += '\n';
    }
    return out;
}

DecisionTree DecisionTree::deserialize(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string magic, key;
    int version = 0, n_classes = 0;
    std::size_t n_features = 0, n_nodes = 0;
    in >> magic >> version;
    if (magic != "dynsel-tree" || version != 1) throw Error("not a serialized tree");
    in >> key >> n_classes >> key >> n_features >> key >> n_nodes;
    if (!in) throw Error("truncated tree header");
    std::vector<Node> nodes(n_nodes);
    for (auto& n : nodes) {
        std::string thr;
        in >> n.feature >> thr >> n.left >> n.right;
        const auto [p, ec] = std::from_chars(thr.data(), thr.data() + thr.size(), n.threshold);
        if (ec != std::errc()) throw Error("bad threshold in serialized tree");
        n.class_counts.resize(static_cast<std::size_t>(n_classes));
        for (auto& c : n.class_counts) in >> c;
        if (!in) throw Error("truncated tree body");
        if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= static_cast<int>(n_nodes) ||
                             n.right >= static_cast<int>(n_nodes)))
            throw Error("bad child index in serialized tree");
    }
    return DecisionTree(std::move(nodes), n_classes, n_features);
}

bool operator==(const DecisionTree& a, const DecisionTree& b) {
    if (a.n_classes_ != b.n_classes_ || a.n_features_ != b.n_features_ || a.nodes_.size() != b.nodes_.size())
        return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const auto& x = a.nodes_[i];
        const auto& y = b.nodes_[i];
        if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left || x.right != y.right ||
            x.class_counts != y.class_counts)
            return false;
    }
    return true;
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y, int n_classes, const TreeConfig& config, Rng& rng) {
    if (x.rows() == 0 || y.empty()) throw Error("empty input");
    if (x.rows() != y.size()) throw Error("feature rows and labels differ in length");
    Builder builder(x, y, n_classes, config, rng);
    return DecisionTree(builder.build(), n_classes, x.cols());
}

}  // namespace dynsel::cart
