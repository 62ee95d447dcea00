#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dynsel/cart.hpp"
#include "dynsel/common.hpp"
#include "dynsel/data.hpp"
#include "dynsel/gaussian_nb.hpp"
#include "dynsel/kernels.hpp"
#include "dynsel/knn.hpp"

namespace dynsel::ds {

enum class Method { Static, Rank, Lca, Mcb, Kne, Knu, DesKnn, DesP, DesRrc, MetaDes, FLca, FMcb, FKne, FKnu, FDesKnn };

inline constexpr std::array<Method, 15> kAllMethods = {
    Method::Static, Method::Rank,   Method::Lca,     Method::Mcb,  Method::Kne,  Method::Knu,  Method::DesKnn, Method::DesP,
    Method::DesRrc, Method::MetaDes, Method::FLca,   Method::FMcb, Method::FKne, Method::FKnu, Method::FDesKnn};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
bool is_fire(Method m);
/// The scheme a FIRE method runs after pruning; identity otherwise.
Method base_method(Method m);

struct McbConfig {
    double t_s = 0.7;  // profile similarity must exceed this
    double t_c = 0.1;  // best must beat second best by more than this
};

struct DesKnnConfig {
    double n_fraction = 0.5;
    double j_fraction = 0.3;
    std::optional<std::size_t> n;  // overrides the fraction when set
    std::optional<std::size_t> j;

    /// N and J for a candidate pool of the given size: 1 <= J <= N <= pool.
    std::pair<std::size_t, std::size_t> resolve(std::size_t pool) const;
};

struct RrcConfig {
    int draws = 1000;
    double epsilon = 1e-3;
    std::size_t region_factor = 30;  // Gaussian sum over region_factor * K nearest DSEL rows
};

struct MetaConfig {
    std::size_t kp = 5;
    double threshold = 0.5;
};

struct Params {
    std::size_t k = 7;
    McbConfig mcb;
    DesKnnConfig desknn;
    RrcConfig rrc;
    MetaConfig meta;
    std::uint64_t seed = 0;
};

struct RegionOfCompetence {
    std::vector<std::size_t> indices;
    std::vector<double> distances;

    std::size_t size() const { return indices.size(); }
};

/// K nearest DSEL rows, ties to the lower row. Uses all of DSEL (with a
/// warning) when it has fewer than K rows.
RegionOfCompetence region_of_competence(const Matrix& dsel, std::span<const double> x, std::size_t k);

double profile_similarity(std::span<const int> a, std::span<const int> b);

/// Fraction of samples both classifiers get wrong.
double double_fault(std::span<const int> pred_a, std::span<const int> pred_b, std::span<const int> labels);

/// Monte-Carlo probability that the true class wins under a Dirichlet draw
/// with parameters L * s_j + epsilon.
double rrc_correct_probability(std::span<const double> support, int true_class, int draws, Rng& rng,
                               double epsilon = 1e-3);

inline double gaussian_potential(double distance) { return std::exp(-distance * distance); }

struct SelectionResult {
    std::vector<std::size_t> selected;  // ascending pool indices
    std::vector<int> vote_weights;      // parallel to `selected`; empty for one vote each
    int predicted_class = 0;
    std::vector<double> competence;  // per pool member; NaN where never computed
    std::vector<double> support;     // aggregated class support of the selected members
    bool fallback = false;           // whole (candidate) pool used because nothing qualified
};

/// Everything one query needs, gathered from the pool outputs on DSEL.
struct Query {
    std::size_t n_classifiers = 0;
    int n_classes = 0;
    std::vector<int> predictions;  // c_i(x_q)
    std::vector<double> supports;  // [i * L + c]
    RegionOfCompetence roc;
    std::vector<int> roc_labels;
    std::vector<int> roc_predictions;     // [j * M + i]
    std::vector<double> roc_true_support;  // [j * M + i], support of c_i for roc_labels[j]
    std::vector<double> roc_similarity;    // profile similarity of x_q and neighbour j
    std::vector<std::size_t> profile_neighbors;
    std::vector<char> profile_hits;      // [p * M + i]
    std::vector<double> rrc_competence;  // filled when DES-RRC is needed

    bool hit(std::size_t j, std::size_t i) const { return roc_predictions[j * n_classifiers + i] == roc_labels[j]; }
    std::span<const double> support(std::size_t i) const {
        return {supports.data() + i * static_cast<std::size_t>(n_classes), static_cast<std::size_t>(n_classes)};
    }
};

/// Which optional per-query pieces to compute.
struct Needs {
    bool profiles = false;  // MCB similarity, META-DES profile neighbours
    bool rrc = false;
    bool meta = false;
};

Needs needs_for(std::span<const Method> methods);

/// Fold-level state: DSEL, pool outputs on it, and the optional DES-RRC table
/// and META-DES meta-classifier.
struct DselContext {
    std::vector<cart::DecisionTree> trees;
    Matrix features;
    std::vector<int> labels;
    int n_classes = 0;
    std::size_t n_original = 0;
    kernels::PoolOutputs outputs;
    Params params;
    std::vector<double> csrc;  // [k * M + i], C_src of classifier i at DSEL row k
    std::optional<GaussianNB> meta;

    std::size_t pool_size() const { return trees.size(); }
    std::size_t size() const { return labels.size(); }
};

DselContext make_context(std::vector<cart::DecisionTree> trees, const data::Dataset& dsel, std::size_t n_original,
                         const Params& params, kernels::Exec exec = kernels::Exec::Parallel);

/// C_src for every (classifier, DSEL row). Memoised on (classifier, leaf,
/// true class) with a source seeded from those three values.
void prepare_rrc(DselContext& ctx, kernels::Exec exec = kernels::Exec::Parallel);

/// Meta-training over the original training rows of DSEL, each with itself
/// excluded from its own region and profile neighbours.
void train_meta(DselContext& ctx, kernels::Exec exec = kernels::Exec::Parallel);

/// `neighbors` must be ordered and hold at least min(K, |DSEL|) rows (more if
/// DES-RRC is needed). `exclude` is a DSEL row to leave out of profile
/// neighbours.
Query make_query(const DselContext& ctx, std::span<const int> predictions, std::span<const double> supports,
                 const Neighbors& neighbors, Needs needs, std::size_t exclude = kNoIndex);

Query make_query(const DselContext& ctx, std::span<const double> x, Needs needs);

// Selectors. `candidates` is the ascending set of pool members the scheme may
// use (the whole pool, or the DFP survivors under FIRE).
SelectionResult select_static(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_rank(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_lca(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_mcb(const Query& q, std::span<const std::size_t> candidates, const McbConfig& config);
SelectionResult select_kne(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_knu(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_desknn(const Query& q, std::span<const std::size_t> candidates, const DesKnnConfig& config);
SelectionResult select_desp(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_desrrc(const Query& q, std::span<const std::size_t> candidates);
SelectionResult select_metades(const Query& q, std::span<const std::size_t> candidates, const GaussianNB& meta,
                               const Params& params);

std::vector<std::size_t> dfp_prune(const Query& q);

/// Meta-feature vector of classifier i, length 2K + 1 + Kp + 1. Missing
/// neighbours (tiny DSEL) are padded with zeros.
std::vector<double> extract_meta_features(const Query& q, std::size_t i, std::size_t k, std::size_t kp);

SelectionResult select(Method method, const Query& q, const DselContext& ctx);

struct Predictions {
    std::vector<int> labels;
    Matrix supports;  // n x L
};

/// Runs every method on every row of `x`; one entry per method, in order.
std::vector<Predictions> predict_batch(const DselContext& ctx, const Matrix& x, std::span<const Method> methods,
                                       kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace dynsel::ds
