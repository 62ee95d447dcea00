#include "dynsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace dynsel::ds {

namespace {

constexpr std::array<std::string_view, 15> kNames = {"STATIC", "RANK",  "LCA",   "MCB",   "KNE",
                                                     "KNU",    "DES-KNN", "DESP", "DES-RRC", "META-DES",
                                                     "F-LCA",  "F-MCB", "F-KNE", "F-KNU", "F-DES-KNN"};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> blank_competence(const Query& q) { return std::vector<double>(q.n_classifiers, kNaN); }

std::size_t hits(const Query& q, std::size_t i) {
    std::size_t h = 0;
    for (std::size_t j = 0; j < q.roc.size(); ++j) h += q.hit(j, i);
    return h;
}

// Weighted plurality vote and weighted mean support over `selected`.
SelectionResult finish(const Query& q, std::vector<std::size_t> selected, std::vector<int> weights,
                       std::vector<double> competence, bool fallback) {
    SelectionResult r;
    const auto L = static_cast<std::size_t>(q.n_classes);
    std::vector<long> tally(L, 0);
    r.support.assign(L, 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < selected.size(); ++s) {
        const std::size_t i = selected[s];
        const int w = weights.empty() ? 1 : weights[s];
        tally[static_cast<std::size_t>(q.predictions[i])] += w;
        const auto sup = q.support(i);
        for (std::size_t c = 0; c < L; ++c) r.support[c] += w * sup[c];
        total += w;
    }
    for (auto& v : r.support) v /= total;
    r.predicted_class = static_cast<int>(std::max_element(tally.begin(), tally.end()) - tally.begin());
    r.selected = std::move(selected);
    r.vote_weights = std::move(weights);
    r.competence = std::move(competence);
    r.fallback = fallback;
    return r;
}

SelectionResult whole(const Query& q, std::span<const std::size_t> candidates, std::vector<double> competence) {
    return finish(q, {candidates.begin(), candidates.end()}, {}, std::move(competence), true);
}

// Lowest-index member of `candidates` with the highest value.
std::size_t best_of(std::span<const std::size_t> candidates, const std::vector<double>& value) {
    std::size_t best = candidates.front();
    for (auto i : candidates)
        if (value[i] > value[best]) best = i;
    return best;
}

void require_roc(const Query& q) {
    if (q.roc.size() == 0) throw Error("empty region of competence");
}

}  // namespace

std::string_view method_name(Method m) { return kNames[static_cast<std::size_t>(m)]; }

std::optional<Method> parse_method(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<Method>(i);
    return std::nullopt;
}

bool is_fire(Method m) { return m >= Method::FLca; }

Method base_method(Method m) {
    switch (m) {
        case Method::FLca: return Method::Lca;
        case Method::FMcb: return Method::Mcb;
        case Method::FKne: return Method::Kne;
        case Method::FKnu: return Method::Knu;
        case Method::FDesKnn: return Method::DesKnn;
        default: return m;
    }
}

std::pair<std::size_t, std::size_t> DesKnnConfig::resolve(std::size_t pool) const {
    if (pool == 0) throw Error("DES-KNN needs a non-empty pool");
    auto frac = [pool](double f) { return static_cast<std::size_t>(std::ceil(f * static_cast<double>(pool))); };
    std::size_t nn = std::clamp<std::size_t>(n.value_or(frac(n_fraction)), 1, pool);
    std::size_t jj = std::clamp<std::size_t>(j.value_or(frac(j_fraction)), 1, nn);
    return {nn, jj};
}

RegionOfCompetence region_of_competence(const Matrix& dsel, std::span<const double> x, std::size_t k) {
    if (dsel.rows() < k) spdlog::warn("DSEL has {} rows, fewer than K = {}; using all of it", dsel.rows(), k);
    auto nn = nearest(dsel, x, k);
    return {std::move(nn.indices), std::move(nn.distances)};
}

double profile_similarity(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error("output profiles differ in length");
    if (a.empty()) return 1.0;
    std::size_t same = 0;
    for (std::size_t k = 0; k < a.size(); ++k) same += a[k] == b[k];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

double double_fault(std::span<const int> pred_a, std::span<const int> pred_b, std::span<const int> labels) {
    if (labels.empty()) throw Error("double fault over an empty region");
    std::size_t both = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) both += pred_a[k] != labels[k] && pred_b[k] != labels[k];
    return static_cast<double>(both) / static_cast<double>(labels.size());
}

double rrc_correct_probability(std::span<const double> support, int true_class, int draws, Rng& rng,
                               double epsilon) {
    if (draws <= 0) throw Error("draw count must be positive");
    const auto L = support.size();
    std::vector<std::gamma_distribution<double>> gamma;
    gamma.reserve(L);
    for (double s : support) gamma.emplace_back(static_cast<double>(L) * s + epsilon, 1.0);
    std::vector<double> g(L);
    int wins = 0;
    for (int d = 0; d < draws; ++d) {
        for (std::size_t c = 0; c < L; ++c) g[c] = gamma[c](rng);
        wins += argmax(std::span<const double>(g)) == static_cast<std::size_t>(true_class);
    }
    return static_cast<double>(wins) / draws;
}

Needs needs_for(std::span<const Method> methods) {
    Needs n;
    for (auto m : methods) {
        n.profiles = n.profiles || m == Method::Mcb || m == Method::FMcb || m == Method::MetaDes;
        n.rrc = n.rrc || m == Method::DesRrc;
        n.meta = n.meta || m == Method::MetaDes;
    }
    return n;
}

DselContext make_context(std::vector<cart::DecisionTree> trees, const data::Dataset& dsel, std::size_t n_original,
                         const Params& params, kernels::Exec exec) {
    if (trees.empty()) throw Error("empty pool");
    if (dsel.size() == 0) throw Error("empty DSEL");
    if (params.k == 0) throw Error("K must be positive");
    DselContext ctx;
    ctx.trees = std::move(trees);
    ctx.features = dsel.features;
    ctx.labels = dsel.labels;
    ctx.n_classes = dsel.n_classes();
    ctx.n_original = std::min(n_original, dsel.size());
    ctx.params = params;
    ctx.outputs = kernels::pool_outputs(ctx.trees, ctx.features, exec);
    if (ctx.size() < params.k)
        spdlog::warn("DSEL has {} rows, fewer than K = {}; regions use all of it", ctx.size(), params.k);
    return ctx;
}

void prepare_rrc(DselContext& ctx, kernels::Exec exec) {
    const std::size_t M = ctx.pool_size();
    const std::size_t n = ctx.size();
    const auto L = static_cast<std::size_t>(ctx.n_classes);
    const double chance = 1.0 / static_cast<double>(L);
    ctx.csrc.assign(n * M, 0.0);
    auto one_tree = [&](std::size_t i) {
        std::map<std::size_t, double> memo;
        const std::uint64_t tree_seed = derive_seed(ctx.params.seed, i);
        for (std::size_t k = 0; k < n; ++k) {
            const auto leaf = static_cast<std::size_t>(ctx.outputs.leaf(k, i));
            const std::size_t key = leaf * L + static_cast<std::size_t>(ctx.labels[k]);
            auto it = memo.find(key);
            if (it == memo.end()) {
                Rng rng(derive_seed(tree_seed, key));
                const double p = rrc_correct_probability(ctx.outputs.support(k, i), ctx.labels[k], ctx.params.rrc.draws,
                                                         rng, ctx.params.rrc.epsilon);
                it = memo.emplace(key, p - chance).first;
            }
            ctx.csrc[k * M + i] = it->second;
        }
    };
    if (exec == kernels::Exec::Serial) {
        for (std::size_t i = 0; i < M; ++i) one_tree(i);
        return;
    }
    const auto m = static_cast<long>(M);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < m; ++i) one_tree(static_cast<std::size_t>(i));
}

Query make_query(const DselContext& ctx, std::span<const int> predictions, std::span<const double> supports,
                 const Neighbors& neighbors, Needs needs, std::size_t exclude) {
    const std::size_t M = ctx.pool_size();
    Query q;
    q.n_classifiers = M;
    q.n_classes = ctx.n_classes;
    q.predictions.assign(predictions.begin(), predictions.end());
    q.supports.assign(supports.begin(), supports.end());

    const std::size_t k = std::min(ctx.params.k, neighbors.size());
    q.roc.indices.assign(neighbors.indices.begin(), neighbors.indices.begin() + static_cast<long>(k));
    q.roc.distances.assign(neighbors.distances.begin(), neighbors.distances.begin() + static_cast<long>(k));
    q.roc_labels.resize(k);
    q.roc_predictions.resize(k * M);
    q.roc_true_support.resize(k * M);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t row = q.roc.indices[j];
        q.roc_labels[j] = ctx.labels[row];
        for (std::size_t i = 0; i < M; ++i) {
            q.roc_predictions[j * M + i] = ctx.outputs.prediction(row, i);
            q.roc_true_support[j * M + i] = ctx.outputs.support(row, i)[static_cast<std::size_t>(ctx.labels[row])];
        }
    }

    if (needs.profiles || needs.meta) {
        q.roc_similarity.resize(k);
        for (std::size_t j = 0; j < k; ++j)
            q.roc_similarity[j] = profile_similarity(q.predictions, ctx.outputs.profile(q.roc.indices[j]));
        // Same-count comparisons keep the ordering exact.
        std::vector<std::pair<std::size_t, std::size_t>> order;  // (mismatches, row)
        order.reserve(ctx.size());
        for (std::size_t r = 0; r < ctx.size(); ++r) {
            if (r == exclude) continue;
            const auto prof = ctx.outputs.profile(r);
            std::size_t diff = 0;
            for (std::size_t i = 0; i < M; ++i) diff += prof[i] != q.predictions[i];
            order.emplace_back(diff, r);
        }
        const std::size_t kp = std::min(ctx.params.meta.kp, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<long>(kp), order.end());
        q.profile_hits.resize(kp * M);
        for (std::size_t p = 0; p < kp; ++p) {
            const std::size_t row = order[p].second;
            q.profile_neighbors.push_back(row);
            for (std::size_t i = 0; i < M; ++i)
                q.profile_hits[p * M + i] = ctx.outputs.prediction(row, i) == ctx.labels[row];
        }
    }

    if (needs.rrc) {
        if (ctx.csrc.empty()) throw Error("DES-RRC table not prepared");
        const std::size_t region = std::min(neighbors.size(), ctx.params.rrc.region_factor * ctx.params.k);
        q.rrc_competence.assign(M, 0.0);
        for (std::size_t t = 0; t < region; ++t) {
            const double w = gaussian_potential(neighbors.distances[t]);
            const double* row = ctx.csrc.data() + neighbors.indices[t] * M;
            for (std::size_t i = 0; i < M; ++i) q.rrc_competence[i] += row[i] * w;
        }
    }
    return q;
}

namespace {

std::size_t neighbor_count(const DselContext& ctx, Needs needs) {
    return needs.rrc ? std::max(ctx.params.k, ctx.params.rrc.region_factor * ctx.params.k) : ctx.params.k;
}

}  // namespace

Query make_query(const DselContext& ctx, std::span<const double> x, Needs needs) {
    std::vector<int> preds(ctx.pool_size());
    std::vector<double> sups;
    sups.reserve(ctx.pool_size() * static_cast<std::size_t>(ctx.n_classes));
    for (std::size_t i = 0; i < ctx.pool_size(); ++i) {
        preds[i] = ctx.trees[i].predict(x);
        const auto s = ctx.trees[i].predict_support(x);
        sups.insert(sups.end(), s.begin(), s.end());
    }
    return make_query(ctx, preds, sups, nearest(ctx.features, x, neighbor_count(ctx, needs)), needs);
}

SelectionResult select_static(const Query& q, std::span<const std::size_t> candidates) {
    return finish(q, {candidates.begin(), candidates.end()}, {}, blank_competence(q), false);
}

SelectionResult select_rank(const Query& q, std::span<const std::size_t> candidates) {
    require_roc(q);
    auto delta = blank_competence(q);
    for (auto i : candidates) {
        std::size_t run = 0;
        while (run < q.roc.size() && q.hit(run, i)) ++run;
        delta[i] = static_cast<double>(run);
    }
    const std::size_t best = best_of(candidates, delta);
    return finish(q, {best}, {}, std::move(delta), false);
}

SelectionResult select_lca(const Query& q, std::span<const std::size_t> candidates) {
    require_roc(q);
    auto delta = blank_competence(q);
    for (auto i : candidates) {
        std::size_t same = 0, ok = 0;
        for (std::size_t j = 0; j < q.roc.size(); ++j) {
            if (q.roc_labels[j] != q.predictions[i]) continue;
            ++same;
            ok += q.hit(j, i);
        }
        delta[i] = same == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(same);
    }
    const std::size_t best = best_of(candidates, delta);
    return finish(q, {best}, {}, std::move(delta), false);
}

SelectionResult select_mcb(const Query& q, std::span<const std::size_t> candidates, const McbConfig& config) {
    require_roc(q);
    if (q.roc_similarity.size() != q.roc.size()) throw Error("MCB needs output-profile similarities");
    const auto n = static_cast<double>(q.roc.size());
    std::vector<std::size_t> correct(q.n_classifiers, 0);
    auto delta = blank_competence(q);
    for (auto i : candidates) {
        for (std::size_t j = 0; j < q.roc.size(); ++j)
            if (q.roc_similarity[j] > config.t_s) correct[i] += q.hit(j, i);
        delta[i] = static_cast<double>(correct[i]) / n;
    }
    const std::size_t best = best_of(candidates, delta);
    if (candidates.size() == 1) return finish(q, {best}, {}, std::move(delta), false);
    std::size_t second = 0;
    for (auto i : candidates)
        if (i != best) second = std::max(second, correct[i]);
    // Difference taken on counts so that the comparison with t_c is exact.
    const double gap = static_cast<double>(correct[best] - second) / n;
    if (gap > config.t_c) return finish(q, {best}, {}, std::move(delta), false);
    return whole(q, candidates, std::move(delta));
}

SelectionResult select_kne(const Query& q, std::span<const std::size_t> candidates) {
    require_roc(q);
    auto delta = blank_competence(q);
    // Length of the leading run of hits decides at which region size c_i is an oracle.
    std::vector<std::size_t> run(q.n_classifiers, 0);
    for (auto i : candidates) {
        while (run[i] < q.roc.size() && q.hit(run[i], i)) ++run[i];
        delta[i] = static_cast<double>(hits(q, i));
    }
    for (std::size_t size = q.roc.size(); size > 0; --size) {
        std::vector<std::size_t> oracles;
        for (auto i : candidates)
            if (run[i] >= size) oracles.push_back(i);
        if (!oracles.empty()) return finish(q, std::move(oracles), {}, std::move(delta), false);
    }
    return whole(q, candidates, std::move(delta));
}

SelectionResult select_knu(const Query& q, std::span<const std::size_t> candidates) {
    require_roc(q);
    auto delta = blank_competence(q);
    std::vector<std::size_t> selected;
    std::vector<int> weights;
    for (auto i : candidates) {
        const auto h = hits(q, i);
        delta[i] = static_cast<double>(h);
        if (h > 0) {
            selected.push_back(i);
            weights.push_back(static_cast<int>(h));
        }
    }
    if (selected.empty()) return whole(q, candidates, std::move(delta));
    return finish(q, std::move(selected), std::move(weights), std::move(delta), false);
}

SelectionResult select_desknn(const Query& q, std::span<const std::size_t> candidates, const DesKnnConfig& config) {
    require_roc(q);
    const auto [N, J] = config.resolve(candidates.size());
    auto delta = blank_competence(q);
    std::vector<std::size_t> order(candidates.begin(), candidates.end());
    std::vector<std::size_t> acc(q.n_classifiers, 0);
    for (auto i : order) {
        acc[i] = hits(q, i);
        delta[i] = static_cast<double>(acc[i]) / static_cast<double>(q.roc.size());
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return acc[a] > acc[b]; });
    order.resize(N);

    std::vector<std::size_t> df_sum(q.n_classifiers, 0);
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = a + 1; b < N; ++b) {
            std::size_t both = 0;
            for (std::size_t j = 0; j < q.roc.size(); ++j) both += !q.hit(j, order[a]) && !q.hit(j, order[b]);
            df_sum[order[a]] += both;
            df_sum[order[b]] += both;
        }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return df_sum[a] != df_sum[b] ? df_sum[a] < df_sum[b] : a < b;
    });
    order.resize(J);
    std::sort(order.begin(), order.end());
    return finish(q, std::move(order), {}, std::move(delta), false);
}

SelectionResult select_desp(const Query& q, std::span<const std::size_t> candidates) {
    require_roc(q);
    const auto n = q.roc.size();
    const auto L = static_cast<std::size_t>(q.n_classes);
    auto delta = blank_competence(q);
    std::vector<std::size_t> selected;
    for (auto i : candidates) {
        const auto h = hits(q, i);
        delta[i] = static_cast<double>(h) / static_cast<double>(n) - 1.0 / static_cast<double>(L);
        // h / n > 1 / L, compared on integers
        if (h * L > n) selected.push_back(i);
    }
    if (selected.empty()) return whole(q, candidates, std::move(delta));
    return finish(q, std::move(selected), {}, std::move(delta), false);
}

SelectionResult select_desrrc(const Query& q, std::span<const std::size_t> candidates) {
    if (q.rrc_competence.size() != q.n_classifiers) throw Error("DES-RRC competences were not computed");
    auto delta = blank_competence(q);
    std::vector<std::size_t> selected;
    for (auto i : candidates) {
        delta[i] = q.rrc_competence[i];
        if (delta[i] > 0.0) selected.push_back(i);
    }
    if (selected.empty()) return whole(q, candidates, std::move(delta));
    return finish(q, std::move(selected), {}, std::move(delta), false);
}

std::vector<double> extract_meta_features(const Query& q, std::size_t i, std::size_t k, std::size_t kp) {
    std::vector<double> f(2 * k + 1 + kp + 1, 0.0);
    const std::size_t M = q.n_classifiers;
    const std::size_t n = std::min(k, q.roc.size());
    std::size_t h = 0;
    for (std::size_t j = 0; j < n; ++j) {
        f[j] = q.hit(j, i);
        f[k + j] = q.roc_true_support[j * M + i];
        h += q.hit(j, i);
    }
    f[2 * k] = n == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(n);
    const std::size_t np = std::min(kp, q.profile_neighbors.size());
    for (std::size_t p = 0; p < np; ++p) f[2 * k + 1 + p] = q.profile_hits[p * M + i];
    const auto s = q.support(i);
    f[2 * k + 1 + kp] = *std::max_element(s.begin(), s.end());
    return f;
}

void train_meta(DselContext& ctx, kernels::Exec exec) {
    const std::size_t n = ctx.n_original;
    const std::size_t M = ctx.pool_size();
    const std::size_t K = ctx.params.k;
    const std::size_t kp = ctx.params.meta.kp;
    const std::size_t width = 2 * K + 1 + kp + 1;
    if (n == 0) throw Error("meta-training needs training rows in DSEL");

    const Matrix queries = ctx.features.take_rows([&] {
        std::vector<std::size_t> v(n);
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }());
    std::vector<std::size_t> self(n);
    std::iota(self.begin(), self.end(), std::size_t{0});
    const auto nn = kernels::knn_batch(ctx.features, queries, K, exec, self);

    Matrix x(n * M, width);
    std::vector<int> y(n * M);
    const Needs needs{.profiles = true, .rrc = false, .meta = true};
    auto one = [&](std::size_t s) {
        const Query q = make_query(ctx, ctx.outputs.profile(s), ctx.outputs.supports_of(s), nn[s], needs, s);
        for (std::size_t i = 0; i < M; ++i) {
            const auto f = extract_meta_features(q, i, K, kp);
            std::copy(f.begin(), f.end(), x.row(s * M + i).begin());
            y[s * M + i] = ctx.outputs.prediction(s, i) == ctx.labels[s];
        }
    };
    if (exec == kernels::Exec::Serial) {
        for (std::size_t s = 0; s < n; ++s) one(s);
    } else {
        const auto ln = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
        for (long s = 0; s < ln; ++s) one(static_cast<std::size_t>(s));
    }
    GaussianNB nb;
    nb.fit(x, y);
    if (nb.degenerate()) spdlog::warn("meta-training saw a single meta-class; META-DES output is constant");
    ctx.meta = std::move(nb);
}

SelectionResult select_metades(const Query& q, std::span<const std::size_t> candidates, const GaussianNB& meta,
                               const Params& params) {
    require_roc(q);
    auto delta = blank_competence(q);
    std::vector<std::size_t> selected;
    for (auto i : candidates) {
        delta[i] = meta.posterior(extract_meta_features(q, i, params.k, params.meta.kp));
        if (delta[i] > params.meta.threshold) selected.push_back(i);
    }
    if (selected.empty()) return whole(q, candidates, std::move(delta));
    return finish(q, std::move(selected), {}, std::move(delta), false);
}

std::vector<std::size_t> dfp_prune(const Query& q) {
    require_roc(q);
    std::vector<std::size_t> all(q.n_classifiers);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const bool mixed = std::any_of(q.roc_labels.begin(), q.roc_labels.end(),
                                   [&](int c) { return c != q.roc_labels.front(); });
    if (!mixed) return all;
    std::vector<std::size_t> kept;
    for (auto i : all) {
        // A correctly labelled frienemy pair exists iff c_i is right on two
        // neighbours of different classes.
        int first = -1;
        bool crosses = false;
        for (std::size_t j = 0; j < q.roc.size() && !crosses; ++j) {
            if (!q.hit(j, i)) continue;
            if (first < 0) first = q.roc_labels[j];
            else crosses = q.roc_labels[j] != first;
        }
        if (crosses) kept.push_back(i);
    }
    return kept.empty() ? all : kept;
}

SelectionResult select(Method method, const Query& q, const DselContext& ctx) {
    std::vector<std::size_t> candidates;
    if (is_fire(method)) {
        candidates = dfp_prune(q);
    } else {
        candidates.resize(q.n_classifiers);
        std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    }
    switch (base_method(method)) {
        case Method::Static: return select_static(q, candidates);
        case Method::Rank: return select_rank(q, candidates);
        case Method::Lca: return select_lca(q, candidates);
        case Method::Mcb: return select_mcb(q, candidates, ctx.params.mcb);
        case Method::Kne: return select_kne(q, candidates);
        case Method::Knu: return select_knu(q, candidates);
        case Method::DesKnn: return select_desknn(q, candidates, ctx.params.desknn);
        case Method::DesP: return select_desp(q, candidates);
        case Method::DesRrc: return select_desrrc(q, candidates);
        case Method::MetaDes:
            if (!ctx.meta) throw Error("META-DES meta-classifier not trained");
            return select_metades(q, candidates, *ctx.meta, ctx.params);
        default: throw Error("unhandled selection method");
    }
}

std::vector<Predictions> predict_batch(const DselContext& ctx, const Matrix& x, std::span<const Method> methods,
                                       kernels::Exec exec) {
    const Needs needs = needs_for(methods);
    if (needs.rrc && ctx.csrc.empty()) throw Error("DES-RRC table not prepared");
    if (needs.meta && !ctx.meta) throw Error("META-DES meta-classifier not trained");
    const auto L = static_cast<std::size_t>(ctx.n_classes);
    const auto outputs = kernels::pool_outputs(ctx.trees, x, exec);
    const auto nn = kernels::knn_batch(ctx.features, x, neighbor_count(ctx, needs), exec);

    std::vector<Predictions> out(methods.size());
    for (auto& p : out) {
        p.labels.assign(x.rows(), 0);
        p.supports = Matrix(x.rows(), L);
    }
    auto one = [&](std::size_t s) {
        const Query q = make_query(ctx, outputs.profile(s), outputs.supports_of(s), nn[s], needs);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const auto r = select(methods[m], q, ctx);
            out[m].labels[s] = r.predicted_class;
            std::copy(r.support.begin(), r.support.end(), out[m].supports.row(s).begin());
        }
    };
    if (exec == kernels::Exec::Serial) {
        for (std::size_t s = 0; s < x.rows(); ++s) one(s);
        return out;
    }
    bool failed = false;
    std::string message;
    const auto n = static_cast<long>(x.rows());
#pragma omp parallel for schedule(dynamic, 8)
    for (long s = 0; s < n; ++s) {
        try {
            one(static_cast<std::size_t>(s));
        } catch (const std::exception& e) {
#pragma omp critical
            {
                if (!failed) message = e.what();
                failed = true;
            }
        }
    }
    if (failed) throw Error(message);
    return out;
}

}  // namespace dynsel::ds
