#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dynsel/pool.hpp"
#include "dynsel/selection.hpp"
#include "support/oracle.hpp"

using namespace dynsel;
using namespace dynsel::ds;

namespace {

// Query from a hit table: hits[j][i] says whether classifier i is right on
// neighbour j. Neighbour labels default to 0; a miss predicts (label+1) % L.
struct Builder {
    int L = 2;
    std::vector<int> query_pred;
    std::vector<int> labels;
    std::vector<std::vector<int>> hits;
    std::vector<double> similarity;

    Query build() const {
        Query q;
        const std::size_t M = query_pred.size();
        q.n_classifiers = M;
        q.n_classes = L;
        q.predictions = query_pred;
        for (int p : query_pred)
            for (int c = 0; c < L; ++c) q.supports.push_back(c == p ? 1.0 : 0.0);
        for (std::size_t j = 0; j < hits.size(); ++j) {
            const int y = labels.empty() ? 0 : labels[j];
            q.roc.indices.push_back(j);
            q.roc.distances.push_back(static_cast<double>(j));
            q.roc_labels.push_back(y);
            for (std::size_t i = 0; i < M; ++i) {
                q.roc_predictions.push_back(hits[j][i] ? y : (y + 1) % L);
                q.roc_true_support.push_back(hits[j][i] ? 1.0 : 0.0);
            }
        }
        q.roc_similarity = similarity.empty() ? std::vector<double>(hits.size(), 1.0) : similarity;
        return q;
    }
};

// Hit table with `correct[i]` hits for classifier i spread over the first rows.
std::vector<std::vector<int>> counts_table(std::size_t n, const std::vector<std::size_t>& correct) {
    std::vector<std::vector<int>> t(n, std::vector<int>(correct.size(), 0));
    for (std::size_t i = 0; i < correct.size(); ++i)
        for (std::size_t j = 0; j < correct[i]; ++j) t[j][i] = 1;
    return t;
}

std::vector<std::size_t> all(std::size_t m) {
    std::vector<std::size_t> v(m);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

TEST(Region, Examples) {
    Matrix d;
    for (double v : {0.0, 1.0, 2.0, 10.0}) d.append_row(std::vector<double>{v});
    EXPECT_EQ(region_of_competence(d, std::vector<double>{1.4}, 2).indices, (std::vector<std::size_t>{1, 2}));
    const auto same = region_of_competence(d, std::vector<double>{2.0}, 1);
    EXPECT_EQ(same.indices[0], 2u);
    EXPECT_EQ(same.distances[0], 0.0);
    EXPECT_EQ(region_of_competence(d, std::vector<double>{-1.0}, 4).indices, (std::vector<std::size_t>{0, 1, 2, 3}));
    // equidistant rows tie to the lower index
    EXPECT_EQ(region_of_competence(d, std::vector<double>{0.5}, 1).indices[0], 0u);
    EXPECT_EQ(region_of_competence(d, std::vector<double>{0.0}, 9).size(), 4u);
}

TEST(Region, InvariantUnderCommonRescaling) {
    Rng rng(2);
    std::uniform_int_distribution<int> g(0, 6);
    Matrix d, scaled;
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> r = {double(g(rng)), double(g(rng))};
        d.append_row(r);
        scaled.append_row(std::vector<double>{3 * r[0], 3 * r[1]});
    }
    for (int t = 0; t < 30; ++t) {
        const std::vector<double> x = {g(rng) + 0.5, double(g(rng))};
        const std::vector<double> sx = {3 * x[0], 3 * x[1]};
        EXPECT_EQ(region_of_competence(d, x, 7).indices, region_of_competence(scaled, sx, 7).indices);
    }
}

TEST(Similarity, Examples) {
    const std::vector<int> a = {1, 0, 1, 1}, b = {1, 1, 1, 0}, c = {0, 1, 0, 0};
    EXPECT_EQ(profile_similarity(a, a), 1.0);
    EXPECT_EQ(profile_similarity(a, b), 0.5);
    EXPECT_EQ(profile_similarity(a, c), 0.0);
    EXPECT_THROW(profile_similarity(a, std::vector<int>{1}), Error);
}

TEST(Similarity, SymmetricAndOneMinusHamming) {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        std::vector<int> a(10), b(10);
        for (auto& v : a) v = static_cast<int>(rng() % 3);
        for (auto& v : b) v = static_cast<int>(rng() % 3);
        int diff = 0;
        for (int i = 0; i < 10; ++i) diff += a[i] != b[i];
        EXPECT_EQ(profile_similarity(a, b), profile_similarity(b, a));
        EXPECT_DOUBLE_EQ(profile_similarity(a, b), 1.0 - diff / 10.0);
    }
}

TEST(Rank, LeadingRun) {
    Builder b;
    b.query_pred = {0, 0};
    b.hits = {{1, 1}, {1, 1}, {0, 1}, {1, 1}, {1, 1}, {1, 0}, {1, 1}};
    const auto r = select_rank(b.build(), all(2));
    EXPECT_EQ(r.competence[0], 2.0);
    EXPECT_EQ(r.competence[1], 5.0);
    EXPECT_EQ(r.selected, std::vector<std::size_t>{1});
}

TEST(Rank, TiesToLowestIndex) {
    Builder b;
    b.query_pred = {1, 0, 1};
    b.hits = std::vector<std::vector<int>>(7, {0, 0, 0});
    const auto r = select_rank(b.build(), all(3));
    EXPECT_EQ(r.selected, std::vector<std::size_t>{0});
    EXPECT_EQ(r.predicted_class, 1);
    b.hits = std::vector<std::vector<int>>(7, {1, 1, 1});
    EXPECT_EQ(select_rank(b.build(), all(3)).competence[2], 7.0);
}

TEST(Lca, Ratios) {
    Builder b;
    b.L = 2;
    b.query_pred = {0, 1, 1};
    b.labels = {0, 0, 0, 1, 1};
    // classifier 0: two of three class-0 neighbours; 1: perfect on class 1; 2: none of class 1
    b.hits = {{1, 0, 0}, {1, 0, 0}, {0, 0, 0}, {0, 1, 0}, {0, 1, 0}};
    auto r = select_lca(b.build(), all(3));
    EXPECT_DOUBLE_EQ(r.competence[0], 2.0 / 3.0);
    EXPECT_EQ(r.competence[1], 1.0);
    EXPECT_EQ(r.competence[2], 0.0);
    EXPECT_EQ(r.selected, std::vector<std::size_t>{1});
    b.L = 3;
    b.query_pred = {2, 2, 2};  // no neighbour of class 2
    r = select_lca(b.build(), all(3));
    EXPECT_EQ(r.competence, (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(r.selected, std::vector<std::size_t>{0});
}

TEST(Mcb, EmptyFilteredRegionFallsBack) {
    Builder b;
    b.query_pred = {0, 1, 1};
    b.hits = counts_table(7, {7, 3, 1});
    b.similarity.assign(7, 0.5);
    const auto r = select_mcb(b.build(), all(3), McbConfig{});
    EXPECT_TRUE(r.fallback);
    EXPECT_EQ(r.selected, all(3));
    EXPECT_EQ(r.predicted_class, 1);
    EXPECT_EQ(r.competence, (std::vector<double>{0, 0, 0}));
}

TEST(Mcb, ClearWinnerVersusCloseCall) {
    Builder b;
    b.query_pred = {0, 1, 1};
    b.hits = counts_table(20, {18, 14, 2});  // 0.9 vs 0.7
    auto r = select_mcb(b.build(), all(3), McbConfig{});
    EXPECT_EQ(r.selected, std::vector<std::size_t>{0});
    EXPECT_EQ(r.predicted_class, 0);
    b.hits = counts_table(20, {16, 15, 2});  // 0.8 vs 0.75
    r = select_mcb(b.build(), all(3), McbConfig{});
    EXPECT_EQ(r.selected, all(3));
    EXPECT_EQ(r.predicted_class, 1);
}

TEST(Mcb, DividesByWholeRegion) {
    Builder b;
    b.query_pred = {0, 0};
    b.hits = counts_table(4, {4, 0});
    b.similarity = {1, 1, 0, 0};
    EXPECT_EQ(select_mcb(b.build(), all(2), McbConfig{}).competence[0], 0.5);
}

TEST(Kne, LocalOracle) {
    Builder b;
    b.query_pred = {0, 1, 1};
    b.hits = counts_table(7, {6, 7, 7});
    b.hits[3][2] = 0;
    auto r = select_kne(b.build(), all(3));
    EXPECT_EQ(r.selected, std::vector<std::size_t>{1});
    b.hits = std::vector<std::vector<int>>(7, {0, 0, 1});
    b.hits[0] = {0, 0, 0};
    r = select_kne(b.build(), all(3));
    EXPECT_TRUE(r.fallback);
    EXPECT_EQ(r.selected, all(3));
    EXPECT_EQ(r.predicted_class, 1);
}

TEST(Kne, ShrinksRegion) {
    Builder b;
    b.query_pred = {0, 1, 1};
    b.hits = counts_table(7, {3, 5, 5});
    const auto r = select_kne(b.build(), all(3));
    EXPECT_EQ(r.selected, (std::vector<std::size_t>{1, 2}));
}

TEST(Knu, VotesAreHitCounts) {
    Builder b;
    b.L = 3;
    b.query_pred = {2, 1, 0};
    b.hits = counts_table(7, {3, 0, 2});
    auto r = select_knu(b.build(), all(3));
    EXPECT_EQ(r.selected, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(r.vote_weights, (std::vector<int>{3, 2}));
    EXPECT_EQ(r.predicted_class, 2);
    EXPECT_NEAR(r.support[2], 0.6, 1e-12);
    b.hits = counts_table(7, {0, 0, 0});
    r = select_knu(b.build(), all(3));
    EXPECT_TRUE(r.fallback);
    EXPECT_TRUE(r.vote_weights.empty());
    EXPECT_EQ(r.predicted_class, 0);
}

TEST(DoubleFault, Examples) {
    const std::vector<int> y = {0, 0, 1, 1};
    EXPECT_EQ(double_fault(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 1, 0, 0}, y), 1.0);
    EXPECT_EQ(double_fault(y, std::vector<int>{1, 1, 0, 0}, y), 0.0);
    EXPECT_EQ(double_fault(std::vector<int>{1, 1, 1, 1}, std::vector<int>{0, 0, 0, 0}, y), 0.0);
    EXPECT_EQ(double_fault(std::vector<int>{1, 0, 0, 1}, std::vector<int>{1, 1, 1, 1}, y), 0.25);
}

TEST(DesKnn, ResolveBounds) {
    DesKnnConfig c;
    EXPECT_EQ(c.resolve(100), (std::pair<std::size_t, std::size_t>{50, 30}));
    EXPECT_EQ(c.resolve(1), (std::pair<std::size_t, std::size_t>{1, 1}));
    EXPECT_EQ(c.resolve(7), (std::pair<std::size_t, std::size_t>{4, 3}));
    c.n = 2;
    c.j = 5;
    EXPECT_EQ(c.resolve(7), (std::pair<std::size_t, std::size_t>{2, 2}));
}

TEST(DesKnn, WholePoolWhenNothingIsCut) {
    Builder b;
    b.query_pred = {0, 1, 1, 0};
    b.hits = counts_table(7, {1, 5, 3, 7});
    DesKnnConfig c;
    c.n = 4;
    c.j = 4;
    const auto r = select_desknn(b.build(), all(4), c);
    EXPECT_EQ(r.selected, all(4));
    EXPECT_EQ(r.predicted_class, 0);
}

TEST(DesKnn, SingleMostDiverse) {
    Builder b;
    b.query_pred = {0, 1, 1, 0};
    // 0 and 1 fail together on rows 4-6; 2 fails on 0-2; 3 is the least accurate
    b.hits = {{1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0}, {0, 0, 1, 0}, {0, 0, 1, 0}, {0, 0, 1, 1}};
    DesKnnConfig c;
    c.n = 3;
    c.j = 1;
    const auto r = select_desknn(b.build(), all(4), c);
    EXPECT_EQ(r.selected, std::vector<std::size_t>{2});
}

TEST(DesKnn, MatchesTwoStageOracle) {
    int checked = 0;
    for (std::uint64_t s = 0; s < 400 && checked < 60; ++s) {
        const auto in = oracle::random_instance(s, 10);
        if (in.trees.size() != 6) continue;
        ++checked;
        Params p;
        p.k = in.k;
        p.desknn.n = 4;
        p.desknn.j = 2;
        const auto ctx = make_context(in.trees, in.dsel, in.dsel.size(), p, kernels::Exec::Serial);
        for (std::size_t r = 0; r < in.queries.rows(); ++r) {
            const auto q = make_query(ctx, in.queries.row(r), {});
            const auto want = oracle::desknn(oracle::gather(in, in.queries.row(r)), all(6), 4, 2);
            EXPECT_EQ(select(Method::DesKnn, q, ctx).selected, want.selected);
        }
    }
    EXPECT_GT(checked, 10);
}

TEST(DesP, Arithmetic) {
    Builder b;
    b.L = 3;
    b.query_pred = {0};
    b.hits = counts_table(7, {4});
    const auto r = select_desp(b.build(), all(1));
    EXPECT_NEAR(r.competence[0], 0.2381, 1e-4);
    EXPECT_FALSE(r.fallback);
}

TEST(DesP, StrictInequalityAndFallback) {
    Builder b;
    b.L = 3;
    b.query_pred = {0, 1, 2};
    b.hits = counts_table(6, {2, 3, 1});  // 2/6 is exactly 1/3
    auto r = select_desp(b.build(), all(3));
    EXPECT_EQ(r.selected, std::vector<std::size_t>{1});
    b.hits = counts_table(6, {2, 1, 0});
    r = select_desp(b.build(), all(3));
    EXPECT_TRUE(r.fallback);
    EXPECT_EQ(r.selected, all(3));
}

TEST(Rrc, ProbabilityExamples) {
    Rng rng(1);
    EXPECT_GE(rrc_correct_probability(std::vector<double>{0, 1, 0}, 1, 1000, rng), 0.95);
    EXPECT_NEAR(rrc_correct_probability(std::vector<double>{0.5, 0.5}, 0, 1000, rng), 0.5, 0.05);
    for (int L = 2; L <= 6; ++L) {
        const double p0 = 1.0 / L, sigma = std::sqrt(p0 * (1 - p0) / 1000);
        const std::vector<double> u(static_cast<std::size_t>(L), p0);
        EXPECT_NEAR(rrc_correct_probability(u, L - 1, 1000, rng), p0, 3 * sigma);
    }
    Rng a(9), b(9);
    const std::vector<double> s = {0.2, 0.5, 0.3};
    EXPECT_EQ(rrc_correct_probability(s, 0, 500, a), rrc_correct_probability(s, 0, 500, b));
}

TEST(Rrc, GaussianPotential) {
    EXPECT_EQ(gaussian_potential(0.0), 1.0);
    EXPECT_NEAR(gaussian_potential(2.0), 0.0183, 1e-4);
}

TEST(Rrc, CorrectOneHotSelectedUniformNot) {
    // Labels follow x0 > 0; tree 0 splits there with pure leaves, tree 1 is a
    // balanced single leaf.
    data::Dataset dsel;
    dsel.class_names = {"a", "b"};
    for (int i = -10; i <= 10; ++i) {
        if (i == 0) continue;
        dsel.features.append_row(std::vector<double>{i / 5.0});
        dsel.labels.push_back(i > 0);
    }
    cart::Node root, left, right, flat;
    root.feature = 0;
    root.left = 1;
    root.right = 2;
    root.class_counts = {10, 10};
    left.class_counts = {10, 0};
    right.class_counts = {0, 10};
    flat.class_counts = {5, 5};
    const std::vector<cart::DecisionTree> trees = {cart::DecisionTree({root, left, right}, 2, 1),
                                                   cart::DecisionTree({flat}, 2, 1)};
    Params p;
    p.seed = 4;
    auto ctx = make_context(trees, dsel, dsel.size(), p, kernels::Exec::Serial);
    prepare_rrc(ctx, kernels::Exec::Serial);
    for (double x : {-1.5, -0.3, 0.1, 1.9}) {
        const auto q = make_query(ctx, std::vector<double>{x}, Needs{.rrc = true});
        const auto r = select(Method::DesRrc, q, ctx);
        EXPECT_GT(r.competence[0], 0.0);
        EXPECT_EQ(r.selected.front(), 0u);
        EXPECT_LT(std::abs(r.competence[1]), 0.25 * r.competence[0]);
    }
    auto again = make_context(trees, dsel, dsel.size(), p, kernels::Exec::Serial);
    prepare_rrc(again, kernels::Exec::Serial);
    EXPECT_EQ(again.csrc, ctx.csrc);
}

TEST(Meta, FeatureLayout) {
    Builder b;
    b.L = 2;
    b.query_pred = {0, 1};
    b.hits = counts_table(7, {7, 3});
    auto q = b.build();
    q.profile_neighbors = {0, 1, 2, 3, 4};
    q.profile_hits.assign(10, 0);
    for (std::size_t p = 0; p < 5; ++p) q.profile_hits[p * 2] = 1;
    const auto perfect = extract_meta_features(q, 0, 7, 5);
    ASSERT_EQ(perfect.size(), 21u);
    for (double v : perfect) EXPECT_EQ(v, 1.0);
    const auto weak = extract_meta_features(q, 1, 7, 5);
    EXPECT_DOUBLE_EQ(weak[14], std::accumulate(weak.begin(), weak.begin() + 7, 0.0) / 7.0);
    EXPECT_EQ(weak[15], 0.0);
}

TEST(Meta, PaddingForTinyRegions) {
    Builder b;
    b.query_pred = {0};
    b.hits = counts_table(3, {3});
    const auto f = extract_meta_features(b.build(), 0, 7, 5);
    ASSERT_EQ(f.size(), 21u);
    EXPECT_EQ(f[3], 0.0);
    EXPECT_EQ(f[14], 1.0);
}

TEST(Meta, NaiveBayesPosterior) {
    Matrix x;
    std::vector<int> y;
    Rng rng(3);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 40; ++i) {
        x.append_row(std::vector<double>{n(rng), n(rng)});
        y.push_back(0);
    }
    const std::vector<double> dup = {3.0, 3.0};
    for (int i = 0; i < 5; ++i) {
        x.append_row(dup);
        y.push_back(1);
    }
    GaussianNB nb;
    nb.fit(x, y);
    EXPECT_GT(nb.posterior(dup), 0.5);
    EXPECT_FALSE(nb.degenerate());

    GaussianNB flat;
    flat.fit(x, std::vector<int>(x.rows(), 1));
    EXPECT_TRUE(flat.degenerate());
    EXPECT_EQ(flat.posterior(dup), flat.posterior(std::vector<double>{-5, 2}));
}

TEST(Meta, SelectionIsThresholdSet) {
    const auto raw = data::load_file(std::string(DYNSEL_DATA_DIR) + "/hayes-roth.dat");
    const auto ds = data::standardize(raw).train;
    pool::PoolConfig pc;
    pc.size = 10;
    const auto p = pool::generate_pool(ds, resample::Variant::Ba, pc, 3);
    Params params;
    auto ctx = make_context(p.trees, ds, ds.size(), params, kernels::Exec::Serial);
    train_meta(ctx, kernels::Exec::Serial);
    for (std::size_t r = 0; r < ds.size(); r += 7) {
        const auto q = make_query(ctx, ds.features.row(r), Needs{.profiles = true, .meta = true});
        const auto res = select(Method::MetaDes, q, ctx);
        std::vector<std::size_t> above;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (res.competence[i] > 0.5) above.push_back(i);
        EXPECT_EQ(res.selected, above.empty() ? all(p.size()) : above);
        EXPECT_EQ(res.fallback, above.empty());
    }
}

TEST(Dfp, Examples) {
    Builder b;
    b.query_pred = {0, 0, 0};
    b.labels = {0, 0, 0};
    b.hits = counts_table(3, {0, 1, 3});
    EXPECT_EQ(dfp_prune(b.build()), all(3));  // single-class region

    b.labels = {0, 1, 0, 1};
    // 0 always says class 0; 1 right on one of each class; 2 right on class 1 only
    b.hits = {{1, 1, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 1}};
    EXPECT_EQ(dfp_prune(b.build()), std::vector<std::size_t>{1});

    b.hits = {{1, 0, 0}, {0, 1, 1}, {1, 0, 0}, {0, 1, 1}};
    EXPECT_EQ(dfp_prune(b.build()), all(3));  // nobody crosses: keep everything
}

TEST(Fire, NoOpAndSingleSurvivor) {
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto in = oracle::random_instance(s);
        Params p;
        p.k = in.k;
        const auto ctx = make_context(in.trees, in.dsel, in.dsel.size(), p, kernels::Exec::Serial);
        for (std::size_t r = 0; r < in.queries.rows(); ++r) {
            const auto q = make_query(ctx, in.queries.row(r), Needs{.profiles = true});
            const auto kept = dfp_prune(q);
            for (auto m : {Method::FLca, Method::FMcb, Method::FKne, Method::FKnu, Method::FDesKnn}) {
                const auto fire = select(m, q, ctx);
                if (kept.size() == in.trees.size()) {
                    const auto base = select(base_method(m), q, ctx);
                    EXPECT_EQ(fire.selected, base.selected);
                    EXPECT_EQ(fire.predicted_class, base.predicted_class);
                }
                if (kept.size() == 1) {
                    EXPECT_EQ(fire.selected, kept);
                    EXPECT_EQ(fire.predicted_class, q.predictions[kept[0]]);
                }
                for (std::size_t i = 0; i < in.trees.size(); ++i)
                    if (std::find(kept.begin(), kept.end(), i) == kept.end() && fire.competence.size() == in.trees.size())
                        EXPECT_TRUE(std::isnan(fire.competence[i])) << method_name(m);
            }
        }
    }
}

TEST(Static, VoteRules) {
    Builder b;
    b.L = 3;
    b.hits = {{1, 1, 1, 1}};
    b.query_pred = {2, 2, 2, 2};
    EXPECT_EQ(select_static(b.build(), all(4)).predicted_class, 2);
    b.query_pred = {2, 1, 1, 2};
    EXPECT_EQ(select_static(b.build(), all(4)).predicted_class, 1);
    b.query_pred = {2};
    b.hits = {{1}};
    EXPECT_EQ(select_static(b.build(), all(1)).predicted_class, 2);
}

TEST(Registry, Names) {
    for (auto m : kAllMethods) EXPECT_EQ(parse_method(method_name(m)), m);
    EXPECT_EQ(method_name(Method::FDesKnn), "F-DES-KNN");
    EXPECT_EQ(method_name(Method::DesP), "DESP");
    EXPECT_FALSE(parse_method("KNORA"));
}

// Properties over random instances
TEST(Properties, NonEmptyDcsSingletonsAndKneKeepsOracles) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto in = oracle::random_instance(500 + s);
        Params p;
        p.k = in.k;
        const auto ctx = make_context(in.trees, in.dsel, in.dsel.size(), p, kernels::Exec::Serial);
        for (std::size_t r = 0; r < in.queries.rows(); ++r) {
            const auto q = make_query(ctx, in.queries.row(r), Needs{.profiles = true});
            for (auto m : kAllMethods) {
                if (m == Method::DesRrc || m == Method::MetaDes) continue;
                const auto res = select(m, q, ctx);
                EXPECT_FALSE(res.selected.empty());
                EXPECT_TRUE(std::is_sorted(res.selected.begin(), res.selected.end()));
                if (m == Method::Rank || m == Method::Lca) EXPECT_EQ(res.selected.size(), 1u);
                if (m == Method::Mcb) EXPECT_TRUE(res.selected.size() == 1 || res.fallback);
            }
            const auto kne = select(Method::Kne, q, ctx);
            for (std::size_t i = 0; i < in.trees.size(); ++i) {
                bool perfect = true;
                for (std::size_t j = 0; j < q.roc.size(); ++j) perfect = perfect && q.hit(j, i);
                if (perfect) EXPECT_NE(std::find(kne.selected.begin(), kne.selected.end(), i), kne.selected.end());
            }
            EXPECT_FALSE(dfp_prune(q).empty());
        }
    }
}

TEST(Properties, DespSetAndKnuWeightsExact) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto in = oracle::random_instance(900 + s);
        Params p;
        p.k = in.k;
        const auto ctx = make_context(in.trees, in.dsel, in.dsel.size(), p, kernels::Exec::Serial);
        for (std::size_t r = 0; r < in.queries.rows(); ++r) {
            const auto l = oracle::gather(in, in.queries.row(r));
            const auto q = make_query(ctx, in.queries.row(r), {});
            std::vector<std::size_t> above;
            std::vector<int> counts;
            for (std::size_t i = 0; i < l.m; ++i) {
                int c = 0;
                for (std::size_t j = 0; j < l.roc.size(); ++j) c += l.correct(j, i);
                if (static_cast<double>(c) / l.roc.size() > 1.0 / l.n_classes) above.push_back(i);
                if (c > 0) counts.push_back(c);
            }
            const auto desp = select(Method::DesP, q, ctx);
            EXPECT_EQ(desp.selected, above.empty() ? all(l.m) : above);
            const auto knu = select(Method::Knu, q, ctx);
            if (!counts.empty()) EXPECT_EQ(knu.vote_weights, counts);
        }
    }
}

TEST(Properties, SelectionsInvariantUnderRescaling) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto in = oracle::random_instance(1300 + s);
        auto scaled = in.dsel;
        for (std::size_t r = 0; r < scaled.size(); ++r)
            for (auto& v : scaled.features.row(r)) v *= 3.0;
        std::vector<cart::DecisionTree> scaled_trees;
        for (const auto& t : in.trees) {
            auto nodes = t.nodes();
            for (auto& n : nodes) n.threshold *= 3.0;
            scaled_trees.emplace_back(nodes, t.n_classes(), t.n_features());
        }
        Params p;
        p.k = in.k;
        const auto a = make_context(in.trees, in.dsel, in.dsel.size(), p, kernels::Exec::Serial);
        const auto b = make_context(scaled_trees, scaled, scaled.size(), p, kernels::Exec::Serial);
        for (std::size_t r = 0; r < in.queries.rows(); ++r) {
            const auto x = in.queries.row(r);
            std::vector<double> sx(x.begin(), x.end());
            for (auto& v : sx) v *= 3.0;
            const auto qa = make_query(a, x, Needs{.profiles = true});
            const auto qb = make_query(b, sx, Needs{.profiles = true});
            EXPECT_EQ(qa.roc.indices, qb.roc.indices);
            for (auto m : {Method::Rank, Method::Lca, Method::Mcb, Method::Kne, Method::Knu, Method::DesKnn,
                           Method::DesP}) {
                EXPECT_EQ(select(m, qa, a).selected, select(m, qb, b).selected) << method_name(m);
            }
        }
    }
}
