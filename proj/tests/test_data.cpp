#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dynsel/data.hpp"

using namespace dynsel;
using namespace dynsel::data;

namespace {

std::string data_file(const char* name) { return std::string(DYNSEL_DATA_DIR) + "/" + name; }

const char* kSmallKeel = R"(@relation tiny
@attribute x real [0, 10]
@attribute colour {red, green, blue}
@attribute class {no, yes}
@inputs x, colour
@outputs class
@data
1.0, red, no
2.0, green, yes
3.0, blue, no
4.0, red, yes
)";

Dataset counts_dataset(std::vector<int> counts) {
    Dataset ds;
    ds.name = "counts";
    for (std::size_t c = 0; c < counts.size(); ++c) {
        ds.class_names.push_back("c" + std::to_string(c));
        for (int i = 0; i < counts[c]; ++i) {
            const double v = static_cast<double>(ds.size());
            ds.features.append_row(std::vector<double>{v});
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    return ds;
}

}  // namespace

TEST(Keel, WineShape) {
    const auto ds = load_file(data_file("wine.dat"));
    EXPECT_EQ(ds.size(), 178u);
    EXPECT_EQ(ds.n_features(), 13u);
    EXPECT_EQ(ds.n_classes(), 3);
}

TEST(Keel, ZooShape) {
    const auto ds = load_file(data_file("zoo.dat"));
    EXPECT_EQ(ds.size(), 101u);
    EXPECT_EQ(ds.n_features(), 16u);
    EXPECT_EQ(ds.n_classes(), 7);
}

TEST(Keel, GlassImbalanceRatio) {
    const auto p = imbalance_profile(load_file(data_file("glass.dat")));
    EXPECT_NEAR(p.imbalance_ratio, 8.44, 0.01);
    EXPECT_EQ(p.majority_class, static_cast<int>(std::max_element(p.class_counts.begin(), p.class_counts.end()) -
                                                 p.class_counts.begin()));
}

TEST(Keel, EmptyDataSection) {
    try {
        parse_keel("@relation r\n@attribute a real\n@attribute class {x, y}\n@data\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "empty data section");
    }
}

TEST(Keel, MissingDataSection) {
    EXPECT_THROW(parse_keel("@relation r\n@attribute a real\n@attribute class {x, y}\n"), Error);
}

TEST(Keel, RowArityMismatch) {
    EXPECT_THROW(parse_keel("@attribute a real\n@attribute class {x, y}\n@data\n1, x\n2\n"), Error);
}

TEST(Keel, UnknownCategory) {
    EXPECT_THROW(parse_keel("@attribute a {p, q}\n@attribute class {x, y}\n@data\np, x\nr, y\n"), Error);
}

TEST(Keel, NominalsAndClassOrder) {
    const auto ds = parse_keel(kSmallKeel);
    EXPECT_EQ(ds.name, "tiny");
    ASSERT_EQ(ds.n_features(), 2u);
    EXPECT_TRUE(ds.attributes[1].nominal());
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"no", "yes"}));
    EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0, 1}));
    EXPECT_EQ(ds.features(2, 1), 2.0);  // blue is the third category
}

TEST(Keel, MissingValuesDropped) {
    const auto ds = parse_keel("@attribute a real\n@attribute class {x, y}\n@data\n1, x\n?, y\n3, y\n");
    EXPECT_EQ(ds.size(), 2u);
}

TEST(Csv, NumericTable) {
    const auto ds = parse_csv("1,2,0\n3,4,1\n5,6,0\n7,8,1\n", 2);
    EXPECT_EQ(ds.size(), 4u);
    EXPECT_EQ(ds.n_features(), 2u);
}

TEST(Csv, SingleClassRejected) {
    try {
        parse_csv("1,2,a\n3,4,a\n", 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "fewer than 2 classes");
    }
}

TEST(Csv, HeaderSkipped) {
    const auto ds = parse_csv("a,b,class\n1,2,x\n3,4,y\n5,6,x\n", -1);
    EXPECT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.attributes[0].name, "a");
}

TEST(Csv, RaggedRows) { EXPECT_THROW(parse_csv("1,2,0\n3,1\n", 2), Error); }

TEST(Csv, NonNumericInNumericColumn) { EXPECT_THROW(parse_csv("1,2,0\nz,4,1\n", 2), Error); }

TEST(Encode, OneHotRowsSumToOne) {
    Dataset ds;
    ds.class_names = {"a", "b"};
    ds.attributes = {{"n", AttributeSpec::Kind::Nominal, {"p", "q", "r"}}};
    for (int i = 0; i < 5; ++i) {
        ds.features.append_row(std::vector<double>{static_cast<double>(i % 3)});
        ds.labels.push_back(i % 2);
    }
    const auto out = encode_nominals(ds);
    ASSERT_EQ(out.n_features(), 3u);
    for (std::size_t r = 0; r < out.size(); ++r) {
        const auto row = out.features.row(r);
        EXPECT_EQ(std::accumulate(row.begin(), row.end(), 0.0), 1.0);
        EXPECT_EQ(row[r % 3], 1.0);
    }
}

TEST(Encode, NumericUnchanged) {
    const auto ds = load_file(data_file("wine.dat"));
    const auto out = encode_nominals(ds);
    EXPECT_EQ(out.features, ds.features);
    EXPECT_EQ(out.labels, ds.labels);
}

TEST(Encode, TwoNominalColumnsGrowByFour) {
    Dataset ds;
    ds.class_names = {"a", "b"};
    ds.attributes = {{"u", AttributeSpec::Kind::Nominal, {"0", "1"}},
                     {"v", AttributeSpec::Kind::Numeric, {}},
                     {"w", AttributeSpec::Kind::Nominal, {"0", "1", "2", "3"}}};
    ds.features.append_row(std::vector<double>{1, 0.5, 3});
    ds.features.append_row(std::vector<double>{0, 0.25, 0});
    ds.labels = {0, 1};
    const auto out = encode_nominals(ds);
    EXPECT_EQ(out.n_features(), ds.n_features() + 4);
    EXPECT_EQ(out.features(0, 2), 0.5);
}

TEST(Standardize, ZScores) {
    Dataset train;
    train.class_names = {"a", "b"};
    for (double v : {1.0, 2.0, 3.0}) train.features.append_row(std::vector<double>{v, 5.0});
    train.labels = {0, 1, 0};
    const auto s = standardize(train);
    EXPECT_NEAR(s.train.features(0, 0), -1.2247, 1e-4);
    EXPECT_NEAR(s.train.features(1, 0), 0.0, 1e-9);
    EXPECT_NEAR(s.train.features(2, 0), 1.2247, 1e-4);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(s.train.features(r, 1), 0.0);
}

TEST(Standardize, OthersUseTrainParameters) {
    Dataset train, other;
    train.class_names = other.class_names = {"a", "b"};
    for (double v : {0.0, 2.0}) train.features.append_row(std::vector<double>{v});
    train.labels = {0, 1};
    other.features.append_row(std::vector<double>{4.0});
    other.labels = {0};
    const auto s = standardize(train, {other});
    EXPECT_DOUBLE_EQ(s.others[0].features(0, 0), 3.0);  // (4 - 1) / 1
    const auto twice = standardize(s.train, {s.train});
    EXPECT_EQ(twice.others[0].features, s.train.features);  // already standardized: fixed point
}

TEST(Standardize, ScalingTextRoundTrip) {
    const auto p = fit_scaling(load_file(data_file("glass.dat")).features);
    const auto back = ScalingParams::from_text(p.to_text());
    EXPECT_EQ(back.mean, p.mean);
    EXPECT_EQ(back.scale, p.scale);
}

TEST(Split, EvenStratification) {
    const auto ds = counts_dataset({6, 4});
    const auto plan = stratified_5x2(ds, 3);
    for (const auto& f : plan.replications) {
        for (const auto* half : {&f.a, &f.b}) {
            int c0 = 0, c1 = 0;
            for (auto i : *half) (ds.labels[i] == 0 ? c0 : c1)++;
            EXPECT_EQ(c0, 3);
            EXPECT_EQ(c1, 2);
        }
    }
}

TEST(Split, OddClassAlternates) {
    const auto ds = counts_dataset({3, 4});
    const auto plan = stratified_5x2(ds, 9);
    auto class0_in_a = [&](int rep) {
        const auto& a = plan.replications[static_cast<std::size_t>(rep)].a;
        return std::count_if(a.begin(), a.end(), [&](std::size_t i) { return ds.labels[i] == 0; });
    };
    EXPECT_EQ(class0_in_a(0), 2);
    EXPECT_EQ(class0_in_a(1), 1);
}

TEST(Split, Deterministic) {
    const auto ds = load_file(data_file("ecoli.dat"));
    const auto a = stratified_5x2(ds, 42), b = stratified_5x2(ds, 42);
    for (std::size_t r = 0; r < 5; ++r) {
        EXPECT_EQ(a.replications[r].a, b.replications[r].a);
        EXPECT_EQ(a.replications[r].b, b.replications[r].b);
    }
}

TEST(Split, FoldsPartitionAndCoverClasses) {
    for (const char* f : {"wine.dat", "glass.dat", "hayes-roth.dat", "ecoli.dat", "zoo.dat"}) {
        const auto ds = load_file(data_file(f));
        const auto counts = class_counts(ds.labels, ds.n_classes());
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto plan = stratified_5x2(ds, seed);
            for (const auto& fold : plan.replications) {
                std::vector<int> seen(ds.size(), 0);
                for (auto i : fold.a) ++seen[i];
                for (auto i : fold.b) ++seen[i];
                EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; })) << f;
                for (int c = 0; c < ds.n_classes(); ++c) {
                    if (counts[static_cast<std::size_t>(c)] < 2) continue;
                    for (const auto* half : {&fold.a, &fold.b})
                        EXPECT_TRUE(std::any_of(half->begin(), half->end(), [&](auto i) { return ds.labels[i] == c; }))
                            << f << " class " << c;
                }
            }
        }
    }
}

TEST(Split, SingletonClassGoesToFoldA) {
    const auto ds = counts_dataset({5, 1});
    const auto plan = stratified_5x2(ds, 1);
    EXPECT_EQ(plan.singleton_classes, std::vector<int>{1});
    for (const auto& f : plan.replications) EXPECT_NE(std::find(f.a.begin(), f.a.end(), 5u), f.a.end());
}

TEST(RoundTrip, ParseEncodeStandardizeKeepsRowsAndLabels) {
    for (const char* f : {"wine.dat", "zoo.dat", "hayes-roth.dat"}) {
        const auto ds = load_file(data_file(f));
        const auto s = standardize(encode_nominals(ds));
        EXPECT_EQ(s.train.size(), ds.size());
        EXPECT_EQ(s.train.labels, ds.labels);
    }
}

TEST(Validate, RejectsAbsentClass) {
    auto ds = counts_dataset({3, 3});
    ds.class_names.push_back("ghost");
    EXPECT_THROW(validate(ds), Error);
}

TEST(Common, DeriveSeedSeparatesStreams) {
    EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
    EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

TEST(Common, ArgmaxTiesToLowest) {
    const std::vector<int> v = {2, 5, 5, 1};
    EXPECT_EQ(argmax(std::span<const int>(v)), 1u);
}
