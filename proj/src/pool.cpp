#include "dynsel/pool.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace dynsel::pool {

namespace fs = std::filesystem;

std::vector<std::size_t> draw_bootstrap(std::span<const int> labels, int n_classes, double fraction, int max_redraws,
                                        Rng& rng) {
    if (labels.empty()) throw Error("cannot bootstrap an empty dataset");
    const auto n = labels.size();
    const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    const auto present = data::class_counts(labels, n_classes);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(m);
    for (int attempt = 0;; ++attempt) {
        std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
        for (auto& i : idx) {
            i = pick(rng);
            seen[static_cast<std::size_t>(labels[i])] = 1;
        }
        bool complete = true;
        for (std::size_t c = 0; c < seen.size(); ++c) complete = complete && (present[c] == 0 || seen[c]);
        if (complete) break;
        if (attempt == max_redraws) {
            spdlog::warn("bootstrap still misses a class after {} redraws; accepted", max_redraws);
            break;
        }
    }
    return idx;
}

namespace {

cart::DecisionTree train_member(const data::Dataset& train, resample::Variant variant, const PoolConfig& config,
                                std::uint64_t seed) {
    Rng rng(seed);
    const auto idx = draw_bootstrap(train.labels, train.n_classes(), config.bootstrap_fraction, config.max_redraws, rng);
    const data::Dataset boot = train.subset(idx);
    const auto r = resample::apply_multiclass(boot, variant, config.resample, rng);
    const data::Dataset t = resample::materialize(boot, r);
    return cart::fit_tree(t.features, t.labels, t.n_classes(), config.tree, rng);
}

}  // namespace

Pool generate_pool(const data::Dataset& train, resample::Variant variant, const PoolConfig& config, std::uint64_t seed,
                   kernels::Exec exec) {
    if (train.size() == 0) throw Error("empty training set");
    if (config.size == 0) throw Error("pool size must be positive");
    Pool pool;
    pool.variant = variant;
    pool.seed = seed;
    pool.n_classes = train.n_classes();
    pool.n_features = train.n_features();
    pool.trees.resize(config.size);

    if (exec == kernels::Exec::Serial) {
        for (std::size_t i = 0; i < config.size; ++i) pool.trees[i] = train_member(train, variant, config, derive_seed(seed, i));
        return pool;
    }
    std::atomic<bool> failed{false};
    std::string message;
    const auto m = static_cast<long>(config.size);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < m; ++i) {
        try {
            pool.trees[i] = train_member(train, variant, config, derive_seed(seed, static_cast<std::uint64_t>(i)));
        } catch (const std::exception& e) {
#pragma omp critical
            if (!failed.exchange(true)) message = e.what();
        }
    }
    if (failed) throw Error(message);
    return pool;
}

DselSet build_dsel(const data::Dataset& train, resample::Variant variant, const resample::ResampleConfig& config,
                   std::uint64_t seed) {
    Rng rng(seed);
    auto r = resample::apply_multiclass(train, variant, config, rng);
    r.kept.resize(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) r.kept[i] = i;
    DselSet out;
    out.data = resample::materialize(train, r);
    out.n_original = train.size();
    out.source = fmt::format("{}: {} training rows + {} synthetic", resample::variant_name(variant), train.size(),
                             r.synthetic_labels.size());
    return out;
}

void save_pool(const Pool& pool, const fs::path& dir, const std::string& scaling_ref) {
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    manifest << "variant = " << resample::variant_name(pool.variant) << '\n'
             << "seed = " << pool.seed << '\n'
             << "pool_size = " << pool.size() << '\n'
             << "n_classes = " << pool.n_classes << '\n'
             << "n_features = " << pool.n_features << '\n'
             << "scaling = " << scaling_ref << '\n';
    for (std::size_t i = 0; i < pool.size(); ++i) {
        std::ofstream out(dir / fmt::format("tree_{:03}.txt", i));
        out << pool.trees[i].serialize();
        if (!out) throw Error(fmt::format("cannot write tree {} to {}", i, dir.string()));
    }
    if (!manifest) throw Error("cannot write pool manifest in " + dir.string());
}

Pool load_pool(const fs::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw Error("no pool manifest in " + dir.string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(manifest, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    Pool pool;
    const auto variant = resample::parse_variant(kv["variant"]);
    if (!variant) throw Error("pool manifest: unknown variant '" + kv["variant"] + "'");
    pool.variant = *variant;
    try {
        pool.seed = std::stoull(kv.at("seed"));
        pool.n_classes = std::stoi(kv.at("n_classes"));
        pool.n_features = std::stoul(kv.at("n_features"));
        const auto size = std::stoul(kv.at("pool_size"));
        pool.trees.reserve(size);
        for (std::size_t i = 0; i < size; ++i) {
            std::ifstream in(dir / fmt::format("tree_{:03}.txt", i));
            if (!in) throw Error(fmt::format("pool: missing tree {}", i));
            std::stringstream buf;
            buf << in.rdbuf();
            pool.trees.push_back(cart::DecisionTree::deserialize(buf.str()));
        }
    } catch (const std::out_of_range&) {
        throw Error("pool manifest is incomplete");
    } catch (const std::invalid_argument&) {
        throw Error("pool manifest has a malformed number");
    }
    return pool;
}

}  // namespace dynsel::pool
