#include "dynsel/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#ifndef DYNSEL_VERSION
#define DYNSEL_VERSION "unknown"
#endif

namespace dynsel::experiment {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kColumns = "dataset\tvariant\tselector\treplication\tfold\tmetric\tvalue\twall_time";

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = std::min(s.find(sep, start), s.size());
        auto item = trim(s.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        start = end + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError(fmt::format("'{}' expects a number, got '{}'", key, value));
    return out;
}

template <typename T, std::size_t N, typename Parse>
std::vector<T> parse_names(const std::string& key, const std::string& value, const std::array<T, N>& all,
                           Parse parse) {
    std::vector<T> out;
    for (const auto& name : split_list(value)) {
        if (name == "all") {
            out.assign(all.begin(), all.end());
            continue;
        }
        const auto v = parse(name);
        if (!v) throw ConfigError(fmt::format("unknown {} name '{}'", key, name));
        if (std::find(out.begin(), out.end(), *v) == out.end()) out.push_back(*v);
    }
    return out;
}

constexpr std::array<eval::Metric, 3> kAllMetrics = {eval::Metric::Auc, eval::Metric::FMeasure, eval::Metric::GMean};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string dataset_name(const fs::path& p) { return p.stem().string(); }

}  // namespace

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
        if (key == "datasets") {
            for (const auto& p : split_list(value)) {
                fs::path path(p);
                c.datasets.push_back(path.is_absolute() || base_dir.empty() ? path : base_dir / path);
            }
        } else if (key == "variants") {
            c.variants = parse_names(key, value, resample::kAllVariants, resample::parse_variant);
        } else if (key == "selectors") {
            c.selectors = parse_names(key, value, ds::kAllMethods, ds::parse_method);
        } else if (key == "metrics") {
            c.metrics = parse_names(key, value, kAllMetrics, eval::parse_metric);
        } else if (key == "pool_size") {
            c.pool_size = parse_number<std::size_t>(key, value);
        } else if (key == "k") {
            c.k = parse_number<std::size_t>(key, value);
        } else if (key == "seed") {
            c.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "output") {
            fs::path path(value);
            c.output = path.is_absolute() || base_dir.empty() ? path : base_dir / path;
        } else {
            throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
        }
    }
    if (c.pool_size == 0) throw ConfigError("pool_size must be positive");
    if (c.k == 0) throw ConfigError("k must be positive");
    return c;
}

RunConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), file.parent_path());
}

void validate(const RunConfig& c) {
    if (c.datasets.empty()) throw ConfigError("no datasets listed");
    if (c.variants.empty()) throw ConfigError("no variants listed");
    if (c.selectors.empty()) throw ConfigError("no selectors listed");
    if (c.metrics.empty()) throw ConfigError("no metrics listed");
    std::set<std::string> names;
    for (const auto& p : c.datasets) {
        if (!fs::is_regular_file(p)) throw ConfigError("dataset file not found: " + p.string());
        if (!names.insert(dataset_name(p)).second)
            throw ConfigError("two datasets share the name '" + dataset_name(p) + "'");
    }
}

std::string canonical_text(const RunConfig& c) {
    std::string out;
    for (const auto& p : c.datasets) out += "dataset " + dataset_name(p) + "\n";
    for (auto v : c.variants) out += fmt::format("variant {}\n", resample::variant_name(v));
    for (auto s : c.selectors) out += fmt::format("selector {}\n", ds::method_name(s));
    for (auto m : c.metrics) out += fmt::format("metric {}\n", eval::metric_name(m));
    out += fmt::format("pool_size {}\nk {}\nseed {}\n", c.pool_size, c.k, c.seed);
    return out;
}

std::string config_hash(const RunConfig& c) { return fmt::format("{:016x}", derive_seed(0, canonical_text(c))); }

std::string ResultRecord::key() const {
    return fmt::format("{}|{}|{}|{}|{}|{}", dataset, variant, selector, replication, fold, metric);
}

std::string format_record(const ResultRecord& r) {
    return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{:.17g}\t{:.6f}", r.dataset, r.variant, r.selector, r.replication,
                       r.fold, r.metric, r.value, r.wall_time);
}

ResultRecord parse_record(std::string_view line) {
    const auto cells = [&] {
        std::vector<std::string> v;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            v.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        return v;
    }();
    if (cells.size() != 8) throw Error(fmt::format("result line has {} fields, expected 8", cells.size()));
    ResultRecord r;
    r.dataset = cells[0];
    r.variant = cells[1];
    r.selector = cells[2];
    r.metric = cells[5];
    try {
        r.replication = std::stoi(cells[3]);
        r.value = std::stod(cells[6]);
        r.wall_time = std::stod(cells[7]);
    } catch (const std::exception&) {
        throw Error("malformed number in result line: " + std::string(line));
    }
    if (cells[4].size() != 1 || (cells[4][0] != 'A' && cells[4][0] != 'B'))
        throw Error("fold must be A or B in result line: " + std::string(line));
    r.fold = cells[4][0];
    return r;
}

ResultFile read_results(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / "results.tsv" : path;
    std::ifstream in(file);
    if (!in) throw Error("cannot read results from " + file.string());
    ResultFile out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) out.header[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
            continue;
        }
        if (line == kColumns) continue;
        out.records.push_back(parse_record(line));
    }
    return out;
}

std::vector<ResultRecord> evaluate_fold(const data::Dataset& train, const data::Dataset& test,
                                        std::span<const resample::Variant> variants,
                                        std::span<const ds::Method> selectors,
                                        std::span<const eval::Metric> metrics, const FoldSettings& settings,
                                        std::uint64_t fold_seed, int replication, char fold) {
    std::vector<ResultRecord> out;
    // Every variant sees the same bootstrap draws, so variants are compared on
    // common random numbers.
    const auto pool_seed = derive_seed(fold_seed, "pool");
    const auto dsel_seed = derive_seed(fold_seed, "dsel");
    for (auto v : variants) {
        const auto t0 = std::chrono::steady_clock::now();
        auto pool = pool::generate_pool(train, v, settings.pool, pool_seed, settings.exec);
        const auto dsel = pool::build_dsel(train, v, settings.pool.resample, dsel_seed);
        ds::Params params = settings.params;
        params.seed = derive_seed(fold_seed, "select");
        auto ctx = ds::make_context(std::move(pool.trees), dsel.data, dsel.n_original, params, settings.exec);
        const double setup = seconds_since(t0);
        for (auto s : selectors) {
            const auto t1 = std::chrono::steady_clock::now();
            if (s == ds::Method::DesRrc && ctx.csrc.empty()) ds::prepare_rrc(ctx, settings.exec);
            if (s == ds::Method::MetaDes && !ctx.meta) ds::train_meta(ctx, settings.exec);
            const std::array<ds::Method, 1> one = {s};
            const auto pred = ds::predict_batch(ctx, test.features, one, settings.exec).front();
            const double wall = setup + seconds_since(t1);
            for (auto m : metrics) {
                ResultRecord r;
                r.dataset = test.name;
                r.variant = std::string(resample::variant_name(v));
                r.selector = std::string(ds::method_name(s));
                r.replication = replication;
                r.fold = fold;
                r.metric = std::string(eval::metric_name(m));
                r.value = eval::score(m, pred.labels, pred.supports, test.labels);
                r.wall_time = wall;
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

RunSummary run_experiment(const RunConfig& config, const RunOptions& options) {
    validate(config);
    RunSummary summary;
    fs::create_directories(config.output);
    summary.results_file = config.output / "results.tsv";
    const std::string hash = config_hash(config);

    std::set<std::string> done;
    const bool exists = fs::exists(summary.results_file);
    if (exists && options.resume) {
        const auto previous = read_results(summary.results_file);
        const auto it = previous.header.find("config_hash");
        if (it == previous.header.end() || it->second != hash)
            throw ConfigError("results in " + summary.results_file.string() +
                              " come from a different configuration; use a fresh output directory");
        for (const auto& r : previous.records) done.insert(r.key());
    }
    std::ofstream out(summary.results_file, exists && options.resume ? std::ios::app : std::ios::trunc);
    if (!out) throw Error("cannot write " + summary.results_file.string());
    if (!(exists && options.resume)) {
        out << "# dynsel results\n"
            << "# config_hash = " << hash << '\n'
            << "# seed = " << config.seed << '\n'
            << "# version = " << DYNSEL_VERSION << '\n'
            << kColumns << '\n';
        out.flush();
    }

    FoldSettings settings;
    settings.exec = options.exec;
    settings.pool.size = config.pool_size;
    settings.params.k = config.k;

    // Datasets run one after another so records land in a fixed order; the
    // parallelism lives inside each fold.
    for (const auto& path : config.datasets) {
        const std::string name = dataset_name(path);
        try {
            data::Dataset full = data::encode_nominals(data::load_file(path.string()));
            full.name = name;
            const auto seed_d = derive_seed(config.seed, name);
            const auto plan = data::stratified_5x2(full, derive_seed(seed_d, "split"));
            for (int rep = 0; rep < 5; ++rep) {
                for (char fold : {'A', 'B'}) {
                    const auto& halves = plan.replications[static_cast<std::size_t>(rep)];
                    const auto& test_idx = fold == 'A' ? halves.a : halves.b;
                    const auto& train_idx = fold == 'A' ? halves.b : halves.a;

                    std::vector<resample::Variant> pending;
                    for (auto v : config.variants) {
                        bool missing = false;
                        for (auto s : config.selectors)
                            for (auto m : config.metrics) {
                                const ResultRecord probe{name, std::string(resample::variant_name(v)),
                                                         std::string(ds::method_name(s)), rep + 1, fold,
                                                         std::string(eval::metric_name(m))};
                                missing = missing || !done.contains(probe.key());
                            }
                        if (missing) pending.push_back(v);
                    }
                    const std::size_t unit = config.selectors.size() * config.metrics.size();
                    summary.reused += (config.variants.size() - pending.size()) * unit;
                    if (pending.empty()) continue;

                    const auto scaled = data::standardize(full.subset(train_idx), {full.subset(test_idx)});
                    const fs::path scaling_dir = config.output / "scaling";
                    fs::create_directories(scaling_dir);
                    std::ofstream(scaling_dir / fmt::format("{}_r{}{}.txt", name, rep + 1, fold))
                        << scaled.params.to_text();

                    const auto fold_seed = derive_seed(derive_seed(seed_d, static_cast<std::uint64_t>(rep)),
                                                       static_cast<std::uint64_t>(fold));
                    const auto records = evaluate_fold(scaled.train, scaled.others.front(), pending, config.selectors,
                                                       config.metrics, settings, fold_seed, rep + 1, fold);
                    for (const auto& r : records) {
                        if (done.contains(r.key())) {
                            ++summary.reused;
                            continue;
                        }
                        out << format_record(r) << '\n';
                        done.insert(r.key());
                        ++summary.written;
                    }
                    out.flush();
                    spdlog::info("{}: replication {} fold {} done", name, rep + 1, fold);
                }
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            spdlog::error("{}: {}", name, e.what());
            summary.failed_datasets.push_back(name);
        }
    }
    return summary;
}

std::map<CellKey, double> fold_means(const std::vector<ResultRecord>& records, std::string_view metric) {
    std::map<CellKey, std::pair<double, int>> acc;
    for (const auto& r : records) {
        if (r.metric != metric) continue;
        auto& a = acc[{r.dataset, r.variant, r.selector}];
        a.first += r.value;
        ++a.second;
    }
    std::map<CellKey, double> out;
    for (const auto& [k, a] : acc) out[k] = a.first / a.second;
    return out;
}

namespace {

template <typename T, std::size_t N, typename Name>
std::vector<std::string> ordered_present(const std::set<std::string>& present, const std::array<T, N>& canon,
                                         Name name) {
    std::vector<std::string> out;
    for (const auto& v : canon)
        if (present.contains(std::string(name(v)))) out.emplace_back(name(v));
    for (const auto& p : present)
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    return out;
}

struct Ranked {
    eval::RankTable table;
    std::vector<bool> equivalent;  // not rejected against the best
    std::size_t best = 0;
};

Ranked rank_with_finner(const Matrix& scores, std::vector<std::string> methods) {
    Ranked r;
    r.table = eval::average_ranks(scores, std::move(methods));
    const auto& avg = r.table.average;
    r.best = static_cast<std::size_t>(std::min_element(avg.begin(), avg.end()) - avg.begin());
    r.equivalent.assign(avg.size(), false);
    if (avg.size() < 2) return r;
    const auto p = eval::rank_test_pvalues(avg, scores.rows());
    std::vector<double> others;
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (i != r.best) {
            others.push_back(p[i]);
            which.push_back(i);
        }
    const auto f = eval::finner_stepdown(others, 0.05);
    for (std::size_t t = 0; t < which.size(); ++t) r.equivalent[which[t]] = !f.reject[t];
    return r;
}

std::string cell(const Ranked& r, std::size_t i) {
    const auto v = fmt::format("{:.2f}", r.table.average[i]);
    return r.equivalent[i] ? "[" + v + "]" : v;
}

}  // namespace

Report make_report(const std::vector<ResultRecord>& records, eval::Metric metric) {
    const std::string mname(eval::metric_name(metric));
    std::set<std::string> dset, vset, sset, have;
    for (const auto& r : records) {
        if (r.metric != mname) continue;
        dset.insert(r.dataset);
        vset.insert(r.variant);
        sset.insert(r.selector);
        have.insert(r.key());
    }
    Report rep;
    if (dset.empty()) {
        rep.complete = false;
        rep.text = fmt::format("no records for metric {}\n", mname);
        return rep;
    }
    const std::vector<std::string> datasets(dset.begin(), dset.end());
    const auto variants = ordered_present(vset, resample::kAllVariants, resample::variant_name);
    const auto selectors = ordered_present(sset, ds::kAllMethods, ds::method_name);

    for (const auto& d : datasets)
        for (const auto& v : variants)
            for (const auto& s : selectors)
                for (int r = 1; r <= 5; ++r)
                    for (char f : {'A', 'B'}) {
                        const ResultRecord probe{d, v, s, r, f, mname};
                        if (!have.contains(probe.key())) rep.missing.push_back(probe.key());
                    }
    if (!rep.missing.empty()) {
        rep.complete = false;
        rep.text = fmt::format("incomplete grid for {}: {} missing cell(s)\n", mname, rep.missing.size());
        for (const auto& m : rep.missing) rep.text += "  " + m + "\n";
        return rep;
    }

    const auto means = fold_means(records, mname);
    auto mean_of = [&](const std::string& d, const std::string& v, const std::string& s) {
        return means.at({d, v, s});
    };
    std::string& out = rep.text;
    out += fmt::format("metric: {}   datasets: {}   (fold means over 5x2 CV; [x] = equivalent to the best, "
                       "Finner step-down at 0.05)\n\n",
                       mname, datasets.size());

    // (a) preprocessing ranks within each selector
    out += "Average rank of each preprocessing variant per selector\n";
    out += fmt::format("{:<10}", "selector");
    for (const auto& v : variants) out += fmt::format(" {:>10}", v);
    out += '\n';
    std::vector<std::size_t> best_variant(selectors.size());
    for (std::size_t si = 0; si < selectors.size(); ++si) {
        Matrix scores(datasets.size(), variants.size());
        for (std::size_t d = 0; d < datasets.size(); ++d)
            for (std::size_t v = 0; v < variants.size(); ++v) scores(d, v) = mean_of(datasets[d], variants[v], selectors[si]);
        const auto r = rank_with_finner(scores, variants);
        best_variant[si] = r.best;
        out += fmt::format("{:<10}", selectors[si]);
        for (std::size_t v = 0; v < variants.size(); ++v) out += fmt::format(" {:>10}", cell(r, v));
        out += '\n';
    }

    // (b) best variant of every selector, ranked together
    out += "\nBest configuration per selector, ranked globally\n";
    {
        Matrix scores(datasets.size(), selectors.size());
        std::vector<std::string> names;
        for (std::size_t si = 0; si < selectors.size(); ++si) {
            names.push_back(selectors[si] + " " + variants[best_variant[si]]);
            for (std::size_t d = 0; d < datasets.size(); ++d)
                scores(d, si) = mean_of(datasets[d], variants[best_variant[si]], selectors[si]);
        }
        const auto r = rank_with_finner(scores, names);
        std::vector<std::size_t> order(names.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return r.table.average[a] < r.table.average[b]; });
        for (auto i : order) out += fmt::format("  {:<24} {:>8}\n", names[i], cell(r, i));
    }

    // (c) sign test of each selector's best preprocessing variant against Ba
    const auto ba = std::find(variants.begin(), variants.end(), std::string(resample::variant_name(resample::Variant::Ba)));
    if (ba == variants.end() || variants.size() < 2) {
        out += "\nSign test skipped: needs Ba and at least one preprocessing variant\n";
        return rep;
    }
    const auto n = static_cast<int>(datasets.size());
    const std::array<double, 3> alphas = {0.1, 0.05, 0.01};
    out += fmt::format("\nSign test, best preprocessing variant vs Ba (n = {}; critical wins", n);
    for (double a : alphas) out += fmt::format(" {}@{}", eval::sign_test_critical_value(n, a), a);
    out += ")\n";
    out += fmt::format("  {:<10} {:<10} {:>4} {:>4} {:>4}  {}\n", "selector", "variant", "W", "T", "L", "significant at");
    for (std::size_t si = 0; si < selectors.size(); ++si) {
        // best non-Ba variant by average rank within this selector
        Matrix scores(datasets.size(), variants.size());
        for (std::size_t d = 0; d < datasets.size(); ++d)
            for (std::size_t v = 0; v < variants.size(); ++v) scores(d, v) = mean_of(datasets[d], variants[v], selectors[si]);
        const auto ranks = eval::average_ranks(scores, variants);
        std::size_t pick = variants.size();
        for (std::size_t v = 0; v < variants.size(); ++v) {
            if (variants[v] == *ba) continue;
            if (pick == variants.size() || ranks.average[v] < ranks.average[pick]) pick = v;
        }
        int w = 0, t = 0, l = 0;
        for (const auto& d : datasets) {
            const double a = mean_of(d, variants[pick], selectors[si]);
            const double b = mean_of(d, *ba, selectors[si]);
            (a > b ? w : a < b ? l : t) += 1;
        }
        std::string sig;
        for (double a : alphas)
            if (eval::sign_test(w, t, l, a).significant) sig += fmt::format(" {}", a);
        out += fmt::format("  {:<10} {:<10} {:>4} {:>4} {:>4}  {}\n", selectors[si], variants[pick], w, t, l,
                           sig.empty() ? " -" : sig);
    }
    return rep;
}

}  // namespace dynsel::experiment
