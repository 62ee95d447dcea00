#include "dynsel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace dynsel::data {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        out.push_back(trim(text.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
        s = s.substr(1, s.size() - 2);
    return std::string(s);
}

bool is_missing(std::string_view cell) { return cell == "?" || cell == "<null>" || cell.empty(); }

/// Orders raw label strings: numerically when all parse, else first appearance.
std::vector<std::string> order_labels(const std::vector<std::string>& raw) {
    std::vector<std::string> distinct;
    for (const auto& s : raw)
        if (std::find(distinct.begin(), distinct.end(), s) == distinct.end()) distinct.push_back(s);
    const bool numeric = std::all_of(distinct.begin(), distinct.end(),
                                     [](const std::string& s) { return parse_number(s).has_value(); });
    if (numeric)
        std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& x, const std::string& y) {
            return *parse_number(x) < *parse_number(y);
        });
    return distinct;
}

/// Drops declared classes that never occur and remaps labels to stay dense.
void compact_classes(Dataset& ds) {
    auto counts = class_counts(ds.labels, ds.n_classes());
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) return;
    std::vector<int> remap(counts.size(), -1);
    std::vector<std::string> kept;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) {
            remap[c] = static_cast<int>(kept.size());
            kept.push_back(ds.class_names[c]);
        } else {
            spdlog::warn("{}: class '{}' declared but has no samples; dropped", ds.name, ds.class_names[c]);
        }
    }
    for (auto& y : ds.labels) y = remap[y];
    ds.class_names = std::move(kept);
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.name = name;
    out.features = features.take_rows(indices);
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels[i]);
    out.class_names = class_names;
    out.attributes = attributes;
    return out;
}

void validate(const Dataset& ds) {
    if (ds.features.rows() != ds.labels.size())
        throw Error(fmt::format("{}: {} feature rows but {} labels", ds.name, ds.features.rows(), ds.labels.size()));
    if (ds.n_classes() < 2) throw Error("fewer than 2 classes");
    for (int y : ds.labels)
        if (y < 0 || y >= ds.n_classes()) throw Error(fmt::format("label {} outside [0, {})", y, ds.n_classes()));
    const auto counts = class_counts(ds.labels, ds.n_classes());
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0) throw Error(fmt::format("class '{}' has no samples", ds.class_names[c]));
}

std::vector<int> class_counts(std::span<const int> labels, int n_classes) {
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

ImbalanceProfile imbalance_profile(const Dataset& ds) {
    ImbalanceProfile p;
    p.class_counts = class_counts(ds.labels, ds.n_classes());
    p.majority_class = static_cast<int>(argmax(std::span<const int>(p.class_counts)));
    int min_present = 0;
    for (int c : p.class_counts)
        if (c > 0 && (min_present == 0 || c < min_present)) min_present = c;
    if (min_present > 0)
        p.imbalance_ratio = static_cast<double>(p.class_counts[p.majority_class]) / min_present;
    return p;
}

Dataset parse_keel(std::string_view text, std::string_view name) {
    Dataset ds;
    ds.name = std::string(name);

    std::vector<AttributeSpec> declared;
    std::vector<std::string> inputs;
    std::string output;
    bool in_data = false;
    std::size_t dropped = 0;
    std::vector<std::vector<std::string_view>> rows;

    for (auto line : lines_of(text)) {
        if (line.empty() || line.front() == '%') continue;
        if (!in_data && line.front() == '@') {
            const auto space = line.find_first_of(" \t");
            const std::string directive = lower(line.substr(0, space));
            const auto rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));
            if (directive == "@relation") {
                if (ds.name.empty()) ds.name = unquote(rest);
            } else if (directive == "@attribute") {
                AttributeSpec spec;
                auto cut = rest.find_first_of(" \t{");
                if (cut == std::string_view::npos) throw Error("malformed @attribute line");
                spec.name = unquote(rest.substr(0, cut));
                const auto type = trim(rest.substr(cut));
                if (!type.empty() && type.front() == '{') {
                    const auto close = type.find('}');
                    if (close == std::string_view::npos) throw Error("unterminated category list for " + spec.name);
                    spec.kind = AttributeSpec::Kind::Nominal;
                    for (auto cat : split(type.substr(1, close - 1), ',')) spec.categories.push_back(unquote(cat));
                }
                declared.push_back(std::move(spec));
            } else if (directive == "@inputs") {
                for (auto n : split(rest, ',')) inputs.push_back(unquote(n));
            } else if (directive == "@outputs" || directive == "@output") {
                output = unquote(rest);
            } else if (directive == "@data") {
                in_data = true;
            }
            continue;
        }
        if (!in_data) continue;
        auto cells = split(line, ',');
        if (cells.size() != declared.size())
            throw Error(fmt::format("row arity mismatch: expected {} values, got {}", declared.size(), cells.size()));
        if (std::any_of(cells.begin(), cells.end(), is_missing)) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(cells));
    }

    if (!in_data) throw Error("missing @data section");
    if (declared.size() < 2) throw Error("need at least one input and one output attribute");
    if (dropped > 0) spdlog::warn("{}: dropped {} rows with missing values", ds.name, dropped);
    if (rows.empty()) throw Error("empty data section");

    auto index_of = [&](const std::string& n) -> std::size_t {
        for (std::size_t i = 0; i < declared.size(); ++i)
            if (declared[i].name == n) return i;
        throw Error("unknown attribute '" + n + "'");
    };
    const std::size_t class_col = output.empty() ? declared.size() - 1 : index_of(output);
    std::vector<std::size_t> feature_cols;
    if (!inputs.empty()) {
        for (const auto& n : inputs) feature_cols.push_back(index_of(n));
    } else {
        for (std::size_t i = 0; i < declared.size(); ++i)
            if (i != class_col) feature_cols.push_back(i);
    }

    const auto& class_spec = declared[class_col];
    if (class_spec.nominal()) {
        ds.class_names = class_spec.categories;
    } else {
        std::vector<std::string> raw;
        for (const auto& r : rows) raw.emplace_back(r[class_col]);
        ds.class_names = order_labels(raw);
    }

    for (auto c : feature_cols) ds.attributes.push_back(declared[c]);
    ds.features = Matrix(rows.size(), feature_cols.size());
    ds.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const auto& spec = declared[feature_cols[j]];
            const auto cell = rows[r][feature_cols[j]];
            if (spec.nominal()) {
                const auto it = std::find(spec.categories.begin(), spec.categories.end(), unquote(cell));
                if (it == spec.categories.end())
                    throw Error(fmt::format("unknown nominal category '{}' for attribute {}", cell, spec.name));
                ds.features(r, j) = static_cast<double>(it - spec.categories.begin());
            } else {
                const auto v = parse_number(cell);
                if (!v) throw Error(fmt::format("non-numeric value '{}' for attribute {}", cell, spec.name));
                ds.features(r, j) = *v;
            }
        }
        const auto label = unquote(rows[r][class_col]);
        const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), label);
        if (it == ds.class_names.end()) throw Error(fmt::format("unknown nominal category '{}' for class", label));
        ds.labels.push_back(static_cast<int>(it - ds.class_names.begin()));
    }

    compact_classes(ds);
    validate(ds);
    return ds;
}

Dataset parse_csv(std::string_view text, int label_column, std::string_view name) {
    Dataset ds;
    ds.name = std::string(name);
    std::vector<std::vector<std::string_view>> rows;
    for (auto line : lines_of(text)) {
        if (line.empty() || line.front() == '#') continue;
        rows.push_back(split(line, ','));
    }
    if (rows.empty()) throw Error("empty data section");

    const std::size_t width = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != width) throw Error(fmt::format("ragged rows: expected {} columns, got {}", width, r.size()));
    if (width < 2) throw Error("need at least one feature column and a label column");
    const long lc = label_column < 0 ? static_cast<long>(width) + label_column : label_column;
    if (lc < 0 || lc >= static_cast<long>(width)) throw Error("label column out of range");
    const auto label_col = static_cast<std::size_t>(lc);

    std::vector<std::string> headers;
    bool has_header = false;
    for (std::size_t j = 0; j < width; ++j)
        if (j != label_col && !is_missing(rows.front()[j]) && !parse_number(rows.front()[j])) has_header = true;
    if (has_header) {
        for (auto h : rows.front()) headers.push_back(unquote(h));
        rows.erase(rows.begin());
    } else {
        for (std::size_t j = 0; j < width; ++j) headers.push_back(fmt::format("x{}", j));
    }

    std::size_t dropped = 0;
    std::erase_if(rows, [&](const auto& r) {
        const bool miss = std::any_of(r.begin(), r.end(), is_missing);
        dropped += miss;
        return miss;
    });
    if (dropped > 0) spdlog::warn("{}: dropped {} rows with missing values", ds.name, dropped);
    if (rows.empty()) throw Error("empty data section");

    std::vector<std::size_t> feature_cols;
    for (std::size_t j = 0; j < width; ++j)
        if (j != label_col) feature_cols.push_back(j);

    // Column kind is inferred from the first data row.
    for (auto j : feature_cols) {
        AttributeSpec spec;
        spec.name = headers[j];
        if (!parse_number(rows.front()[j])) {
            spec.kind = AttributeSpec::Kind::Nominal;
            for (const auto& r : rows) {
                auto v = unquote(r[j]);
                if (std::find(spec.categories.begin(), spec.categories.end(), v) == spec.categories.end())
                    spec.categories.push_back(v);
            }
        }
        ds.attributes.push_back(std::move(spec));
    }

    std::vector<std::string> raw_labels;
    for (const auto& r : rows) raw_labels.push_back(unquote(r[label_col]));
    ds.class_names = order_labels(raw_labels);
    if (ds.class_names.size() < 2) throw Error("fewer than 2 classes");

    ds.features = Matrix(rows.size(), feature_cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const auto& spec = ds.attributes[j];
            const auto cell = rows[r][feature_cols[j]];
            if (spec.nominal()) {
                const auto it = std::find(spec.categories.begin(), spec.categories.end(), unquote(cell));
                ds.features(r, j) = static_cast<double>(it - spec.categories.begin());
            } else {
                const auto v = parse_number(cell);
                if (!v) throw Error(fmt::format("non-numeric cell '{}' in numeric column {}", cell, spec.name));
                ds.features(r, j) = *v;
            }
        }
        const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), raw_labels[r]);
        ds.labels.push_back(static_cast<int>(it - ds.class_names.begin()));
    }
    validate(ds);
    return ds;
}

Dataset load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto stem = path.substr(path.find_last_of('/') + 1);
    const auto dot = stem.find_last_of('.');
    const auto ext = dot == std::string::npos ? std::string{} : lower(stem.substr(dot));
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    if (ext == ".dat") return parse_keel(buf.str(), stem);
    return parse_csv(buf.str(), -1, stem);
}

Dataset encode_nominals(const Dataset& ds) {
    const bool any_nominal = std::any_of(ds.attributes.begin(), ds.attributes.end(),
                                         [](const AttributeSpec& a) { return a.nominal(); });
    if (!any_nominal) return ds;

    std::vector<AttributeSpec> specs;
    for (const auto& a : ds.attributes) {
        if (!a.nominal()) {
            specs.push_back(a);
            continue;
        }
        for (const auto& cat : a.categories) specs.push_back({a.name + "=" + cat, AttributeSpec::Kind::Numeric, {}});
    }

    Dataset out;
    out.name = ds.name;
    out.labels = ds.labels;
    out.class_names = ds.class_names;
    out.features = Matrix(ds.size(), specs.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        std::size_t col = 0;
        for (std::size_t j = 0; j < ds.attributes.size(); ++j) {
            const auto& a = ds.attributes[j];
            if (!a.nominal()) {
                out.features(r, col++) = ds.features(r, j);
                continue;
            }
            const auto hot = static_cast<std::size_t>(ds.features(r, j));
            out.features(r, col + hot) = 1.0;
            col += a.categories.size();
        }
    }
    out.attributes = std::move(specs);
    return out;
}

void ScalingParams::apply(Matrix& features) const {
    for (std::size_t r = 0; r < features.rows(); ++r)
        for (std::size_t j = 0; j < features.cols(); ++j)
            features(r, j) = scale[j] > 0.0 ? (features(r, j) - mean[j]) / scale[j] : 0.0;
}

std::string ScalingParams::to_text() const {
    std::string out = fmt::format("n_features = {}\n", mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j)
        out += fmt::format("feature.{}.mean = {:.17g}\nfeature.{}.scale = {:.17g}\n", j, mean[j], j, scale[j]);
    return out;
}

ScalingParams ScalingParams::from_text(std::string_view text) {
    ScalingParams p;
    std::map<std::string, double> kv;
    for (auto line : lines_of(text)) {
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error("malformed scaling line");
        const auto v = parse_number(line.substr(eq + 1));
        if (!v) throw Error("malformed scaling value");
        kv[std::string(trim(line.substr(0, eq)))] = *v;
    }
    const auto n = static_cast<std::size_t>(kv.at("n_features"));
    for (std::size_t j = 0; j < n; ++j) {
        p.mean.push_back(kv.at(fmt::format("feature.{}.mean", j)));
        p.scale.push_back(kv.at(fmt::format("feature.{}.scale", j)));
    }
    return p;
}

ScalingParams fit_scaling(const Matrix& train) {
    if (train.empty()) throw Error("cannot fit scaling on an empty training set");
    ScalingParams p;
    p.mean.assign(train.cols(), 0.0);
    p.scale.assign(train.cols(), 0.0);
    const auto n = static_cast<double>(train.rows());
    for (std::size_t j = 0; j < train.cols(); ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) s += train(r, j);
        const double m = s / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) ss += (train(r, j) - m) * (train(r, j) - m);
        p.mean[j] = m;
        const double sd = std::sqrt(ss / n);
        p.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? sd : 0.0;
    }
    return p;
}

Standardized standardize(const Dataset& train, const std::vector<Dataset>& others) {
    Standardized out{train, others, fit_scaling(train.features)};
    out.params.apply(out.train.features);
    for (auto& o : out.others) out.params.apply(o.features);
    return out;
}

SplitPlan stratified_5x2(const Dataset& ds, std::uint64_t seed) {
    SplitPlan plan;
    plan.seed = seed;
    Rng rng(seed);

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes()));
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() == 1) {
            plan.singleton_classes.push_back(static_cast<int>(c));
            spdlog::warn("{}: class '{}' has a single sample; assigned to fold A", ds.name, ds.class_names[c]);
        }

    for (std::size_t rep = 0; rep < plan.replications.size(); ++rep) {
        auto& fold = plan.replications[rep];
        std::size_t odd_seen = 0;
        for (const auto& members : by_class) {
            if (members.empty()) continue;
            auto shuffled = members;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            if (shuffled.size() == 1) {
                fold.a.push_back(shuffled.front());
                continue;
            }
            std::size_t to_a = shuffled.size() / 2;
            if (shuffled.size() % 2 == 1) {
                // The extra sample alternates between folds across replications
                // and across odd-sized classes within one replication.
                if ((rep + odd_seen) % 2 == 0) ++to_a;
                ++odd_seen;
            }
            fold.a.insert(fold.a.end(), shuffled.begin(), shuffled.begin() + static_cast<long>(to_a));
            fold.b.insert(fold.b.end(), shuffled.begin() + static_cast<long>(to_a), shuffled.end());
        }
        std::sort(fold.a.begin(), fold.a.end());
        std::sort(fold.b.begin(), fold.b.end());
    }
    return plan;
}

}  // namespace dynsel::data
