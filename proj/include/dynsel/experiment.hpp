#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "dynsel/data.hpp"
#include "dynsel/eval.hpp"
#include "dynsel/kernels.hpp"
#include "dynsel/pool.hpp"
#include "dynsel/resample.hpp"
#include "dynsel/selection.hpp"

namespace dynsel::experiment {

/// Raised for configuration problems detected before any training.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    std::vector<std::filesystem::path> datasets;
    std::vector<resample::Variant> variants;
    std::vector<ds::Method> selectors;
    std::vector<eval::Metric> metrics;
    std::size_t pool_size = 100;
    std::size_t k = 7;
    std::uint64_t seed = 1;
    std::filesystem::path output = "results";
};

/// `key = value` lines, comma-separated lists, `#` comments. Relative paths
/// resolve against `base_dir`. Names are validated here.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& file);

/// Checks that every dataset file exists and every list is non-empty.
void validate(const RunConfig& config);

std::string canonical_text(const RunConfig& config);
std::string config_hash(const RunConfig& config);

struct ResultRecord {
    std::string dataset;
    std::string variant;
    std::string selector;
    int replication = 1;  // 1..5
    char fold = 'A';      // test half
    std::string metric;
    double value = 0.0;
    double wall_time = 0.0;

    /// Identity of the record, without value and timing.
    std::string key() const;
};

std::string format_record(const ResultRecord& r);
ResultRecord parse_record(std::string_view line);

struct ResultFile {
    std::map<std::string, std::string> header;  // from `# key = value` lines
    std::vector<ResultRecord> records;
};

/// Reads a results file, or `results.tsv` inside a directory.
ResultFile read_results(const std::filesystem::path& path);

struct FoldSettings {
    pool::PoolConfig pool;
    ds::Params params;
    kernels::Exec exec = kernels::Exec::Parallel;
};

/// One (replication, fold): every variant and selector trained on `train`
/// and scored on `test`. Records come out variant-major, then selector, then
/// metric.
std::vector<ResultRecord> evaluate_fold(const data::Dataset& train, const data::Dataset& test,
                                        std::span<const resample::Variant> variants,
                                        std::span<const ds::Method> selectors,
                                        std::span<const eval::Metric> metrics, const FoldSettings& settings,
                                        std::uint64_t fold_seed, int replication, char fold);

struct RunOptions {
    kernels::Exec exec = kernels::Exec::Parallel;
    bool resume = true;
};

struct RunSummary {
    std::size_t written = 0;
    std::size_t reused = 0;
    std::vector<std::string> failed_datasets;
    std::filesystem::path results_file;
};

RunSummary run_experiment(const RunConfig& config, const RunOptions& options = {});

/// Mean over the ten folds of every (dataset, variant, selector) for one metric.
using CellKey = std::tuple<std::string, std::string, std::string>;
std::map<CellKey, double> fold_means(const std::vector<ResultRecord>& records, std::string_view metric);

struct Report {
    bool complete = true;
    std::vector<std::string> missing;  // record keys absent from the grid
    std::string text;
};

Report make_report(const std::vector<ResultRecord>& records, eval::Metric metric);

}  // namespace dynsel::experiment
