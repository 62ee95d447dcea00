// dynsel: run, validate and report dynamic-selection experiments.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dynsel/data.hpp"
#include "dynsel/experiment.hpp"

namespace {

namespace ex = dynsel::experiment;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kPartial = 2;

int do_validate(const std::string& path) {
    const auto config = ex::load_config(path);
    ex::validate(config);
    int bad = 0;
    for (const auto& p : config.datasets) {
        try {
            const auto ds = dynsel::data::load_file(p.string());
            const auto prof = dynsel::data::imbalance_profile(ds);
            std::cout << fmt::format("{}: {} rows, {} features, {} classes, IR {:.2f}\n", p.stem().string(), ds.size(),
                                     ds.n_features(), ds.n_classes(), prof.imbalance_ratio);
        } catch (const std::exception& e) {
            std::cerr << p.string() << ": " << e.what() << '\n';
            ++bad;
        }
    }
    std::cout << fmt::format("{} variant(s), {} selector(s), {} metric(s), pool {}, K {}, seed {}\n",
                             config.variants.size(), config.selectors.size(), config.metrics.size(), config.pool_size,
                             config.k, config.seed);
    return bad == 0 ? kOk : kInvalid;
}

int do_run(const std::string& path, bool serial, bool fresh) {
    const auto config = ex::load_config(path);
    ex::RunOptions options;
    options.exec = serial ? dynsel::kernels::Exec::Serial : dynsel::kernels::Exec::Parallel;
    options.resume = !fresh;
    const auto summary = ex::run_experiment(config, options);
    std::cout << fmt::format("{}: {} record(s) written, {} already present\n", summary.results_file.string(),
                             summary.written, summary.reused);
    if (summary.failed_datasets.empty()) return kOk;
    for (const auto& d : summary.failed_datasets) std::cerr << "failed: " << d << '\n';
    return kPartial;
}

int do_report(const std::string& input, const std::string& metric_name, const std::string& output) {
    const auto metric = dynsel::eval::parse_metric(metric_name);
    if (!metric) throw ex::ConfigError("unknown metric '" + metric_name + "'");
    const auto results = ex::read_results(input);
    const auto report = ex::make_report(results.records, *metric);
    if (output.empty()) {
        std::cout << report.text;
    } else {
        std::ofstream(output) << report.text;
    }
    if (!report.complete) {
        if (!output.empty()) std::cerr << report.text;
        return kInvalid;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic selection experiments on imbalanced multi-class data"};
    app.require_subcommand(1);
    std::string level = "info";
    app.add_option("--log-level", level, "trace, debug, info, warn, error, off")->capture_default_str();

    std::string config;
    bool serial = false, fresh = false;
    auto* run = app.add_subcommand("run", "run the experiment grid of a config file");
    run->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    run->add_flag("--serial", serial, "use the serial kernels");
    run->add_flag("--fresh", fresh, "discard existing results instead of resuming");

    auto* validate = app.add_subcommand("validate", "check a config file and its datasets");
    validate->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);

    std::string input, metric = "auc", output;
    auto* report = app.add_subcommand("report", "rank tables and sign tests from a results directory");
    report->add_option("--input", input, "results directory or file")->required();
    report->add_option("--metric", metric, "auc | fmeasure | gmean")->capture_default_str();
    report->add_option("--output", output, "write the report here instead of stdout");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(level));

    try {
        if (*run) return do_run(config, serial, fresh);
        if (*validate) return do_validate(config);
        if (*report) return do_report(input, metric, output);
    } catch (const ex::ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kOk;
}
