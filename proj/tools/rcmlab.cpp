#include "rcm/config.hpp"
#include "rcm/errors.hpp"
#include "rcm/experiments.hpp"
#include "rcm/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

namespace {

enum ExitCode { pass = 0, acceptance_failure = 1, config_error = 2, runtime_error = 3 };

void print_checks(const rcm::ExperimentResult& result)
{
    for (const rcm::Check& c : result.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"rcmlab: homogenization experiments for random conductance models with stable-like jumps"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed_offset;

    auto* run = app.add_subcommand("run", "run an experiment and write measurements.csv, summary.json and plots");
    run->add_option("config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed-offset", seed_offset, "added to every seed");

    auto* check = app.add_subcommand("validate", "parse and validate a config, then print it with defaults resolved");
    check->add_option("config", config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);

    app.add_subcommand("list-experiments", "list the experiment kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? pass : config_error;
    }

    if (app.got_subcommand("list-experiments")) {
        for (rcm::ExperimentKind kind : rcm::all_experiment_kinds()) {
            std::cout << rcm::to_string(kind) << "  " << rcm::describe(kind) << '\n';
        }
        return pass;
    }

    rcm::ExperimentConfig config;
    try {
        config = rcm::parse_config(config_path);
        if (threads) {
            config.threads = *threads;
        }
        if (out_dir) {
            config.output = *out_dir;
        }
        if (seed_offset) {
            config.seed_offset = *seed_offset;
        }
        rcm::validate(config);
    } catch (const rcm::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    }

    if (app.got_subcommand("validate")) {
        std::cout << rcm::echo_config(config);
        return pass;
    }

    const std::string echo = rcm::echo_config(config);
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    try {
        const rcm::ExperimentResult result = rcm::run_experiment(config);
        rcm::write_report(config.output, result, echo, elapsed());
        print_checks(result);
        std::cout << (result.passed() ? "passed" : "FAILED") << " (" << result.rows.size() << " rows in "
                  << config.output << ")\n";
        return result.passed() ? pass : acceptance_failure;
    } catch (const rcm::ExperimentAborted& e) {
        std::cerr << "experiment aborted: " << e.what() << '\n';
        try {
            rcm::write_report(config.output, e.partial, echo, elapsed(), true);
        } catch (const std::exception& w) {
            std::cerr << "could not write partial results: " << w.what() << '\n';
        }
        return runtime_error;
    } catch (const rcm::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return runtime_error;
    }
}
