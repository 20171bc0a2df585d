#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "molrelay/experiment.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

bool is_builtin_experiment(const std::string& name) {
    return name == "fig3_single_type" || name == "fig4_multi_type" ||
           name == "fig5_mary" || name == "custom";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("MOLRELAY_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw std::invalid_argument(
                "MOLRELAY_THREADS: expected a positive integer");
        return static_cast<int>(v);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capacity and symbol-error sweeps for diffusion relay links"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment and emit its sweep table");
    std::string target;
    run->add_option("experiment", target,
                    "built-in experiment name (fig3_single_type, fig4_multi_type, "
                    "fig5_mary, custom) or path to a JSON config")
        ->required();
    std::string out_path;
    run->add_option("--out", out_path, "output file (default: config output_path, else stdout)");
    std::string format = "csv";
    run->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    int threads = 0;
    run->add_option("--threads", threads,
                    "worker count (default: MOLRELAY_THREADS env, else all cores)")
        ->check(CLI::PositiveNumber);
    std::uint64_t seed = 0;
    auto* seed_opt = run->add_option("--seed", seed, "override the Monte Carlo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        molrelay::ExperimentConfig config =
            is_builtin_experiment(target)
                ? molrelay::default_config(
                      molrelay::experiment_kind_from_string(target))
                : molrelay::config_from_json(read_file(target));
        if (seed_opt->count() > 0) config.mary.seed = seed;
        if (!out_path.empty()) config.output_path = out_path;
        molrelay::validate(config);

        const auto t0 = std::chrono::steady_clock::now();
        const molrelay::SweepTable table =
            molrelay::run_experiment(config, resolve_threads(threads));
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();

        const molrelay::OutputFormat fmt = molrelay::output_format_from_string(format);
        if (config.output_path.empty()) {
            std::cout << (fmt == molrelay::OutputFormat::csv
                              ? molrelay::to_csv(table)
                              : molrelay::to_json_text(table));
            std::cout.flush();
            if (!std::cout)
                throw molrelay::resource_error("stdout: write failed");
        } else {
            molrelay::emit(table, fmt, config.output_path);
            std::fprintf(stderr, "wrote %s: %zu rows, %.1fs\n",
                         config.output_path.c_str(), table.rows.size(), elapsed);
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}
