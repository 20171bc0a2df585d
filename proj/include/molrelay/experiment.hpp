#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molrelay/channel.hpp"
#include "molrelay/mary.hpp"
#include "molrelay/relay.hpp"

namespace molrelay {

enum class ExperimentKind { fig3_single_type, fig4_multi_type, fig5_mary, custom };
enum class Spacing { linear, log };
enum class OutputFormat { csv, json };

const char* to_string(ExperimentKind kind);
const char* to_string(Spacing spacing);
const char* to_string(OutputFormat format);
ExperimentKind experiment_kind_from_string(const std::string& name);
Spacing spacing_from_string(const std::string& name);
OutputFormat output_format_from_string(const std::string& name);

// Grid of a_max values driving a sweep.
struct SweepSpec {
    double start = 1.0;
    double stop = 50.0;
    int points = 25;
    Spacing spacing = Spacing::log;
};

// The realized grid, endpoints exact.
std::vector<double> sweep_values(const SweepSpec& sweep);

// Discretization sizes.  k_in/k_out build the single-output channels;
// experiments that compare against a two-output channel run every mode at
// joint_k_in/joint_k_out instead, so the capacities share one grid bias.
struct GridConfig {
    int k_in = 201;
    int k_out = 4001;
    int joint_k_in = 101;
    int joint_k_out = 201;
};

struct BaConfig {
    double tol_bits = 1e-6;
    int max_iter = 20000;
};

// Symbol-error experiment knobs.
struct MaryConfig {
    int m = 8;
    Placement placement = Placement::equi_p;
    PriorPolicy prior_policy = PriorPolicy::ba_optimized;
    long long trials = 1000000;
    std::uint64_t seed = 123456789;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::fig3_single_type;
    ChannelParams params;   // a_max is owned by the sweep, not the config
    Geometry geometry;
    SweepSpec sweep;
    GridConfig grids;
    BaConfig ba;
    MaryConfig mary;
    std::vector<RelayMode> modes;  // capacity columns; fixed per kind except custom
    std::string output_path;       // empty -> stdout
};

// Built-in experiment presets; every config field is populated.
ExperimentConfig default_config(ExperimentKind kind);

// Strict JSON reader: starts from the named experiment's defaults, applies
// overrides, rejects unknown keys and type mismatches with a field-path
// message, and validates the result.
ExperimentConfig config_from_json(const std::string& text);

// Resolved-config echo; feeding it back to config_from_json reproduces the
// experiment bit-identically.
std::string config_to_json(const ExperimentConfig& config);

// Throws std::invalid_argument with a field-path message.
void validate(const ExperimentConfig& config);

struct SweepTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // sweep order
    ExperimentConfig config_echo;
};

// Runs the configured sweep on a worker pool (threads == 0 uses the
// hardware concurrency); rows come back in sweep order regardless of
// completion order.  Errors carry the offending sweep point.
SweepTable run_experiment(const ExperimentConfig& config, int threads = 0);

std::string to_csv(const SweepTable& table);
std::string to_json_text(const SweepTable& table);

// Writes the table to path in the chosen format; throws resource_error when
// the path cannot be opened.
void emit(const SweepTable& table, OutputFormat format, const std::string& path);

// Debug dumps (JSON text, schema mirrors the struct fields).
std::string dump_json(const DiscreteChannel& channel);
std::string dump_json(const CapacityResult& result);

}  // namespace molrelay
