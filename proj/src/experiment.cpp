#include "molrelay/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace molrelay {

namespace {

using nlohmann::json;

std::uint64_t splitmix_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Per-point, per-curve seed stream: deterministic function of the config
// seed alone, so the echoed seed is all that must be kept.
std::uint64_t derive_seed(std::uint64_t base, int stream) {
    std::uint64_t state = base;
    std::uint64_t v = 0;
    for (int k = 0; k <= stream; ++k) v = splitmix_next(state);
    return v;
}

std::string format_sig12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

const std::vector<RelayMode>& canonical_modes(ExperimentKind kind) {
    static const std::vector<RelayMode> fig3{RelayMode::direct, RelayMode::single_type};
    static const std::vector<RelayMode> fig4{
        RelayMode::direct, RelayMode::multi_type_joint, RelayMode::multi_type_sum};
    static const std::vector<RelayMode> none{};
    switch (kind) {
        case ExperimentKind::fig3_single_type: return fig3;
        case ExperimentKind::fig4_multi_type: return fig4;
        default: return none;
    }
}

bool uses_joint_grid(const std::vector<RelayMode>& modes) {
    return std::any_of(modes.begin(), modes.end(), [](RelayMode m) {
        return m == RelayMode::multi_type_joint || m == RelayMode::multi_type_sum;
    });
}

std::string capacity_column(RelayMode mode) {
    switch (mode) {
        case RelayMode::direct: return "C_direct";
        case RelayMode::single_type: return "C_single_type";
        case RelayMode::multi_type_joint: return "C_joint";
        case RelayMode::multi_type_sum: return "C_sum";
    }
    throw std::invalid_argument("modes: unknown value");
}

// --- strict JSON field access -------------------------------------------

[[noreturn]] void bad_field(const std::string& path, const std::string& reason) {
    throw std::invalid_argument(path + ": " + reason);
}

const json& expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) bad_field(path, "expected an object");
    return j;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> known) {
    for (const auto& item : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) {
                return item.key() == k;
            }) == known.end())
            bad_field(path.empty() ? item.key() : path + "." + item.key(),
                      "unknown key");
    }
}

void read_double(const json& j, const std::string& path, const char* key,
                 double& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number()) bad_field(path + "." + key, "expected a number");
    out = v.get<double>();
}

void read_int(const json& j, const std::string& path, const char* key, int& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        bad_field(path + "." + key, "expected an integer");
    out = v.get<int>();
}

void read_count(const json& j, const std::string& path, const char* key,
                long long& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad_field(path + "." + key, "expected a non-negative integer");
    out = v.get<long long>();
}

void read_seed(const json& j, const std::string& path, const char* key,
               std::uint64_t& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        bad_field(path + "." + key, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
}

std::string read_enum_string(const json& j, const std::string& path, const char* key,
                             const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) bad_field(path + "." + key, "expected a string");
    return v.get<std::string>();
}

// Rethrows a validation error from a sub-config with the config-file path
// prepended.
template <typename Fn>
void with_prefix(const std::string& prefix, Fn&& fn) {
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(prefix + "." + e.what());
    } catch (const std::domain_error& e) {
        throw std::invalid_argument(prefix + "." + e.what());
    }
}

json params_to_json(const ChannelParams& p) {
    return json{{"gamma", p.gamma},
                {"kappa", p.kappa},
                {"sigma0_sq", p.sigma0_sq},
                {"n", p.n},
                {"n_receptors", p.n_receptors}};
}

json geometry_to_json(const Geometry& g) {
    return json{{"r1", g.r1},
                {"r2", g.r2},
                {"r3", g.r3},
                {"diffusion_coeff", g.diffusion_coeff}};
}

json config_to_json_value(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["params"] = params_to_json(c.params);
    j["geometry"] = geometry_to_json(c.geometry);
    j["sweep"] = json{{"start", c.sweep.start},
                      {"stop", c.sweep.stop},
                      {"points", c.sweep.points},
                      {"spacing", to_string(c.sweep.spacing)}};
    j["grids"] = json{{"k_in", c.grids.k_in},
                      {"k_out", c.grids.k_out},
                      {"joint_k_in", c.grids.joint_k_in},
                      {"joint_k_out", c.grids.joint_k_out}};
    j["ba"] = json{{"tol_bits", c.ba.tol_bits}, {"max_iter", c.ba.max_iter}};
    j["mary"] = json{{"m", c.mary.m},
                     {"placement", to_string(c.mary.placement)},
                     {"prior_policy", to_string(c.mary.prior_policy)},
                     {"trials", c.mary.trials},
                     {"seed", c.mary.seed}};
    json modes = json::array();
    for (RelayMode m : c.modes) modes.push_back(to_string(m));
    j["modes"] = modes;
    if (!c.output_path.empty()) j["output_path"] = c.output_path;
    return j;
}

}  // namespace

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::fig3_single_type: return "fig3_single_type";
        case ExperimentKind::fig4_multi_type: return "fig4_multi_type";
        case ExperimentKind::fig5_mary: return "fig5_mary";
        case ExperimentKind::custom: return "custom";
    }
    throw std::invalid_argument("experiment: unknown value");
}

const char* to_string(Spacing spacing) {
    return spacing == Spacing::linear ? "linear" : "log";
}

const char* to_string(OutputFormat format) {
    return format == OutputFormat::csv ? "csv" : "json";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "fig3_single_type") return ExperimentKind::fig3_single_type;
    if (name == "fig4_multi_type") return ExperimentKind::fig4_multi_type;
    if (name == "fig5_mary") return ExperimentKind::fig5_mary;
    if (name == "custom") return ExperimentKind::custom;
    throw std::invalid_argument("experiment: unknown experiment '" + name + "'");
}

Spacing spacing_from_string(const std::string& name) {
    if (name == "linear") return Spacing::linear;
    if (name == "log") return Spacing::log;
    throw std::invalid_argument("sweep.spacing: unknown spacing '" + name + "'");
}

OutputFormat output_format_from_string(const std::string& name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    throw std::invalid_argument("format: unknown format '" + name + "'");
}

std::vector<double> sweep_values(const SweepSpec& sweep) {
    std::vector<double> values(sweep.points);
    const int last = sweep.points - 1;
    for (int i = 1; i < last; ++i) {
        const double t = static_cast<double>(i) / last;
        values[i] = sweep.spacing == Spacing::log
                        ? std::exp(std::log(sweep.start) +
                                   t * (std::log(sweep.stop) - std::log(sweep.start)))
                        : sweep.start + t * (sweep.stop - sweep.start);
    }
    values.front() = sweep.start;
    values.back() = sweep.stop;
    return values;
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.experiment = kind;
    c.params.gamma = 1.0;
    c.params.kappa = 1.0;
    c.params.sigma0_sq = 0.1;
    c.params.n = 25;
    c.params.n_receptors = 10;
    c.geometry = Geometry{};
    c.sweep = SweepSpec{1.0, 50.0, 25, Spacing::log};
    c.modes = canonical_modes(kind);
    switch (kind) {
        case ExperimentKind::fig3_single_type:
        case ExperimentKind::fig4_multi_type:
            break;
        case ExperimentKind::fig5_mary:
            c.params.n = 50;
            c.params.n_receptors = 50;
            c.sweep = SweepSpec{0.15, 1.5, 12, Spacing::log};
            break;
        case ExperimentKind::custom:
            c.modes = {RelayMode::direct};
            break;
    }
    return c;
}

void validate(const ExperimentConfig& config) {
    ChannelParams probe = config.params;
    probe.a_max = std::max(config.sweep.stop, 1.0);
    with_prefix("params", [&] { validate(probe); });
    with_prefix("geometry", [&] { validate(config.geometry); });

    if (config.sweep.points < 2)
        bad_field("sweep.points", "must be >= 2");
    if (!(config.sweep.start < config.sweep.stop))
        bad_field("sweep.start", "must be < sweep.stop");
    if (config.sweep.start < 0.0)
        bad_field("sweep.start", "must be >= 0");
    if (config.sweep.spacing == Spacing::log && config.sweep.start <= 0.0)
        bad_field("sweep.start", "must be > 0 for log spacing");

    if (config.grids.k_in < 2) bad_field("grids.k_in", "must be >= 2");
    if (config.grids.k_out < 2) bad_field("grids.k_out", "must be >= 2");
    if (config.grids.joint_k_in < 2) bad_field("grids.joint_k_in", "must be >= 2");
    if (config.grids.joint_k_out < 2) bad_field("grids.joint_k_out", "must be >= 2");
    if (!(config.ba.tol_bits > 0.0)) bad_field("ba.tol_bits", "must be > 0");
    if (config.ba.max_iter < 1) bad_field("ba.max_iter", "must be >= 1");
    if (config.mary.m < 2) bad_field("mary.m", "must be >= 2");
    if (config.mary.trials < 1) bad_field("mary.trials", "must be >= 1");

    if (config.experiment == ExperimentKind::custom) {
        if (config.modes.empty()) bad_field("modes", "must list at least one mode");
        for (std::size_t i = 0; i < config.modes.size(); ++i)
            for (std::size_t k = i + 1; k < config.modes.size(); ++k)
                if (config.modes[i] == config.modes[k])
                    bad_field("modes", std::string("duplicate entry '") +
                                           to_string(config.modes[i]) + "'");
    } else if (config.modes != canonical_modes(config.experiment)) {
        std::string expect;
        for (RelayMode m : canonical_modes(config.experiment)) {
            if (!expect.empty()) expect += ", ";
            expect += to_string(m);
        }
        bad_field("modes", std::string("fixed to [") + expect + "] for " +
                               to_string(config.experiment));
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: not valid JSON (") + e.what() +
                                    ")");
    }
    expect_object(j, "config");
    check_keys(j, "", {"experiment", "params", "geometry", "sweep", "grids", "ba",
                       "mary", "modes", "output_path"});
    if (!j.contains("experiment")) bad_field("experiment", "missing");
    if (!j.at("experiment").is_string()) bad_field("experiment", "expected a string");

    ExperimentConfig c =
        default_config(experiment_kind_from_string(j.at("experiment").get<std::string>()));

    if (j.contains("params")) {
        const json& p = expect_object(j.at("params"), "params");
        check_keys(p, "params",
                   {"gamma", "kappa", "sigma0_sq", "n", "n_receptors", "a_max"});
        if (p.contains("a_max"))
            bad_field("params.a_max", "owned by the sweep, not the config");
        read_double(p, "params", "gamma", c.params.gamma);
        read_double(p, "params", "kappa", c.params.kappa);
        read_double(p, "params", "sigma0_sq", c.params.sigma0_sq);
        read_int(p, "params", "n", c.params.n);
        read_int(p, "params", "n_receptors", c.params.n_receptors);
    }
    if (j.contains("geometry")) {
        const json& g = expect_object(j.at("geometry"), "geometry");
        check_keys(g, "geometry", {"r1", "r2", "r3", "diffusion_coeff"});
        read_double(g, "geometry", "r1", c.geometry.r1);
        read_double(g, "geometry", "r2", c.geometry.r2);
        read_double(g, "geometry", "r3", c.geometry.r3);
        read_double(g, "geometry", "diffusion_coeff", c.geometry.diffusion_coeff);
    }
    if (j.contains("sweep")) {
        const json& s = expect_object(j.at("sweep"), "sweep");
        check_keys(s, "sweep", {"start", "stop", "points", "spacing"});
        read_double(s, "sweep", "start", c.sweep.start);
        read_double(s, "sweep", "stop", c.sweep.stop);
        read_int(s, "sweep", "points", c.sweep.points);
        c.sweep.spacing = spacing_from_string(
            read_enum_string(s, "sweep", "spacing", to_string(c.sweep.spacing)));
    }
    if (j.contains("grids")) {
        const json& g = expect_object(j.at("grids"), "grids");
        check_keys(g, "grids", {"k_in", "k_out", "joint_k_in", "joint_k_out"});
        read_int(g, "grids", "k_in", c.grids.k_in);
        read_int(g, "grids", "k_out", c.grids.k_out);
        read_int(g, "grids", "joint_k_in", c.grids.joint_k_in);
        read_int(g, "grids", "joint_k_out", c.grids.joint_k_out);
    }
    if (j.contains("ba")) {
        const json& b = expect_object(j.at("ba"), "ba");
        check_keys(b, "ba", {"tol_bits", "max_iter"});
        read_double(b, "ba", "tol_bits", c.ba.tol_bits);
        read_int(b, "ba", "max_iter", c.ba.max_iter);
    }
    if (j.contains("mary")) {
        const json& m = expect_object(j.at("mary"), "mary");
        check_keys(m, "mary", {"m", "placement", "prior_policy", "trials", "seed"});
        read_int(m, "mary", "m", c.mary.m);
        with_prefix("mary", [&] {
            c.mary.placement = placement_from_string(
                read_enum_string(m, "mary", "placement", to_string(c.mary.placement)));
            c.mary.prior_policy = prior_policy_from_string(read_enum_string(
                m, "mary", "prior_policy", to_string(c.mary.prior_policy)));
        });
        read_count(m, "mary", "trials", c.mary.trials);
        read_seed(m, "mary", "seed", c.mary.seed);
    }
    if (j.contains("modes")) {
        const json& m = j.at("modes");
        if (!m.is_array()) bad_field("modes", "expected an array of strings");
        c.modes.clear();
        for (const json& v : m) {
            if (!v.is_string()) bad_field("modes", "expected an array of strings");
            with_prefix("modes",
                        [&] { c.modes.push_back(relay_mode_from_string(v.get<std::string>())); });
        }
    }
    if (j.contains("output_path")) {
        if (!j.at("output_path").is_string())
            bad_field("output_path", "expected a string");
        c.output_path = j.at("output_path").get<std::string>();
    }
    validate(c);
    return c;
}

std::string config_to_json(const ExperimentConfig& config) {
    return config_to_json_value(config).dump(2) + "\n";
}

namespace {

// Worker pool over sweep indices; the first failure wins and is rethrown
// with the sweep point attached.
template <typename PointFn>
void run_pool(int points, const std::vector<double>& a_values, int threads,
              PointFn&& point_fn) {
    std::atomic<int> next{0};
    std::mutex fail_mutex;
    int fail_index = -1;
    std::string fail_message;
    int fail_kind = 0;  // 1 validation, 2 numeric/resource

    const auto record = [&](int idx, int kind, const std::string& what) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (fail_index < 0 || idx < fail_index) {
            fail_index = idx;
            fail_kind = kind;
            fail_message = "sweep point " + std::to_string(idx) +
                           " (a_max=" + format_sig12(a_values[idx]) + "): " + what;
        }
    };
    const auto worker = [&]() {
        for (;;) {
            const int idx = next.fetch_add(1);
            if (idx >= points) break;
            try {
                point_fn(idx);
            } catch (const resource_error& e) {
                record(idx, 2, e.what());
            } catch (const numeric_error& e) {
                record(idx, 2, e.what());
            } catch (const std::invalid_argument& e) {
                record(idx, 1, e.what());
            } catch (const std::domain_error& e) {
                record(idx, 1, e.what());
            } catch (const std::exception& e) {
                record(idx, 2, e.what());
            }
        }
    };

    int nw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (nw < 1) nw = 1;
    nw = std::min(nw, points);
    std::vector<std::thread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    if (fail_index >= 0) {
        if (fail_kind == 1) throw std::invalid_argument(fail_message);
        throw resource_error(fail_message);
    }
}

}  // namespace

SweepTable run_experiment(const ExperimentConfig& config, int threads) {
    validate(config);
    const std::vector<double> a_values = sweep_values(config.sweep);
    const int points = config.sweep.points;

    SweepTable table;
    table.config_echo = config;
    table.rows.assign(points, {});

    if (config.experiment == ExperimentKind::fig5_mary) {
        table.columns = {"a_max",          "p_err_direct",   "p_err_relay",
                         "ci_low_direct",  "ci_high_direct", "ci_low_relay",
                         "ci_high_relay"};
        const double ext = 1.0 + config.geometry.r1 / config.geometry.r3;
        run_pool(points, a_values, threads, [&](int idx) {
            ChannelParams p = config.params;
            p.a_max = a_values[idx];
            SymbolDesignOptions direct_opts;
            const SymbolSet direct_set =
                make_symbol_set(config.mary.m, p, config.mary.placement,
                                config.mary.prior_policy, direct_opts);
            const ErrorRateResult direct = error_probability_mc(
                direct_set, p, config.geometry, false, config.mary.trials,
                derive_seed(config.mary.seed, 2 * idx), 1);
            SymbolDesignOptions relay_opts;
            relay_opts.range_extension = ext;
            const SymbolSet relay_set =
                make_symbol_set(config.mary.m, p, config.mary.placement,
                                config.mary.prior_policy, relay_opts);
            const ErrorRateResult relay = error_probability_mc(
                relay_set, p, config.geometry, true, config.mary.trials,
                derive_seed(config.mary.seed, 2 * idx + 1), 1);
            table.rows[idx] = {a_values[idx], direct.p_error,  relay.p_error,
                               direct.ci95_low, direct.ci95_high, relay.ci95_low,
                               relay.ci95_high};
        });
        return table;
    }

    // Capacity sweep.  Any two-output mode in the column set pulls every
    // column onto the joint grid so the capacities share one grid bias.
    const bool joint = uses_joint_grid(config.modes);
    const int k_in = joint ? config.grids.joint_k_in : config.grids.k_in;
    const int k_out = joint ? config.grids.joint_k_out : config.grids.k_out;
    table.columns = {"a_max"};
    for (RelayMode mode : config.modes) table.columns.push_back(capacity_column(mode));

    run_pool(points, a_values, threads, [&](int idx) {
        ChannelParams p = config.params;
        p.a_max = a_values[idx];
        std::vector<double> row{a_values[idx]};
        for (RelayMode mode : config.modes) {
            const RelayConfig rc = make_relay_config(mode, config.geometry);
            const DiscreteChannel ch = build_channel(p, rc, k_in, k_out);
            const CapacityResult cap =
                blahut_arimoto(ch, config.ba.tol_bits, config.ba.max_iter);
            row.push_back(cap.capacity_bits);
        }
        table.rows[idx] = std::move(row);
    });
    return table;
}

std::string to_csv(const SweepTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c];
    }
    out += '\n';
    for (const std::vector<double>& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_sig12(row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string to_json_text(const SweepTable& table) {
    json j;
    j["columns"] = table.columns;
    j["rows"] = table.rows;
    j["config_echo"] = config_to_json_value(table.config_echo);
    return j.dump(2) + "\n";
}

void emit(const SweepTable& table, OutputFormat format, const std::string& path) {
    if (table.rows.empty()) throw std::invalid_argument("table: empty");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw resource_error("output_path: cannot open '" + path + "' for writing");
    out << (format == OutputFormat::csv ? to_csv(table) : to_json_text(table));
    out.flush();
    if (!out) throw resource_error("output_path: write to '" + path + "' failed");
}

std::string dump_json(const DiscreteChannel& channel) {
    json j;
    j["input_levels"] = channel.input_levels;
    j["output_edges"] = channel.output_edges;
    j["axes"] = channel.axes;
    j["transition"] = channel.transition;
    return j.dump() + "\n";
}

std::string dump_json(const CapacityResult& result) {
    json j;
    j["capacity_bits"] = result.capacity_bits;
    j["input_distribution"] = result.input_distribution;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["gap_bound"] = result.gap_bound;
    return j.dump() + "\n";
}

}  // namespace molrelay
