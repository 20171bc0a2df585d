#include "molrelay/relay.hpp"

#include <cmath>
#include <string>

namespace molrelay {

const char* to_string(RelayMode mode) {
    switch (mode) {
        case RelayMode::direct: return "direct";
        case RelayMode::single_type: return "single_type";
        case RelayMode::multi_type_joint: return "multi_type_joint";
        case RelayMode::multi_type_sum: return "multi_type_sum";
    }
    throw std::invalid_argument("mode: unknown RelayMode value");
}

RelayMode relay_mode_from_string(const std::string& name) {
    if (name == "direct") return RelayMode::direct;
    if (name == "single_type") return RelayMode::single_type;
    if (name == "multi_type_joint") return RelayMode::multi_type_joint;
    if (name == "multi_type_sum") return RelayMode::multi_type_sum;
    throw std::invalid_argument("mode: unknown relay mode '" + name + "'");
}

RelayConfig make_relay_config(RelayMode mode, const Geometry& geometry,
                              bool include_relay_noise) {
    validate(geometry);
    RelayConfig cfg;
    cfg.geometry = geometry;
    cfg.mode = mode;
    cfg.include_relay_noise = include_relay_noise;
    switch (mode) {
        case RelayMode::direct: cfg.beta = 1.0; break;
        case RelayMode::single_type: cfg.beta = geometry.r2 / geometry.r3; break;
        case RelayMode::multi_type_joint:
        case RelayMode::multi_type_sum: cfg.beta = geometry.r2 / geometry.r1; break;
    }
    return cfg;
}

void validate(const RelayConfig& config) {
    validate(config.geometry);
    if (!(config.beta > 0.0)) throw std::invalid_argument("config.beta: must be > 0");
    const auto matches = [&](double expected) {
        return std::abs(config.beta - expected) <= 1e-12 * std::max(1.0, expected);
    };
    if (config.mode == RelayMode::single_type &&
        !matches(config.geometry.r2 / config.geometry.r3))
        throw std::invalid_argument("config.beta: single_type requires beta == r2/r3");
    if ((config.mode == RelayMode::multi_type_joint ||
         config.mode == RelayMode::multi_type_sum) &&
        !matches(config.geometry.r2 / config.geometry.r1))
        throw std::invalid_argument("config.beta: multi_type requires beta == r2/r1");
}

double effective_amax(const ChannelParams& params, const RelayConfig& config) {
    validate(params);
    validate(config);
    switch (config.mode) {
        case RelayMode::direct: return params.a_max;
        case RelayMode::single_type:
            return params.a_max * (1.0 + config.geometry.r1 / config.geometry.r3);
        default:
            throw std::invalid_argument(
                "effective_amax: defined for direct and single_type modes only");
    }
}

DiscreteChannel build_channel(const ChannelParams& params, const RelayConfig& config,
                              int k_in, int k_out) {
    validate(params);
    validate(config);
    switch (config.mode) {
        case RelayMode::direct: return discretize_direct(params, k_in, k_out);
        case RelayMode::single_type: {
            ChannelParams widened = params;
            widened.a_max = effective_amax(params, config);
            if (config.include_relay_noise) {
                // Relay reception noise inflates every level's output variance
                // by the distance-only ratio (r1/(r1+r3))^2; variance scales
                // linearly in sigma0_sq, so fold the inflation in there.
                const double f =
                    config.geometry.r1 / (config.geometry.r1 + config.geometry.r3);
                widened.sigma0_sq *= 1.0 + f * f;
            }
            return discretize_direct(widened, k_in, k_out);
        }
        case RelayMode::multi_type_joint:
        case RelayMode::multi_type_sum:
            if (config.include_relay_noise)
                throw std::invalid_argument(
                    "config.include_relay_noise: modeled for single_type only");
            return config.mode == RelayMode::multi_type_joint
                       ? discretize_joint(params, k_in, k_out)
                       : discretize_sum(params, k_in, k_out);
    }
    throw std::invalid_argument("config.mode: unknown RelayMode value");
}

double relay_reception_noise_variance(const ChannelParams& params,
                                      const Geometry& geometry, double p0) {
    validate(params);
    validate(geometry);
    const double a0 = inverse_activation(p0, params);
    const double amp = a0 * geometry.r1 / geometry.r3;
    return amp * amp * params.sigma0_sq / params.n;
}

}  // namespace molrelay
