#include "molrelay/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace molrelay {

namespace {
constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail_field(const std::string& field, const std::string& reason) {
    throw std::invalid_argument(field + ": " + reason);
}
}  // namespace

void validate(const ChannelParams& params) {
    if (!(params.gamma > 0.0)) fail_field("params.gamma", "must be > 0");
    if (!(params.kappa > 0.0)) fail_field("params.kappa", "must be > 0");
    if (!(params.sigma0_sq >= 0.0)) fail_field("params.sigma0_sq", "must be >= 0");
    if (params.n < 1) fail_field("params.n", "must be >= 1");
    if (params.n_receptors < 1) fail_field("params.n_receptors", "must be >= 1");
    if (!(params.a_max > 0.0)) fail_field("params.a_max", "must be > 0");
}

void validate(const Geometry& geometry) {
    if (!(geometry.r1 > 0.0)) fail_field("geometry.r1", "must be > 0");
    if (!(geometry.r2 > 0.0)) fail_field("geometry.r2", "must be > 0");
    if (!(geometry.r3 > 0.0)) fail_field("geometry.r3", "must be > 0");
    if (!(geometry.diffusion_coeff > 0.0))
        fail_field("geometry.diffusion_coeff", "must be > 0");
}

double activation_probability(double a0, const ChannelParams& params) {
    if (a0 < 0.0) throw std::domain_error("activation_probability: a0 must be >= 0");
    const double ag = a0 * params.gamma;
    return ag / (ag + params.kappa);
}

double inverse_activation(double p0, const ChannelParams& params) {
    if (p0 < 0.0 || p0 >= 1.0)
        throw std::domain_error("inverse_activation: p0 must be in [0, 1)");
    return params.kappa * p0 / (params.gamma * (1.0 - p0));
}

double steady_state_concentration(double alpha, double r, const Geometry& geometry) {
    if (alpha < 0.0)
        throw std::domain_error("steady_state_concentration: alpha must be >= 0");
    if (r <= 0.0) throw std::domain_error("steady_state_concentration: r must be > 0");
    return alpha / (4.0 * kPi * geometry.diffusion_coeff * r);
}

OutputMoments output_moments(double p0, const ChannelParams& params) {
    if (p0 < 0.0 || p0 > 1.0)
        throw std::domain_error("output_moments: p0 must be in [0, 1]");
    const double nN = static_cast<double>(params.n) * params.n_receptors;
    const double q = p0 * (1.0 - p0);
    OutputMoments m;
    m.mean = nN * p0;
    m.variance = params.n * static_cast<double>(params.n_receptors) *
                 params.n_receptors * q * q * params.sigma0_sq;
    return m;
}

double default_variance_floor(const ChannelParams& params) {
    const double scaled = 1e-9 * params.n * static_cast<double>(params.n_receptors) *
                          params.n_receptors * params.sigma0_sq;
    return std::max(scaled, 1e-12);
}

double output_log_density(double y, double p0, const ChannelParams& params,
                          double var_floor) {
    if (!(var_floor > 0.0))
        throw std::invalid_argument("output_log_density: var_floor must be > 0");
    const OutputMoments m = output_moments(p0, params);
    const double var = std::max(m.variance, var_floor);
    const double d = y - m.mean;
    return -0.5 * std::log(2.0 * kPi * var) - d * d / (2.0 * var);
}

}  // namespace molrelay
