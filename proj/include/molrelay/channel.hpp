#pragma once

#include <stdexcept>

namespace molrelay {

// Node-level constants of a bacteria population link: receptor binding
// affinity (gamma), dissociation (kappa), aggregate relative noise variance
// of the sensing chain (sigma0_sq), population size (n), receptors per
// bacterium (n_receptors), and the maximum concentration the transmitter can
// induce at the receiver (a_max).
struct ChannelParams {
    double gamma = 1.0;
    double kappa = 1.0;
    double sigma0_sq = 0.1;
    int n = 25;
    int n_receptors = 10;
    double a_max = 1.0;
};

// Distances of the relay triangle (transmitter->receiver r1,
// transmitter->relay r2, relay->receiver r3) and the medium's diffusion
// coefficient.
struct Geometry {
    double r1 = 1.0;
    double r2 = 1.0;
    double r3 = 1.0;
    double diffusion_coeff = 1.0;
};

struct OutputMoments {
    double mean = 0.0;      // expected activated-receptor count
    double variance = 0.0;  // count variance before any floor is applied
};

// Throws std::invalid_argument naming the offending field.
void validate(const ChannelParams& params);
void validate(const Geometry& geometry);

// Probability that a single receptor is active at steady-state
// concentration a0:  a0*gamma / (a0*gamma + kappa).
double activation_probability(double a0, const ChannelParams& params);

// Concentration that produces activation probability p0; inverse of
// activation_probability, unbounded as p0 -> 1.
double inverse_activation(double p0, const ChannelParams& params);

// Steady-state concentration alpha / (4*pi*D*r) at distance r from a
// constant-rate point source.
double steady_state_concentration(double alpha, double r, const Geometry& geometry);

// Mean n*N*p0 and variance n*N^2*p0^2*(1-p0)^2*sigma0_sq of the aggregate
// activated-receptor count of the node.
OutputMoments output_moments(double p0, const ChannelParams& params);

// Variance floor used wherever the count distribution must stay a proper
// density: 1e-9 * n * N^2 * sigma0_sq, never below 1e-12.
double default_variance_floor(const ChannelParams& params);

// Log of the Gaussian density of the node output at y given input level p0,
// with the variance clamped below at var_floor.
double output_log_density(double y, double p0, const ChannelParams& params,
                          double var_floor);

}  // namespace molrelay
