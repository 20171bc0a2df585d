#pragma once

#include <string>

#include "molrelay/channel.hpp"
#include "molrelay/dmc.hpp"

namespace molrelay {

// Sense-and-forward scenarios: no relay, relay re-emitting the same molecule
// type (aggregating at the receiver), or a second molecule type giving the
// receiver two outputs (used jointly or summed).
enum class RelayMode { direct, single_type, multi_type_joint, multi_type_sum };

const char* to_string(RelayMode mode);
RelayMode relay_mode_from_string(const std::string& name);

struct RelayConfig {
    Geometry geometry;
    double beta = 1.0;  // relay amplification factor
    RelayMode mode = RelayMode::direct;
    bool include_relay_noise = false;
};

// Config with the amplification the scenario dictates: r2/r3 for
// single_type (equal maximum production rates), r2/r1 for the multi_type
// modes (which makes the relay's activation probability track the
// transmitter's).
RelayConfig make_relay_config(RelayMode mode, const Geometry& geometry,
                              bool include_relay_noise = false);

void validate(const RelayConfig& config);

// Largest concentration reaching the receiver: a_max for direct,
// a_max * (1 + r1/r3) for single_type (direct plus relayed copies add up).
// Other modes have two outputs and no single aggregate range.
double effective_amax(const ChannelParams& params, const RelayConfig& config);

// End-to-end discrete channel of the configured scenario.  single_type is
// the direct construction with the range widened to effective_amax (with
// r1 == r3 it is bit-identical to a direct channel built at 2*a_max);
// multi_type modes keep the direct-path p grid as input alphabet.  With
// include_relay_noise on, single_type rows carry the extra output variance
// from the relay's own reception noise (see
// relay_reception_noise_variance).
DiscreteChannel build_channel(const ChannelParams& params, const RelayConfig& config,
                              int k_in, int k_out);

// Variance of the receiver-side concentration perturbation caused by the
// relay's probabilistic reception, for a transmitter level inducing
// activation probability p0 on the direct path.
//
// Derivation chain: the relay senses p2 = p(a0 * r1/r2) with
// Var(p_hat) = p2^2 (1-p2)^2 sigma0^2 / n; linearizing the concentration
// readback a(p) = kappa p / (gamma (1-p)) around p2 turns this into
// concentration noise at the relay of variance (a2 * sigma0 / sqrt(n))^2,
// and re-emission scales amplitudes by r2/r3 on the way to the receiver.
// Altogether:
//     Var = (a0 * (r1/r3))^2 * sigma0_sq / n.
// Relative to the receiver's own reception noise (same linearization at the
// aggregate level a0 (1 + r1/r3)) the ratio is (r1 / (r1 + r3))^2 --
// distance-only, 1/4 at r1 == r3 and below 10% once r3 > 2.17 r1.
double relay_reception_noise_variance(const ChannelParams& params,
                                      const Geometry& geometry, double p0 = 0.5);

}  // namespace molrelay
