#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molrelay/channel.hpp"
#include "molrelay/dmc.hpp"

namespace molrelay {

// Thrown when a numeric routine produces an unusable result (malformed
// decision regions, non-finite masses).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Placement { equi_p };
enum class PriorPolicy { uniform, ba_optimized };

Placement placement_from_string(const std::string& name);
PriorPolicy prior_policy_from_string(const std::string& name);
const char* to_string(Placement placement);
const char* to_string(PriorPolicy policy);

// Knobs of the symbol designer.  range_extension widens the design domain:
// symbols are laid out so the RECEIVED levels (after any relay aggregation,
// which scales concentrations by 1 + r1/r3) are equally spaced in
// activation probability; the transmitted levels are scaled back into
// [0, a_max].  1.0 designs for the bare direct path.  The prior_* fields
// configure the capacity solve behind the ba_optimized prior policy.
struct SymbolDesignOptions {
    double range_extension = 1.0;
    int prior_k_out = 2001;
    double prior_tol_bits = 1e-9;
    int prior_max_iter = 50000;
};

// M transmit concentrations in [0, a_max] with their prior.
struct SymbolSet {
    int m = 0;
    std::vector<double> concentrations;
    std::vector<double> prior;
};

void validate(const SymbolSet& symbols, const ChannelParams& params);

// equi_p placement spaces the design-domain activation probabilities
// equally over [0, p(a_max * range_extension)].  uniform gives 1/m priors;
// ba_optimized runs the capacity iteration on the single-hop channel
// restricted to the m design levels and adopts its input distribution.
SymbolSet make_symbol_set(int m, const ChannelParams& params, Placement placement,
                          PriorPolicy prior_policy,
                          const SymbolDesignOptions& opts = {});

// R[i][j] = P(relay decodes j | symbol i sent).
struct ConfusionMatrix {
    int m = 0;
    std::vector<double> entries;  // row-major m x m
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * m + j]; }
};

// Exact MAP confusion of the relay: the relay observes the symbol scaled to
// its own distance (B_i = A_i * r1/r2), decides by maximum posterior over a
// single Gaussian per symbol, and the decision regions are integrated in
// closed form (Gaussian CDF over an interval partition of the observation
// axis).
ConfusionMatrix relay_confusion(const SymbolSet& symbols, const ChannelParams& params,
                                const Geometry& geometry);

// Log posterior (up to a shared constant) of each candidate symbol at
// receiver observation y, mixing over what the relay may have forwarded:
//   log P(A_i | y) = log prior_i + logsumexp_j [ log R[i][j]
//                    + logN(y; mean(A_i + C_j), var(A_i + C_j)) ]
// with C_j = A_j * r1/r3.
std::vector<double> receiver_log_posteriors(double y, const SymbolSet& symbols,
                                            const ConfusionMatrix& confusion,
                                            const ChannelParams& params,
                                            const Geometry& geometry);

// argmax of receiver_log_posteriors; ties break toward the smallest index.
int receiver_map_decode(double y, const SymbolSet& symbols,
                        const ConfusionMatrix& confusion, const ChannelParams& params,
                        const Geometry& geometry);

// MAP decision among the bare symbol levels (no relay in the mix).
int direct_map_decode(double y, const SymbolSet& symbols, const ChannelParams& params);

enum class ErrorMethod { monte_carlo, quadrature };

struct ErrorRateResult {
    double p_error = 0.0;
    ErrorMethod method = ErrorMethod::monte_carlo;
    long long trials = 0;           // Monte Carlo only
    double ci95_low = 0.0;          // Wilson interval (Monte Carlo); == p_error for quadrature
    double ci95_high = 0.0;
    std::uint64_t seed = 0;         // Monte Carlo only
};

// Symbol error rate by seeded Monte Carlo.  Trials are processed in
// fixed-size chunks whose PRNG streams depend only on (seed, chunk index),
// so the result is bit-identical for any worker count.  threads == 0 uses
// the hardware concurrency.
ErrorRateResult error_probability_mc(const SymbolSet& symbols,
                                     const ChannelParams& params,
                                     const Geometry& geometry, bool use_relay,
                                     long long trials, std::uint64_t seed,
                                     int threads = 0);

// Deterministic oracle: the same error probability as exact Gaussian CDF
// sums over the MAP decision regions (mixed over the relay confusion when
// use_relay is set).
ErrorRateResult error_probability_quadrature(const SymbolSet& symbols,
                                             const ChannelParams& params,
                                             const Geometry& geometry, bool use_relay);

}  // namespace molrelay
