#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "molrelay/channel.hpp"

namespace molrelay {

// Thrown when a construction would exceed the documented memory budget.
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite-alphabet channel: input levels are activation probabilities,
// outputs are bins of the (possibly two-axis) receptor-count axis.
// transition is row-major with num_outputs() columns per input level.
// For axes == 2 the bins form the product grid of output_edges with itself
// and column index (y1, y2) flattens to y1 * bins_per_axis + y2.
struct DiscreteChannel {
    std::vector<double> input_levels;  // strictly increasing p values
    std::vector<double> output_edges;  // strictly increasing bin edges, one axis
    int axes = 1;                      // 1 or 2
    std::vector<double> transition;

    std::size_t num_inputs() const { return input_levels.size(); }
    std::size_t bins_per_axis() const { return output_edges.size() - 1; }
    std::size_t num_outputs() const {
        const std::size_t b = bins_per_axis();
        return axes == 2 ? b * b : b;
    }
    const double* row(std::size_t x) const { return transition.data() + x * num_outputs(); }
};

struct CapacityResult {
    double capacity_bits = 0.0;
    std::vector<double> input_distribution;
    int iterations = 0;
    bool converged = false;
    double gap_bound = 0.0;  // final upper-lower bound gap, bits
};

// Single-output channel of one hop: k_in levels equally spaced in p over
// [0, p_max], uniform bins covering [-6*sigma_max, n*N*p_max + 6*sigma_max].
DiscreteChannel discretize_direct(const ChannelParams& params, int k_in, int k_out);

// Sum of the two relay-scenario outputs: mean 2*n*N*p, variance twice the
// single-hop variance, bins covering the doubled range.
DiscreteChannel discretize_sum(const ChannelParams& params, int k_in, int k_out);

// Two conditionally independent outputs on the product bin grid
// (k_out bins per axis, k_out^2 columns).  Throws resource_error when the
// transition matrix would exceed kJointMemoryBudgetBytes.
DiscreteChannel discretize_joint(const ChannelParams& params, int k_in, int k_out);

inline constexpr std::size_t kJointMemoryBudgetBytes = 512ull << 20;

// Capacity by alternating maximization.  Stops when the standard
// upper-lower mutual-information gap drops to tol_bits, or at max_iter with
// converged=false.  The reported distribution is the one attaining the
// lower bound, which is non-decreasing across iterations.
// lower_bound_trace, when given, receives the per-iteration lower bound in
// bits.
CapacityResult blahut_arimoto(const DiscreteChannel& channel, double tol_bits = 1e-6,
                              int max_iter = 20000,
                              std::vector<double>* lower_bound_trace = nullptr);

}  // namespace molrelay
