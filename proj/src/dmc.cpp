#include "molrelay/dmc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace molrelay {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kTinyProb = 1e-300;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Gaussian probability masses of the bins defined by edges; the first and
// last bins absorb the tails outside the edge range.  Entries below
// kTinyProb are zeroed and the row renormalized.
void fill_row_masses(double mean, double sd, const std::vector<double>& edges,
                     double* row) {
    const std::size_t k = edges.size() - 1;
    double prev = normal_cdf((edges.front() - mean) / sd);
    double below = prev;
    for (std::size_t b = 0; b < k; ++b) {
        const double next = normal_cdf((edges[b + 1] - mean) / sd);
        row[b] = next - prev;
        prev = next;
    }
    row[0] += below;
    row[k - 1] += 1.0 - prev;
    double sum = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
        if (row[b] < kTinyProb) row[b] = 0.0;
        sum += row[b];
    }
    for (std::size_t b = 0; b < k; ++b) row[b] /= sum;
}

struct LevelMoments {
    std::vector<double> p;
    std::vector<double> mean;
    std::vector<double> sd;
    double sd_max = 0.0;
};

// k_in levels equally spaced in p over [0, p_max] with floored variances;
// mean_scale/var_scale cover the summed two-output variant.
LevelMoments level_moments(const ChannelParams& params, int k_in, double mean_scale,
                           double var_scale) {
    LevelMoments lm;
    const double p_max = activation_probability(params.a_max, params);
    const double floor = default_variance_floor(params) * var_scale;
    lm.p.resize(k_in);
    lm.mean.resize(k_in);
    lm.sd.resize(k_in);
    for (int i = 0; i < k_in; ++i) {
        const double p = p_max * static_cast<double>(i) / (k_in - 1);
        lm.p[i] = p;
        const OutputMoments m = output_moments(p, params);
        lm.mean[i] = m.mean * mean_scale;
        lm.sd[i] = std::sqrt(std::max(m.variance * var_scale, floor));
        lm.sd_max = std::max(lm.sd_max, lm.sd[i]);
    }
    lm.p.back() = p_max;  // exact endpoint
    return lm;
}

std::vector<double> uniform_edges(double lo, double hi, int k_out) {
    std::vector<double> edges(k_out + 1);
    for (int b = 0; b <= k_out; ++b)
        edges[b] = lo + (hi - lo) * static_cast<double>(b) / k_out;
    return edges;
}

void check_grid_sizes(int k_in, int k_out) {
    if (k_in < 2) throw std::invalid_argument("k_in: must be >= 2");
    if (k_out < 2) throw std::invalid_argument("k_out: must be >= 2");
}

DiscreteChannel build_single_axis(const ChannelParams& params, int k_in, int k_out,
                                  double mean_scale, double var_scale) {
    check_grid_sizes(k_in, k_out);
    validate(params);
    const LevelMoments lm = level_moments(params, k_in, mean_scale, var_scale);
    DiscreteChannel ch;
    ch.input_levels = lm.p;
    ch.output_edges =
        uniform_edges(-6.0 * lm.sd_max, lm.mean.back() + 6.0 * lm.sd_max, k_out);
    ch.axes = 1;
    ch.transition.resize(static_cast<std::size_t>(k_in) * k_out);
    for (int x = 0; x < k_in; ++x)
        fill_row_masses(lm.mean[x], lm.sd[x], ch.output_edges,
                        ch.transition.data() + static_cast<std::size_t>(x) * k_out);
    return ch;
}

}  // namespace

DiscreteChannel discretize_direct(const ChannelParams& params, int k_in, int k_out) {
    return build_single_axis(params, k_in, k_out, 1.0, 1.0);
}

DiscreteChannel discretize_sum(const ChannelParams& params, int k_in, int k_out) {
    return build_single_axis(params, k_in, k_out, 2.0, 2.0);
}

DiscreteChannel discretize_joint(const ChannelParams& params, int k_in, int k_out) {
    check_grid_sizes(k_in, k_out);
    const std::size_t cells =
        static_cast<std::size_t>(k_in) * k_out * static_cast<std::size_t>(k_out);
    const std::size_t bytes = cells * sizeof(double);
    if (bytes > kJointMemoryBudgetBytes)
        throw resource_error("discretize_joint: transition matrix needs " +
                             std::to_string(bytes) + " bytes, budget is " +
                             std::to_string(kJointMemoryBudgetBytes));
    const DiscreteChannel marg = discretize_direct(params, k_in, k_out);
    DiscreteChannel ch;
    ch.input_levels = marg.input_levels;
    ch.output_edges = marg.output_edges;
    ch.axes = 2;
    ch.transition.resize(cells);
    const std::size_t k = static_cast<std::size_t>(k_out);
    for (int x = 0; x < k_in; ++x) {
        const double* m = marg.row(x);
        double* out = ch.transition.data() + static_cast<std::size_t>(x) * k * k;
        for (std::size_t y1 = 0; y1 < k; ++y1) {
            const double w = m[y1];
            double* line = out + y1 * k;
            if (w == 0.0) {
                std::fill(line, line + k, 0.0);
            } else {
                for (std::size_t y2 = 0; y2 < k; ++y2) line[y2] = w * m[y2];
            }
        }
    }
    return ch;
}

namespace {

void validate_channel(const DiscreteChannel& ch) {
    const std::size_t kx = ch.num_inputs();
    const std::size_t ky = ch.num_outputs();
    if (kx < 2) throw std::invalid_argument("channel: needs at least 2 input levels");
    if (ch.transition.size() != kx * ky)
        throw std::invalid_argument("channel: transition size mismatch");
    for (std::size_t x = 0; x < kx; ++x) {
        const double* row = ch.row(x);
        double sum = 0.0;
        for (std::size_t y = 0; y < ky; ++y) {
            if (row[y] < 0.0)
                throw std::invalid_argument("channel: negative transition entry");
            sum += row[y];
        }
        if (sum == 0.0)
            throw std::invalid_argument("channel: input row " + std::to_string(x) +
                                        " is all zero");
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("channel: row " + std::to_string(x) +
                                        " does not sum to 1");
    }
}

}  // namespace

CapacityResult blahut_arimoto(const DiscreteChannel& channel, double tol_bits,
                              int max_iter, std::vector<double>* lower_bound_trace) {
    if (!(tol_bits > 0.0)) throw std::invalid_argument("tol_bits: must be > 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter: must be >= 1");
    validate_channel(channel);

    const std::size_t kx = channel.num_inputs();
    const std::size_t ky = channel.num_outputs();
    const double* T = channel.transition.data();

    // Rows are Gaussian masses over uniform bins: long exact-zero tails
    // around a dense bulk (plus possibly a folded end bin).  Skipping the
    // zeros changes no sum -- every skipped term is exactly 0 -- but cuts
    // the per-iteration work by the row sparsity.  Segments fold interior
    // zero runs shorter than 64 bins to stay contiguous.
    struct Segment {
        std::uint32_t begin, end;
    };
    std::vector<std::vector<Segment>> segments(kx);
    std::vector<std::uint32_t> support;  // union of all row segments
    {
        std::vector<char> covered(ky, 0);
        for (std::size_t x = 0; x < kx; ++x) {
            const double* row = T + x * ky;
            std::vector<Segment>& segs = segments[x];
            std::size_t y = 0;
            while (y < ky) {
                while (y < ky && row[y] == 0.0) ++y;
                if (y == ky) break;
                const std::size_t begin = y;
                std::size_t last = y;
                while (y < ky) {
                    if (row[y] != 0.0)
                        last = y;
                    else if (y - last >= 64)
                        break;
                    ++y;
                }
                segs.push_back({static_cast<std::uint32_t>(begin),
                                static_cast<std::uint32_t>(last + 1)});
                y = last + 1;
            }
            for (const Segment& s : segs)
                for (std::uint32_t b = s.begin; b < s.end; ++b) covered[b] = 1;
        }
        for (std::size_t y = 0; y < ky; ++y)
            if (covered[y]) support.push_back(static_cast<std::uint32_t>(y));
    }

    // Per-row negative entropy sum_y T ln T, reused every iteration.
    std::vector<double> hx(kx, 0.0);
    for (std::size_t x = 0; x < kx; ++x) {
        const double* row = T + x * ky;
        double h = 0.0;
        for (const Segment& s : segments[x])
            for (std::uint32_t y = s.begin; y < s.end; ++y)
                if (row[y] > 0.0) h += row[y] * std::log(row[y]);
        hx[x] = h;
    }

    std::vector<double> r(kx, 1.0 / static_cast<double>(kx));
    std::vector<double> q(ky, 0.0), logq(ky), d(kx);
    const double logq_floor = std::log(kTinyProb);

    CapacityResult res;
    double prev_lower = -std::numeric_limits<double>::infinity();
    if (lower_bound_trace) lower_bound_trace->clear();

    for (int it = 1; it <= max_iter; ++it) {
        for (std::uint32_t y : support) q[y] = 0.0;
        for (std::size_t x = 0; x < kx; ++x) {
            const double rx = r[x];
            if (rx == 0.0) continue;
            const double* row = T + x * ky;
            for (const Segment& s : segments[x])
                for (std::uint32_t y = s.begin; y < s.end; ++y) q[y] += rx * row[y];
        }
        for (std::uint32_t y : support)
            logq[y] = q[y] > kTinyProb ? std::log(q[y]) : logq_floor;

        double lower = 0.0, upper = -std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < kx; ++x) {
            const double* row = T + x * ky;
            double s = 0.0;
            for (const Segment& seg : segments[x])
                for (std::uint32_t y = seg.begin; y < seg.end; ++y)
                    s += row[y] * logq[y];
            d[x] = hx[x] - s;
            lower += r[x] * d[x];
            upper = std::max(upper, d[x]);
        }

        const double lower_bits = lower / kLn2;
        assert(lower_bits >= prev_lower - 1e-9 && "lower bound must not decrease");
        prev_lower = lower_bits;
        if (lower_bound_trace) lower_bound_trace->push_back(lower_bits);

        res.capacity_bits = lower_bits;
        res.input_distribution = r;
        res.iterations = it;
        res.gap_bound = (upper - lower) / kLn2;
        if (res.gap_bound <= tol_bits) {
            res.converged = true;
            return res;
        }
        // Near-continuous optimal inputs make the gap decay like c/it, so
        // reaching a tight tolerance can take millions of iterations while
        // the capacity value has long stopped moving.  On big matrices,
        // once the harmonic projection puts the tolerance far beyond the
        // iteration budget, stop and report the honest gap instead of
        // burning the budget.
        if (kx * ky >= 100000 && it >= 2000 && it % 500 == 0 &&
            res.gap_bound * it > 10.0 * tol_bits * max_iter)
            break;

        double norm = 0.0;
        for (std::size_t x = 0; x < kx; ++x) {
            r[x] *= std::exp(d[x] - upper);
            norm += r[x];
        }
        for (std::size_t x = 0; x < kx; ++x) r[x] /= norm;
    }
    res.converged = false;
    return res;
}

}  // namespace molrelay
