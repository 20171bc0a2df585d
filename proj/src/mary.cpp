#include "molrelay/mary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <thread>

#include "molrelay/stats.hpp"

namespace molrelay {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925;

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

struct Gauss {
    double mean = 0.0;
    double var = 1.0;
    double sd = 1.0;
    double logw = 0.0;  // log of the component weight (prior and/or confusion)
};

Gauss level_gauss(double concentration, const ChannelParams& params, double logw) {
    const double p = activation_probability(concentration, params);
    const OutputMoments m = output_moments(p, params);
    Gauss g;
    g.mean = m.mean;
    g.var = std::max(m.variance, default_variance_floor(params));
    g.sd = std::sqrt(g.var);
    g.logw = logw;
    return g;
}

double log_density(const Gauss& g, double y) {
    const double d = y - g.mean;
    return -0.5 * std::log(kTwoPi * g.var) - d * d / (2.0 * g.var);
}

// MAP decision rule on a scalar axis as an interval partition.
struct DecisionIntervals {
    std::vector<double> boundaries;  // ascending
    std::vector<int> owners;         // size boundaries.size() + 1

    int decide(double y) const {
        const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), y);
        return owners[static_cast<std::size_t>(it - boundaries.begin())];
    }
};

void check_intervals(const DecisionIntervals& di) {
    if (di.owners.size() != di.boundaries.size() + 1 || di.owners.empty())
        throw numeric_error("decision regions: malformed interval partition");
    for (double b : di.boundaries)
        if (!std::isfinite(b))
            throw numeric_error("decision regions: non-finite boundary");
}

// Exact partition for single-Gaussian scores: every region boundary is a
// root of a pairwise quadratic log-score difference, so collect all roots
// and read the winner off each segment midpoint.
DecisionIntervals plain_map_intervals(const std::vector<Gauss>& comps) {
    const int m = static_cast<int>(comps.size());
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
        if (comps[i].logw != kNegInf) active.push_back(i);
    if (active.empty()) throw numeric_error("decision regions: no active component");

    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    double sd_max = 0.0;
    for (int i : active) {
        lo = std::min(lo, comps[i].mean);
        hi = std::max(hi, comps[i].mean);
        sd_max = std::max(sd_max, comps[i].sd);
    }

    std::vector<double> cuts;
    for (std::size_t a = 0; a + 1 < active.size(); ++a) {
        for (std::size_t b = a + 1; b < active.size(); ++b) {
            const Gauss& gi = comps[active[a]];
            const Gauss& gj = comps[active[b]];
            // log f_i(y) - log f_j(y) = A y^2 + B y + C
            const double A = 1.0 / (2.0 * gj.var) - 1.0 / (2.0 * gi.var);
            const double B = gi.mean / gi.var - gj.mean / gj.var;
            const double C = gi.logw - gj.logw - 0.5 * std::log(gi.var / gj.var) -
                             gi.mean * gi.mean / (2.0 * gi.var) +
                             gj.mean * gj.mean / (2.0 * gj.var);
            const double scale = std::abs(A) * (hi - lo + sd_max) + std::abs(B);
            if (std::abs(A) * (hi - lo + sd_max) <= 1e-14 * std::max(1.0, scale)) {
                if (B != 0.0) cuts.push_back(-C / B);
            } else {
                const double disc = B * B - 4.0 * A * C;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    cuts.push_back((-B - sq) / (2.0 * A));
                    cuts.push_back((-B + sq) / (2.0 * A));
                }
            }
        }
    }
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                              [](double c) { return !std::isfinite(c); }),
               cuts.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const auto winner = [&](double y) {
        int best = active[0];
        double best_s = comps[best].logw + log_density(comps[best], y);
        for (std::size_t k = 1; k < active.size(); ++k) {
            const int i = active[k];
            const double s = comps[i].logw + log_density(comps[i], y);
            if (s > best_s) {
                best_s = s;
                best = i;
            }
        }
        return best;
    };

    // Segment owners from one probe per segment; adjacent segments with the
    // same owner merge away.  Probes for the unbounded end segments sit past
    // every component's tail.
    const double margin = 10.0 * sd_max + 1.0;
    DecisionIntervals di;
    int cur = winner(cuts.empty() ? lo - margin : std::min(lo - margin, cuts.front() - 1.0));
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        const double probe = k + 1 < cuts.size()
                                 ? 0.5 * (cuts[k] + cuts[k + 1])
                                 : std::max(hi + margin, cuts[k] + 1.0);
        const int w = winner(probe);
        if (w != cur) {
            di.boundaries.push_back(cuts[k]);
            di.owners.push_back(cur);
            cur = w;
        }
    }
    di.owners.push_back(cur);
    check_intervals(di);
    return di;
}

// Winner of a family of scalar score functions, located by a knot scan plus
// bisection.  Scores must be continuous; knots must be dense enough that no
// region is skipped entirely (they are placed at half-sigma steps of every
// mixture component).
DecisionIntervals scan_map_intervals(const std::vector<double>& knots,
                                     const std::function<int(double)>& winner) {
    DecisionIntervals di;
    int cur = winner(knots.front());
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const int nxt = winner(knots[k + 1]);
        if (nxt == cur) continue;
        double a = knots[k], b = knots[k + 1];
        for (int step = 0; step < 200 && b - a > 1e-13 * (1.0 + std::abs(a)); ++step) {
            const double mid = 0.5 * (a + b);
            if (winner(mid) == cur)
                a = mid;
            else
                b = mid;
        }
        di.boundaries.push_back(0.5 * (a + b));
        di.owners.push_back(cur);
        cur = nxt;
    }
    di.owners.push_back(cur);
    check_intervals(di);
    return di;
}

// Gaussian mass of every interval for one component; masses[k] belongs to
// owners[k].  Telescoping CDF differences make the row sum exactly one.
std::vector<double> interval_masses(const DecisionIntervals& di, const Gauss& g) {
    std::vector<double> masses(di.owners.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < di.boundaries.size(); ++k) {
        const double c = normal_cdf((di.boundaries[k] - g.mean) / g.sd);
        masses[k] = c - prev;
        prev = c;
    }
    masses.back() = 1.0 - prev;
    return masses;
}

std::vector<Gauss> symbol_gaussians(const SymbolSet& symbols,
                                    const ChannelParams& params, double scale) {
    std::vector<Gauss> comps(symbols.m);
    for (int i = 0; i < symbols.m; ++i)
        comps[i] = level_gauss(symbols.concentrations[i] * scale, params,
                               safe_log(symbols.prior[i]));
    return comps;
}

// Aggregate observation models at the receiver for (sent i, forwarded j).
std::vector<Gauss> aggregate_gaussians(const SymbolSet& symbols,
                                       const ChannelParams& params,
                                       const Geometry& geometry) {
    const double relay_scale = geometry.r1 / geometry.r3;
    std::vector<Gauss> agg(static_cast<std::size_t>(symbols.m) * symbols.m);
    for (int i = 0; i < symbols.m; ++i)
        for (int j = 0; j < symbols.m; ++j)
            agg[static_cast<std::size_t>(i) * symbols.m + j] =
                level_gauss(symbols.concentrations[i] +
                                symbols.concentrations[j] * relay_scale,
                            params, 0.0);
    return agg;
}

struct ReceiverModel {
    std::vector<Gauss> agg;           // m*m aggregate components
    std::vector<double> log_r;        // m*m log confusion entries
    std::vector<double> log_prior;    // m
    int m = 0;

    double log_posterior(int i, double y) const {
        double best = kNegInf;
        const std::size_t base = static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double lr = log_r[base + j];
            if (lr == kNegInf) continue;
            best = std::max(best, lr + log_density(agg[base + j], y));
        }
        if (best == kNegInf) return kNegInf;
        double s = 0.0;
        for (int j = 0; j < m; ++j) {
            const double lr = log_r[base + j];
            if (lr == kNegInf) continue;
            s += std::exp(lr + log_density(agg[base + j], y) - best);
        }
        return log_prior[i] + best + std::log(s);
    }

    int decode(double y) const {
        int best = 0;
        double best_s = log_posterior(0, y);
        for (int i = 1; i < m; ++i) {
            const double s = log_posterior(i, y);
            if (s > best_s) {
                best_s = s;
                best = i;
            }
        }
        return best;
    }
};

ReceiverModel make_receiver_model(const SymbolSet& symbols,
                                  const ConfusionMatrix& confusion,
                                  const ChannelParams& params,
                                  const Geometry& geometry) {
    ReceiverModel rm;
    rm.m = symbols.m;
    rm.agg = aggregate_gaussians(symbols, params, geometry);
    rm.log_r.resize(rm.agg.size());
    for (std::size_t k = 0; k < rm.log_r.size(); ++k)
        rm.log_r[k] = safe_log(confusion.entries[k]);
    rm.log_prior.resize(symbols.m);
    for (int i = 0; i < symbols.m; ++i) rm.log_prior[i] = safe_log(symbols.prior[i]);
    return rm;
}

DecisionIntervals receiver_intervals(const ReceiverModel& rm) {
    std::vector<double> knots;
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    double sd_max = 0.0;
    for (const Gauss& g : rm.agg) {
        lo = std::min(lo, g.mean);
        hi = std::max(hi, g.mean);
        sd_max = std::max(sd_max, g.sd);
        for (int k = -16; k <= 16; ++k) knots.push_back(g.mean + 0.5 * k * g.sd);
    }
    knots.push_back(lo - 10.0 * sd_max - 1.0);
    knots.push_back(hi + 10.0 * sd_max + 1.0);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    return scan_map_intervals(knots, [&](double y) { return rm.decode(y); });
}

struct splitmix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

// Uniform and Gaussian draws pinned to the mt19937_64 integer stream so the
// sampled values are identical on every standard library.
struct ChunkRng {
    std::mt19937_64 eng;

    explicit ChunkRng(std::uint64_t seed, std::uint64_t chunk) {
        splitmix64 mix{seed ^ (0xA0761D6478BD642Full * (chunk + 1))};
        eng.seed(mix.next());
    }
    double u01() {  // [0, 1)
        return static_cast<double>(eng() >> 11) * 0x1.0p-53;
    }
    double normal() {  // Box-Muller, one value per two uniforms
        const double u1 = static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
};

constexpr long long kMcChunk = 65536;

}  // namespace

Placement placement_from_string(const std::string& name) {
    if (name == "equi_p") return Placement::equi_p;
    throw std::invalid_argument("placement: unknown policy '" + name + "'");
}

PriorPolicy prior_policy_from_string(const std::string& name) {
    if (name == "uniform") return PriorPolicy::uniform;
    if (name == "ba_optimized") return PriorPolicy::ba_optimized;
    throw std::invalid_argument("prior_policy: unknown policy '" + name + "'");
}

const char* to_string(Placement placement) {
    switch (placement) {
        case Placement::equi_p: return "equi_p";
    }
    throw std::invalid_argument("placement: unknown value");
}

const char* to_string(PriorPolicy policy) {
    switch (policy) {
        case PriorPolicy::uniform: return "uniform";
        case PriorPolicy::ba_optimized: return "ba_optimized";
    }
    throw std::invalid_argument("prior_policy: unknown value");
}

void validate(const SymbolSet& symbols, const ChannelParams& params) {
    if (symbols.m < 1) throw std::invalid_argument("symbols.m: must be >= 1");
    if (static_cast<int>(symbols.concentrations.size()) != symbols.m ||
        static_cast<int>(symbols.prior.size()) != symbols.m)
        throw std::invalid_argument("symbols: field sizes disagree with m");
    double sum = 0.0;
    for (int i = 0; i < symbols.m; ++i) {
        const double c = symbols.concentrations[i];
        if (c < 0.0 || c > params.a_max * (1.0 + 1e-12))
            throw std::invalid_argument("symbols.concentrations: outside [0, a_max]");
        if (i > 0 && !(c > symbols.concentrations[i - 1]))
            throw std::invalid_argument(
                "symbols.concentrations: must be strictly increasing");
        if (symbols.prior[i] < 0.0)
            throw std::invalid_argument("symbols.prior: entries must be >= 0");
        sum += symbols.prior[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("symbols.prior: must sum to 1");
}

SymbolSet make_symbol_set(int m, const ChannelParams& params, Placement placement,
                          PriorPolicy prior_policy, const SymbolDesignOptions& opts) {
    if (m < 2) throw std::domain_error("m: must be >= 2");
    validate(params);
    if (!(opts.range_extension > 0.0))
        throw std::invalid_argument("opts.range_extension: must be > 0");
    if (placement != Placement::equi_p)
        throw std::invalid_argument("placement: unknown policy");

    const double ext = opts.range_extension;
    const double p_top = activation_probability(params.a_max * ext, params);
    std::vector<double> p_design(m);
    SymbolSet set;
    set.m = m;
    set.concentrations.resize(m);
    for (int i = 0; i < m; ++i) {
        p_design[i] = p_top * static_cast<double>(i) / (m - 1);
        set.concentrations[i] = inverse_activation(p_design[i], params) / ext;
    }
    set.concentrations.front() = 0.0;
    set.concentrations.back() = params.a_max;

    if (prior_policy == PriorPolicy::uniform) {
        set.prior.assign(m, 1.0 / m);
    } else {
        // Capacity-optimal weights of the single-hop channel restricted to the
        // design levels.
        DiscreteChannel ch;
        ch.input_levels = p_design;
        ch.axes = 1;
        double sd_max = 0.0;
        std::vector<Gauss> comps(m);
        for (int i = 0; i < m; ++i) {
            comps[i] = level_gauss(inverse_activation(p_design[i], params), params, 0.0);
            sd_max = std::max(sd_max, comps[i].sd);
        }
        const int k_out = opts.prior_k_out;
        const double lo = -6.0 * sd_max, hi = comps.back().mean + 6.0 * sd_max;
        ch.output_edges.resize(k_out + 1);
        for (int b = 0; b <= k_out; ++b)
            ch.output_edges[b] = lo + (hi - lo) * static_cast<double>(b) / k_out;
        ch.transition.resize(static_cast<std::size_t>(m) * k_out);
        for (int i = 0; i < m; ++i) {
            double prev = normal_cdf((ch.output_edges.front() - comps[i].mean) / comps[i].sd);
            const double below = prev;
            double* row = ch.transition.data() + static_cast<std::size_t>(i) * k_out;
            for (int b = 0; b < k_out; ++b) {
                const double next =
                    normal_cdf((ch.output_edges[b + 1] - comps[i].mean) / comps[i].sd);
                row[b] = next - prev;
                prev = next;
            }
            row[0] += below;
            row[k_out - 1] += 1.0 - prev;
            double sum = 0.0;
            for (int b = 0; b < k_out; ++b) sum += row[b];
            for (int b = 0; b < k_out; ++b) row[b] /= sum;
        }
        const CapacityResult cap =
            blahut_arimoto(ch, opts.prior_tol_bits, opts.prior_max_iter);
        set.prior = cap.input_distribution;
        double sum = 0.0;
        for (double w : set.prior) sum += w;
        for (double& w : set.prior) w /= sum;
    }
    validate(set, params);
    return set;
}

ConfusionMatrix relay_confusion(const SymbolSet& symbols, const ChannelParams& params,
                                const Geometry& geometry) {
    validate(symbols, params);
    validate(geometry);
    const std::vector<Gauss> comps =
        symbol_gaussians(symbols, params, geometry.r1 / geometry.r2);
    const DecisionIntervals di = plain_map_intervals(comps);
    ConfusionMatrix cm;
    cm.m = symbols.m;
    cm.entries.assign(static_cast<std::size_t>(symbols.m) * symbols.m, 0.0);
    for (int i = 0; i < symbols.m; ++i) {
        const std::vector<double> masses = interval_masses(di, comps[i]);
        for (std::size_t k = 0; k < masses.size(); ++k)
            cm.entries[static_cast<std::size_t>(i) * symbols.m + di.owners[k]] +=
                masses[k];
    }
    return cm;
}

std::vector<double> receiver_log_posteriors(double y, const SymbolSet& symbols,
                                            const ConfusionMatrix& confusion,
                                            const ChannelParams& params,
                                            const Geometry& geometry) {
    const ReceiverModel rm = make_receiver_model(symbols, confusion, params, geometry);
    std::vector<double> lp(symbols.m);
    for (int i = 0; i < symbols.m; ++i) lp[i] = rm.log_posterior(i, y);
    return lp;
}

int receiver_map_decode(double y, const SymbolSet& symbols,
                        const ConfusionMatrix& confusion, const ChannelParams& params,
                        const Geometry& geometry) {
    return make_receiver_model(symbols, confusion, params, geometry).decode(y);
}

int direct_map_decode(double y, const SymbolSet& symbols, const ChannelParams& params) {
    const std::vector<Gauss> comps = symbol_gaussians(symbols, params, 1.0);
    int best = 0;
    double best_s = comps[0].logw + log_density(comps[0], y);
    for (int i = 1; i < symbols.m; ++i) {
        const double s = comps[i].logw + log_density(comps[i], y);
        if (s > best_s) {
            best_s = s;
            best = i;
        }
    }
    return best;
}

ErrorRateResult error_probability_mc(const SymbolSet& symbols,
                                     const ChannelParams& params,
                                     const Geometry& geometry, bool use_relay,
                                     long long trials, std::uint64_t seed,
                                     int threads) {
    validate(symbols, params);
    validate(geometry);
    if (trials < 1) throw std::invalid_argument("trials: must be >= 1");

    const int m = symbols.m;
    std::vector<double> prior_cum(m);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        acc += symbols.prior[i];
        prior_cum[i] = acc;
    }
    prior_cum.back() = 1.0;

    // Precompute sampling stats and decision rules once; chunks only draw.
    std::vector<Gauss> relay_obs, direct_obs, agg;
    DecisionIntervals relay_di, recv_di;
    if (use_relay) {
        relay_obs = symbol_gaussians(symbols, params, geometry.r1 / geometry.r2);
        relay_di = plain_map_intervals(relay_obs);
        const ConfusionMatrix cm = relay_confusion(symbols, params, geometry);
        const ReceiverModel rm = make_receiver_model(symbols, cm, params, geometry);
        agg = rm.agg;
        recv_di = receiver_intervals(rm);
    } else {
        direct_obs = symbol_gaussians(symbols, params, 1.0);
        recv_di = plain_map_intervals(direct_obs);
    }

    const long long nchunks = (trials + kMcChunk - 1) / kMcChunk;
    std::atomic<long long> next_chunk{0};
    std::atomic<long long> total_errors{0};

    const auto worker = [&]() {
        long long local = 0;
        for (;;) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= nchunks) break;
            const long long count = std::min<long long>(kMcChunk, trials - c * kMcChunk);
            ChunkRng rng(seed, static_cast<std::uint64_t>(c));
            for (long long t = 0; t < count; ++t) {
                const double u = rng.u01();
                const int i = static_cast<int>(
                    std::upper_bound(prior_cum.begin(), prior_cum.end(), u) -
                    prior_cum.begin());
                int dec;
                if (use_relay) {
                    const Gauss& ro = relay_obs[i];
                    const int j = relay_di.decide(ro.mean + ro.sd * rng.normal());
                    const Gauss& ag = agg[static_cast<std::size_t>(i) * m + j];
                    dec = recv_di.decide(ag.mean + ag.sd * rng.normal());
                } else {
                    const Gauss& go = direct_obs[i];
                    dec = recv_di.decide(go.mean + go.sd * rng.normal());
                }
                if (dec != i) ++local;
            }
        }
        total_errors.fetch_add(local);
    };

    int nw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (nw < 1) nw = 1;
    nw = static_cast<int>(std::min<long long>(nw, nchunks));
    std::vector<std::thread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    const long long errors = total_errors.load();
    ErrorRateResult res;
    res.p_error = static_cast<double>(errors) / static_cast<double>(trials);
    res.method = ErrorMethod::monte_carlo;
    res.trials = trials;
    const Interval ci = wilson_interval(errors, trials);
    res.ci95_low = ci.low;
    res.ci95_high = ci.high;
    res.seed = seed;
    return res;
}

ErrorRateResult error_probability_quadrature(const SymbolSet& symbols,
                                             const ChannelParams& params,
                                             const Geometry& geometry, bool use_relay) {
    validate(symbols, params);
    validate(geometry);
    const int m = symbols.m;
    double p_err = 0.0;
    if (use_relay) {
        const ConfusionMatrix cm = relay_confusion(symbols, params, geometry);
        const ReceiverModel rm = make_receiver_model(symbols, cm, params, geometry);
        const DecisionIntervals di = receiver_intervals(rm);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                const double r = cm.at(i, j);
                if (r == 0.0) continue;
                const std::vector<double> masses =
                    interval_masses(di, rm.agg[static_cast<std::size_t>(i) * m + j]);
                double correct = 0.0;
                for (std::size_t k = 0; k < masses.size(); ++k)
                    if (di.owners[k] == i) correct += masses[k];
                p_err += symbols.prior[i] * r * (1.0 - correct);
            }
        }
    } else {
        const std::vector<Gauss> comps = symbol_gaussians(symbols, params, 1.0);
        const DecisionIntervals di = plain_map_intervals(comps);
        for (int i = 0; i < m; ++i) {
            const std::vector<double> masses = interval_masses(di, comps[i]);
            double correct = 0.0;
            for (std::size_t k = 0; k < masses.size(); ++k)
                if (di.owners[k] == i) correct += masses[k];
            p_err += symbols.prior[i] * (1.0 - correct);
        }
    }
    if (!std::isfinite(p_err) || p_err < -1e-12 || p_err > 1.0 + 1e-12)
        throw numeric_error("quadrature: error probability out of range");
    ErrorRateResult res;
    res.p_error = std::clamp(p_err, 0.0, 1.0);
    res.method = ErrorMethod::quadrature;
    res.ci95_low = res.p_error;
    res.ci95_high = res.p_error;
    return res;
}

}  // namespace molrelay
