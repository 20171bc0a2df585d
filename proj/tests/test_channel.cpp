#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "molrelay/channel.hpp"

using namespace molrelay;

namespace {
ChannelParams fig_params() {
    ChannelParams p;
    p.gamma = 1.0;
    p.kappa = 1.0;
    p.sigma0_sq = 0.1;
    p.n = 25;
    p.n_receptors = 10;
    p.a_max = 1.0;
    return p;
}
}  // namespace

TEST_CASE("activation probability: pinned values") {
    ChannelParams p = fig_params();
    CHECK(activation_probability(0.0, p) == 0.0);
    CHECK(activation_probability(1.0, p) == doctest::Approx(0.5).epsilon(1e-15));
    p.gamma = 2.0;
    p.kappa = 1.0;
    CHECK(activation_probability(3.0, p) == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
    CHECK_THROWS_AS(activation_probability(-1e-9, p), std::domain_error);
}

TEST_CASE("activation probability: monotone and bounded on random points") {
    ChannelParams p = fig_params();
    p.gamma = 0.7;
    p.kappa = 2.3;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 12.0);
    for (int i = 0; i < 10000; ++i) {
        const double a = std::exp(u(rng)) - 1.0;  // heavy right tail
        const double pa = activation_probability(a, p);
        CHECK(pa >= 0.0);
        CHECK(pa < 1.0);
        const double pb = activation_probability(a + 1e-3, p);
        CHECK(pb > pa);
    }
}

TEST_CASE("inverse activation: pinned values and round trip") {
    ChannelParams p = fig_params();
    CHECK(inverse_activation(0.0, p) == 0.0);
    CHECK(inverse_activation(0.5, p) == doctest::Approx(1.0).epsilon(1e-15));
    p.gamma = 2.0;
    p.kappa = 1.0;
    CHECK(inverse_activation(6.0 / 7.0, p) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(inverse_activation(1.0, p), std::domain_error);
    CHECK_THROWS_AS(inverse_activation(-0.1, p), std::domain_error);

    for (int i = 0; i <= 999; ++i) {
        const double want = 0.999 * i / 999.0;
        const double got = activation_probability(inverse_activation(want, p), p);
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("steady-state concentration") {
    Geometry g;
    g.diffusion_coeff = 0.8;
    CHECK(steady_state_concentration(0.0, 2.0, g) == 0.0);
    const double r = 1.7;
    const double alpha = 4.0 * std::acos(-1.0) * g.diffusion_coeff * r;
    CHECK(steady_state_concentration(alpha, r, g) == doctest::Approx(1.0).epsilon(1e-14));
    const double c1 = steady_state_concentration(3.0, 1.0, g);
    CHECK(steady_state_concentration(3.0, 2.0, g) == doctest::Approx(c1 / 2.0));
    // c * r constant in r
    for (double rr : {0.25, 1.0, 4.0, 19.0})
        CHECK(steady_state_concentration(3.0, rr, g) * rr == doctest::Approx(c1 * 1.0));
    CHECK_THROWS_AS(steady_state_concentration(1.0, 0.0, g), std::domain_error);
    CHECK_THROWS_AS(steady_state_concentration(-1.0, 1.0, g), std::domain_error);
}

TEST_CASE("output moments: pinned values, symmetry, peak at one half") {
    ChannelParams p = fig_params();
    OutputMoments z = output_moments(0.0, p);
    CHECK(z.mean == 0.0);
    CHECK(z.variance == 0.0);

    OutputMoments h = output_moments(0.5, p);
    CHECK(h.mean == doctest::Approx(125.0).epsilon(1e-15));
    CHECK(h.variance == doctest::Approx(15.625).epsilon(1e-13));

    for (double q : {0.05, 0.17, 0.33, 0.49}) {
        CHECK(output_moments(q, p).variance ==
              doctest::Approx(output_moments(1.0 - q, p).variance).epsilon(1e-13));
        CHECK(output_moments(q, p).variance < h.variance);
    }
    CHECK(output_moments(1.0, p).variance == 0.0);
    CHECK(output_moments(1.0, p).mean == doctest::Approx(250.0));
    CHECK_THROWS_AS(output_moments(-0.01, p), std::domain_error);
    CHECK_THROWS_AS(output_moments(1.01, p), std::domain_error);
}

TEST_CASE("variance floor") {
    ChannelParams p = fig_params();
    CHECK(default_variance_floor(p) ==
          doctest::Approx(1e-9 * 25 * 100 * 0.1).epsilon(1e-15));
    p.sigma0_sq = 0.0;
    CHECK(default_variance_floor(p) == 1e-12);
}

TEST_CASE("output log density: mode value and unit mass") {
    ChannelParams p = fig_params();
    const double floor = default_variance_floor(p);

    const OutputMoments m = output_moments(0.37, p);
    const double at_mode = output_log_density(m.mean, 0.37, p, floor);
    CHECK(at_mode ==
          doctest::Approx(-0.5 * std::log(2.0 * std::acos(-1.0) * m.variance))
              .epsilon(1e-12));

    // Simpson integration of the density over +-12 sd.
    const double sd = std::sqrt(m.variance);
    const int steps = 20000;
    const double lo = m.mean - 12.0 * sd, hi = m.mean + 12.0 * sd;
    const double hstep = (hi - lo) / steps;
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * std::exp(output_log_density(lo + i * hstep, 0.37, p, floor));
    }
    acc *= hstep / 3.0;
    CHECK(std::abs(acc - 1.0) <= 1e-9);

    // endpoints fall back to the floor
    const double at_zero = output_log_density(0.0, 0.0, p, floor);
    CHECK(at_zero == doctest::Approx(-0.5 * std::log(2.0 * std::acos(-1.0) * floor)));
    CHECK(std::exp(output_log_density(0.5, 0.0, p, floor)) < 1e-300);  // narrow spike
    const double top_mean = p.n * p.n_receptors;
    CHECK(output_log_density(top_mean, 1.0, p, floor) ==
          doctest::Approx(-0.5 * std::log(2.0 * std::acos(-1.0) * floor)));
    CHECK(std::isfinite(output_log_density(1e9, 0.5, p, floor)));
}

TEST_CASE("validation names the offending field") {
    ChannelParams p = fig_params();
    p.gamma = 0.0;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("gamma"),
                         std::invalid_argument);
    p = fig_params();
    p.kappa = -1.0;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("kappa"),
                         std::invalid_argument);
    p = fig_params();
    p.sigma0_sq = -1e-12;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("sigma0_sq"),
                         std::invalid_argument);
    p = fig_params();
    p.n = 0;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("n:"),
                         std::invalid_argument);
    p = fig_params();
    p.n_receptors = 0;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("n_receptors"),
                         std::invalid_argument);
    p = fig_params();
    p.a_max = 0.0;
    CHECK_THROWS_WITH_AS(validate(p), doctest::Contains("a_max"),
                         std::invalid_argument);
    CHECK_NOTHROW(validate(fig_params()));

    Geometry g;
    g.r2 = 0.0;
    CHECK_THROWS_WITH_AS(validate(g), doctest::Contains("r2"),
                         std::invalid_argument);
    g = Geometry{};
    g.diffusion_coeff = -2.0;
    CHECK_THROWS_WITH_AS(validate(g), doctest::Contains("diffusion_coeff"),
                         std::invalid_argument);
    CHECK_NOTHROW(validate(Geometry{}));
}

TEST_CASE("operations are pure: repeated calls bit-identical") {
    ChannelParams p = fig_params();
    p.gamma = 1.37;
    p.kappa = 0.61;
    for (double a : {0.0, 0.3, 2.7, 55.0}) {
        CHECK(activation_probability(a, p) == activation_probability(a, p));
        const double pr = activation_probability(a, p);
        CHECK(output_moments(pr, p).variance == output_moments(pr, p).variance);
        CHECK(output_log_density(7.7, pr, p, 1e-6) ==
              output_log_density(7.7, pr, p, 1e-6));
    }
}
