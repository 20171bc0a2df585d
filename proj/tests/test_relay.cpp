#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "molrelay/relay.hpp"

using namespace molrelay;

namespace {

ChannelParams fig_params(double a_max = 1.0) {
    ChannelParams p;
    p.sigma0_sq = 0.1;
    p.n = 25;
    p.n_receptors = 10;
    p.a_max = a_max;
    return p;
}

Geometry geo(double r1, double r2, double r3) {
    Geometry g;
    g.r1 = r1;
    g.r2 = r2;
    g.r3 = r3;
    return g;
}

double row_moment(const DiscreteChannel& ch, std::size_t x, int order, double center) {
    const double* row = ch.row(x);
    double acc = 0.0;
    for (std::size_t y = 0; y < ch.num_outputs(); ++y) {
        const double mid = 0.5 * (ch.output_edges[y] + ch.output_edges[y + 1]);
        acc += row[y] * std::pow(mid - center, order);
    }
    return acc;
}

}  // namespace

TEST_CASE("mode names round-trip") {
    for (RelayMode m : {RelayMode::direct, RelayMode::single_type,
                        RelayMode::multi_type_joint, RelayMode::multi_type_sum})
        CHECK(relay_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(relay_mode_from_string("twin_type"), std::invalid_argument);
}

TEST_CASE("make_relay_config picks the scenario amplification") {
    const Geometry g = geo(1.0, 2.0, 4.0);
    CHECK(make_relay_config(RelayMode::single_type, g).beta == doctest::Approx(0.5));
    CHECK(make_relay_config(RelayMode::multi_type_joint, g).beta == doctest::Approx(2.0));
    CHECK(make_relay_config(RelayMode::multi_type_sum, g).beta == doctest::Approx(2.0));
    CHECK_NOTHROW(validate(make_relay_config(RelayMode::direct, g)));

    RelayConfig tampered = make_relay_config(RelayMode::single_type, g);
    tampered.beta = 1.0;
    CHECK_THROWS_WITH_AS(validate(tampered), doctest::Contains("beta"),
                         std::invalid_argument);
    tampered.beta = 0.0;
    CHECK_THROWS_AS(validate(tampered), std::invalid_argument);
}

TEST_CASE("effective_amax") {
    const ChannelParams p = fig_params();
    CHECK(effective_amax(p, make_relay_config(RelayMode::direct, geo(1, 1, 1))) == 1.0);
    CHECK(effective_amax(p, make_relay_config(RelayMode::single_type, geo(1, 1, 1))) ==
          doctest::Approx(2.0).epsilon(1e-15));
    CHECK(effective_amax(p, make_relay_config(RelayMode::single_type, geo(2, 1, 6))) ==
          doctest::Approx(1.0 + 2.0 / 6.0).epsilon(1e-15));
    // relay too far to matter
    CHECK(effective_amax(p, make_relay_config(RelayMode::single_type, geo(1, 1, 1e12))) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // strictly above a_max for any finite distances
    CHECK(effective_amax(p, make_relay_config(RelayMode::single_type, geo(1, 1, 1e12))) >
          1.0);
    CHECK_THROWS_AS(
        effective_amax(p, make_relay_config(RelayMode::multi_type_joint, geo(1, 1, 1))),
        std::invalid_argument);
    CHECK_THROWS_AS(
        effective_amax(p, make_relay_config(RelayMode::multi_type_sum, geo(1, 1, 1))),
        std::invalid_argument);
}

TEST_CASE("single_type at r1==r3 is the direct channel with doubled range") {
    const ChannelParams p = fig_params();
    const DiscreteChannel relayed =
        build_channel(p, make_relay_config(RelayMode::single_type, geo(1, 1, 1)), 31, 401);
    const DiscreteChannel doubled = discretize_direct(fig_params(2.0), 31, 401);
    CHECK(relayed.input_levels == doubled.input_levels);
    CHECK(relayed.output_edges == doubled.output_edges);
    CHECK(relayed.transition == doubled.transition);
}

TEST_CASE("single_type depends on geometry only through r1/r3") {
    const ChannelParams p = fig_params();
    const DiscreteChannel a =
        build_channel(p, make_relay_config(RelayMode::single_type, geo(1, 1, 2)), 21, 201);
    const DiscreteChannel b =
        build_channel(p, make_relay_config(RelayMode::single_type, geo(3, 7, 6)), 21, 201);
    CHECK(a.transition == b.transition);
    CHECK(a.output_edges == b.output_edges);
}

TEST_CASE("multi_type channels reuse the dmc constructions") {
    const ChannelParams p = fig_params();
    const Geometry g = geo(1, 1, 1);
    const DiscreteChannel joint =
        build_channel(p, make_relay_config(RelayMode::multi_type_joint, g), 11, 41);
    CHECK(joint.axes == 2);
    CHECK(joint.num_outputs() == 41u * 41u);
    const DiscreteChannel sum =
        build_channel(p, make_relay_config(RelayMode::multi_type_sum, g), 11, 41);
    CHECK(sum.axes == 1);
    const DiscreteChannel direct =
        build_channel(p, make_relay_config(RelayMode::direct, g), 11, 41);
    CHECK(joint.input_levels == direct.input_levels);
    CHECK(sum.input_levels == direct.input_levels);
}

TEST_CASE("capacity ordering across modes at matched grids") {
    const ChannelParams p = fig_params();
    const Geometry g = geo(1, 1, 1);
    const auto cap = [&](RelayMode m) {
        return blahut_arimoto(build_channel(p, make_relay_config(m, g), 51, 101), 1e-6,
                              4000)
            .capacity_bits;
    };
    const double c_direct = cap(RelayMode::direct);
    const double c_single = cap(RelayMode::single_type);
    const double c_sum = cap(RelayMode::multi_type_sum);
    const double c_joint = cap(RelayMode::multi_type_joint);
    CHECK(c_single > c_direct);
    CHECK(c_sum >= c_direct - 1e-3);
    CHECK(c_joint >= c_sum - 1e-3);
    CHECK(c_joint > c_direct + 0.05);
}

TEST_CASE("single-type capacity gap shrinks as a_max grows") {
    const Geometry g = geo(1, 1, 1);
    const auto gap_at = [&](double a_max) {
        const ChannelParams p = fig_params(a_max);
        const double d =
            blahut_arimoto(build_channel(p, make_relay_config(RelayMode::direct, g), 51,
                                         1001),
                           1e-6, 8000)
                .capacity_bits;
        const double s =
            blahut_arimoto(build_channel(p, make_relay_config(RelayMode::single_type, g),
                                         51, 1001),
                           1e-6, 8000)
                .capacity_bits;
        return s - d;
    };
    const double low = gap_at(1.0);
    const double high = gap_at(50.0);
    CHECK(low > 0.0);
    CHECK(high > 0.0);
    CHECK(high < low);
}

TEST_CASE("relay reception noise variance") {
    ChannelParams p;
    p.sigma0_sq = 0.1;
    p.n = 25;
    p.n_receptors = 10;
    p.a_max = 10.0;  // operating point p0=0.5 must be reachable

    // sigma0_sq = 0 -> 0, monotone in sigma0_sq
    ChannelParams quiet = p;
    quiet.sigma0_sq = 0.0;
    CHECK(relay_reception_noise_variance(quiet, geo(1, 1, 1)) == 0.0);
    double prev = -1.0;
    for (double s : {0.01, 0.1, 0.5, 2.0}) {
        ChannelParams q = p;
        q.sigma0_sq = s;
        const double v = relay_reception_noise_variance(q, geo(1, 1, 1));
        CHECK(v > prev);
        prev = v;
    }

    // closed form at p0=0.5, gamma=kappa=1: a0=1, Var = (r1/r3)^2 sigma0^2 / n
    CHECK(relay_reception_noise_variance(p, geo(1, 1, 1)) ==
          doctest::Approx(0.1 / 25.0).epsilon(1e-12));

    // ratio against the receiver's own reception noise at the aggregate level
    const auto ratio = [&](const Geometry& g) {
        const double a_agg = 1.0 * (1.0 + g.r1 / g.r3);
        const double receiver_var = a_agg * a_agg * p.sigma0_sq / p.n;
        return relay_reception_noise_variance(p, g) / receiver_var;
    };
    CHECK(ratio(geo(1, 1, 1)) == doctest::Approx(0.25).epsilon(1e-12));      // r1 == r3
    CHECK(ratio(geo(1, 1, 3)) == doctest::Approx(0.0625).epsilon(1e-12));    // r3 = 3 r1
    CHECK(ratio(geo(1, 1, 3)) < 0.10);  // far relay: below ten percent
    CHECK(ratio(geo(2, 5, 2)) == doctest::Approx(0.25).epsilon(1e-12));      // distance-only
}

TEST_CASE("include_relay_noise widens single_type rows") {
    const ChannelParams p = fig_params();
    const Geometry g = geo(1, 1, 1);
    const DiscreteChannel plain =
        build_channel(p, make_relay_config(RelayMode::single_type, g, false), 21, 2001);
    const DiscreteChannel noisy =
        build_channel(p, make_relay_config(RelayMode::single_type, g, true), 21, 2001);

    // top level sits far from the variance floor; spread ratio = 1 + (r1/(r1+r3))^2
    const double mean_plain = row_moment(plain, 20, 1, 0.0);
    const double var_plain = row_moment(plain, 20, 2, mean_plain);
    const double mean_noisy = row_moment(noisy, 20, 1, 0.0);
    const double var_noisy = row_moment(noisy, 20, 2, mean_noisy);
    CHECK(mean_noisy == doctest::Approx(mean_plain).epsilon(1e-6));
    CHECK(var_noisy / var_plain == doctest::Approx(1.25).epsilon(5e-3));

    CHECK_THROWS_WITH_AS(
        build_channel(p, make_relay_config(RelayMode::multi_type_joint, g, true), 11, 41),
        doctest::Contains("include_relay_noise"), std::invalid_argument);
    CHECK_THROWS_AS(
        build_channel(p, make_relay_config(RelayMode::multi_type_sum, g, true), 11, 41),
        std::invalid_argument);
}
