#pragma once

#include <cmath>

namespace molrelay {

inline constexpr double kZ95 = 1.959963984540054;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// Wilson 95% score interval for a binomial proportion.
inline Interval wilson_interval(long long errors, long long trials) {
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(errors) / n;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / n;
    const double center = (ph + z2 / (2.0 * n)) / denom;
    const double half =
        kZ95 * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
    return {center - half, center + half};
}

}  // namespace molrelay
