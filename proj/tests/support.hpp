#pragma once

// Shared test utilities: a small deterministic generator for property
// tests, random distribution builders, and distribution-free critical
// values for the goodness-of-fit checks.

#include <cmath>
#include <string>
#include <vector>

#include "ratedist/prob.hpp"
#include "ratedist/rng.hpp"

namespace testsupport {

// Deterministic stream for property tests.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * rng_.uniform01(counter_++, 0);
    }

    double gaussian() { return rng_.gaussian(counter_++, 0); }

    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform(0.0, 1.0) * (hi - lo + 1));
    }

private:
    ratedist::CounterRng rng_;
    std::uint64_t counter_ = 0;
};

inline std::vector<std::string> labels(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
    return out;
}

inline ratedist::Distribution random_distribution(Stream& s, std::size_t n) {
    std::vector<double> mass(n);
    double sum = 0.0;
    for (double& m : mass) {
        m = s.uniform(1e-3, 1.0);
        sum += m;
    }
    for (double& m : mass) m /= sum;
    return ratedist::Distribution(labels(n), mass);
}

inline double binary_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

// Upper critical value of the chi-square distribution (Wilson-Hilferty).
inline double chi2_critical(int dof, double z_upper) {
    const double d = static_cast<double>(dof);
    const double t = 1.0 - 2.0 / (9.0 * d) + z_upper * std::sqrt(2.0 / (9.0 * d));
    return d * t * t * t;
}

inline double chi2_critical_1pct(int dof) { return chi2_critical(dof, 2.3263478740408408); }

// Asymptotic two-sided Kolmogorov-Smirnov critical value at level alpha.
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

}  // namespace testsupport
