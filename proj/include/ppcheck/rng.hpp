#pragma once

#include <cstdint>
#include <random>

namespace ppc {

/// Random draws built directly on the (standardized) mt19937_64 bit stream.
/// The std:: distribution objects are deliberately avoided: their algorithms
/// are implementation-defined, and suite generation must replay bit-for-bit
/// from a seed regardless of standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform on the open interval (0, 1).
    double uniform01() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n).  n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) { return eng_() % n; }

    double normal();
    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Unit-scale gamma draw (Marsaglia-Tsang), any shape > 0.
    double gamma(double shape);
    double gamma(double shape, double scale) { return scale * gamma(shape); }

    double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

    double inverse_gamma(double shape, double rate_of_inverse) {
        return rate_of_inverse / gamma(shape);
    }

    double student_t(double nu);

    /// Exact Poisson draw; O(mean) per call, mean chunked to stay in range.
    long poisson(double mean);

    /// Failures before the r-th success with success probability p,
    /// drawn as a Gamma(r, (1-p)/p) mixture of Poissons. r may be non-integer.
    long negative_binomial(double r, double p);

    double exponential() { return -std::log(uniform01()); }

  private:
    std::mt19937_64 eng_;
};

} // namespace ppc
