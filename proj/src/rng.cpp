#include "ppcheck/rng.hpp"

#include "ppcheck/errors.hpp"

#include <cmath>

namespace ppc {

double Rng::normal() {
    // Box-Muller; the sine branch is discarded to keep the draw stateless.
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) raise(Errc::InvalidParameter, "gamma shape must be positive");
    if (shape < 1.0) {
        // boost to shape+1 and scale back
        double u = uniform01();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::student_t(double nu) {
    if (!(nu > 0.0)) raise(Errc::InvalidParameter, "student_t dof must be positive");
    return normal() / std::sqrt(chi_squared(nu) / nu);
}

long Rng::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean))
        raise(Errc::InvalidParameter, "poisson mean must be finite and non-negative");
    long total = 0;
    // Additivity keeps the product method exact for large means.
    while (mean > 500.0) {
        total += poisson(500.0);
        mean -= 500.0;
    }
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = uniform01();
    while (prod > limit) {
        ++k;
        prod *= uniform01();
    }
    return total + k;
}

long Rng::negative_binomial(double r, double p) {
    if (!(r > 0.0) || !(p > 0.0) || !(p < 1.0))
        raise(Errc::InvalidParameter, "negative_binomial needs r > 0 and p in (0,1)");
    const double lambda = gamma(r, (1.0 - p) / p);
    return poisson(lambda);
}

} // namespace ppc
