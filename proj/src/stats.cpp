#include "ppcheck/stats.hpp"

#include "ppcheck/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ppc::stats {

namespace {

void require_nonempty(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() == 0) raise(Errc::EmptySlice, "aggregate over zero rows");
}

struct CentralMoments {
    double m2 = 0, m3 = 0, m4 = 0;
};

CentralMoments central_moments(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double mu = v.mean();
    const auto d = (v.array() - mu).eval();
    CentralMoments m;
    const double n = static_cast<double>(v.size());
    m.m2 = d.square().sum() / n;
    m.m3 = d.cube().sum() / n;
    m.m4 = d.square().square().sum() / n;
    return m;
}

// Exact-constant detection; avoids dividing a rounding residue by itself.
bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return v.maxCoeff() == v.minCoeff();
}

} // namespace

double mean(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    return v.mean();
}

double variance(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    if (is_constant(v)) return 0.0;
    return central_moments(v).m2;
}

double stddev(const Eigen::Ref<const Eigen::VectorXd>& v) { return std::sqrt(variance(v)); }

double min(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    return v.minCoeff();
}

double max(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    return v.maxCoeff();
}

double range(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    return v.maxCoeff() - v.minCoeff();
}

double quantile(const Eigen::Ref<const Eigen::VectorXd>& v, double q) {
    require_nonempty(v);
    if (!(q > 0.0 && q < 1.0)) raise(Errc::InvalidParameter, "quantile q must lie in (0,1)");
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end());
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    if (lo == hi || sorted[lo] == sorted[hi]) return sorted[lo];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double skewness(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    if (is_constant(v)) raise(Errc::DegenerateMoment, "skewness of a constant vector");
    const auto m = central_moments(v);
    return m.m3 / std::pow(m.m2, 1.5);
}

double excess_kurtosis(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    if (is_constant(v)) raise(Errc::DegenerateMoment, "kurtosis of a constant vector");
    const auto m = central_moments(v);
    return m.m4 / (m.m2 * m.m2) - 3.0;
}

double dispersion_ratio(const Eigen::Ref<const Eigen::VectorXd>& v) {
    require_nonempty(v);
    const double mu = v.mean();
    if (mu == 0.0) return std::numeric_limits<double>::infinity();
    return variance(v) / mu;
}

double proportion_outside(const Eigen::Ref<const Eigen::VectorXd>& v, double lo, double hi) {
    require_nonempty(v);
    if (!(lo <= hi)) raise(Errc::InvalidParameter, "proportion_outside needs lo <= hi");
    const auto outside = ((v.array() < lo) || (v.array() > hi)).count();
    return static_cast<double>(outside) / static_cast<double>(v.size());
}

} // namespace ppc::stats
