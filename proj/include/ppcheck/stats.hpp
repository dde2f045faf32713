#pragma once

#include <Eigen/Core>

namespace ppc::stats {

// Scalar summaries over a (sliced) target vector. Population (1/n)
// normalization throughout; data and replicates share the convention, so it
// cancels in the empirical p-value. All functions require v.size() >= 1 and
// finite entries; degenerate moments throw rather than returning NaN.

double mean(const Eigen::Ref<const Eigen::VectorXd>& v);
double variance(const Eigen::Ref<const Eigen::VectorXd>& v);
double stddev(const Eigen::Ref<const Eigen::VectorXd>& v);
double min(const Eigen::Ref<const Eigen::VectorXd>& v);
double max(const Eigen::Ref<const Eigen::VectorXd>& v);
double range(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Order statistic with linear interpolation (inclusive scheme), q in (0,1).
double quantile(const Eigen::Ref<const Eigen::VectorXd>& v, double q);

/// m3 / m2^(3/2). Throws DegenerateMoment on a constant vector.
double skewness(const Eigen::Ref<const Eigen::VectorXd>& v);

/// m4 / m2^2 - 3. Throws DegenerateMoment on a constant vector.
double excess_kurtosis(const Eigen::Ref<const Eigen::VectorXd>& v);

/// variance / mean; +inf when the mean is exactly zero.
double dispersion_ratio(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Fraction of entries strictly outside [lo, hi].
double proportion_outside(const Eigen::Ref<const Eigen::VectorXd>& v, double lo, double hi);

} // namespace ppc::stats
