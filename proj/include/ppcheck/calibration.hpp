#pragma once

#include "ppcheck/benchmarks.hpp"
#include "ppcheck/proposer.hpp"
#include "ppcheck/testing.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ppc {

/// Where the statistic family for a calibration run comes from: the
/// deterministic catalog (per-pair, schema dependent) or a fixed list such
/// as the {mean, variance} baseline.
struct SpecSource {
    enum class Kind { Catalog, Fixed };
    Kind kind = Kind::Catalog;
    std::string label = "catalog";
    int n_proposals = 24;
    std::uint64_t seed = 0;
    std::vector<StatisticSpec> fixed;

    static SpecSource catalog(int n_proposals, std::uint64_t seed);
    static SpecSource baseline_mean_variance();
    static SpecSource fixed_specs(std::vector<StatisticSpec> specs, std::string label);
};

struct PairDecision {
    std::string pair_id;
    PairLabel label = PairLabel::NoDiscovery;
    double min_adjusted_p = 1.0;
};

struct InvalidPair {
    std::string pair_id;
    std::string reason;
};

/// Per-pair minimum adjusted p-values; decisions at any threshold fall out
/// of the stored minima, so an alpha sweep needs no re-evaluation.
struct CalibrationRun {
    std::string spec_source;
    std::vector<double> alpha_grid; // strictly increasing, in (0,1)
    std::vector<PairDecision> decisions;
    std::vector<InvalidPair> invalid;
};

struct Rates {
    std::optional<double> tpr; // absent when the class is empty
    std::optional<double> fpr;
};

struct RocPoint {
    double alpha = 0;
    double fpr = 0;
    double tpr = 0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t n_discovery = 0;
    std::size_t n_no_discovery = 0;
};

/// 50 log-spaced thresholds in [0.001, 0.5]; resolves the low-alpha region
/// where the Bonferroni correction bites.
std::vector<double> default_alpha_grid();

CalibrationRun evaluate_suite(const std::vector<BenchmarkPair>& pairs, const SpecSource& source,
                              const SignificanceConfig& cfg,
                              std::vector<double> alpha_grid = default_alpha_grid());

Rates rates(const CalibrationRun& run, double alpha);

/// Requires both labels in the run; tpr/fpr are non-decreasing in alpha.
RocCurve roc(const CalibrationRun& run);

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                          double confidence);

/// Two-sided standard normal quantile at the given central confidence.
double normal_quantile(double p);

nlohmann::ordered_json calibration_run_to_json(const CalibrationRun& run);
CalibrationRun calibration_run_from_json(const nlohmann::ordered_json& doc);

/// alpha,fpr,tpr rows, directly plottable.
std::string roc_to_csv(const RocCurve& curve);
nlohmann::ordered_json roc_to_json(const RocCurve& curve);

/// alpha,fpr,wilson_lo,wilson_hi rows over the run's no-discovery pairs.
std::string fpr_calibration_csv(const CalibrationRun& run, double confidence = 0.95);

} // namespace ppc
