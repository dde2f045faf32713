#pragma once

#include "ppcheck/dataset.hpp"
#include "ppcheck/dsl.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ppc {

enum class Tail { Upper, Lower, TwoSided };
enum class Correction { Bonferroni, None };

std::string_view tail_name(Tail t);
std::string_view correction_name(Correction c);
Tail tail_from_name(std::string_view s);
Correction correction_from_name(std::string_view s);

struct SignificanceConfig {
    double alpha = 0.05;
    Tail tail = Tail::Upper;
    Correction correction = Correction::Bonferroni;
};

/// Statistic evaluated on every replicate, in replicate order. Entries are
/// extended reals, never NaN.
struct NullDistribution {
    Eigen::VectorXd values;
    std::string spec_id;

    std::size_t m() const { return static_cast<std::size_t>(values.size()); }
};

struct TestResult {
    StatisticSpec spec;
    std::string spec_text;
    StatisticValue observed = 0.0;
    NullDistribution null_dist;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    Tail tail = Tail::Upper;
    std::size_t family_size = 1;
};

struct DiscrepancyDecision {
    bool discrepant = false;
    std::vector<TestResult> significant; // ascending p_adjusted
};

struct NullSummary {
    double min = 0, q25 = 0, median = 0, q75 = 0, max = 0, mean = 0;
};

NullSummary summarize_null(const NullDistribution& null_dist);

struct CheckReport {
    std::string dataset_name;
    std::string model_id;
    SignificanceConfig config;
    std::size_t family_size = 0;
    std::size_t m = 0;
    bool discrepant = false;
    std::vector<TestResult> results;    // ascending p_adjusted, spec text tie-break
    std::vector<RejectedSpec> rejected; // counted in family_size
};

/// values[i] = statistic over replicate i. Evaluation errors are annotated
/// with the replicate index; replicates fan out across workers.
NullDistribution null_distribution(const StatisticSpec& spec, const Dataset& d,
                                   const ModelSampleSet& s);

/// Fraction of replicates at least as extreme as the observed value.
/// Upper tail counts null >= observed (ties included), lower counts <=,
/// two-sided doubles the smaller tail and clips at 1. Granularity is 1/m.
double empirical_pvalue(const NullDistribution& null_dist, StatisticValue observed, Tail tail);

/// Elementwise min(1, family_size * p). family_size counts every proposal,
/// including ones rejected during validation.
std::vector<double> bonferroni_adjust(const std::vector<double>& p_values,
                                      std::size_t family_size);

/// Discrepant iff the smallest adjusted p-value clears alpha.
DiscrepancyDecision decide(const std::vector<TestResult>& results, const SignificanceConfig& cfg);

/// Full pipeline over a proposed spec family: validates, builds null
/// distributions, computes (adjusted) p-values, aggregates per-spec failures
/// without aborting. `prior_rejections` carries proposals already rejected
/// upstream so the Bonferroni family stays the full proposal count.
CheckReport run_check(const Dataset& d, const ModelSampleSet& s,
                      const std::vector<StatisticSpec>& specs, const SignificanceConfig& cfg,
                      std::vector<RejectedSpec> prior_rejections = {});

/// Stable-field-order document; set include_null_values to embed the full
/// null vectors, otherwise only summaries are written.
nlohmann::ordered_json check_report_to_json(const CheckReport& report, bool include_null_values = false);

/// Extended reals in json: finite values are numbers, infinities the strings
/// "inf" / "-inf".
nlohmann::ordered_json json_real(double v);
double real_from_json(const nlohmann::ordered_json& j);

} // namespace ppc
