#include "ppcheck/testing.hpp"

#include "ppcheck/parallel.hpp"
#include "ppcheck/stats.hpp"
#include "ppcheck/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ppc {

using ordered_json = nlohmann::ordered_json;

std::string_view tail_name(Tail t) {
    switch (t) {
        case Tail::Upper: return "upper";
        case Tail::Lower: return "lower";
        case Tail::TwoSided: return "two-sided";
    }
    return "?";
}

std::string_view correction_name(Correction c) {
    return c == Correction::Bonferroni ? "bonferroni" : "none";
}

Tail tail_from_name(std::string_view s) {
    if (s == "upper") return Tail::Upper;
    if (s == "lower") return Tail::Lower;
    if (s == "two-sided" || s == "two_sided") return Tail::TwoSided;
    raise(Errc::InvalidConfig, "unknown tail '" + std::string(s) + "'");
}

Correction correction_from_name(std::string_view s) {
    if (s == "bonferroni") return Correction::Bonferroni;
    if (s == "none") return Correction::None;
    raise(Errc::InvalidConfig, "unknown correction '" + std::string(s) + "'");
}

NullDistribution null_distribution(const StatisticSpec& spec, const Dataset& d,
                                   const ModelSampleSet& s) {
    validate_alignment(d, s);
    const BoundStatistic bound = BoundStatistic::bind(spec, d);
    NullDistribution null_dist;
    null_dist.spec_id = print_spec(spec);
    null_dist.values.resize(static_cast<Eigen::Index>(s.m()));
    auto* out = &null_dist.values;
    parallel_for(s.m(), [&](std::size_t i) {
        try {
            (*out)[static_cast<Eigen::Index>(i)] = bound.evaluate(s.replicates[i]);
        } catch (const Error& e) {
            throw Error(e.code(), "replicate " + std::to_string(i) + ": " + e.what());
        }
    });
    return null_dist;
}

double empirical_pvalue(const NullDistribution& null_dist, StatisticValue observed, Tail tail) {
    const auto m = null_dist.values.size();
    if (m < 1) raise(Errc::EmptySampleSet, "empirical p-value needs m >= 1");
    const auto count_upper = (null_dist.values.array() >= observed).count();
    if (tail == Tail::Upper) return static_cast<double>(count_upper) / static_cast<double>(m);
    const auto count_lower = (null_dist.values.array() <= observed).count();
    if (tail == Tail::Lower) return static_cast<double>(count_lower) / static_cast<double>(m);
    const double p_upper = static_cast<double>(count_upper) / static_cast<double>(m);
    const double p_lower = static_cast<double>(count_lower) / static_cast<double>(m);
    return std::min(1.0, 2.0 * std::min(p_upper, p_lower));
}

std::vector<double> bonferroni_adjust(const std::vector<double>& p_values,
                                      std::size_t family_size) {
    if (family_size < p_values.size())
        raise(Errc::InvalidParameter, "family_size smaller than the number of p-values");
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        if (p < 0.0 || p > 1.0)
            raise(Errc::InvalidParameter, "p-value " + format_double(p) + " outside [0,1]");
        out.push_back(std::min(1.0, static_cast<double>(family_size) * p));
    }
    return out;
}

namespace {

bool result_order(const TestResult& a, const TestResult& b) {
    if (a.p_adjusted != b.p_adjusted) return a.p_adjusted < b.p_adjusted;
    return a.spec_text < b.spec_text;
}

} // namespace

DiscrepancyDecision decide(const std::vector<TestResult>& results,
                           const SignificanceConfig& cfg) {
    if (results.empty()) raise(Errc::EmptyFamily, "no test results to decide over");
    const std::size_t family = results.front().family_size;
    for (const auto& r : results)
        if (r.family_size != family)
            raise(Errc::InvalidParameter, "results mix family sizes");
    DiscrepancyDecision d;
    for (const auto& r : results)
        if (r.p_adjusted <= cfg.alpha) d.significant.push_back(r);
    std::sort(d.significant.begin(), d.significant.end(), result_order);
    d.discrepant = !d.significant.empty();
    return d;
}

CheckReport run_check(const Dataset& d, const ModelSampleSet& s,
                      const std::vector<StatisticSpec>& specs, const SignificanceConfig& cfg,
                      std::vector<RejectedSpec> prior_rejections) {
    validate_alignment(d, s);
    CheckReport report;
    report.dataset_name = d.name();
    report.model_id = s.model_id;
    report.config = cfg;
    report.m = s.m();
    report.family_size = specs.size() + prior_rejections.size();
    report.rejected = std::move(prior_rejections);

    for (const auto& spec : specs) {
        const std::string text = print_spec(spec);
        TestResult result;
        try {
            validate_spec(spec, d);
            result.spec = spec;
            result.spec_text = text;
            result.observed = evaluate(spec, d, d.target_values());
            result.null_dist = null_distribution(spec, d, s);
            result.tail = cfg.tail;
            result.family_size = report.family_size;
            result.p_raw = empirical_pvalue(result.null_dist, result.observed, cfg.tail);
            result.p_adjusted =
                cfg.correction == Correction::Bonferroni
                    ? std::min(1.0, static_cast<double>(report.family_size) * result.p_raw)
                    : result.p_raw;
        } catch (const Error& e) {
            report.rejected.push_back({text, e.what()});
            continue;
        }
        report.results.push_back(std::move(result));
    }

    std::sort(report.results.begin(), report.results.end(), result_order);
    report.discrepant = false;
    for (const auto& r : report.results)
        if (r.p_adjusted <= cfg.alpha) report.discrepant = true;
    return report;
}

NullSummary summarize_null(const NullDistribution& null_dist) {
    NullSummary s;
    const auto& v = null_dist.values;
    s.min = stats::min(v);
    s.max = stats::max(v);
    s.mean = stats::mean(v);
    if (v.size() == 1) {
        s.q25 = s.median = s.q75 = v[0];
    } else {
        s.q25 = stats::quantile(v, 0.25);
        s.median = stats::quantile(v, 0.5);
        s.q75 = stats::quantile(v, 0.75);
    }
    return s;
}

nlohmann::ordered_json json_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double real_from_json(const nlohmann::ordered_json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        raise(Errc::MalformedFile, "expected a number or inf marker, got '" + s + "'");
    }
    return j.get<double>();
}

nlohmann::ordered_json check_report_to_json(const CheckReport& report, bool include_null_values) {
    ordered_json doc;
    doc["report_schema_version"] = 1;
    doc["dataset"] = report.dataset_name;
    doc["model_id"] = report.model_id;
    doc["alpha"] = report.config.alpha;
    doc["tail"] = std::string(tail_name(report.config.tail));
    doc["correction"] = std::string(correction_name(report.config.correction));
    doc["family_size"] = report.family_size;
    doc["m"] = report.m;
    doc["discrepant"] = report.discrepant;
    doc["results"] = nlohmann::ordered_json::array();
    for (const auto& r : report.results) {
        ordered_json jr;
        jr["spec"] = r.spec_text;
        jr["observed"] = json_real(r.observed);
        const NullSummary ns = summarize_null(r.null_dist);
        ordered_json js;
        js["min"] = json_real(ns.min);
        js["q25"] = json_real(ns.q25);
        js["median"] = json_real(ns.median);
        js["q75"] = json_real(ns.q75);
        js["max"] = json_real(ns.max);
        js["mean"] = json_real(ns.mean);
        jr["null_summary"] = std::move(js);
        if (include_null_values) {
            nlohmann::ordered_json vals = nlohmann::ordered_json::array();
            for (Eigen::Index i = 0; i < r.null_dist.values.size(); ++i)
                vals.push_back(json_real(r.null_dist.values[i]));
            jr["null_values"] = std::move(vals);
        }
        jr["p_raw"] = r.p_raw;
        jr["p_adjusted"] = r.p_adjusted;
        jr["significant"] = r.p_adjusted <= report.config.alpha;
        doc["results"].push_back(std::move(jr));
    }
    doc["rejected"] = nlohmann::ordered_json::array();
    for (const auto& rej : report.rejected) {
        ordered_json jr;
        jr["spec"] = rej.text;
        jr["reason"] = rej.reason;
        doc["rejected"].push_back(std::move(jr));
    }
    return doc;
}

} // namespace ppc
