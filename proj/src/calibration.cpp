#include "ppcheck/calibration.hpp"

#include "ppcheck/parallel.hpp"
#include "ppcheck/util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppc {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

SpecSource SpecSource::catalog(int n_proposals, std::uint64_t seed) {
    SpecSource s;
    s.kind = Kind::Catalog;
    s.label = "catalog";
    s.n_proposals = n_proposals;
    s.seed = seed;
    return s;
}

SpecSource SpecSource::baseline_mean_variance() {
    SpecSource s;
    s.kind = Kind::Fixed;
    s.label = "baseline_mean_variance";
    s.fixed = {parse_spec("mean()"), parse_spec("variance()")};
    s.n_proposals = 2;
    return s;
}

SpecSource SpecSource::fixed_specs(std::vector<StatisticSpec> specs, std::string label) {
    SpecSource s;
    s.kind = Kind::Fixed;
    s.label = std::move(label);
    s.n_proposals = static_cast<int>(specs.size());
    s.fixed = std::move(specs);
    return s;
}

std::vector<double> default_alpha_grid() {
    constexpr int kPoints = 50;
    const double lo = std::log(0.001), hi = std::log(0.5);
    std::vector<double> grid(kPoints);
    for (int i = 0; i < kPoints; ++i)
        grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / (kPoints - 1));
    grid.front() = 0.001; // exact endpoints
    grid.back() = 0.5;
    return grid;
}

namespace {

void check_alpha_grid(const std::vector<double>& grid) {
    if (grid.empty()) raise(Errc::InvalidConfig, "alpha grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0))
            raise(Errc::InvalidConfig, "alpha grid values must lie in (0,1)");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            raise(Errc::InvalidConfig, "alpha grid must be strictly increasing");
    }
}

} // namespace

CalibrationRun evaluate_suite(const std::vector<BenchmarkPair>& pairs, const SpecSource& source,
                              const SignificanceConfig& cfg, std::vector<double> alpha_grid) {
    if (pairs.empty()) raise(Errc::EmptySuite, "no pairs to evaluate");
    if (source.kind == SpecSource::Kind::Fixed && source.fixed.empty())
        raise(Errc::InvalidConfig, "fixed spec source has no statistics");
    check_alpha_grid(alpha_grid);

    CalibrationRun run;
    run.spec_source = source.label;
    run.alpha_grid = std::move(alpha_grid);

    struct Slot {
        bool valid = false;
        PairDecision decision;
        std::string error;
    };
    std::vector<Slot> slots(pairs.size());

    // Pairs are independent; the inner replicate fan-out is already parallel,
    // so keep the outer loop serial to bound thread oversubscription.
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& pair = pairs[i];
        Slot& slot = slots[i];
        try {
            ProposalBatch batch;
            if (source.kind == SpecSource::Kind::Catalog)
                batch = propose_catalog(pair.dataset, source.n_proposals,
                                        derive_seed(source.seed, {splitmix64(i)}));
            else {
                batch.accepted = source.fixed;
                batch.family_size = source.fixed.size();
            }
            batch = validate_batch(batch, pair.dataset);
            const CheckReport report =
                run_check(pair.dataset, pair.samples, batch.accepted, cfg, batch.rejected);
            if (report.results.empty()) {
                slot.error = "all statistics were rejected";
                continue;
            }
            slot.decision.pair_id = pair.pair_id;
            slot.decision.label = pair.label;
            slot.decision.min_adjusted_p = report.results.front().p_adjusted;
            slot.valid = true;
        } catch (const Error& e) {
            slot.error = e.what();
        }
    }

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (slots[i].valid)
            run.decisions.push_back(std::move(slots[i].decision));
        else
            run.invalid.push_back({pairs[i].pair_id, slots[i].error});
    }
    return run;
}

Rates rates(const CalibrationRun& run, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) raise(Errc::InvalidParameter, "alpha must lie in (0,1)");
    std::size_t n_disc = 0, n_null = 0, hit_disc = 0, hit_null = 0;
    for (const auto& d : run.decisions) {
        const bool flagged = d.min_adjusted_p <= alpha;
        if (d.label == PairLabel::Discovery) {
            ++n_disc;
            hit_disc += flagged ? 1 : 0;
        } else {
            ++n_null;
            hit_null += flagged ? 1 : 0;
        }
    }
    Rates r;
    if (n_disc > 0) r.tpr = static_cast<double>(hit_disc) / static_cast<double>(n_disc);
    if (n_null > 0) r.fpr = static_cast<double>(hit_null) / static_cast<double>(n_null);
    return r;
}

RocCurve roc(const CalibrationRun& run) {
    RocCurve curve;
    for (const auto& d : run.decisions)
        (d.label == PairLabel::Discovery ? curve.n_discovery : curve.n_no_discovery) += 1;
    if (curve.n_discovery == 0 || curve.n_no_discovery == 0)
        raise(Errc::EmptySuite, "ROC needs both discovery and no-discovery pairs");
    for (double alpha : run.alpha_grid) {
        const Rates r = rates(run, alpha);
        curve.points.push_back({alpha, *r.fpr, *r.tpr});
    }
    return curve;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) raise(Errc::InvalidParameter, "quantile argument must be in (0,1)");
    // Acklam's rational approximation, |relative error| < 1.2e-9.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                          double confidence) {
    if (trials < 1) raise(Errc::InvalidParameter, "wilson interval needs trials >= 1");
    if (successes > trials)
        raise(Errc::InvalidParameter, "successes exceed trials");
    if (!(confidence > 0.0 && confidence < 1.0))
        raise(Errc::InvalidParameter, "confidence must lie in (0,1)");
    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

nlohmann::ordered_json calibration_run_to_json(const CalibrationRun& run) {
    ordered_json doc;
    doc["run_schema_version"] = 1;
    doc["spec_source"] = run.spec_source;
    doc["alpha_grid"] = run.alpha_grid;
    doc["decisions"] = json::array();
    for (const auto& d : run.decisions) {
        ordered_json jd;
        jd["pair_id"] = d.pair_id;
        jd["label"] = std::string(pair_label_name(d.label));
        jd["min_adjusted_p"] = d.min_adjusted_p;
        doc["decisions"].push_back(std::move(jd));
    }
    doc["invalid"] = json::array();
    for (const auto& inv : run.invalid) {
        ordered_json ji;
        ji["pair_id"] = inv.pair_id;
        ji["reason"] = inv.reason;
        doc["invalid"].push_back(std::move(ji));
    }
    return doc;
}

CalibrationRun calibration_run_from_json(const nlohmann::ordered_json& doc) {
    CalibrationRun run;
    run.spec_source = doc.value("spec_source", "");
    if (doc.contains("alpha_grid")) run.alpha_grid = doc["alpha_grid"].get<std::vector<double>>();
    check_alpha_grid(run.alpha_grid);
    for (const auto& jd : doc.value("decisions", json::array())) {
        PairDecision d;
        d.pair_id = jd.value("pair_id", "");
        d.label = jd.value("label", "") == "discovery" ? PairLabel::Discovery
                                                       : PairLabel::NoDiscovery;
        d.min_adjusted_p = jd.value("min_adjusted_p", 1.0);
        run.decisions.push_back(std::move(d));
    }
    for (const auto& ji : doc.value("invalid", json::array()))
        run.invalid.push_back({ji.value("pair_id", ""), ji.value("reason", "")});
    return run;
}

std::string roc_to_csv(const RocCurve& curve) {
    std::ostringstream out;
    out << "alpha,fpr,tpr\n";
    for (const auto& p : curve.points)
        out << format_double(p.alpha) << ',' << format_double(p.fpr) << ','
            << format_double(p.tpr) << '\n';
    return out.str();
}

nlohmann::ordered_json roc_to_json(const RocCurve& curve) {
    ordered_json doc;
    doc["n_discovery"] = curve.n_discovery;
    doc["n_no_discovery"] = curve.n_no_discovery;
    doc["points"] = json::array();
    for (const auto& p : curve.points) {
        ordered_json jp;
        jp["alpha"] = p.alpha;
        jp["fpr"] = p.fpr;
        jp["tpr"] = p.tpr;
        doc["points"].push_back(std::move(jp));
    }
    return doc;
}

std::string fpr_calibration_csv(const CalibrationRun& run, double confidence) {
    std::size_t n_null = 0;
    for (const auto& d : run.decisions)
        if (d.label == PairLabel::NoDiscovery) ++n_null;
    std::ostringstream out;
    out << "alpha,fpr,wilson_lo,wilson_hi\n";
    if (n_null == 0) return out.str();
    for (double alpha : run.alpha_grid) {
        std::size_t hits = 0;
        for (const auto& d : run.decisions)
            if (d.label == PairLabel::NoDiscovery && d.min_adjusted_p <= alpha) ++hits;
        const auto [lo, hi] = wilson_interval(hits, n_null, confidence);
        out << format_double(alpha) << ','
            << format_double(static_cast<double>(hits) / static_cast<double>(n_null)) << ','
            << format_double(lo) << ',' << format_double(hi) << '\n';
    }
    return out.str();
}

} // namespace ppc
