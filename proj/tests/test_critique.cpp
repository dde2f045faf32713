#include "ppcheck/critique.hpp"

#include "ppcheck/util.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace ppc;
using test::samples_of;
using test::vec;

namespace {

TestResult floor_std_result(double p_raw, std::size_t family) {
    TestResult r;
    r.spec = parse_spec("std(where floor == 0) - std(where floor == 1)");
    r.spec_text = print_spec(r.spec);
    r.observed = 0.42371;
    r.null_dist.values = vec({-0.11, -0.05, 0.0, 0.04, 0.09});
    r.null_dist.spec_id = r.spec_text;
    r.p_raw = p_raw;
    r.p_adjusted = std::min(1.0, static_cast<double>(family) * p_raw);
    r.family_size = family;
    return r;
}

DatasetMetadata floor_meta() {
    DatasetMetadata meta;
    meta.description = "radon study";
    meta.column_descriptions["floor"] = "0 = basement, 1 = first floor";
    return meta;
}

CheckReport tiny_check_report() {
    const Dataset d = test::grouped(vec({0, 0, 1, 1}), vec({1, 5, 2, 6}));
    // replicates straddle the observed statistics so no p-value is exactly 0
    const auto samples = samples_of({vec({1, 5, 2, 6}), vec({0, 8, 1, 9}), vec({2, 4, 3, 5})});
    SignificanceConfig cfg;
    cfg.alpha = 0.4;
    return run_check(d, samples,
                     {parse_spec("mean()"), parse_spec("variance()"),
                      parse_spec("mean(where g == 7)")},
                     cfg);
}

} // namespace

TEST_CASE("sliced critique names the statistic kind and the slice column") {
    RenderConfig cfg;
    cfg.alpha = 0.01;
    const auto result = floor_std_result(0.0001, 19);
    const Critique c = render_critique(result, floor_meta(), cfg);
    CHECK(c.severity == Severity::Significant);
    CHECK(c.provenance == CritiqueProvenance::Template);
    CHECK(c.text.find("std") != std::string::npos);
    CHECK(c.text.find("floor") != std::string::npos);
    CHECK(c.text.find("0 = basement") != std::string::npos);
    CHECK(c.text.find("above the model's null range") != std::string::npos);
    CHECK(!c.text.empty());
}

TEST_CASE("critique numerics are faithful at six significant digits") {
    RenderConfig cfg;
    cfg.alpha = 0.05;
    const auto result = floor_std_result(0.0001, 19);
    const Critique c = render_critique(result, {}, cfg);
    CHECK(c.text.find(format_sig6(result.observed)) != std::string::npos);
    CHECK(c.text.find(format_sig6(result.p_raw)) != std::string::npos);
    CHECK(c.text.find(format_sig6(result.p_adjusted)) != std::string::npos);
    CHECK(c.text.find(format_sig6(-0.11)) != std::string::npos); // null min
    CHECK(c.text.find(format_sig6(0.09)) != std::string::npos);  // null max
    CHECK(c.text.find("1/5") != std::string::npos);              // m-granularity caveat
}

TEST_CASE("p of one renders as no evidence") {
    RenderConfig cfg;
    auto result = floor_std_result(1.0, 4);
    result.observed = 0.0;
    const Critique c = render_critique(result, {}, cfg);
    CHECK(c.severity == Severity::None);
    CHECK(c.text.find("No evidence of a discrepancy") != std::string::npos);
}

TEST_CASE("severity bands") {
    RenderConfig cfg;
    cfg.alpha = 0.05;
    cfg.suggestive_threshold = 0.15;
    CHECK(render_critique(floor_std_result(0.04 / 1.0, 1), {}, cfg).severity ==
          Severity::Significant);
    CHECK(render_critique(floor_std_result(0.12, 1), {}, cfg).severity == Severity::Suggestive);
    CHECK(render_critique(floor_std_result(0.2, 1), {}, cfg).severity == Severity::None);
}

TEST_CASE("rendering is deterministic") {
    RenderConfig cfg;
    const auto result = floor_std_result(0.002, 24);
    const Critique a = render_critique(result, floor_meta(), cfg);
    const Critique b = render_critique(result, floor_meta(), cfg);
    CHECK(a.text == b.text);
    CHECK(a.template_text == b.template_text);
}

TEST_CASE("external enhancer replaces text but keeps the template as fallback") {
    RenderConfig cfg;
    cfg.enhancer = [](const TestResult&, const std::string&) {
        return std::optional<std::string>("externally written critique");
    };
    const Critique c = render_critique(floor_std_result(0.001, 5), {}, cfg);
    CHECK(c.provenance == CritiqueProvenance::ExternalService);
    CHECK(c.text == "externally written critique");
    CHECK(c.template_text.find("std") != std::string::npos);

    RenderConfig declined;
    declined.enhancer = [](const TestResult&, const std::string&) {
        return std::optional<std::string>();
    };
    const Critique kept = render_critique(floor_std_result(0.001, 5), {}, declined);
    CHECK(kept.provenance == CritiqueProvenance::Template);
    CHECK(kept.text == kept.template_text);
}

TEST_CASE("report assembly and ordering") {
    const CheckReport check = tiny_check_report();
    RenderConfig cfg;
    cfg.alpha = check.config.alpha;
    const DiscrepancyReport report = build_report(check, {}, cfg);
    CHECK(report.family_size == 3);
    CHECK(report.findings.size() == 2);
    CHECK(report.rejected.size() == 1);
    for (std::size_t i = 1; i < report.findings.size(); ++i) {
        const auto& a = report.findings[i - 1].critique;
        const auto& b = report.findings[i].critique;
        CHECK((a.p_adjusted < b.p_adjusted ||
               (a.p_adjusted == b.p_adjusted && a.spec_text <= b.spec_text)));
    }
}

TEST_CASE("structured report round-trips losslessly") {
    const CheckReport check = tiny_check_report();
    RenderConfig cfg;
    cfg.alpha = check.config.alpha;
    const DiscrepancyReport report = build_report(check, {}, cfg);
    const auto doc = report_to_json(report);
    const DiscrepancyReport back = report_from_json(doc);
    CHECK(report_to_json(back) == doc);
    CHECK(render_report(back, ReportFormat::Structured) ==
          render_report(report, ReportFormat::Structured));
}

TEST_CASE("markdown report layout") {
    const CheckReport check = tiny_check_report();
    RenderConfig cfg;
    cfg.alpha = 1e-6; // force nothing significant
    DiscrepancyReport report = build_report(check, {}, cfg);
    report.alpha = 1e-6;
    const std::string md = report_to_markdown(report);
    CHECK(md.find("# Discrepancy report") != std::string::npos);
    CHECK(md.find("## Findings") != std::string::npos);
    CHECK(md.find("| rank | statistic |") != std::string::npos);
    CHECK(md.find("## No significant discrepancies") != std::string::npos);
    CHECK(md.find("## Rejected proposals") != std::string::npos);
    const std::string again = report_to_markdown(report);
    CHECK(md == again);
}

TEST_CASE("empty significant set yields the no-discrepancy section only") {
    DiscrepancyReport report;
    report.dataset_name = "d";
    report.model_id = "m";
    report.alpha = 0.01;
    report.family_size = 4;
    report.m = 100;
    const std::string md = report_to_markdown(report);
    CHECK(md.find("No significant discrepancies") != std::string::npos);
    CHECK(md.find("No statistic survived validation") != std::string::npos);
}
