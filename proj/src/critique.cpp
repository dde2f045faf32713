#include "ppcheck/critique.hpp"

#include "ppcheck/util.hpp"

#include <algorithm>
#include <sstream>

namespace ppc {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

std::string_view severity_name(Severity s) {
    switch (s) {
        case Severity::Significant: return "significant";
        case Severity::Suggestive: return "suggestive";
        case Severity::None: return "none";
    }
    return "?";
}

std::string_view provenance_name(CritiqueProvenance p) {
    return p == CritiqueProvenance::Template ? "template" : "external_service";
}

namespace {

Severity classify(double p_adjusted, const RenderConfig& cfg) {
    if (p_adjusted <= cfg.alpha) return Severity::Significant;
    if (p_adjusted <= cfg.suggestive_threshold) return Severity::Suggestive;
    return Severity::None;
}

void collect_kinds_and_slices(const ExprPtr& e, std::vector<std::string>& kinds,
                              std::vector<std::string>& slice_columns) {
    auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    if (const auto* agg = std::get_if<AggExpr>(&e->value)) {
        add_unique(kinds, std::string(agg_kind_name(agg->kind)));
        if (agg->slice)
            for (const auto& atom : agg->slice->atoms) {
                if (const auto* c = std::get_if<CmpAtom>(&atom)) add_unique(slice_columns, c->column);
                else if (const auto* s = std::get_if<InSetAtom>(&atom)) add_unique(slice_columns, s->column);
                else add_unique(slice_columns, std::get<QuantileBinAtom>(atom).column);
            }
        return;
    }
    const auto& c = std::get<CombineExpr>(e->value);
    collect_kinds_and_slices(c.lhs, kinds, slice_columns);
    collect_kinds_and_slices(c.rhs, kinds, slice_columns);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string template_text(const TestResult& result, const DatasetMetadata& meta,
                          const RenderConfig& cfg, Severity severity) {
    std::vector<std::string> kinds, slice_columns;
    collect_kinds_and_slices(result.spec.root, kinds, slice_columns);
    const NullSummary ns = summarize_null(result.null_dist);

    std::ostringstream out;
    out << "The " << join(kinds, "/") << " statistic `" << result.spec_text << "`";
    if (!slice_columns.empty()) out << ", sliced on " << join(slice_columns, ", ") << ",";
    out << " is " << format_sig6(result.observed) << " on the observed data, ";
    if (result.observed > ns.max)
        out << "above the model's null range";
    else if (result.observed < ns.min)
        out << "below the model's null range";
    else
        out << "inside the model's null range";
    out << " [" << format_sig6(ns.min) << ", " << format_sig6(ns.max) << "] from "
        << result.null_dist.m() << " replicates.";
    out << " Raw p-value " << format_sig6(result.p_raw) << ", adjusted to "
        << format_sig6(result.p_adjusted) << " over a family of " << result.family_size
        << " proposals (p-value resolution 1/" << result.null_dist.m() << ").";
    switch (severity) {
        case Severity::Significant:
            out << " Significant at alpha = " << format_sig6(cfg.alpha)
                << ": the model does not capture this property of the data";
            if (!slice_columns.empty())
                out << ", and the effect is tied to " << join(slice_columns, ", ");
            out << ".";
            break;
        case Severity::Suggestive:
            out << " Above alpha = " << format_sig6(cfg.alpha) << " but within the "
                << format_sig6(cfg.suggestive_threshold)
                << " suggestive band; worth a look when revising the model.";
            break;
        case Severity::None:
            out << " No evidence of a discrepancy at alpha = " << format_sig6(cfg.alpha) << ".";
            break;
    }
    for (const auto& col : slice_columns) {
        auto it = meta.column_descriptions.find(col);
        if (it != meta.column_descriptions.end())
            out << " [" << col << ": " << it->second << "]";
    }
    return out.str();
}

} // namespace

Critique render_critique(const TestResult& result, const DatasetMetadata& meta,
                         const RenderConfig& cfg) {
    Critique c;
    c.spec_text = result.spec_text;
    c.p_raw = result.p_raw;
    c.p_adjusted = result.p_adjusted;
    c.severity = classify(result.p_adjusted, cfg);
    c.template_text = template_text(result, meta, cfg, c.severity);
    c.text = c.template_text;
    c.provenance = CritiqueProvenance::Template;
    if (cfg.enhancer) {
        if (auto external = cfg.enhancer(result, c.template_text)) {
            c.text = *external;
            c.provenance = CritiqueProvenance::ExternalService;
        }
    }
    return c;
}

DiscrepancyReport build_report(const CheckReport& check, const DatasetMetadata& meta,
                               const RenderConfig& cfg) {
    DiscrepancyReport report;
    report.dataset_name = check.dataset_name;
    report.model_id = check.model_id;
    report.alpha = check.config.alpha;
    report.tail = check.config.tail;
    report.family_size = check.family_size;
    report.m = check.m;
    for (const auto& result : check.results) {
        DiscrepancyReport::Finding f;
        f.critique = render_critique(result, meta, cfg);
        f.observed = result.observed;
        f.null_summary = summarize_null(result.null_dist);
        report.findings.push_back(std::move(f));
    }
    report.rejected = check.rejected;
    return report;
}

nlohmann::ordered_json report_to_json(const DiscrepancyReport& report) {
    ordered_json doc;
    doc["report_schema_version"] = 1;
    doc["dataset"] = report.dataset_name;
    doc["model_id"] = report.model_id;
    doc["alpha"] = report.alpha;
    doc["tail"] = std::string(tail_name(report.tail));
    doc["family_size"] = report.family_size;
    doc["m"] = report.m;
    doc["findings"] = json::array();
    for (const auto& f : report.findings) {
        ordered_json jf;
        jf["spec"] = f.critique.spec_text;
        jf["observed"] = json_real(f.observed);
        ordered_json js;
        js["min"] = json_real(f.null_summary.min);
        js["q25"] = json_real(f.null_summary.q25);
        js["median"] = json_real(f.null_summary.median);
        js["q75"] = json_real(f.null_summary.q75);
        js["max"] = json_real(f.null_summary.max);
        js["mean"] = json_real(f.null_summary.mean);
        jf["null_summary"] = std::move(js);
        jf["p_raw"] = f.critique.p_raw;
        jf["p_adjusted"] = f.critique.p_adjusted;
        jf["severity"] = std::string(severity_name(f.critique.severity));
        jf["provenance"] = std::string(provenance_name(f.critique.provenance));
        jf["text"] = f.critique.text;
        jf["template_text"] = f.critique.template_text;
        doc["findings"].push_back(std::move(jf));
    }
    doc["rejected"] = json::array();
    for (const auto& rej : report.rejected) {
        ordered_json jr;
        jr["spec"] = rej.text;
        jr["reason"] = rej.reason;
        doc["rejected"].push_back(std::move(jr));
    }
    return doc;
}

DiscrepancyReport report_from_json(const nlohmann::ordered_json& doc) {
    DiscrepancyReport report;
    report.dataset_name = doc.value("dataset", "");
    report.model_id = doc.value("model_id", "");
    report.alpha = doc.value("alpha", 0.05);
    report.tail = tail_from_name(doc.value("tail", "upper"));
    report.family_size = doc.value("family_size", std::size_t{0});
    report.m = doc.value("m", std::size_t{0});
    for (const auto& jf : doc.value("findings", json::array())) {
        DiscrepancyReport::Finding f;
        f.critique.spec_text = jf.value("spec", "");
        f.observed = real_from_json(jf.at("observed"));
        const auto& js = jf.at("null_summary");
        f.null_summary.min = real_from_json(js.at("min"));
        f.null_summary.q25 = real_from_json(js.at("q25"));
        f.null_summary.median = real_from_json(js.at("median"));
        f.null_summary.q75 = real_from_json(js.at("q75"));
        f.null_summary.max = real_from_json(js.at("max"));
        f.null_summary.mean = real_from_json(js.at("mean"));
        f.critique.p_raw = jf.value("p_raw", 1.0);
        f.critique.p_adjusted = jf.value("p_adjusted", 1.0);
        const std::string sev = jf.value("severity", "none");
        f.critique.severity = sev == "significant" ? Severity::Significant
                              : sev == "suggestive" ? Severity::Suggestive
                                                    : Severity::None;
        f.critique.provenance = jf.value("provenance", "template") == "template"
                                    ? CritiqueProvenance::Template
                                    : CritiqueProvenance::ExternalService;
        f.critique.text = jf.value("text", "");
        f.critique.template_text = jf.value("template_text", "");
        report.findings.push_back(std::move(f));
    }
    for (const auto& jr : doc.value("rejected", json::array()))
        report.rejected.push_back({jr.value("spec", ""), jr.value("reason", "")});
    return report;
}

std::string report_to_markdown(const DiscrepancyReport& report) {
    std::ostringstream out;
    out << "# Discrepancy report: " << report.dataset_name << " vs " << report.model_id << "\n\n";
    out << "- alpha: " << format_sig6(report.alpha) << "\n";
    out << "- tail: " << tail_name(report.tail) << "\n";
    out << "- family size: " << report.family_size << " (" << report.rejected.size()
        << " rejected)\n";
    out << "- replicates (m): " << report.m << " (p-value resolution 1/" << report.m << ")\n";

    std::size_t significant = 0;
    for (const auto& f : report.findings)
        if (f.critique.severity == Severity::Significant) ++significant;
    out << "- significant findings: " << significant << "\n\n";

    if (report.findings.empty()) {
        out << "## Findings\n\nNo statistic survived validation against this dataset.\n";
    } else {
        out << "## Findings\n\n";
        out << "| rank | statistic | observed | null mean | null range | p_raw | p_adjusted | "
               "severity |\n";
        out << "|---|---|---|---|---|---|---|---|\n";
        std::size_t rank = 1;
        for (const auto& f : report.findings) {
            out << "| " << rank++ << " | `" << f.critique.spec_text << "` | "
                << format_sig6(f.observed) << " | " << format_sig6(f.null_summary.mean) << " | ["
                << format_sig6(f.null_summary.min) << ", " << format_sig6(f.null_summary.max)
                << "] | " << format_sig6(f.critique.p_raw) << " | "
                << format_sig6(f.critique.p_adjusted) << " | "
                << severity_name(f.critique.severity) << " |\n";
        }
        out << "\n";
    }

    if (significant == 0)
        out << "## No significant discrepancies\n\nNo statistic reached alpha = "
            << format_sig6(report.alpha) << " after correction over " << report.family_size
            << " proposals.\n\n";

    if (!report.findings.empty()) {
        out << "## Critiques\n\n";
        std::size_t rank = 1;
        for (const auto& f : report.findings) {
            out << "### " << rank++ << ". `" << f.critique.spec_text << "`\n\n";
            out << "- severity: " << severity_name(f.critique.severity)
                << ", provenance: " << provenance_name(f.critique.provenance) << "\n\n";
            out << f.critique.text << "\n\n";
        }
    }

    if (!report.rejected.empty()) {
        out << "## Rejected proposals (" << report.rejected.size() << ")\n\n";
        for (const auto& rej : report.rejected)
            out << "- `" << rej.text << "`: " << rej.reason << "\n";
    }
    return out.str();
}

std::string render_report(const DiscrepancyReport& report, ReportFormat format) {
    if (format == ReportFormat::Structured) return report_to_json(report).dump(2) + "\n";
    return report_to_markdown(report);
}

} // namespace ppc
