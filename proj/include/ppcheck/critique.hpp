#pragma once

#include "ppcheck/dataset.hpp"
#include "ppcheck/testing.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ppc {

enum class Severity { Significant, Suggestive, None };
enum class CritiqueProvenance { Template, ExternalService };

std::string_view severity_name(Severity s);
std::string_view provenance_name(CritiqueProvenance p);

/// Natural-language summary of one test result. The template path is
/// deterministic; an external service may replace the wording, in which case
/// the template text is retained as the fallback and the provenance says so.
struct Critique {
    std::string spec_text;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    std::string text;
    std::string template_text;
    CritiqueProvenance provenance = CritiqueProvenance::Template;
    Severity severity = Severity::None;
};

struct RenderConfig {
    double alpha = 0.05;
    /// Adjusted p-values in (alpha, suggestive_threshold] read as suggestive:
    /// worth surfacing to a reviser, below conventional significance.
    double suggestive_threshold = 0.15;
    /// Optional external rewriter; returning nullopt keeps the template.
    std::function<std::optional<std::string>(const TestResult&, const std::string&)> enhancer;
};

Critique render_critique(const TestResult& result, const DatasetMetadata& meta,
                         const RenderConfig& cfg);

struct DiscrepancyReport {
    std::string dataset_name;
    std::string model_id;
    double alpha = 0.05;
    Tail tail = Tail::Upper;
    std::size_t family_size = 0;
    std::size_t m = 0;

    struct Finding {
        Critique critique;
        StatisticValue observed = 0.0;
        NullSummary null_summary;
    };
    std::vector<Finding> findings; // ascending p_adjusted, spec text tie-break
    std::vector<RejectedSpec> rejected;
};

enum class ReportFormat { Structured, Markdown };

DiscrepancyReport build_report(const CheckReport& check, const DatasetMetadata& meta,
                               const RenderConfig& cfg);

nlohmann::ordered_json report_to_json(const DiscrepancyReport& report);
DiscrepancyReport report_from_json(const nlohmann::ordered_json& doc);
std::string report_to_markdown(const DiscrepancyReport& report);

/// The report as a writable document in the requested format.
std::string render_report(const DiscrepancyReport& report, ReportFormat format);

} // namespace ppc
