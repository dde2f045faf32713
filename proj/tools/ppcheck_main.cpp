// ppcheck: automated model criticism from the command line.
//
// Subcommands wire the engine into complete workflows: `check` runs a spec
// family against a dataset/sample pair and writes a discrepancy report,
// `propose` emits a proposal batch, `bench` generates and evaluates labeled
// benchmark suites, `roc` turns calibration runs into plot tables, `report`
// re-renders a structured report, and `radon` reproduces the built-in radon
// misspecification scenario end to end.

#include "ppcheck/calibration.hpp"
#include "ppcheck/critique.hpp"
#include "ppcheck/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace ppc;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 2;
constexpr int kExitDiscrepant = 3;

struct CommonOpts {
    double alpha = 0.05;
    std::string tail = "upper";
    std::string correction = "bonferroni";
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string format = "structured";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--alpha", opts.alpha, "Significance threshold in (0,1)")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12));
    cmd->add_option("--tail", opts.tail, "Test tail")
        ->check(CLI::IsMember({"upper", "lower", "two-sided"}));
    cmd->add_option("--correction", opts.correction, "Multiple-testing correction")
        ->check(CLI::IsMember({"bonferroni", "none"}));
    cmd->add_option("--seed", opts.seed, "Master seed; every run is a pure function of it");
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--format", opts.format, "Report format")
        ->check(CLI::IsMember({"structured", "markdown"}));
}

SignificanceConfig significance(const CommonOpts& opts) {
    SignificanceConfig cfg;
    cfg.alpha = opts.alpha;
    cfg.tail = tail_from_name(opts.tail);
    cfg.correction = correction_from_name(opts.correction);
    return cfg;
}

ProposalBatch batch_from_spec_file(const fs::path& path) {
    ProposalBatch batch;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            batch.accepted.push_back(parse_spec(line));
        } catch (const Error& e) {
            batch.rejected.push_back({line, e.what()});
        }
        ++batch.family_size;
    }
    if (batch.family_size == 0) raise(Errc::InvalidConfig, "spec file '" + path.string() + "' is empty");
    return batch;
}

void write_report_files(const DiscrepancyReport& report, const fs::path& out_dir,
                        const std::string& stem, const std::string& format) {
    if (format == "markdown")
        write_text_file_atomic(out_dir / (stem + ".md"), render_report(report, ReportFormat::Markdown));
    else
        write_text_file_atomic(out_dir / (stem + ".json"),
                               render_report(report, ReportFormat::Structured));
}

void write_plot_data(const CheckReport& check, const fs::path& out_dir) {
    std::ostringstream nulls, observed;
    nulls << "spec,replicate_index,value\n";
    observed << "spec,observed,p_raw,p_adjusted\n";
    for (const auto& r : check.results) {
        for (Eigen::Index i = 0; i < r.null_dist.values.size(); ++i)
            nulls << '"' << r.spec_text << "\"," << i << ','
                  << format_double(r.null_dist.values[i]) << '\n';
        observed << '"' << r.spec_text << "\"," << format_double(r.observed) << ','
                 << format_double(r.p_raw) << ',' << format_double(r.p_adjusted) << '\n';
    }
    write_text_file_atomic(out_dir / "plot_null_distributions.csv", nulls.str());
    write_text_file_atomic(out_dir / "plot_observed.csv", observed.str());
}

DatasetMetadata radon_metadata() {
    DatasetMetadata meta;
    meta.description =
        "Synthetic household radon measurements; radon depends linearly on floor and uppm, "
        "county and soil are distractors with no effect";
    meta.column_descriptions = {
        {"floor", "measurement floor: 0 = basement, 1 = first floor"},
        {"uppm", "soil uranium concentration, parts per million"},
        {"county", "county identifier (no effect on radon)"},
        {"soil", "soil type label (no effect on radon)"},
        {"radon", "radon concentration, target"},
    };
    return meta;
}

// --- check -------------------------------------------------------------------

struct CheckOpts {
    CommonOpts common;
    std::string data, samples, target, metadata, specs_file, model_file;
    std::string backend = "catalog";
    int n_proposals = 24;
    bool fail_on_discrepancy = false;
    bool full_null = false;
    bool plot_data = false;
    bool emit_check_report = false;
    std::string endpoint_url, endpoint_model, endpoint_fixture;
    std::string sampling_json;
};

int run_check_cmd(const CheckOpts& o) {
    Dataset d = load_dataset(o.data, o.target);
    ModelSampleSet s = load_samples(o.samples);
    validate_alignment(d, s);
    DatasetMetadata meta;
    if (!o.metadata.empty()) {
        meta = load_metadata(o.metadata);
        validate_metadata(meta, d);
    }

    ProposalBatch batch;
    if (!o.specs_file.empty()) {
        batch = batch_from_spec_file(o.specs_file);
    } else if (o.backend == "catalog") {
        batch = propose_catalog(d, o.n_proposals, o.common.seed);
    } else {
        ProposalRequest req;
        req.metadata = meta;
        req.model.program_text = o.model_file.empty() ? "" : read_text_file(o.model_file);
        req.n_proposals = o.n_proposals;
        if (!o.sampling_json.empty()) req.sampling = ordered_json::parse(o.sampling_json);
        ExternalEndpoint endpoint;
        endpoint.base_url = o.endpoint_url;
        endpoint.model_name = o.endpoint_model;
        endpoint.fixture = o.endpoint_fixture;
        batch = propose_external(req, endpoint);
    }
    batch = validate_batch(batch, d);

    const SignificanceConfig cfg = significance(o.common);
    CheckReport check = run_check(d, s, batch.accepted, cfg, batch.rejected);

    RenderConfig render;
    render.alpha = cfg.alpha;
    DiscrepancyReport report = build_report(check, meta, render);

    const fs::path out_dir(o.common.out);
    write_report_files(report, out_dir, "report", o.common.format);
    if (o.emit_check_report)
        write_text_file_atomic(out_dir / "check_report.json",
                               check_report_to_json(check, o.full_null).dump(2) + "\n");
    if (o.plot_data) write_plot_data(check, out_dir);

    std::cout << (check.discrepant ? "discrepant" : "no discrepancy") << ": "
              << report.findings.size() << " evaluated, " << report.rejected.size()
              << " rejected, family " << report.family_size << "\n";
    return (check.discrepant && o.fail_on_discrepancy) ? kExitDiscrepant : kExitOk;
}

// --- propose -----------------------------------------------------------------

struct ProposeOpts {
    CommonOpts common;
    std::string data, target, metadata, model_file;
    std::string backend = "catalog";
    int n_proposals = 24;
    std::string endpoint_url, endpoint_model, endpoint_fixture;
    std::string sampling_json;
    std::string out_file = "proposals.json";
};

int run_propose_cmd(const ProposeOpts& o) {
    Dataset d = load_dataset(o.data, o.target);
    DatasetMetadata meta;
    if (!o.metadata.empty()) {
        meta = load_metadata(o.metadata);
        validate_metadata(meta, d);
    }
    ProposalBatch batch;
    if (o.backend == "catalog") {
        batch = propose_catalog(d, o.n_proposals, o.common.seed);
    } else {
        ProposalRequest req;
        req.metadata = meta;
        req.model.program_text = o.model_file.empty() ? "" : read_text_file(o.model_file);
        req.n_proposals = o.n_proposals;
        if (!o.sampling_json.empty()) req.sampling = ordered_json::parse(o.sampling_json);
        ExternalEndpoint endpoint;
        endpoint.base_url = o.endpoint_url;
        endpoint.model_name = o.endpoint_model;
        endpoint.fixture = o.endpoint_fixture;
        batch = propose_external(req, endpoint);
    }
    batch = validate_batch(batch, d);
    write_text_file_atomic(fs::path(o.common.out) / o.out_file,
                           proposal_batch_to_json(batch).dump(2) + "\n");
    std::cout << batch.accepted.size() << " accepted, " << batch.rejected.size()
              << " rejected, family " << batch.family_size << "\n";
    return kExitOk;
}

// --- bench -------------------------------------------------------------------

struct BenchOpts {
    CommonOpts common;
    std::string config_file;
    std::vector<std::string> families;
    int copies = 20;
    long n = 200;
    std::size_t m = 500;
    int n_proposals = 24;
    bool with_baseline = false;
    bool write_pairs = false;
};

int run_bench_cmd(const BenchOpts& o) {
    SuiteConfig config;
    if (!o.config_file.empty())
        config = suite_config_from_json(ordered_json::parse(read_text_file(o.config_file)));
    else
        config = paper_suite_config(o.copies, o.n, o.m);
    if (!o.families.empty()) {
        SuiteConfig filtered;
        for (const auto& e : config.entries)
            for (const auto& want : o.families)
                if (e.name == want) filtered.entries.push_back(e);
        if (filtered.entries.empty())
            raise(Errc::InvalidConfig, "no suite entry matches the requested families");
        config = std::move(filtered);
    }

    const fs::path out_dir(o.common.out);
    std::vector<BenchmarkPair> pairs = generate_suite(config, o.common.seed);

    ordered_json manifest;
    manifest["suite_seed"] = o.common.seed;
    manifest["config"] = suite_config_to_json(config);
    manifest["pairs"] = ordered_json::array();
    for (const auto& pair : pairs) {
        ordered_json jp;
        jp["pair_id"] = pair.pair_id;
        jp["label"] = std::string(pair_label_name(pair.label));
        jp["truth"] = std::string(family_name(pair.truth_family.id));
        jp["fitted"] = std::string(family_name(pair.fitted_family.id));
        jp["seed"] = pair.seed;
        jp["replicate_index"] = pair.replicate_index;
        jp["n"] = pair.dataset.n_rows();
        jp["m"] = pair.samples.m();
        std::string dataset_path, samples_path;
        if (o.write_pairs) {
            const fs::path dir = out_dir / "pairs";
            std::string stem = pair.pair_id;
            for (auto& c : stem)
                if (c == '/') c = '_';
            dataset_path = (dir / (stem + ".dataset.csv")).string();
            samples_path = (dir / (stem + ".samples.json")).string();
            save_dataset(pair.dataset, dataset_path);
            save_samples(pair.samples, samples_path);
        }
        jp["dataset_path"] = dataset_path;
        jp["samples_path"] = samples_path;
        manifest["pairs"].push_back(std::move(jp));
    }
    write_text_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");

    const SignificanceConfig cfg = significance(o.common);
    const CalibrationRun catalog_run =
        evaluate_suite(pairs, SpecSource::catalog(o.n_proposals, derive_seed(o.common.seed, {21})), cfg);
    write_text_file_atomic(out_dir / "run_catalog.json",
                           calibration_run_to_json(catalog_run).dump(2) + "\n");
    if (o.with_baseline) {
        const CalibrationRun baseline_run =
            evaluate_suite(pairs, SpecSource::baseline_mean_variance(), cfg);
        write_text_file_atomic(out_dir / "run_baseline_mean_variance.json",
                               calibration_run_to_json(baseline_run).dump(2) + "\n");
    }
    std::cout << pairs.size() << " pairs evaluated (" << catalog_run.invalid.size()
              << " invalid)\n";
    return kExitOk;
}

// --- roc ---------------------------------------------------------------------

struct RocOpts {
    CommonOpts common;
    std::string run_file;
    std::string baseline_file;
};

int run_roc_cmd(const RocOpts& o) {
    const fs::path out_dir(o.common.out);
    const CalibrationRun run =
        calibration_run_from_json(ordered_json::parse(read_text_file(o.run_file)));
    std::optional<CalibrationRun> baseline;
    if (!o.baseline_file.empty())
        baseline = calibration_run_from_json(ordered_json::parse(read_text_file(o.baseline_file)));

    std::ostringstream summary;
    summary << "# Detection and calibration summary\n\n";
    auto emit = [&](const CalibrationRun& r) -> std::optional<RocCurve> {
        std::optional<RocCurve> curve;
        try {
            curve = roc(r);
            write_text_file_atomic(out_dir / ("roc_" + r.spec_source + ".csv"),
                                   roc_to_csv(*curve));
            write_text_file_atomic(out_dir / ("roc_" + r.spec_source + ".json"),
                                   roc_to_json(*curve).dump(2) + "\n");
        } catch (const Error&) {
            // single-label run: no ROC, calibration table only
        }
        write_text_file_atomic(out_dir / ("fpr_calibration_" + r.spec_source + ".csv"),
                               fpr_calibration_csv(r));
        return curve;
    };
    auto curve = emit(run);
    std::optional<RocCurve> baseline_curve;
    if (baseline) baseline_curve = emit(*baseline);

    summary << "| alpha | " << run.spec_source << " tpr | " << run.spec_source << " fpr |";
    if (baseline) summary << " " << baseline->spec_source << " tpr | " << baseline->spec_source << " fpr |";
    summary << "\n|---|---|---|";
    if (baseline) summary << "---|---|";
    summary << "\n";
    for (double alpha : {0.01, 0.05, 0.1, 0.2}) {
        const Rates r = rates(run, alpha);
        auto cell = [](const std::optional<double>& v) {
            return v ? format_sig6(*v) : std::string("absent");
        };
        summary << "| " << format_sig6(alpha) << " | " << cell(r.tpr) << " | " << cell(r.fpr)
                << " |";
        if (baseline) {
            const Rates b = rates(*baseline, alpha);
            summary << " " << cell(b.tpr) << " | " << cell(b.fpr) << " |";
        }
        summary << "\n";
    }
    if (curve && baseline_curve) {
        bool dominates = true;
        for (std::size_t i = 0; i < curve->points.size(); ++i)
            if (curve->points[i].tpr < baseline_curve->points[i].tpr) dominates = false;
        summary << "\nAcross the alpha grid, " << run.spec_source << " TPR "
                << (dominates ? "dominates" : "does not dominate") << " "
                << baseline->spec_source << " TPR pointwise.\n";
    }
    write_text_file_atomic(out_dir / "summary.md", summary.str());
    std::cout << "wrote roc/calibration tables to " << out_dir.string() << "\n";
    return kExitOk;
}

// --- report ------------------------------------------------------------------

struct ReportOpts {
    CommonOpts common;
    std::string in_file;
    std::string out_file;
};

int run_report_cmd(const ReportOpts& o) {
    const DiscrepancyReport report =
        report_from_json(ordered_json::parse(read_text_file(o.in_file)));
    const ReportFormat format =
        o.common.format == "markdown" ? ReportFormat::Markdown : ReportFormat::Structured;
    std::string out_name = o.out_file;
    if (out_name.empty())
        out_name = o.common.format == "markdown" ? "report.md" : "report.json";
    write_text_file_atomic(fs::path(o.common.out) / out_name, render_report(report, format));
    return kExitOk;
}

// --- radon -------------------------------------------------------------------

struct RadonOpts {
    CommonOpts common;
    int n_proposals = 20;
    long n = 500;
    std::size_t m = 500;
    bool include_floor_only = false;
};

int run_radon_cmd(RadonOpts o) {
    const fs::path out_dir(o.common.out);
    const SignificanceConfig cfg = significance(o.common);
    const DatasetMetadata meta = radon_metadata();

    struct Arm {
        const char* stem;
        bool include_floor;
    };
    std::vector<Arm> arms;
    if (!o.include_floor_only) arms.push_back({"radon_lesioned", false});
    arms.push_back({"radon_control", true});

    std::ostringstream summary;
    summary << "# Radon scenario (seed " << o.common.seed << ", alpha "
            << format_sig6(cfg.alpha) << ")\n\n";
    bool any_discrepant = false;
    for (const Arm& arm : arms) {
        const RadonScenario scenario = radon_scenario(o.common.seed, arm.include_floor,
                                                      o.n, static_cast<std::size_t>(o.m));
        ProposalBatch batch = propose_catalog(scenario.dataset, o.n_proposals, o.common.seed);
        batch = validate_batch(batch, scenario.dataset);
        const CheckReport check =
            run_check(scenario.dataset, scenario.samples, batch.accepted, cfg, batch.rejected);
        RenderConfig render;
        render.alpha = cfg.alpha;
        const DiscrepancyReport report = build_report(check, meta, render);
        write_text_file_atomic(out_dir / (std::string(arm.stem) + ".report.json"),
                               render_report(report, ReportFormat::Structured));
        write_text_file_atomic(out_dir / (std::string(arm.stem) + ".report.md"),
                               render_report(report, ReportFormat::Markdown));
        std::size_t significant = 0;
        for (const auto& f : report.findings)
            if (f.critique.severity == Severity::Significant) ++significant;
        summary << "- " << arm.stem << " (" << (arm.include_floor ? "uppm+floor" : "uppm only")
                << "): " << significant << " significant of family " << report.family_size
                << "\n";
        any_discrepant = any_discrepant || check.discrepant;
    }
    write_text_file_atomic(out_dir / "radon_summary.md", summary.str());
    std::cout << "radon reports written to " << out_dir.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ppcheck: automated model criticism via empirical posterior predictive checks"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (flags take precedence)");

    CheckOpts check_opts;
    auto* check_cmd = app.add_subcommand("check", "Check a model sample set against a dataset");
    add_common(check_cmd, check_opts.common);
    check_cmd->add_option("--data", check_opts.data, "Dataset file (.csv or .json)")->required();
    check_cmd->add_option("--samples", check_opts.samples, "Model sample file (.json or .csv)")
        ->required();
    check_cmd->add_option("--target", check_opts.target, "Target column name");
    check_cmd->add_option("--metadata", check_opts.metadata, "Dataset metadata sidecar (.json)");
    check_cmd->add_option("--specs", check_opts.specs_file, "Statistic file, one DSL text per line");
    check_cmd->add_option("--backend", check_opts.backend, "Proposal backend")
        ->check(CLI::IsMember({"catalog", "external"}));
    check_cmd->add_option("--n-proposals", check_opts.n_proposals, "Family size to propose");
    check_cmd->add_option("--model", check_opts.model_file, "Model program text shown to the proposer");
    check_cmd->add_flag("--fail-on-discrepancy", check_opts.fail_on_discrepancy,
                        "Exit 3 when a discrepancy is found");
    check_cmd->add_flag("--full-null", check_opts.full_null,
                        "Embed full null vectors in check_report.json");
    check_cmd->add_flag("--plot-data", check_opts.plot_data,
                        "Emit null-distribution plot tables");
    check_cmd->add_flag("--check-report", check_opts.emit_check_report,
                        "Also write the raw check_report.json");
    check_cmd->add_option("--endpoint-url", check_opts.endpoint_url, "External backend base URL");
    check_cmd->add_option("--endpoint-model", check_opts.endpoint_model, "External backend model name");
    check_cmd->add_option("--endpoint-fixture", check_opts.endpoint_fixture,
                          "Replay fixture instead of calling out");
    check_cmd->add_option("--sampling", check_opts.sampling_json,
                          "Opaque sampling parameters forwarded to the backend (json)");

    ProposeOpts propose_opts;
    auto* propose_cmd = app.add_subcommand("propose", "Emit a proposal batch for a dataset");
    add_common(propose_cmd, propose_opts.common);
    propose_cmd->add_option("--data", propose_opts.data, "Dataset file")->required();
    propose_cmd->add_option("--target", propose_opts.target, "Target column name");
    propose_cmd->add_option("--metadata", propose_opts.metadata, "Metadata sidecar");
    propose_cmd->add_option("--model", propose_opts.model_file, "Model program text");
    propose_cmd->add_option("--backend", propose_opts.backend, "Proposal backend")
        ->check(CLI::IsMember({"catalog", "external"}));
    propose_cmd->add_option("--n-proposals", propose_opts.n_proposals, "Family size");
    propose_cmd->add_option("--out-file", propose_opts.out_file, "Batch file name");
    propose_cmd->add_option("--endpoint-url", propose_opts.endpoint_url, "External backend base URL");
    propose_cmd->add_option("--endpoint-model", propose_opts.endpoint_model, "Backend model name");
    propose_cmd->add_option("--endpoint-fixture", propose_opts.endpoint_fixture, "Replay fixture");
    propose_cmd->add_option("--sampling", propose_opts.sampling_json, "Opaque sampling parameters");

    BenchOpts bench_opts;
    auto* bench_cmd = app.add_subcommand("bench", "Generate and evaluate a benchmark suite");
    add_common(bench_cmd, bench_opts.common);
    bench_cmd->add_option("--suite-config", bench_opts.config_file, "Suite config (.json)");
    bench_cmd->add_option("--families", bench_opts.families,
                          "Subset of configuration names to run");
    bench_cmd->add_option("--copies", bench_opts.copies, "Pairs per configuration");
    bench_cmd->add_option("--n", bench_opts.n, "Rows per dataset");
    bench_cmd->add_option("--m", bench_opts.m, "Replicates per pair");
    bench_cmd->add_option("--n-proposals", bench_opts.n_proposals, "Catalog family size");
    bench_cmd->add_flag("--with-baseline", bench_opts.with_baseline,
                        "Also evaluate the mean/variance baseline");
    bench_cmd->add_flag("--write-pairs", bench_opts.write_pairs,
                        "Materialize per-pair dataset/sample files");

    RocOpts roc_opts;
    auto* roc_cmd = app.add_subcommand("roc", "Emit ROC and FPR-calibration tables from runs");
    add_common(roc_cmd, roc_opts.common);
    roc_cmd->add_option("--run", roc_opts.run_file, "Calibration run (.json)")->required();
    roc_cmd->add_option("--baseline", roc_opts.baseline_file, "Baseline run for comparison");

    ReportOpts report_opts;
    auto* report_cmd = app.add_subcommand("report", "Re-render a structured discrepancy report");
    add_common(report_cmd, report_opts.common);
    report_cmd->add_option("--in", report_opts.in_file, "Structured report (.json)")->required();
    report_cmd->add_option("--out-file", report_opts.out_file, "Output file name");

    RadonOpts radon_opts;
    radon_opts.common.alpha = 0.01;
    auto* radon_cmd = app.add_subcommand("radon", "Run the built-in radon scenario");
    add_common(radon_cmd, radon_opts.common);
    radon_cmd->add_option("--n-proposals", radon_opts.n_proposals, "Catalog family size");
    radon_cmd->add_option("--n", radon_opts.n, "Dataset rows");
    radon_cmd->add_option("--m", radon_opts.m, "Replicates");
    radon_cmd->add_flag("--include-floor", radon_opts.include_floor_only,
                        "Run only the well-specified control");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check_cmd->parsed()) return run_check_cmd(check_opts);
        if (propose_cmd->parsed()) return run_propose_cmd(propose_opts);
        if (bench_cmd->parsed()) return run_bench_cmd(bench_opts);
        if (roc_cmd->parsed()) return run_roc_cmd(roc_opts);
        if (report_cmd->parsed()) return run_report_cmd(report_opts);
        if (radon_cmd->parsed()) return run_radon_cmd(radon_opts);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}
