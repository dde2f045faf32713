#pragma once

#include "ppcheck/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ppc {

// Labeled model-dataset pairs with a known ground truth. A pair is
// "discovery" when the fitted family differs from the generator (the fit is
// lesioned) and "no-discovery" when they coincide. Inference is desk scale:
// exact conjugate posteriors where they exist, bootstrap plug-in posteriors
// (one ML refit on resampled rows per replicate) elsewhere. No MCMC.

enum class FamilyId {
    GaussianConjugate,
    PoissonGamma,
    StudentT,
    NegativeBinomial,
    GlmLogLink,
    LogisticGrowth,
    LinearRegressionConjugate,
};

std::string_view family_name(FamilyId id);
FamilyId family_from_name(std::string_view s);

struct GaussianConjugateParams {
    double mu = 0.0; // generator
    double sigma = 1.0;
    double prior_mean = 0.0; // normal-inverse-gamma prior
    double prior_kappa = 0.01;
    double prior_shape = 0.01;
    double prior_rate = 0.01;
};

struct PoissonGammaParams {
    double lambda = 5.0; // generator
    double prior_shape = 0.01;
    double prior_rate = 0.01;
};

struct StudentTParams {
    double nu = 3.0; // > 2 so the variance exists
    double mu = 0.0;
    double sigma = 1.0;
};

struct NegativeBinomialParams {
    double r = 2.0; // failures before the r-th success
    double p = 0.3;
};

struct GlmLogLinkParams {
    double intercept = 0.5; // y ~ Poisson(exp(intercept + slope * x))
    double slope = 0.8;
    double x_min = 0.0;
    double x_max = 3.0;
};

struct LogisticGrowthParams {
    double capacity = 10.0; // y ~ Normal(capacity / (1 + exp(-rate (x - midpoint))), sigma)
    double rate = 1.5;
    double midpoint = 5.0;
    double sigma = 0.5;
    double x_min = 0.0;
    double x_max = 10.0;
};

struct LinearRegressionParams {
    std::vector<std::string> features; // fitted design columns; intercept is implicit
    std::vector<double> coefficients;  // generator: intercept followed by per-feature slopes
    double sigma = 1.0;
    double x_min = 0.0; // covariate grid when this family generates its own data
    double x_max = 1.0;
    double prior_coef_variance = 100.0; // V0 = v I (scaled by sigma^2)
    double prior_shape = 0.01;
    double prior_rate = 0.01;
};

using FamilyParams =
    std::variant<GaussianConjugateParams, PoissonGammaParams, StudentTParams,
                 NegativeBinomialParams, GlmLogLinkParams, LogisticGrowthParams,
                 LinearRegressionParams>;

struct ModelFamily {
    FamilyId id = FamilyId::GaussianConjugate;
    FamilyParams params;

    static ModelFamily gaussian_conjugate(GaussianConjugateParams p = {});
    static ModelFamily poisson_gamma(PoissonGammaParams p = {});
    static ModelFamily student_t(StudentTParams p = {});
    static ModelFamily negative_binomial(NegativeBinomialParams p = {});
    static ModelFamily glm_log_link(GlmLogLinkParams p = {});
    static ModelFamily logistic_growth(LogisticGrowthParams p = {});
    static ModelFamily linear_regression(LinearRegressionParams p);

    nlohmann::ordered_json to_json() const;
    static ModelFamily from_json(const nlohmann::ordered_json& doc);

    /// Program-text sketch of the fitted model, for the proposer.
    ModelRepresentation representation() const;
};

/// Checks hyperparameter ranges; factories call this.
void validate_family(const ModelFamily& f);

enum class PairLabel { Discovery, NoDiscovery };

std::string_view pair_label_name(PairLabel label);

struct BenchmarkPair {
    std::string pair_id;
    PairLabel label = PairLabel::NoDiscovery;
    Dataset dataset;
    ModelSampleSet samples;
    ModelFamily truth_family;
    ModelFamily fitted_family;
    std::uint64_t seed = 0;
    int replicate_index = 0;
};

struct SuiteConfigEntry {
    std::string name;
    ModelFamily truth;
    ModelFamily fitted;
    int copies = 20;
    Eigen::Index n = 200;
    std::size_t m = 500;
};

struct SuiteConfig {
    std::vector<SuiteConfigEntry> entries;
};

/// The six benchmark configurations: three lesioned fits (t -> gaussian,
/// negative binomial -> poisson, poisson glm -> logistic growth) and the
/// three matching self-fit controls.
SuiteConfig paper_suite_config(int copies = 20, Eigen::Index n = 200, std::size_t m = 500);

nlohmann::ordered_json suite_config_to_json(const SuiteConfig& config);
SuiteConfig suite_config_from_json(const nlohmann::ordered_json& doc);

/// Fresh dataset from the family's generative side. Pure in (f, n, seed).
Dataset sample_data(const ModelFamily& f, Eigen::Index n, std::uint64_t seed);

/// m replicate target vectors from the family fitted to d. Conjugate
/// families sample the exact posterior; the rest resample-and-refit, one
/// fit per replicate. Pure in (f, d, m, seed); replicates fan out across
/// workers with per-replicate derived seeds.
ModelSampleSet posterior_predictive(const ModelFamily& f, const Dataset& d, std::size_t m,
                                    std::uint64_t seed);

/// One labeled pair. For a no-discovery pair the observed target vector is
/// drawn from the fitted posterior predictive alongside the replicates, so
/// data and replicates are exchangeable and empirical p-values are uniform
/// up to 1/m granularity. Discovery pairs keep the generator's data.
BenchmarkPair generate_pair(const SuiteConfigEntry& entry, int replicate_index,
                            std::uint64_t pair_seed, std::string pair_id);

/// copies pairs per configuration, seeds derived from the master seed.
std::vector<BenchmarkPair> generate_suite(const SuiteConfig& config, std::uint64_t seed);

struct RadonScenario {
    Dataset dataset;
    ModelSampleSet samples;
    ModelRepresentation model;
};

/// Synthetic radon regression with spurious distractor features. The target
/// is linear in floor and uppm plus Gaussian noise; county and soil carry no
/// signal. The fitted model is a conjugate Bayesian linear regression on
/// uppm only (lesioned) or on uppm and floor (well-specified control).
RadonScenario radon_scenario(std::uint64_t seed, bool include_floor, Eigen::Index n = 500,
                             std::size_t m = 500);

} // namespace ppc
