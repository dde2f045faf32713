#include "ppcheck/benchmarks.hpp"

#include "ppcheck/parallel.hpp"
#include "ppcheck/rng.hpp"
#include "ppcheck/util.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ppc {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

std::string_view family_name(FamilyId id) {
    switch (id) {
        case FamilyId::GaussianConjugate: return "gaussian_conjugate";
        case FamilyId::PoissonGamma: return "poisson_gamma";
        case FamilyId::StudentT: return "student_t";
        case FamilyId::NegativeBinomial: return "negative_binomial";
        case FamilyId::GlmLogLink: return "glm_log_link";
        case FamilyId::LogisticGrowth: return "logistic_growth";
        case FamilyId::LinearRegressionConjugate: return "linear_regression_conjugate";
    }
    return "?";
}

FamilyId family_from_name(std::string_view s) {
    static constexpr FamilyId kAll[] = {
        FamilyId::GaussianConjugate,  FamilyId::PoissonGamma,   FamilyId::StudentT,
        FamilyId::NegativeBinomial,   FamilyId::GlmLogLink,     FamilyId::LogisticGrowth,
        FamilyId::LinearRegressionConjugate,
    };
    for (FamilyId f : kAll)
        if (family_name(f) == s) return f;
    raise(Errc::InvalidConfig, "unknown model family '" + std::string(s) + "'");
}

std::string_view pair_label_name(PairLabel label) {
    return label == PairLabel::Discovery ? "discovery" : "no_discovery";
}

void validate_family(const ModelFamily& f) {
    const auto bad = [](const std::string& what) {
        raise(Errc::InvalidHyperparameters, what);
    };
    switch (f.id) {
        case FamilyId::GaussianConjugate: {
            const auto& p = std::get<GaussianConjugateParams>(f.params);
            if (!(p.sigma > 0)) bad("gaussian sigma must be positive");
            if (!(p.prior_kappa > 0) || !(p.prior_shape > 0) || !(p.prior_rate > 0))
                bad("gaussian prior hyperparameters must be positive");
            break;
        }
        case FamilyId::PoissonGamma: {
            const auto& p = std::get<PoissonGammaParams>(f.params);
            if (!(p.lambda > 0)) bad("poisson lambda must be positive");
            if (!(p.prior_shape > 0) || !(p.prior_rate > 0)) bad("gamma prior must be positive");
            break;
        }
        case FamilyId::StudentT: {
            const auto& p = std::get<StudentTParams>(f.params);
            if (!(p.nu > 2)) bad("student_t needs nu > 2 so the variance exists");
            if (!(p.sigma > 0)) bad("student_t sigma must be positive");
            break;
        }
        case FamilyId::NegativeBinomial: {
            const auto& p = std::get<NegativeBinomialParams>(f.params);
            if (!(p.r > 0) || !(p.p > 0) || !(p.p < 1))
                bad("negative_binomial needs r > 0 and p in (0,1)");
            break;
        }
        case FamilyId::GlmLogLink: {
            const auto& p = std::get<GlmLogLinkParams>(f.params);
            if (!(p.x_min < p.x_max)) bad("glm covariate range is empty");
            break;
        }
        case FamilyId::LogisticGrowth: {
            const auto& p = std::get<LogisticGrowthParams>(f.params);
            if (!(p.capacity > 0) || !(p.sigma > 0)) bad("logistic_growth needs capacity, sigma > 0");
            if (!(p.x_min < p.x_max)) bad("logistic_growth covariate range is empty");
            break;
        }
        case FamilyId::LinearRegressionConjugate: {
            const auto& p = std::get<LinearRegressionParams>(f.params);
            if (!(p.sigma > 0)) bad("linear regression sigma must be positive");
            if (!(p.prior_coef_variance > 0) || !(p.prior_shape > 0) || !(p.prior_rate > 0))
                bad("linear regression prior must be positive");
            if (!p.coefficients.empty() && p.coefficients.size() != p.features.size() + 1)
                bad("linear regression needs one coefficient per feature plus an intercept");
            break;
        }
    }
}

#define PPC_FAMILY_FACTORY(fn, Id, Params)                                                        \
    ModelFamily ModelFamily::fn(Params p) {                                                       \
        ModelFamily f{FamilyId::Id, std::move(p)};                                                \
        validate_family(f);                                                                       \
        return f;                                                                                 \
    }

PPC_FAMILY_FACTORY(gaussian_conjugate, GaussianConjugate, GaussianConjugateParams)
PPC_FAMILY_FACTORY(poisson_gamma, PoissonGamma, PoissonGammaParams)
PPC_FAMILY_FACTORY(student_t, StudentT, StudentTParams)
PPC_FAMILY_FACTORY(negative_binomial, NegativeBinomial, NegativeBinomialParams)
PPC_FAMILY_FACTORY(glm_log_link, GlmLogLink, GlmLogLinkParams)
PPC_FAMILY_FACTORY(logistic_growth, LogisticGrowth, LogisticGrowthParams)
PPC_FAMILY_FACTORY(linear_regression, LinearRegressionConjugate, LinearRegressionParams)

#undef PPC_FAMILY_FACTORY

nlohmann::ordered_json ModelFamily::to_json() const {
    ordered_json doc;
    doc["family"] = std::string(family_name(id));
    switch (id) {
        case FamilyId::GaussianConjugate: {
            const auto& p = std::get<GaussianConjugateParams>(params);
            doc["mu"] = p.mu;
            doc["sigma"] = p.sigma;
            doc["prior_mean"] = p.prior_mean;
            doc["prior_kappa"] = p.prior_kappa;
            doc["prior_shape"] = p.prior_shape;
            doc["prior_rate"] = p.prior_rate;
            break;
        }
        case FamilyId::PoissonGamma: {
            const auto& p = std::get<PoissonGammaParams>(params);
            doc["lambda"] = p.lambda;
            doc["prior_shape"] = p.prior_shape;
            doc["prior_rate"] = p.prior_rate;
            break;
        }
        case FamilyId::StudentT: {
            const auto& p = std::get<StudentTParams>(params);
            doc["nu"] = p.nu;
            doc["mu"] = p.mu;
            doc["sigma"] = p.sigma;
            break;
        }
        case FamilyId::NegativeBinomial: {
            const auto& p = std::get<NegativeBinomialParams>(params);
            doc["r"] = p.r;
            doc["p"] = p.p;
            break;
        }
        case FamilyId::GlmLogLink: {
            const auto& p = std::get<GlmLogLinkParams>(params);
            doc["intercept"] = p.intercept;
            doc["slope"] = p.slope;
            doc["x_min"] = p.x_min;
            doc["x_max"] = p.x_max;
            break;
        }
        case FamilyId::LogisticGrowth: {
            const auto& p = std::get<LogisticGrowthParams>(params);
            doc["capacity"] = p.capacity;
            doc["rate"] = p.rate;
            doc["midpoint"] = p.midpoint;
            doc["sigma"] = p.sigma;
            doc["x_min"] = p.x_min;
            doc["x_max"] = p.x_max;
            break;
        }
        case FamilyId::LinearRegressionConjugate: {
            const auto& p = std::get<LinearRegressionParams>(params);
            doc["features"] = p.features;
            doc["coefficients"] = p.coefficients;
            doc["sigma"] = p.sigma;
            doc["x_min"] = p.x_min;
            doc["x_max"] = p.x_max;
            doc["prior_coef_variance"] = p.prior_coef_variance;
            doc["prior_shape"] = p.prior_shape;
            doc["prior_rate"] = p.prior_rate;
            break;
        }
    }
    return doc;
}

ModelFamily ModelFamily::from_json(const nlohmann::ordered_json& doc) {
    const FamilyId id = family_from_name(doc.at("family").get<std::string>());
    switch (id) {
        case FamilyId::GaussianConjugate: {
            GaussianConjugateParams p;
            p.mu = doc.value("mu", p.mu);
            p.sigma = doc.value("sigma", p.sigma);
            p.prior_mean = doc.value("prior_mean", p.prior_mean);
            p.prior_kappa = doc.value("prior_kappa", p.prior_kappa);
            p.prior_shape = doc.value("prior_shape", p.prior_shape);
            p.prior_rate = doc.value("prior_rate", p.prior_rate);
            return gaussian_conjugate(p);
        }
        case FamilyId::PoissonGamma: {
            PoissonGammaParams p;
            p.lambda = doc.value("lambda", p.lambda);
            p.prior_shape = doc.value("prior_shape", p.prior_shape);
            p.prior_rate = doc.value("prior_rate", p.prior_rate);
            return poisson_gamma(p);
        }
        case FamilyId::StudentT: {
            StudentTParams p;
            p.nu = doc.value("nu", p.nu);
            p.mu = doc.value("mu", p.mu);
            p.sigma = doc.value("sigma", p.sigma);
            return student_t(p);
        }
        case FamilyId::NegativeBinomial: {
            NegativeBinomialParams p;
            p.r = doc.value("r", p.r);
            p.p = doc.value("p", p.p);
            return negative_binomial(p);
        }
        case FamilyId::GlmLogLink: {
            GlmLogLinkParams p;
            p.intercept = doc.value("intercept", p.intercept);
            p.slope = doc.value("slope", p.slope);
            p.x_min = doc.value("x_min", p.x_min);
            p.x_max = doc.value("x_max", p.x_max);
            return glm_log_link(p);
        }
        case FamilyId::LogisticGrowth: {
            LogisticGrowthParams p;
            p.capacity = doc.value("capacity", p.capacity);
            p.rate = doc.value("rate", p.rate);
            p.midpoint = doc.value("midpoint", p.midpoint);
            p.sigma = doc.value("sigma", p.sigma);
            p.x_min = doc.value("x_min", p.x_min);
            p.x_max = doc.value("x_max", p.x_max);
            return logistic_growth(p);
        }
        case FamilyId::LinearRegressionConjugate: {
            LinearRegressionParams p;
            if (doc.contains("features")) p.features = doc["features"].get<std::vector<std::string>>();
            if (doc.contains("coefficients"))
                p.coefficients = doc["coefficients"].get<std::vector<double>>();
            p.sigma = doc.value("sigma", p.sigma);
            p.x_min = doc.value("x_min", p.x_min);
            p.x_max = doc.value("x_max", p.x_max);
            p.prior_coef_variance = doc.value("prior_coef_variance", p.prior_coef_variance);
            p.prior_shape = doc.value("prior_shape", p.prior_shape);
            p.prior_rate = doc.value("prior_rate", p.prior_rate);
            return linear_regression(std::move(p));
        }
    }
    raise(Errc::InvalidConfig, "unreachable family id");
}

ModelRepresentation ModelFamily::representation() const {
    std::ostringstream out;
    switch (id) {
        case FamilyId::GaussianConjugate:
            out << "y ~ normal(mu, sigma)\n"
                << "mu | sigma^2 ~ normal(m0, sigma^2 / kappa0)\n"
                << "sigma^2 ~ inv_gamma(a0, b0)\n";
            break;
        case FamilyId::PoissonGamma:
            out << "y ~ poisson(lambda)\n"
                << "lambda ~ gamma(a0, b0)\n";
            break;
        case FamilyId::StudentT:
            out << "y ~ student_t(nu, mu, sigma)   # nu fixed, (mu, sigma) refit on resamples\n";
            break;
        case FamilyId::NegativeBinomial:
            out << "y ~ neg_binomial(r, p)   # (r, p) refit on resamples\n";
            break;
        case FamilyId::GlmLogLink:
            out << "y ~ poisson(exp(a + b * x))   # (a, b) refit on resamples\n";
            break;
        case FamilyId::LogisticGrowth:
            out << "y ~ normal(K / (1 + exp(-r * (x - x0))), sigma)   # refit on resamples\n";
            break;
        case FamilyId::LinearRegressionConjugate: {
            const auto& p = std::get<LinearRegressionParams>(params);
            out << "y ~ normal(beta0";
            for (const auto& f : p.features) out << " + beta_" << f << " * " << f;
            out << ", sigma)\n"
                << "beta ~ normal(0, sigma^2 * v0 I)\n"
                << "sigma^2 ~ inv_gamma(a0, b0)\n";
            break;
        }
    }
    ModelRepresentation rep;
    rep.program_text = out.str();
    rep.family = to_json();
    return rep;
}

// --- data generation -----------------------------------------------------------

namespace {

Eigen::VectorXd linspace(double lo, double hi, Eigen::Index n) {
    return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

double logistic_mean(double x, const LogisticGrowthParams& p) {
    return p.capacity / (1.0 + std::exp(-p.rate * (x - p.midpoint)));
}

} // namespace

Dataset sample_data(const ModelFamily& f, Eigen::Index n, std::uint64_t seed) {
    validate_family(f);
    if (n < 2) raise(Errc::InvalidParameter, "sample_data needs n >= 2");
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(f.id)}));
    const std::string name(family_name(f.id));
    switch (f.id) {
        case FamilyId::GaussianConjugate: {
            const auto& p = std::get<GaussianConjugateParams>(f.params);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.normal(p.mu, p.sigma);
            return Dataset(name, {Column::real("y", std::move(y))}, "y");
        }
        case FamilyId::StudentT: {
            const auto& p = std::get<StudentTParams>(f.params);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i) y[i] = p.mu + p.sigma * rng.student_t(p.nu);
            return Dataset(name, {Column::real("y", std::move(y))}, "y");
        }
        case FamilyId::PoissonGamma: {
            const auto& p = std::get<PoissonGammaParams>(f.params);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i) y[i] = static_cast<double>(rng.poisson(p.lambda));
            return Dataset(name, {Column::integer("y", std::move(y))}, "y");
        }
        case FamilyId::NegativeBinomial: {
            const auto& p = std::get<NegativeBinomialParams>(f.params);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i)
                y[i] = static_cast<double>(rng.negative_binomial(p.r, p.p));
            return Dataset(name, {Column::integer("y", std::move(y))}, "y");
        }
        case FamilyId::GlmLogLink: {
            const auto& p = std::get<GlmLogLinkParams>(f.params);
            Eigen::VectorXd x = linspace(p.x_min, p.x_max, n);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i)
                y[i] = static_cast<double>(rng.poisson(std::exp(p.intercept + p.slope * x[i])));
            return Dataset(name, {Column::real("x", std::move(x)), Column::integer("y", std::move(y))},
                           "y");
        }
        case FamilyId::LogisticGrowth: {
            const auto& p = std::get<LogisticGrowthParams>(f.params);
            Eigen::VectorXd x = linspace(p.x_min, p.x_max, n);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.normal(logistic_mean(x[i], p), p.sigma);
            return Dataset(name, {Column::real("x", std::move(x)), Column::real("y", std::move(y))},
                           "y");
        }
        case FamilyId::LinearRegressionConjugate: {
            const auto& p = std::get<LinearRegressionParams>(f.params);
            if (p.features.size() != 1 || p.coefficients.size() != 2)
                raise(Errc::InvalidHyperparameters,
                      "linear regression self-generation supports one covariate; "
                      "use a scenario builder for richer designs");
            Eigen::VectorXd x = linspace(p.x_min, p.x_max, n);
            Eigen::VectorXd y(n);
            for (Eigen::Index i = 0; i < n; ++i)
                y[i] = rng.normal(p.coefficients[0] + p.coefficients[1] * x[i], p.sigma);
            return Dataset(name,
                           {Column::real(p.features[0], std::move(x)), Column::real("y", std::move(y))},
                           "y");
        }
    }
    raise(Errc::InvalidConfig, "unreachable family id");
}

// --- fitting helpers --------------------------------------------------------------

namespace {

struct TFit {
    double mu = 0, sigma = 1;
};

// EM for the t location-scale model with nu held fixed.
TFit fit_student_t(const Eigen::VectorXd& y, double nu) {
    TFit fit;
    fit.mu = y.mean();
    double sigma2 = (y.array() - fit.mu).square().mean();
    if (sigma2 < 1e-12) sigma2 = 1e-12;
    for (int iter = 0; iter < 200; ++iter) {
        const double prev_mu = fit.mu, prev_s2 = sigma2;
        double wsum = 0, wy = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double z2 = (y[i] - fit.mu) * (y[i] - fit.mu) / sigma2;
            const double w = (nu + 1.0) / (nu + z2);
            wsum += w;
            wy += w * y[i];
        }
        fit.mu = wy / wsum;
        double acc = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double z2 = (y[i] - fit.mu) * (y[i] - fit.mu) / sigma2;
            const double w = (nu + 1.0) / (nu + z2);
            acc += w * (y[i] - fit.mu) * (y[i] - fit.mu);
        }
        sigma2 = std::max(acc / static_cast<double>(y.size()), 1e-12);
        if (std::abs(fit.mu - prev_mu) < 1e-12 && std::abs(sigma2 - prev_s2) < 1e-14) break;
    }
    fit.sigma = std::sqrt(sigma2);
    return fit;
}

struct NbFit {
    double r = 1, p = 0.5;
};

double nb_profile_loglik(const Eigen::VectorXd& y, double r) {
    const double ybar = y.mean();
    const double p = r / (r + ybar);
    const double n = static_cast<double>(y.size());
    double ll = n * (r * std::log(p) - std::lgamma(r));
    const double log1mp = std::log1p(-p);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        ll += std::lgamma(y[i] + r) - std::lgamma(y[i] + 1.0) + y[i] * log1mp;
    return ll;
}

// Profile MLE: p has a closed form given r; r maximized by golden section
// on a log grid. Underdispersed resamples push r to the upper bound, which
// degrades gracefully toward Poisson.
NbFit fit_negative_binomial(const Eigen::VectorXd& y) {
    const double ybar = y.mean();
    if (ybar <= 0.0) {
        // all-zero resample: point mass at zero, emulated by a near-one p
        return NbFit{1.0, 1.0 - 1e-12};
    }
    double lo = std::log(1e-2), hi = std::log(1e4);
    const double gr = 0.6180339887498949;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = nb_profile_loglik(y, std::exp(a)), fb = nb_profile_loglik(y, std::exp(b));
    for (int iter = 0; iter < 100; ++iter) {
        if (fa < fb) {
            lo = a;
            a = b;
            fa = fb;
            b = lo + gr * (hi - lo);
            fb = nb_profile_loglik(y, std::exp(b));
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - gr * (hi - lo);
            fa = nb_profile_loglik(y, std::exp(a));
        }
    }
    NbFit fit;
    fit.r = std::exp(0.5 * (lo + hi));
    fit.p = fit.r / (fit.r + ybar);
    if (!std::isfinite(fit.r) || !std::isfinite(fit.p))
        raise(Errc::FitNotConverged, "negative binomial refit produced non-finite parameters");
    return fit;
}

struct GlmFit {
    double intercept = 0, slope = 0;
};

// IRLS for the Poisson regression with log link.
GlmFit fit_glm_log_link(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::Vector2d beta(std::log(std::max(y.mean(), 1e-8)), 0.0);
    const Eigen::Index n = x.size();
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::Matrix2d xtwx = Eigen::Matrix2d::Zero();
        Eigen::Vector2d xtwz = Eigen::Vector2d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double eta = std::clamp(beta[0] + beta[1] * x[i], -30.0, 30.0);
            const double mu = std::exp(eta);
            const double z = eta + (y[i] - mu) / mu;
            const Eigen::Vector2d xi(1.0, x[i]);
            xtwx += mu * xi * xi.transpose();
            xtwz += mu * z * xi;
        }
        const Eigen::Vector2d next = xtwx.ldlt().solve(xtwz);
        const double step = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        if (!beta.allFinite())
            raise(Errc::FitNotConverged, "poisson glm refit diverged (non-finite coefficients)");
        if (step < 1e-10) return GlmFit{beta[0], beta[1]};
    }
    raise(Errc::FitNotConverged, "poisson glm refit did not converge in 100 IRLS iterations");
}

struct LogisticFit {
    double capacity = 1, rate = 1, midpoint = 0, sigma = 1;
};

double logistic_rss(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double K, double r,
                    double x0) {
    double rss = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(std::clamp(-r * (x[i] - x0), -500.0, 500.0)));
        const double e = y[i] - K * s;
        rss += e * e;
    }
    return rss;
}

// Levenberg-Marquardt on (K, r, x0); sigma^2 is the residual mean square.
LogisticFit fit_logistic_growth(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double span = x.maxCoeff() - x.minCoeff();
    const double k0 = std::max(y.maxCoeff() * 1.05, 1e-6);
    // coarse deterministic init sweep, then refine the best candidate
    double K = k0, r = 1.0 / std::max(span, 1e-9), x0 = x.mean();
    double best = logistic_rss(x, y, K, r, x0);
    for (double rc : {0.25, 1.0, 4.0}) {
        for (double frac : {0.25, 0.5, 0.75}) {
            const double rr = rc * 4.0 / std::max(span, 1e-9);
            const double xx = x.minCoeff() + frac * span;
            const double rss = logistic_rss(x, y, k0, rr, xx);
            if (rss < best) {
                best = rss;
                K = k0;
                r = rr;
                x0 = xx;
            }
        }
    }
    double lambda = 1e-3;
    double rss = best;
    const Eigen::Index n = x.size();
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jte = Eigen::Vector3d::Zero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = 1.0 / (1.0 + std::exp(std::clamp(-r * (x[i] - x0), -500.0, 500.0)));
            const double e = y[i] - K * s;
            Eigen::Vector3d g(s, K * s * (1 - s) * (x[i] - x0), -K * s * (1 - s) * r);
            jtj += g * g.transpose();
            jte += g * e;
        }
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
        const Eigen::Vector3d step = damped.ldlt().solve(jte);
        const double nk = std::max(K + step[0], 1e-8);
        const double nr = r + step[1];
        const double nx0 = x0 + step[2];
        const double new_rss = logistic_rss(x, y, nk, nr, nx0);
        if (std::isfinite(new_rss) && new_rss < rss) {
            const bool done = (rss - new_rss) < 1e-12 * (rss + 1e-300);
            K = nk;
            r = nr;
            x0 = nx0;
            rss = new_rss;
            lambda = std::max(lambda / 3.0, 1e-12);
            if (done) break;
        } else {
            lambda *= 3.0;
            if (lambda > 1e14) break;
        }
    }
    if (!std::isfinite(rss))
        raise(Errc::FitNotConverged, "logistic growth refit produced non-finite residuals");
    LogisticFit fit;
    fit.capacity = K;
    fit.rate = r;
    fit.midpoint = x0;
    fit.sigma = std::sqrt(std::max(rss / static_cast<double>(n), 1e-18));
    return fit;
}

Eigen::VectorXd resample(const Eigen::VectorXd& v, Rng& rng) {
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] = v[static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(v.size())))];
    return out;
}

void resample_rows(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Rng& rng,
                   Eigen::VectorXd& xb, Eigen::VectorXd& yb) {
    xb.resize(x.size());
    yb.resize(y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto j =
            static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(x.size())));
        xb[i] = x[j];
        yb[i] = y[j];
    }
}

const Column& covariate_column(const Dataset& d) {
    for (const auto& c : d.columns())
        if (c.name != d.target() && c.is_numeric()) return c;
    raise(Errc::InvalidHyperparameters,
          "family needs a numeric covariate column, dataset has none");
}

// Normal-inverse-gamma posterior for a scalar Gaussian.
struct NigPosterior {
    double mu_n, kappa_n, shape_n, rate_n;
};

NigPosterior gaussian_posterior(const Eigen::VectorXd& y, const GaussianConjugateParams& p) {
    const double n = static_cast<double>(y.size());
    const double ybar = y.mean();
    const double ss = (y.array() - ybar).square().sum();
    NigPosterior post{};
    post.kappa_n = p.prior_kappa + n;
    post.mu_n = (p.prior_kappa * p.prior_mean + n * ybar) / post.kappa_n;
    post.shape_n = p.prior_shape + 0.5 * n;
    post.rate_n = p.prior_rate + 0.5 * ss +
                  0.5 * p.prior_kappa * n * (ybar - p.prior_mean) * (ybar - p.prior_mean) /
                      post.kappa_n;
    return post;
}

} // namespace

ModelSampleSet posterior_predictive(const ModelFamily& f, const Dataset& d, std::size_t m,
                                    std::uint64_t seed) {
    validate_family(f);
    if (m < 1) raise(Errc::EmptySampleSet, "posterior_predictive needs m >= 1");
    const Eigen::VectorXd y = d.target_values();
    const Eigen::Index n = d.n_rows();

    ModelSampleSet out;
    out.model_id = std::string(family_name(f.id));
    out.replicates.assign(m, Eigen::VectorXd());

    // Each replicate owns a derived seed so the fan-out is order independent.
    auto replicate_rng = [seed](std::size_t i) {
        return Rng(derive_seed(seed, {0xbeefULL, static_cast<std::uint64_t>(i)}));
    };

    switch (f.id) {
        case FamilyId::GaussianConjugate: {
            const auto& p = std::get<GaussianConjugateParams>(f.params);
            const NigPosterior post = gaussian_posterior(y, p);
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                const double sigma2 = post.rate_n / rng.gamma(post.shape_n);
                const double mu = rng.normal(post.mu_n, std::sqrt(sigma2 / post.kappa_n));
                Eigen::VectorXd rep(n);
                const double sigma = std::sqrt(sigma2);
                for (Eigen::Index j = 0; j < n; ++j) rep[j] = rng.normal(mu, sigma);
                out.replicates[i] = std::move(rep);
            });
            break;
        }
        case FamilyId::PoissonGamma: {
            const auto& p = std::get<PoissonGammaParams>(f.params);
            const double shape_n = p.prior_shape + y.sum();
            const double rate_n = p.prior_rate + static_cast<double>(n);
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                const double lambda = rng.gamma(shape_n, 1.0 / rate_n);
                Eigen::VectorXd rep(n);
                for (Eigen::Index j = 0; j < n; ++j)
                    rep[j] = static_cast<double>(rng.poisson(lambda));
                out.replicates[i] = std::move(rep);
            });
            break;
        }
        case FamilyId::StudentT: {
            const auto& p = std::get<StudentTParams>(f.params);
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                const TFit fit = fit_student_t(resample(y, rng), p.nu);
                Eigen::VectorXd rep(n);
                for (Eigen::Index j = 0; j < n; ++j)
                    rep[j] = fit.mu + fit.sigma * rng.student_t(p.nu);
                out.replicates[i] = std::move(rep);
            });
            break;
        }
        case FamilyId::NegativeBinomial: {
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                const NbFit fit = fit_negative_binomial(resample(y, rng));
                Eigen::VectorXd rep(n);
                for (Eigen::Index j = 0; j < n; ++j)
                    rep[j] = static_cast<double>(rng.negative_binomial(fit.r, fit.p));
                out.replicates[i] = std::move(rep);
            });
            break;
        }
        case FamilyId::GlmLogLink: {
            const Eigen::VectorXd x = covariate_column(d).values;
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                Eigen::VectorXd xb, yb;
                resample_rows(x, y, rng, xb, yb);
                const GlmFit fit = fit_glm_log_link(xb, yb);
                Eigen::VectorXd rep(n);
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double eta = std::clamp(fit.intercept + fit.slope * x[j], -30.0, 30.0);
                    rep[j] = static_cast<double>(rng.poisson(std::exp(eta)));
                }
                out.replicates[i] = std::move(rep);
            });
            break;
        }
        case FamilyId::LogisticGrowth: {
            const Eigen::VectorXd x = covariate_column(d).values;
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                Eigen::VectorXd xb, yb;
                resample_rows(x, y, rng, xb, yb);
                const LogisticFit fit = fit_logistic_growth(xb, yb);
                Eigen::VectorXd rep(n);
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double s =
                        1.0 / (1.0 + std::exp(std::clamp(-fit.rate * (x[j] - fit.midpoint),
                                                         -500.0, 500.0)));
                    rep[j] = rng.normal(fit.capacity * s, fit.sigma);
                }
                out.replicates[i] = std::move(rep);
            });
            break;
        }
        case FamilyId::LinearRegressionConjugate: {
            const auto& p = std::get<LinearRegressionParams>(f.params);
            std::vector<std::string> features = p.features;
            if (features.empty())
                for (const auto& c : d.columns())
                    if (c.name != d.target() && c.is_numeric()) features.push_back(c.name);
            const auto k = static_cast<Eigen::Index>(features.size()) + 1;
            Eigen::MatrixXd X(n, k);
            X.col(0).setOnes();
            for (Eigen::Index c = 1; c < k; ++c) {
                const Column& col = d.column(features[static_cast<std::size_t>(c - 1)]);
                if (!col.is_numeric())
                    raise(Errc::TypeMismatch,
                          "regression feature '" + col.name + "' is not numeric");
                X.col(c) = col.values;
            }
            const Eigen::MatrixXd vn_inv =
                Eigen::MatrixXd::Identity(k, k) / p.prior_coef_variance + X.transpose() * X;
            const Eigen::LLT<Eigen::MatrixXd> vn_inv_llt(vn_inv);
            const Eigen::VectorXd mn = vn_inv_llt.solve(X.transpose() * y);
            const double shape_n = p.prior_shape + 0.5 * static_cast<double>(n);
            const double rate_n =
                p.prior_rate + 0.5 * (y.squaredNorm() - mn.dot(vn_inv * mn));
            // Cholesky of Vn for coefficient draws: Vn = (L L^T)^-1 with L from Vn_inv.
            const Eigen::MatrixXd l_inv_t =
                vn_inv_llt.matrixL().transpose().solve(Eigen::MatrixXd::Identity(k, k));
            parallel_for(m, [&](std::size_t i) {
                Rng rng = replicate_rng(i);
                const double sigma2 = rate_n / rng.gamma(shape_n);
                const double sigma = std::sqrt(sigma2);
                Eigen::VectorXd z(k);
                for (Eigen::Index c = 0; c < k; ++c) z[c] = rng.normal();
                const Eigen::VectorXd beta = mn + sigma * (l_inv_t * z);
                Eigen::VectorXd rep = X * beta;
                for (Eigen::Index j = 0; j < n; ++j) rep[j] += rng.normal(0.0, sigma);
                out.replicates[i] = std::move(rep);
            });
            break;
        }
    }
    return out;
}

// --- suites ---------------------------------------------------------------------

SuiteConfig paper_suite_config(int copies, Eigen::Index n, std::size_t m) {
    SuiteConfig config;
    auto entry = [&](std::string name, ModelFamily truth, ModelFamily fitted) {
        config.entries.push_back({std::move(name), std::move(truth), std::move(fitted), copies, n, m});
    };
    entry("t_vs_gaussian", ModelFamily::student_t(), ModelFamily::gaussian_conjugate());
    entry("negbin_vs_poisson", ModelFamily::negative_binomial(), ModelFamily::poisson_gamma());
    entry("glm_vs_logistic", ModelFamily::glm_log_link(), ModelFamily::logistic_growth());
    entry("gaussian_null", ModelFamily::gaussian_conjugate(), ModelFamily::gaussian_conjugate());
    entry("poisson_null", ModelFamily::poisson_gamma(), ModelFamily::poisson_gamma());
    entry("logistic_null", ModelFamily::logistic_growth(), ModelFamily::logistic_growth());
    return config;
}

nlohmann::ordered_json suite_config_to_json(const SuiteConfig& config) {
    json entries = json::array();
    for (const auto& e : config.entries) {
        ordered_json je;
        je["name"] = e.name;
        je["truth"] = e.truth.to_json();
        je["fitted"] = e.fitted.to_json();
        je["copies"] = e.copies;
        je["n"] = e.n;
        je["m"] = e.m;
        entries.push_back(std::move(je));
    }
    ordered_json doc;
    doc["entries"] = std::move(entries);
    return doc;
}

SuiteConfig suite_config_from_json(const nlohmann::ordered_json& doc) {
    SuiteConfig config;
    if (!doc.contains("entries") || !doc["entries"].is_array())
        raise(Errc::InvalidConfig, "suite config needs an 'entries' array");
    for (const auto& je : doc["entries"]) {
        SuiteConfigEntry e;
        e.name = je.value("name", "");
        e.truth = ModelFamily::from_json(je.at("truth"));
        e.fitted = ModelFamily::from_json(je.at("fitted"));
        e.copies = je.value("copies", 20);
        e.n = je.value("n", 200);
        e.m = je.value("m", std::size_t{500});
        if (e.name.empty())
            e.name = std::string(family_name(e.truth.id)) + "_vs_" +
                     std::string(family_name(e.fitted.id));
        config.entries.push_back(std::move(e));
    }
    if (config.entries.empty()) raise(Errc::EmptySuite, "suite config has no entries");
    return config;
}

BenchmarkPair generate_pair(const SuiteConfigEntry& entry, int replicate_index,
                            std::uint64_t pair_seed, std::string pair_id) {
    const PairLabel label =
        entry.truth.id == entry.fitted.id ? PairLabel::NoDiscovery : PairLabel::Discovery;
    Dataset base = sample_data(entry.truth, entry.n, derive_seed(pair_seed, {1}));

    if (label == PairLabel::Discovery) {
        ModelSampleSet samples =
            posterior_predictive(entry.fitted, base, entry.m, derive_seed(pair_seed, {2}));
        return BenchmarkPair{std::move(pair_id), label,           std::move(base),
                             std::move(samples), entry.truth,    entry.fitted,
                             pair_seed,          replicate_index};
    }

    // No-discovery: draw the observed target alongside the replicates from
    // the same fitted posterior predictive, so (data, replicates) are
    // exchangeable and the null decision rate tracks alpha.
    ModelSampleSet pp =
        posterior_predictive(entry.fitted, base, entry.m + 1, derive_seed(pair_seed, {2}));
    Dataset dataset = base.with_target_values(pp.replicates.back());
    pp.replicates.pop_back();
    return BenchmarkPair{std::move(pair_id), label,        std::move(dataset), std::move(pp),
                         entry.truth,        entry.fitted, pair_seed,          replicate_index};
}

std::vector<BenchmarkPair> generate_suite(const SuiteConfig& config, std::uint64_t seed) {
    if (config.entries.empty()) raise(Errc::EmptySuite, "suite config has no entries");
    struct Slot {
        const SuiteConfigEntry* entry;
        int rep;
        std::uint64_t pair_seed;
        std::string pair_id;
    };
    std::vector<Slot> slots;
    for (std::size_t ci = 0; ci < config.entries.size(); ++ci) {
        const auto& entry = config.entries[ci];
        for (int rep = 0; rep < entry.copies; ++rep) {
            char idx[16];
            std::snprintf(idx, sizeof idx, "%02d", rep);
            slots.push_back({&entry, rep,
                             derive_seed(seed, {static_cast<std::uint64_t>(ci),
                                                static_cast<std::uint64_t>(rep)}),
                             entry.name + "/" + idx});
        }
    }
    std::vector<BenchmarkPair> pairs;
    pairs.reserve(slots.size());
    for (const auto& s : slots)
        pairs.push_back(generate_pair(*s.entry, s.rep, s.pair_seed, s.pair_id));
    return pairs;
}

// --- radon -----------------------------------------------------------------------

RadonScenario radon_scenario(std::uint64_t seed, bool include_floor, Eigen::Index n,
                             std::size_t m) {
    Rng rng(derive_seed(seed, {0x4adULL}));
    Eigen::VectorXd floor_col(n), uppm(n), radon(n);
    std::vector<std::string> county(static_cast<std::size_t>(n));
    std::vector<std::string> soil(static_cast<std::size_t>(n));
    static const char* kSoil[] = {"clay", "loam", "sand"};
    for (Eigen::Index i = 0; i < n; ++i) {
        const double f = rng.uniform01() < 0.5 ? 0.0 : 1.0;
        floor_col[i] = f;
        uppm[i] = rng.uniform(0.0, 2.0);
        char buf[16];
        std::snprintf(buf, sizeof buf, "county_%02d", static_cast<int>(rng.uniform_index(10)));
        county[static_cast<std::size_t>(i)] = buf;
        soil[static_cast<std::size_t>(i)] = kSoil[rng.uniform_index(3)];
        radon[i] = 1.0 + 0.8 * f + 0.5 * uppm[i] + rng.normal(0.0, 0.3);
    }
    Dataset dataset("radon_synthetic",
                    {Column::integer("floor", std::move(floor_col)),
                     Column::real("uppm", std::move(uppm)), Column::categorical("county", county),
                     Column::categorical("soil", soil), Column::real("radon", std::move(radon))},
                    "radon");

    LinearRegressionParams fit_params;
    fit_params.features = include_floor ? std::vector<std::string>{"uppm", "floor"}
                                        : std::vector<std::string>{"uppm"};
    const ModelFamily fitted = ModelFamily::linear_regression(fit_params);

    RadonScenario scenario{dataset,
                           posterior_predictive(fitted, dataset, m, derive_seed(seed, {0xf17ULL})),
                           fitted.representation()};
    std::ostringstream program;
    program << "radon ~ normal(beta0 + beta_uppm * uppm";
    if (include_floor) program << " + beta_floor * floor";
    program << ", sigma)\n"
            << "beta ~ normal(0, sigma^2 * v0 I)\n"
            << "sigma^2 ~ inv_gamma(a0, b0)\n";
    scenario.model.program_text = program.str();
    scenario.samples.model_id = include_floor ? "radon_linreg_uppm_floor" : "radon_linreg_uppm";
    return scenario;
}

} // namespace ppc
