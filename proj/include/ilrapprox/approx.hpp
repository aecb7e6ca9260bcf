#ifndef ILRAPPROX_APPROX_HPP
#define ILRAPPROX_APPROX_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ilrapprox/composition.hpp"
#include "ilrapprox/linalg.hpp"
#include "ilrapprox/model.hpp"

/**
 * @file approx.hpp
 * @brief Closed-form moments of proportions and normal approximations of ilr coordinates
 * under multinomial, Dirichlet-multinomial and lognormal-total count models.
 *
 * Notation: alpha_tilde is the expected class probability vector, alpha_s the
 * Dirichlet concentration, K the total count and (mu, sigma_sq) the parameters
 * of a lognormal total. Multinomial models are the alpha_s -> infinity limits
 * of their Dirichlet counterparts; pass `infinite_concentration` where a
 * function takes alpha_s.
 */

namespace ilrapprox {

inline constexpr double infinite_concentration = std::numeric_limits<double>::infinity();

/**
 * Mean vector and covariance matrix of a multivariate normal.
 */
struct NormalApprox {
    std::vector<double> mean;
    SymmetricMatrix cov;

    NormalApprox(std::vector<double> m, SymmetricMatrix c) : mean(std::move(m)), cov(std::move(c)) {
        if (mean.size() != cov.dim()) {
            throw DimensionError("normal approximation: mean and covariance dimensions differ");
        }
    }

    std::size_t dim() const { return mean.size(); }
};

/// diag(alpha_tilde) - alpha_tilde alpha_tilde'
inline SymmetricMatrix sigma_pi(const Composition& alpha_tilde) {
    const std::size_t n = alpha_tilde.size();
    SymmetricMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = (i == j ? alpha_tilde[i] : 0.0) - alpha_tilde[i] * alpha_tilde[j];
            out.set(i, j, v);
        }
    }
    return out;
}

/**
 * Variance inflation of Dirichlet-multinomial proportions over multinomial
 * ones with the same total: (alpha_s + K)/(alpha_s + 1). Equals 1 for infinite alpha_s.
 */
inline double excess_variability(double alpha_s, double k) {
    if (!(alpha_s > 0.0) || !(k >= 1.0)) {
        throw InvalidArgument("excess_variability requires alpha_s > 0 and K >= 1");
    }
    if (std::isinf(alpha_s)) {
        return 1.0;
    }
    return (alpha_s + k) / (alpha_s + 1.0);
}

/**
 * Scale c with Cov(p) = c * Sigma_Pi for a fixed total:
 * (1/K)(alpha_s + K)/(alpha_s + 1).
 */
inline double fixed_total_scale(double alpha_s, double k) {
    return excess_variability(alpha_s, k) / k;
}

/// Covariance of Dirichlet-multinomial proportions, (1/K)(alpha_s + K)/(alpha_s + 1) Sigma_Pi.
inline SymmetricMatrix sigma_p(const Composition& alpha_tilde, double alpha_s, double k) {
    return sigma_pi(alpha_tilde).scaled(fixed_total_scale(alpha_s, k));
}

struct LognormalMoments {
    double mean;
    double variance;
    double cv;
};

inline LognormalMoments lognormal_moments(double mu, double sigma_sq) {
    const double mean = std::exp(mu + 0.5 * sigma_sq);
    const double em1 = std::expm1(sigma_sq);
    return {mean, em1 * std::exp(2.0 * mu + sigma_sq), std::sqrt(em1)};
}

/**
 * Covariance scale of proportions under a lognormal(mu, sigma_sq) total:
 * (alpha_s exp(-mu + sigma_sq/2) + 1)/(alpha_s + 1), which tends to
 * exp(-mu + sigma_sq/2) as alpha_s grows.
 */
inline double gamma_factor(double alpha_s, double mu, double sigma_sq) {
    const double inv_median_term = std::exp(-mu + 0.5 * sigma_sq);
    if (std::isinf(alpha_s)) {
        return inv_median_term;
    }
    return (alpha_s * inv_median_term + 1.0) / (alpha_s + 1.0);
}

/**
 * Excess variability under a lognormal total relative to a multinomial with
 * K at the median exp(mu): exp(mu) * gamma_factor, written as
 * (alpha_s exp(sigma_sq/2) + exp(mu))/(alpha_s + 1).
 */
inline double lognormal_excess_variability(double alpha_s, double mu, double sigma_sq) {
    if (std::isinf(alpha_s)) {
        return std::exp(0.5 * sigma_sq);
    }
    return (alpha_s * std::exp(0.5 * sigma_sq) + std::exp(mu)) / (alpha_s + 1.0);
}

/// Dirichlet concentration of a model, infinite for the multinomial models.
inline double concentration(const ModelSpec& model) {
    if (const auto* dir = model.dirichlet()) {
        return dir->alpha_s();
    }
    return infinite_concentration;
}

/**
 * The scalar c in Cov(p) = c * Sigma_Pi for any of the four models.
 */
inline double proportion_scale(const ModelSpec& model) {
    const double alpha_s = concentration(model);
    if (const auto* fixed = std::get_if<FixedTotal>(&model.total())) {
        return fixed_total_scale(alpha_s, static_cast<double>(fixed->k));
    }
    const auto& ln = std::get<LognormalTotal>(model.total());
    return gamma_factor(alpha_s, ln.mu, ln.sigma_sq);
}

/// Normal approximation of the proportions: N(alpha_tilde, c * Sigma_Pi).
inline NormalApprox approx_proportions(const ModelSpec& model) {
    const auto& at = model.mean_probabilities();
    return NormalApprox(at.parts(), sigma_pi(at).scaled(proportion_scale(model)));
}

namespace internal {

inline std::vector<double> reciprocal(const Composition& p) {
    std::vector<double> out(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        out[j] = 1.0 / p[j];
    }
    return out;
}

}

/**
 * Delta-method ilr covariance as the full sandwich V' D^-1 Sigma_p D^-1 V.
 */
inline SymmetricMatrix ilr_cov_sandwich(const ModelSpec& model, const ContrastMatrix& v) {
    const auto& at = model.mean_probabilities();
    const auto inv = internal::reciprocal(at);
    return sandwich(v.matrix(), inv, approx_proportions(model).cov);
}

/**
 * The same covariance in its reduced form c * V' D^-1 V, using V'1 = 0 to drop
 * the rank-one part of Sigma_Pi.
 */
inline SymmetricMatrix ilr_cov_scaled(const ModelSpec& model, const ContrastMatrix& v) {
    const auto inv = internal::reciprocal(model.mean_probabilities());
    return quadratic_form(v.matrix(), inv).scaled(proportion_scale(model));
}

/**
 * First-order approximation: N(ilr(alpha_tilde), V' D^-1 Sigma_p D^-1 V).
 */
inline NormalApprox approx_ilr_plugin(const ModelSpec& model, const ContrastMatrix& v) {
    return NormalApprox(ilr(model.mean_probabilities(), v), ilr_cov_sandwich(model, v));
}

/// Second-order approximation E(ln x) ~ ln E(x) - Var(x)/(2 E(x)^2).
inline double log_expectation_correction(double mean, double variance) {
    if (!(mean > 0.0)) {
        throw InvalidArgument("log_expectation_correction requires a positive mean");
    }
    return std::log(mean) - variance / (2.0 * mean * mean);
}

/**
 * Diagonal of Sigma_Pi (lambda) and squared reciprocals of alpha_tilde (beta).
 */
struct CorrectionTerms {
    std::vector<double> lambda;
    std::vector<double> beta;
};

inline CorrectionTerms correction_terms(const Composition& alpha_tilde) {
    CorrectionTerms out;
    out.lambda.resize(alpha_tilde.size());
    out.beta.resize(alpha_tilde.size());
    for (std::size_t j = 0; j < alpha_tilde.size(); ++j) {
        out.lambda[j] = alpha_tilde[j] * (1.0 - alpha_tilde[j]);
        out.beta[j] = 1.0 / (alpha_tilde[j] * alpha_tilde[j]);
    }
    return out;
}

/**
 * Which factor multiplies lambda o beta / 2 in the corrected mean.
 */
enum class CorrectionMode {
    /// The proportion covariance scale c, so each term is Var(p_j)/(2 alpha_tilde_j^2).
    consistent,
    /// For fixed totals, (1/K)(alpha_s + K)/(K alpha_s + K) = c/K as printed in the
    /// original derivation. Lognormal totals use c in both modes.
    literal,
};

/// The factor applied to lambda o beta / 2.
inline double correction_factor(const ModelSpec& model, CorrectionMode mode) {
    const double c = proportion_scale(model);
    if (mode == CorrectionMode::literal) {
        if (const auto* fixed = std::get_if<FixedTotal>(&model.total())) {
            return c / static_cast<double>(fixed->k);
        }
    }
    return c;
}

/**
 * Second-order corrected approximation:
 * N(V'(ln(alpha_tilde) - factor/2 * lambda o beta), c V' D^-1 V).
 */
inline NormalApprox approx_ilr_corrected(const ModelSpec& model, const ContrastMatrix& v,
                                         CorrectionMode mode = CorrectionMode::consistent) {
    const auto& at = model.mean_probabilities();
    const auto terms = correction_terms(at);
    const double factor = correction_factor(model, mode);
    std::vector<double> log_mean(at.size());
    for (std::size_t j = 0; j < at.size(); ++j) {
        log_mean[j] = std::log(at[j]) - 0.5 * factor * terms.lambda[j] * terms.beta[j];
    }
    return NormalApprox(multiply_transposed(v.matrix(), log_mean), ilr_cov_sandwich(model, v));
}

/**
 * Pure-multinomial approximation N(V' ln(p), (1/K) V' D^-1 V), i.e. the
 * alpha_s -> infinity limit that ignores overdispersion.
 */
inline NormalApprox approx_ilr_multinomial(const Composition& p, double k, const ContrastMatrix& v) {
    if (!(k >= 1.0)) {
        throw InvalidArgument("approx_ilr_multinomial requires K >= 1");
    }
    const auto inv = internal::reciprocal(p);
    return NormalApprox(ilr(p, v), quadratic_form(v.matrix(), inv).scaled(1.0 / k));
}

/// Total count used by the multinomial baseline: K, or the median exp(mu) for lognormal totals.
inline double nominal_total(const ModelSpec& model) {
    if (const auto* fixed = std::get_if<FixedTotal>(&model.total())) {
        return static_cast<double>(fixed->k);
    }
    return std::exp(std::get<LognormalTotal>(model.total()).mu);
}

}

#endif
