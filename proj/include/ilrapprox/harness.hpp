#ifndef ILRAPPROX_HARNESS_HPP
#define ILRAPPROX_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "ilrapprox/approx.hpp"
#include "ilrapprox/composition.hpp"
#include "ilrapprox/linalg.hpp"
#include "ilrapprox/model.hpp"
#include "ilrapprox/sampling.hpp"

/**
 * @file harness.hpp
 * @brief Monte Carlo verification of the ilr normal approximations.
 */

namespace ilrapprox {

/**
 * One simulation cell: a model, a partition, and how to draw from it.
 */
struct Scenario {
    ModelSpec model;
    SbpMatrix sbp;
    std::int64_t n_draws = 10000;
    double zero_replacement = 0.5;
    ZeroPolicy zero_policy = ZeroPolicy::renormalize;
    std::uint64_t seed = 0;
    std::string label;
};

/**
 * Empirical moments of the ilr coordinates and proportions over all draws.
 */
struct EmpiricalSummary {
    std::int64_t n_draws = 0;
    std::vector<double> mean_ilr;
    SymmetricMatrix cov_ilr;
    /// Eigenvalues of `cov_ilr`, nonincreasing.
    std::vector<double> eigenvalues;
    /// Per coordinate, the sampled values in nondecreasing order.
    std::vector<std::vector<double>> sorted_coords;
    std::vector<double> mean_props;
    SymmetricMatrix cov_props;
    /// Fraction of draws with at least one zero count.
    double zero_fraction = 0.0;
};

/**
 * Sample mean and (n - 1)-divisor covariance of `n` rows of width `d`, stored
 * row-major. Two passes: the covariance is accumulated on centered values.
 */
inline std::pair<std::vector<double>, SymmetricMatrix> sample_moments(std::span<const double> rows, std::size_t d) {
    if (d == 0 || rows.size() % d != 0) {
        throw DimensionError("sample moments: data length is not a multiple of the row width");
    }
    const std::size_t n = rows.size() / d;
    if (n < 2) {
        throw InvalidArgument("sample moments need at least two rows");
    }
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            mean[c] += rows[i * d + c];
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(n);
    }
    Matrix acc(d, d);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            centered[c] = rows[i * d + c] - mean[c];
        }
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) {
                acc(a, b) += centered[a] * centered[b];
            }
        }
    }
    SymmetricMatrix cov(d);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            cov.set(a, b, acc(a, b) / static_cast<double>(n - 1));
        }
    }
    return {std::move(mean), std::move(cov)};
}

/**
 * Draws `s.n_draws` count vectors, closes them with zero replacement, and
 * summarizes their ilr coordinates. Deterministic in `s.seed`.
 */
inline EmpiricalSummary run_scenario(const Scenario& s) {
    if (s.n_draws < 2) {
        throw InvalidArgument("scenario '" + s.label + "' needs at least two draws");
    }
    if (s.sbp.parts() != s.model.parts()) {
        throw DimensionError("scenario '" + s.label + "': partition and model have different part counts");
    }
    const auto v = contrast_matrix(s.sbp);
    const std::size_t parts = s.model.parts();
    const std::size_t coords = parts - 1;
    const auto n = static_cast<std::size_t>(s.n_draws);

    RandomStream rng(s.seed);
    std::vector<double> ilr_rows(n * coords);
    std::vector<double> prop_rows(n * parts);
    std::int64_t with_zero = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const auto x = sample_counts(s.model, rng);
        with_zero += x.has_zero();
        const auto m = ilr(close(x, s.zero_replacement), v);
        std::copy(m.begin(), m.end(), ilr_rows.begin() + static_cast<std::ptrdiff_t>(i * coords));
        const auto p = proportions(x, s.zero_replacement, s.zero_policy);
        std::copy(p.begin(), p.end(), prop_rows.begin() + static_cast<std::ptrdiff_t>(i * parts));
    }

    EmpiricalSummary out;
    out.n_draws = s.n_draws;
    std::tie(out.mean_ilr, out.cov_ilr) = sample_moments(ilr_rows, coords);
    std::tie(out.mean_props, out.cov_props) = sample_moments(prop_rows, parts);
    out.eigenvalues = eigenvalues(out.cov_ilr);
    out.zero_fraction = static_cast<double>(with_zero) / static_cast<double>(n);
    out.sorted_coords.assign(coords, std::vector<double>(n));
    for (std::size_t c = 0; c < coords; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            out.sorted_coords[c][i] = ilr_rows[i * coords + c];
        }
        std::sort(out.sorted_coords[c].begin(), out.sorted_coords[c].end());
    }
    return out;
}

/**
 * Log-ratios of empirical over approximate means and eigenvalues; 0 is perfect agreement.
 */
struct ComparisonReport {
    /// ln(|empirical| / |approx|) per coordinate.
    std::vector<double> log_ratio_means;
    /// ln(empirical / approx) per eigenvalue, both sorted nonincreasing.
    std::vector<double> log_ratio_eigs;
    /// Empirical and approximate means differ in sign (or exactly one is zero).
    std::vector<bool> sign_mismatch;
    std::vector<double> approx_eigenvalues;
};

/**
 * Compares a summary with an approximation. Means are compared on absolute
 * values, with `sign_mismatch` set where the signs disagree; if exactly one of
 * the two is zero the ratio is NaN. Non-positive eigenvalues also give NaN.
 */
inline ComparisonReport compare(const EmpiricalSummary& e, const NormalApprox& a) {
    if (e.mean_ilr.size() != a.dim()) {
        throw DimensionError("compare: summary and approximation dimensions differ");
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const std::size_t d = a.dim();
    ComparisonReport out;
    out.log_ratio_means.resize(d);
    out.sign_mismatch.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double em = e.mean_ilr[i];
        const double am = a.mean[i];
        if (em == 0.0 && am == 0.0) {
            out.log_ratio_means[i] = 0.0;
            continue;
        }
        if (em == 0.0 || am == 0.0) {
            out.sign_mismatch[i] = true;
            out.log_ratio_means[i] = nan;
            continue;
        }
        out.sign_mismatch[i] = std::signbit(em) != std::signbit(am);
        out.log_ratio_means[i] = std::log(std::abs(em) / std::abs(am));
    }
    out.approx_eigenvalues = eigenvalues(a.cov);
    out.log_ratio_eigs.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double ee = e.eigenvalues[i];
        const double ae = out.approx_eigenvalues[i];
        out.log_ratio_eigs[i] = (ee > 0.0 && ae > 0.0) ? std::log(ee / ae) : nan;
    }
    return out;
}

/**
 * Standard normal quantile function.
 */
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidArgument("normal_quantile requires 0 < p < 1");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

struct QqSeries {
    std::vector<double> theoretical_quantiles;
    std::vector<double> sample_quantiles;
};

/**
 * Normal Q-Q pairs for one coordinate, with plotting positions (i - 0.5)/n
 * under N(a.mean[coord], a.cov(coord, coord)).
 */
inline QqSeries qq_series(std::span<const double> sorted_samples, const NormalApprox& a, std::size_t coord) {
    if (coord >= a.dim()) {
        throw InvalidArgument("qq_series: coordinate index out of range");
    }
    if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end())) {
        throw InvalidArgument("qq_series: samples must be sorted");
    }
    const std::size_t n = sorted_samples.size();
    const double mu = a.mean[coord];
    const double sd = std::sqrt(std::max(0.0, a.cov(coord, coord)));
    QqSeries out;
    out.sample_quantiles.assign(sorted_samples.begin(), sorted_samples.end());
    out.theoretical_quantiles.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        out.theoretical_quantiles[i] = mu + sd * normal_quantile(pos);
    }
    return out;
}

/// Pearson correlation of the Q-Q pairs; 0 when either side has no spread.
inline double qq_correlation(const QqSeries& qq) {
    const std::size_t n = qq.sample_quantiles.size();
    if (n < 2) {
        return 0.0;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += qq.theoretical_quantiles[i];
        my += qq.sample_quantiles[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = qq.theoretical_quantiles[i] - mx;
        const double dy = qq.sample_quantiles[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

/**
 * One excess-variability cell: the ratio of proportion variance under the
 * model to that of a multinomial with K (or the median total exp(mu)).
 */
struct ExcessCell {
    Dgd dgd;
    /// Infinite for the multinomial models.
    double alpha_s;
    /// Zero for fixed totals.
    double sigma_sq;
    /// K, or the median total for lognormal models.
    double k;
    double excess;
};

inline double excess_for(Dgd dgd, double alpha_s, double sigma_sq, double k) {
    switch (dgd) {
    case Dgd::multinomial:
        return 1.0;
    case Dgd::dirichlet_multinomial:
        return excess_variability(alpha_s, k);
    case Dgd::lognormal_multinomial:
        return lognormal_excess_variability(infinite_concentration, std::log(k), sigma_sq);
    case Dgd::lognormal_dirichlet_multinomial:
        return lognormal_excess_variability(alpha_s, std::log(k), sigma_sq);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/**
 * A row of the excess-variability table: one model family and concentration,
 * evaluated at every total in `ks`.
 */
struct ExcessRow {
    Dgd dgd;
    double alpha_s = infinite_concentration;
    double sigma_sq = 0.0;
    std::vector<double> ks;
};

inline std::vector<ExcessCell> excess_variability_table(const std::vector<ExcessRow>& rows) {
    std::vector<ExcessCell> out;
    for (const auto& row : rows) {
        for (double k : row.ks) {
            const double alpha_s = has_dirichlet(row.dgd) ? row.alpha_s : infinite_concentration;
            const double sigma_sq = has_lognormal_total(row.dgd) ? row.sigma_sq : 0.0;
            out.push_back({row.dgd, alpha_s, sigma_sq, k, excess_for(row.dgd, alpha_s, sigma_sq, k)});
        }
    }
    return out;
}

/**
 * Rows of the published excess-variability table: 18 rows over the five totals.
 */
inline std::vector<ExcessRow> standard_excess_rows() {
    const std::vector<double> ks{101, 1000, 10000, 100000, 1000000};
    const std::vector<double> alphas{101, 1000, 10000, 100000, 1000000};
    std::vector<ExcessRow> rows;
    rows.push_back({Dgd::multinomial, infinite_concentration, 0.0, ks});
    for (double a : alphas) {
        rows.push_back({Dgd::dirichlet_multinomial, a, 0.0, ks});
    }
    for (double s2 : {0.1, 1.0}) {
        rows.push_back({Dgd::lognormal_multinomial, infinite_concentration, s2, ks});
        for (double a : alphas) {
            rows.push_back({Dgd::lognormal_dirichlet_multinomial, a, s2, ks});
        }
    }
    return rows;
}

/**
 * Exact distribution of the ilr coordinates of closed counts, by enumerating
 * every count vector with the model's fixed total.
 */
struct ExactDistribution {
    std::size_t coords = 0;
    std::vector<double> probabilities;
    /// One row of ilr coordinates per outcome, row-major.
    std::vector<double> ilr_rows;
    std::vector<std::vector<std::int64_t>> outcomes;
    double total_probability = 0.0;
    std::vector<double> mean;
    SymmetricMatrix cov;
};

/// Number of compositions of k into `parts` nonnegative parts, C(k + parts - 1, parts - 1).
inline double composition_count(std::int64_t k, std::size_t parts) {
    double out = 1.0;
    for (std::size_t i = 1; i < parts; ++i) {
        out *= static_cast<double>(k + static_cast<std::int64_t>(i)) / static_cast<double>(i);
    }
    return std::round(out);
}

/**
 * Enumerates a fixed-total multinomial or Dirichlet-multinomial model. Outcome
 * weights come from the exact pmf; zero counts are replaced before closure as
 * in the simulations. Throws `InvalidArgument` for lognormal totals or when the
 * outcome count exceeds `max_outcomes`.
 */
inline ExactDistribution enumerate_exact(const ModelSpec& model, const SbpMatrix& sbp, double zero_replacement,
                                         double max_outcomes = 1e6) {
    const auto* fixed = std::get_if<FixedTotal>(&model.total());
    if (fixed == nullptr) {
        throw InvalidArgument("enumerate_exact requires a fixed total count");
    }
    const std::size_t parts = model.parts();
    const std::int64_t k = fixed->k;
    if (composition_count(k, parts) > max_outcomes) {
        throw InvalidArgument("enumerate_exact: instance too large (" + std::to_string(composition_count(k, parts)) +
                              " outcomes)");
    }
    const auto v = contrast_matrix(sbp);

    ExactDistribution out;
    out.coords = parts - 1;
    std::vector<std::int64_t> x(parts, 0);
    auto visit = [&](auto&& self, std::size_t j, std::int64_t remaining) -> void {
        if (j + 1 == parts) {
            x[j] = remaining;
            CountVector cv(x);
            const double logp = model.dirichlet() ? dm_log_pmf(cv, *model.dirichlet())
                                                  : multinomial_log_pmf(cv, model.mean_probabilities());
            out.probabilities.push_back(std::exp(logp));
            const auto m = ilr(close(cv, zero_replacement), v);
            out.ilr_rows.insert(out.ilr_rows.end(), m.begin(), m.end());
            out.outcomes.push_back(x);
            return;
        }
        for (std::int64_t c = remaining; c >= 0; --c) {
            x[j] = c;
            self(self, j + 1, remaining - c);
        }
    };
    visit(visit, 0, k);

    const std::size_t d = out.coords;
    out.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < out.probabilities.size(); ++i) {
        out.total_probability += out.probabilities[i];
        for (std::size_t c = 0; c < d; ++c) {
            out.mean[c] += out.probabilities[i] * out.ilr_rows[i * d + c];
        }
    }
    out.cov = SymmetricMatrix(d);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < out.probabilities.size(); ++i) {
                acc += out.probabilities[i] * (out.ilr_rows[i * d + a] - out.mean[a]) *
                       (out.ilr_rows[i * d + b] - out.mean[b]);
            }
            out.cov.set(a, b, acc);
        }
    }
    return out;
}

/// The approximation a comparison is made against.
enum class ApproxVariant {
    plugin,       ///< mean ilr(alpha_tilde), first-order covariance
    corrected,    ///< second-order corrected mean
    multinomial,  ///< overdispersion ignored
};

inline std::string_view variant_name(ApproxVariant v) {
    switch (v) {
    case ApproxVariant::plugin:
        return "plugin";
    case ApproxVariant::corrected:
        return "corrected";
    case ApproxVariant::multinomial:
        return "multinomial";
    }
    return "?";
}

inline NormalApprox make_approx(ApproxVariant variant, const ModelSpec& model, const ContrastMatrix& v,
                                CorrectionMode mode = CorrectionMode::consistent) {
    switch (variant) {
    case ApproxVariant::plugin:
        return approx_ilr_plugin(model, v);
    case ApproxVariant::corrected:
        return approx_ilr_corrected(model, v, mode);
    case ApproxVariant::multinomial:
        return approx_ilr_multinomial(model.mean_probabilities(), nominal_total(model), v);
    }
    throw InvalidArgument("unknown approximation variant");
}

struct VariantComparison {
    ApproxVariant variant;
    NormalApprox approx;
    ComparisonReport report;
};

struct ScenarioResult {
    Scenario scenario;
    std::optional<EmpiricalSummary> summary;
    std::vector<VariantComparison> comparisons;
    /// Empty on success.
    std::string error;

    bool ok() const { return error.empty(); }
};

struct GridOptions {
    std::size_t parallelism = 1;
    CorrectionMode correction = CorrectionMode::consistent;
};

/// Runs one scenario and compares it against every approximation variant.
inline ScenarioResult evaluate_scenario(const Scenario& s, CorrectionMode mode = CorrectionMode::consistent) {
    ScenarioResult out{s, std::nullopt, {}, {}};
    try {
        out.summary = run_scenario(s);
        const auto v = contrast_matrix(s.sbp);
        for (auto variant : {ApproxVariant::plugin, ApproxVariant::corrected, ApproxVariant::multinomial}) {
            auto approx = make_approx(variant, s.model, v, mode);
            auto report = compare(*out.summary, approx);
            out.comparisons.push_back({variant, std::move(approx), std::move(report)});
        }
    } catch (const std::exception& ex) {
        out.summary.reset();
        out.comparisons.clear();
        out.error = ex.what();
    }
    return out;
}

/**
 * Runs every scenario, `parallelism` at a time. Each scenario draws only from
 * its own seed, so results do not depend on scheduling. A failing scenario is
 * reported in its result and does not stop the others. Output is sorted by label.
 */
inline std::vector<ScenarioResult> run_grid(const std::vector<Scenario>& scenarios, const GridOptions& options = {}) {
    std::set<std::string> labels;
    for (const auto& s : scenarios) {
        if (!labels.insert(s.label).second) {
            throw InvalidArgument("duplicate scenario label '" + s.label + "'");
        }
    }

    std::vector<std::optional<ScenarioResult>> slots(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            slots[i] = evaluate_scenario(scenarios[i], options.correction);
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(1, scenarios.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    std::vector<ScenarioResult> out;
    out.reserve(scenarios.size());
    for (auto& slot : slots) {
        out.push_back(std::move(*slot));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.scenario.label < b.scenario.label; });
    return out;
}

}

#endif
