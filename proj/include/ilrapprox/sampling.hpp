#ifndef ILRAPPROX_SAMPLING_HPP
#define ILRAPPROX_SAMPLING_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ilrapprox/composition.hpp"
#include "ilrapprox/model.hpp"

/**
 * @file sampling.hpp
 * @brief Seeded random variates for the count models and their building blocks.
 *
 * All samplers are written against `RandomStream` and consume only raw 64-bit
 * words from it, so results are bit-identical across standard libraries.
 * Distribution objects from <random> are avoided for that reason.
 */

namespace ilrapprox {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under `master`.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index ^ 0x5851f42d4c957f2dULL));
}

/**
 * Single-owner stream of random bits (64-bit Mersenne Twister, period 2^19937 - 1).
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for work unit `index` of a run seeded with `master`.
    static RandomStream substream(std::uint64_t master, std::uint64_t index) {
        return RandomStream(derive_seed(master, index));
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe to take the log of.
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal by the Marsaglia polar method (one value per call).
    double normal() {
        while (true) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

private:
    std::mt19937_64 engine_;
};

namespace internal {

/// ln(k!) from a table for small k and the Stirling series beyond.
inline double log_factorial(std::int64_t k) {
    static const auto table = [] {
        std::array<double, 256> t{};
        t[0] = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            t[i] = t[i - 1] + std::log(static_cast<double>(i));
        }
        return t;
    }();
    if (k < static_cast<std::int64_t>(table.size())) {
        return table[static_cast<std::size_t>(k)];
    }
    const double x = static_cast<double>(k) + 1.0;
    const double x2 = x * x;
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) +
           (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * x2)) / x2) / x;
}

/// Inversion, for n * p < 10 with p <= 0.5.
inline std::int64_t binomial_inversion(std::int64_t n, double p, RandomStream& rng) {
    const double q = 1.0 - p;
    const double s = p / q;
    const double a = static_cast<double>(n + 1) * s;
    const double r0 = std::pow(q, static_cast<double>(n));
    while (true) {
        double r = r0;
        double u = rng.uniform();
        std::int64_t x = 0;
        while (u > r) {
            u -= r;
            ++x;
            if (x > n) {
                break;
            }
            r *= a / static_cast<double>(x) - s;
        }
        if (x <= n) {
            return x;
        }
    }
}

/**
 * Transformed rejection with squeeze (Hormann's BTRS), for n * p >= 10 with p <= 0.5.
 * Expected cost is bounded independently of n.
 */
inline std::int64_t binomial_btrs(std::int64_t n, double p, RandomStream& rng) {
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double spq = std::sqrt(nd * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(p / q);
    const auto m = static_cast<std::int64_t>(std::floor((nd + 1.0) * p));
    const double h = log_factorial(m) + log_factorial(n - m);

    while (true) {
        const double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double kd = std::floor((2.0 * a / us + b) * u + c);
        if (kd < 0.0 || kd > nd) {
            continue;
        }
        const auto k = static_cast<std::int64_t>(kd);
        if (us >= 0.07 && v <= v_r) {
            return k;
        }
        v = std::log(v * alpha / (a / (us * us) + b));
        if (v <= h - log_factorial(k) - log_factorial(n - k) + static_cast<double>(k - m) * lpq) {
            return k;
        }
    }
}

}

/**
 * Binomial(n, p) draw. Inversion for small means, BTRS otherwise.
 */
inline std::int64_t sample_binomial(std::int64_t n, double p, RandomStream& rng) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("binomial requires n >= 0 and 0 <= p <= 1");
    }
    if (n == 0 || p == 0.0) {
        return 0;
    }
    if (p >= 1.0) {
        return n;
    }
    const bool flip = p > 0.5;
    const double pp = flip ? 1.0 - p : p;
    const std::int64_t x = static_cast<double>(n) * pp < 10.0 ? internal::binomial_inversion(n, pp, rng)
                                                              : internal::binomial_btrs(n, pp, rng);
    return flip ? n - x : x;
}

/**
 * Gamma(shape, 1) draw, always strictly positive.
 *
 * Marsaglia-Tsang squeeze/rejection for shape >= 1. Smaller shapes use
 * Gamma(a) = Gamma(a + 1) * U^(1/a), evaluated in log space; a result that
 * underflows to zero is discarded and redrawn.
 */
inline double sample_gamma(double shape, RandomStream& rng) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw InvalidArgument("gamma shape must be positive and finite");
    }
    if (shape < 1.0) {
        while (true) {
            const double boosted = sample_gamma(shape + 1.0, rng);
            const double out = std::exp(std::log(boosted) + std::log(rng.uniform_open()) / shape);
            if (out > 0.0) {
                return out;
            }
        }
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x;
        double v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) {
            return d * v;
        }
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

/**
 * Dirichlet draw as normalized gamma variates with shapes alpha_s * alpha_tilde_j.
 * Draws where a normalized part underflows to zero are redrawn so the result
 * stays on the open simplex.
 */
inline Composition sample_dirichlet(const DirichletSpec& spec, RandomStream& rng) {
    const std::size_t n = spec.size();
    std::vector<double> g(n);
    while (true) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = sample_gamma(spec.shape(j), rng);
            total += g[j];
        }
        bool positive = std::isfinite(total);
        for (std::size_t j = 0; j < n && positive; ++j) {
            g[j] /= total;
            positive = g[j] > 0.0;
        }
        if (positive) {
            return Composition(g);
        }
    }
}

/**
 * Multinomial(k, p) by sequential conditional binomials: O(J) expected work
 * independent of k.
 */
inline CountVector sample_multinomial(std::int64_t k, const Composition& p, RandomStream& rng) {
    if (k < 1) {
        throw InvalidArgument("multinomial total must be >= 1");
    }
    const std::size_t n = p.size();
    // Suffix sums keep the conditional probabilities free of cancellation error.
    std::vector<double> tail(n + 1, 0.0);
    for (std::size_t j = n; j-- > 0;) {
        tail[j] = tail[j + 1] + p[j];
    }
    std::vector<std::int64_t> counts(n, 0);
    std::int64_t remaining = k;
    for (std::size_t j = 0; j + 1 < n && remaining > 0; ++j) {
        const double conditional = std::min(1.0, p[j] / tail[j]);
        counts[j] = sample_binomial(remaining, conditional, rng);
        remaining -= counts[j];
    }
    counts[n - 1] += remaining;
    return CountVector(std::move(counts));
}

/**
 * Total count: the fixed K, or round(exp(N(mu, sigma_sq))) clamped to at least 1.
 * Throws `NumericalError` if a lognormal draw exceeds 2^62.
 */
inline std::int64_t sample_total(const TotalCountSpec& spec, RandomStream& rng) {
    if (const auto* fixed = std::get_if<FixedTotal>(&spec)) {
        return fixed->k;
    }
    const auto& ln = std::get<LognormalTotal>(spec);
    const double draw = std::exp(ln.mu + std::sqrt(ln.sigma_sq) * rng.normal());
    if (!(draw <= 0x1.0p62)) {
        throw NumericalError("lognormal total count exceeds the supported range");
    }
    return std::max<std::int64_t>(1, std::llround(draw));
}

/**
 * One count vector from a model: total, then (for Dirichlet models) class
 * probabilities, then the multinomial.
 */
inline CountVector sample_counts(const ModelSpec& model, RandomStream& rng) {
    const std::int64_t k = sample_total(model.total(), rng);
    if (const auto* dir = model.dirichlet()) {
        return sample_multinomial(k, sample_dirichlet(*dir, rng), rng);
    }
    return sample_multinomial(k, model.mean_probabilities(), rng);
}

/// Exact log-probability of `x` under Multinomial(x.total(), p).
inline double multinomial_log_pmf(const CountVector& x, const Composition& p) {
    if (x.size() != p.size()) {
        throw DimensionError("multinomial_log_pmf: dimension mismatch");
    }
    double out = std::lgamma(static_cast<double>(x.total()) + 1.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double xj = static_cast<double>(x[j]);
        out += xj * std::log(p[j]) - std::lgamma(xj + 1.0);
    }
    return out;
}

namespace internal {

/// ln(a (a + 1) ... (a + n - 1)); summed directly for short products to avoid lgamma cancellation.
inline double log_rising_factorial(double a, std::int64_t n) {
    if (n <= 256) {
        double out = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            out += std::log(a + static_cast<double>(i));
        }
        return out;
    }
    return std::lgamma(a + static_cast<double>(n)) - std::lgamma(a);
}

}

/// Exact log-probability of `x` under the Dirichlet-multinomial with total x.total().
inline double dm_log_pmf(const CountVector& x, const DirichletSpec& spec) {
    if (x.size() != spec.size()) {
        throw DimensionError("dm_log_pmf: dimension mismatch");
    }
    if (x.total() < 1) {
        throw InvalidArgument("dm_log_pmf requires a positive total");
    }
    const double k = static_cast<double>(x.total());
    const double as = spec.alpha_s();
    double out = std::lgamma(k + 1.0) - internal::log_rising_factorial(as, x.total());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out += internal::log_rising_factorial(spec.shape(j), x[j]) - std::lgamma(static_cast<double>(x[j]) + 1.0);
    }
    return out;
}

}

#endif
