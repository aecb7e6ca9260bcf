#ifndef ILRAPPROX_MODEL_HPP
#define ILRAPPROX_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "ilrapprox/composition.hpp"
#include "ilrapprox/error.hpp"

/**
 * @file model.hpp
 * @brief Parameter types for the four count-generating distributions.
 */

namespace ilrapprox {

/**
 * Dirichlet class probabilities in mean/concentration form:
 * shape parameters are `alpha_s * alpha_tilde[j]`.
 */
class DirichletSpec {
public:
    DirichletSpec(Composition alpha_tilde, double alpha_s) : alpha_tilde_(std::move(alpha_tilde)), alpha_s_(alpha_s) {
        if (!(alpha_s_ > 0.0) || !std::isfinite(alpha_s_)) {
            throw InvalidArgument("Dirichlet concentration must be positive and finite");
        }
    }

    const Composition& alpha_tilde() const { return alpha_tilde_; }
    double alpha_s() const { return alpha_s_; }
    std::size_t size() const { return alpha_tilde_.size(); }
    double shape(std::size_t j) const { return alpha_s_ * alpha_tilde_[j]; }

    /// Every shape parameter exceeds one, so the density has a single interior mode.
    bool unimodal() const {
        return *std::min_element(alpha_tilde_.parts().begin(), alpha_tilde_.parts().end()) * alpha_s_ > 1.0;
    }

    bool operator==(const DirichletSpec&) const = default;

private:
    Composition alpha_tilde_;
    double alpha_s_;
};

struct FixedTotal {
    std::int64_t k = 1;
    bool operator==(const FixedTotal&) const = default;
};

/// Total count round(exp(N(mu, sigma_sq))); exp(mu) is the median.
struct LognormalTotal {
    double mu = 0.0;
    double sigma_sq = 1.0;
    bool operator==(const LognormalTotal&) const = default;
};

using TotalCountSpec = std::variant<FixedTotal, LognormalTotal>;

inline void validate(const TotalCountSpec& spec) {
    if (const auto* fixed = std::get_if<FixedTotal>(&spec)) {
        if (fixed->k < 1) {
            throw InvalidArgument("fixed total count must be >= 1");
        }
    } else {
        const auto& ln = std::get<LognormalTotal>(spec);
        if (!(ln.sigma_sq > 0.0) || !std::isfinite(ln.mu)) {
            throw InvalidArgument("lognormal total requires finite mu and sigma_sq > 0");
        }
    }
}

/// Data-generating distribution.
enum class Dgd {
    multinomial,                  ///< (a) fixed K, fixed p
    dirichlet_multinomial,        ///< (b) fixed K, Dirichlet p
    lognormal_multinomial,        ///< (c) lognormal K, fixed p
    lognormal_dirichlet_multinomial,  ///< (d) lognormal K, Dirichlet p
};

inline bool has_dirichlet(Dgd d) {
    return d == Dgd::dirichlet_multinomial || d == Dgd::lognormal_dirichlet_multinomial;
}

inline bool has_lognormal_total(Dgd d) {
    return d == Dgd::lognormal_multinomial || d == Dgd::lognormal_dirichlet_multinomial;
}

/// Single-letter code used in configs and CSV output.
inline std::string_view dgd_code(Dgd d) {
    switch (d) {
    case Dgd::multinomial:
        return "a";
    case Dgd::dirichlet_multinomial:
        return "b";
    case Dgd::lognormal_multinomial:
        return "c";
    case Dgd::lognormal_dirichlet_multinomial:
        return "d";
    }
    return "?";
}

inline Dgd parse_dgd(std::string_view code) {
    if (code == "a") return Dgd::multinomial;
    if (code == "b") return Dgd::dirichlet_multinomial;
    if (code == "c") return Dgd::lognormal_multinomial;
    if (code == "d") return Dgd::lognormal_dirichlet_multinomial;
    throw InvalidArgument("unknown data-generating distribution '" + std::string(code) + "'");
}

inline std::string_view dgd_name(Dgd d) {
    switch (d) {
    case Dgd::multinomial:
        return "Mn";
    case Dgd::dirichlet_multinomial:
        return "Dir-Mn";
    case Dgd::lognormal_multinomial:
        return "LN-Mn";
    case Dgd::lognormal_dirichlet_multinomial:
        return "LN-Dir-Mn";
    }
    return "?";
}

/**
 * One of the four count models with its parameters. The constructors enforce
 * that the probability and total-count parts match the distribution.
 */
class ModelSpec {
public:
    static ModelSpec multinomial(Composition p, std::int64_t k) {
        return ModelSpec(Dgd::multinomial, std::move(p), FixedTotal{k});
    }
    static ModelSpec dirichlet_multinomial(DirichletSpec dir, std::int64_t k) {
        return ModelSpec(Dgd::dirichlet_multinomial, std::move(dir), FixedTotal{k});
    }
    static ModelSpec lognormal_multinomial(Composition p, double mu, double sigma_sq) {
        return ModelSpec(Dgd::lognormal_multinomial, std::move(p), LognormalTotal{mu, sigma_sq});
    }
    static ModelSpec lognormal_dirichlet_multinomial(DirichletSpec dir, double mu, double sigma_sq) {
        return ModelSpec(Dgd::lognormal_dirichlet_multinomial, std::move(dir), LognormalTotal{mu, sigma_sq});
    }

    Dgd dgd() const { return dgd_; }
    const TotalCountSpec& total() const { return total_; }

    /// Fixed p for (a)/(c), the Dirichlet mean for (b)/(d).
    const Composition& mean_probabilities() const {
        if (const auto* p = std::get_if<Composition>(&probabilities_)) {
            return *p;
        }
        return std::get<DirichletSpec>(probabilities_).alpha_tilde();
    }

    const DirichletSpec* dirichlet() const { return std::get_if<DirichletSpec>(&probabilities_); }

    std::size_t parts() const { return mean_probabilities().size(); }

    bool operator==(const ModelSpec&) const = default;

private:
    ModelSpec(Dgd dgd, std::variant<Composition, DirichletSpec> probabilities, TotalCountSpec total)
        : dgd_(dgd), probabilities_(std::move(probabilities)), total_(total) {
        validate(total_);
    }

    Dgd dgd_;
    std::variant<Composition, DirichletSpec> probabilities_;
    TotalCountSpec total_;
};

}

#endif
