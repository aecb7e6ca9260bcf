#ifndef ILRAPPROX_COMPOSITION_HPP
#define ILRAPPROX_COMPOSITION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ilrapprox/error.hpp"
#include "ilrapprox/linalg.hpp"

/**
 * @file composition.hpp
 * @brief Simplex machinery: closure, sequential binary partitions, contrast matrices and the ilr transform.
 */

namespace ilrapprox {

/// Absolute tolerance on the unit sum of a composition.
inline constexpr double simplex_tolerance = 1e-12;

/**
 * A point on the open simplex: strictly positive parts summing to one.
 */
class Composition {
public:
    explicit Composition(std::vector<double> parts) : parts_(std::move(parts)) {
        if (parts_.size() < 2) {
            throw InvalidArgument("composition needs at least two parts");
        }
        double total = 0.0;
        for (std::size_t j = 0; j < parts_.size(); ++j) {
            if (!(parts_[j] > 0.0) || !std::isfinite(parts_[j])) {
                throw InvalidArgument("composition part " + std::to_string(j) + " is not strictly positive");
            }
            total += parts_[j];
        }
        if (std::abs(total - 1.0) > simplex_tolerance) {
            throw InvalidArgument("composition parts sum to " + std::to_string(total) + ", not 1");
        }
    }

    /// Divides a positive vector by its sum.
    static Composition closure(std::span<const double> values) {
        const double total = std::accumulate(values.begin(), values.end(), 0.0);
        std::vector<double> parts(values.begin(), values.end());
        for (auto& p : parts) {
            p /= total;
        }
        return Composition(std::move(parts));
    }

    static Composition uniform(std::size_t parts) {
        return Composition(std::vector<double>(parts, 1.0 / static_cast<double>(parts)));
    }

    std::size_t size() const { return parts_.size(); }
    double operator[](std::size_t j) const { return parts_[j]; }
    const std::vector<double>& parts() const { return parts_; }

    std::vector<double> log_parts() const {
        std::vector<double> out(parts_.size());
        std::transform(parts_.begin(), parts_.end(), out.begin(), [](double p) { return std::log(p); });
        return out;
    }

    bool operator==(const Composition&) const = default;

private:
    std::vector<double> parts_;
};

/**
 * Class counts with their total.
 */
class CountVector {
public:
    explicit CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
        for (auto c : counts_) {
            if (c < 0) {
                throw InvalidArgument("negative count");
            }
            total_ += c;
        }
    }

    std::size_t size() const { return counts_.size(); }
    std::int64_t operator[](std::size_t j) const { return counts_[j]; }
    std::int64_t total() const { return total_; }
    const std::vector<std::int64_t>& counts() const { return counts_; }

    bool has_zero() const {
        return std::any_of(counts_.begin(), counts_.end(), [](auto c) { return c == 0; });
    }

    bool operator==(const CountVector&) const = default;

private:
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

/**
 * How zero counts are turned into proportions.
 */
enum class ZeroPolicy {
    /// Replace zeros, then divide by the adjusted total so the result sums to one.
    renormalize,
    /// Replace zeros, then divide by the original count total. The result does not sum to one.
    divide_by_original_total,
};

inline std::vector<double> replace_zeros(const CountVector& x, double replacement) {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = x[j] == 0 ? replacement : static_cast<double>(x[j]);
    }
    return out;
}

/**
 * Counts to a composition. Zero counts become `replacement` and the result is
 * divided by the adjusted total.
 */
inline Composition close(const CountVector& x, double replacement = 0.5) {
    if (x.has_zero() && !(replacement > 0.0)) {
        throw InvalidArgument("zero counts present but zero replacement is not positive");
    }
    return Composition::closure(replace_zeros(x, replacement));
}

/**
 * Proportions under either zero policy. Only `renormalize` lies on the simplex;
 * the ilr coordinates are the same either way since the contrasts annihilate a
 * common log-scale factor.
 */
inline std::vector<double> proportions(const CountVector& x, double replacement, ZeroPolicy policy) {
    if (policy == ZeroPolicy::renormalize) {
        return close(x, replacement).parts();
    }
    if (x.has_zero() && !(replacement > 0.0)) {
        throw InvalidArgument("zero counts present but zero replacement is not positive");
    }
    auto out = replace_zeros(x, replacement);
    const double total = static_cast<double>(x.total());
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

/**
 * Sequential binary partition: J rows, J-1 columns of {+1, -1, 0}.
 * Use `make_sbp()` or `pivotal_sbp()` to obtain a validated instance.
 */
class SbpMatrix {
public:
    std::size_t parts() const { return parts_; }
    std::size_t splits() const { return parts_ == 0 ? 0 : parts_ - 1; }
    int operator()(std::size_t j, std::size_t k) const { return signs_[j * splits() + k]; }

    std::vector<std::vector<int>> to_rows() const {
        std::vector<std::vector<int>> out(parts_, std::vector<int>(splits()));
        for (std::size_t j = 0; j < parts_; ++j) {
            for (std::size_t k = 0; k < splits(); ++k) {
                out[j][k] = (*this)(j, k);
            }
        }
        return out;
    }

    bool operator==(const SbpMatrix&) const = default;

private:
    friend SbpMatrix make_sbp(const std::vector<std::vector<int>>&);
    std::size_t parts_ = 0;
    std::vector<int> signs_;
};

/**
 * Outcome of `validate_sbp()`.
 */
struct SbpReport {
    bool ok = true;
    /// 0-based index of the first offending column, if the problem is column-specific.
    std::optional<std::size_t> column;
    std::string message;
};

/**
 * Checks that a sign matrix is a sequential binary partition.
 *
 * Column 1 has no zeros; every column has at least one +1 and one -1; the
 * support of each later column equals the + side or the - side of exactly one
 * earlier column; and no two columns split the same group.
 */
inline SbpReport validate_sbp(const std::vector<std::vector<int>>& psi) {
    auto fail = [](std::optional<std::size_t> column, std::string message) {
        return SbpReport{false, column, std::move(message)};
    };

    const std::size_t parts = psi.size();
    if (parts < 2) {
        return fail(std::nullopt, "need at least two rows");
    }
    const std::size_t splits = parts - 1;
    for (const auto& row : psi) {
        if (row.size() != splits) {
            return fail(std::nullopt, "expected " + std::to_string(splits) + " columns per row");
        }
        for (int v : row) {
            if (v != -1 && v != 0 && v != 1) {
                return fail(std::nullopt, "entries must be -1, 0 or +1");
            }
        }
    }

    auto side = [&](std::size_t k, int sign) {
        std::vector<bool> out(parts);
        for (std::size_t j = 0; j < parts; ++j) {
            out[j] = psi[j][k] == sign;
        }
        return out;
    };
    auto support = [&](std::size_t k) {
        std::vector<bool> out(parts);
        for (std::size_t j = 0; j < parts; ++j) {
            out[j] = psi[j][k] != 0;
        }
        return out;
    };

    for (std::size_t k = 0; k < splits; ++k) {
        bool has_plus = false;
        bool has_minus = false;
        bool has_zero = false;
        for (std::size_t j = 0; j < parts; ++j) {
            has_plus |= psi[j][k] == 1;
            has_minus |= psi[j][k] == -1;
            has_zero |= psi[j][k] == 0;
        }
        if (!has_plus) {
            return fail(k, "column " + std::to_string(k + 1) + " lacks +1");
        }
        if (!has_minus) {
            return fail(k, "column " + std::to_string(k + 1) + " lacks -1");
        }
        if (k == 0) {
            if (has_zero) {
                return fail(k, "column 1 must not contain zeros");
            }
            continue;
        }

        const auto sup = support(k);
        int matches = 0;
        for (std::size_t earlier = 0; earlier < k; ++earlier) {
            if (support(earlier) == sup) {
                return fail(k, "column " + std::to_string(k + 1) + " repeats the split of column " +
                                   std::to_string(earlier + 1) + "; not sequential");
            }
            matches += side(earlier, 1) == sup;
            matches += side(earlier, -1) == sup;
        }
        if (matches != 1) {
            return fail(k, "column " + std::to_string(k + 1) + " is not sequential");
        }
    }
    return {};
}

/// Validated construction; throws `InvalidArgument` carrying the report message.
inline SbpMatrix make_sbp(const std::vector<std::vector<int>>& psi) {
    const auto report = validate_sbp(psi);
    if (!report.ok) {
        throw InvalidArgument("invalid SBP: " + report.message);
    }
    SbpMatrix out;
    out.parts_ = psi.size();
    out.signs_.reserve(psi.size() * (psi.size() - 1));
    for (const auto& row : psi) {
        out.signs_.insert(out.signs_.end(), row.begin(), row.end());
    }
    return out;
}

/**
 * The pivotal partition: column k contrasts part k against parts k+1..J.
 */
inline SbpMatrix pivotal_sbp(std::size_t parts) {
    if (parts < 2) {
        throw InvalidArgument("pivotal_sbp requires J >= 2");
    }
    std::vector<std::vector<int>> psi(parts, std::vector<int>(parts - 1, 0));
    for (std::size_t k = 0; k + 1 < parts; ++k) {
        psi[k][k] = 1;
        for (std::size_t j = k + 1; j < parts; ++j) {
            psi[j][k] = -1;
        }
    }
    return make_sbp(psi);
}

/**
 * Orthonormal J x (J-1) log-contrast basis with zero column sums.
 */
class ContrastMatrix {
public:
    /// Accepts any matrix meeting the invariants, not only those derived from an SBP.
    explicit ContrastMatrix(Matrix v) : v_(std::move(v)) {
        if (v_.rows() < 2 || v_.cols() + 1 != v_.rows()) {
            throw DimensionError("contrast matrix must be J x (J-1)");
        }
        const double gram_error = max_abs_diff(multiply(v_.transpose(), v_), Matrix::identity(v_.cols()));
        if (gram_error > simplex_tolerance) {
            throw InvalidArgument("contrast matrix columns are not orthonormal (error " + std::to_string(gram_error) + ")");
        }
        for (std::size_t k = 0; k < v_.cols(); ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < v_.rows(); ++j) {
                sum += v_(j, k);
            }
            if (std::abs(sum) > simplex_tolerance) {
                throw InvalidArgument("contrast matrix column " + std::to_string(k + 1) + " does not sum to zero");
            }
        }
    }

    std::size_t parts() const { return v_.rows(); }
    std::size_t coords() const { return v_.cols(); }
    const Matrix& matrix() const { return v_; }
    double operator()(std::size_t j, std::size_t k) const { return v_(j, k); }

private:
    Matrix v_;
};

namespace internal {

inline std::pair<std::size_t, std::size_t> side_sizes(const SbpMatrix& psi, std::size_t k) {
    std::size_t plus = 0;
    std::size_t minus = 0;
    for (std::size_t j = 0; j < psi.parts(); ++j) {
        plus += psi(j, k) == 1;
        minus += psi(j, k) == -1;
    }
    return {plus, minus};
}

}

/**
 * Contrast matrix of an SBP: +sqrt(n-/(n+(n+ + n-))) on the + side,
 * -sqrt(n+/(n-(n+ + n-))) on the - side, zero elsewhere.
 */
inline ContrastMatrix contrast_matrix(const SbpMatrix& psi) {
    Matrix v(psi.parts(), psi.splits());
    for (std::size_t k = 0; k < psi.splits(); ++k) {
        const auto [np, nm] = internal::side_sizes(psi, k);
        const double plus = static_cast<double>(np);
        const double minus = static_cast<double>(nm);
        const double pos = std::sqrt(minus / (plus * (plus + minus)));
        const double neg = -std::sqrt(plus / (minus * (plus + minus)));
        for (std::size_t j = 0; j < psi.parts(); ++j) {
            const int s = psi(j, k);
            v(j, k) = s == 1 ? pos : (s == -1 ? neg : 0.0);
        }
    }
    return ContrastMatrix(std::move(v));
}

/// ilr coordinates V' ln(p).
inline std::vector<double> ilr(const Composition& p, const ContrastMatrix& v) {
    if (p.size() != v.parts()) {
        throw DimensionError("ilr: composition has " + std::to_string(p.size()) + " parts, contrast matrix " +
                             std::to_string(v.parts()));
    }
    const auto logs = p.log_parts();
    return multiply_transposed(v.matrix(), logs);
}

/**
 * ilr coordinates as balances: sqrt(n+ n-/(n+ + n-)) times the log-ratio of
 * the geometric means of the + and - groups.
 */
inline std::vector<double> ilr_balances(const Composition& p, const SbpMatrix& psi) {
    if (p.size() != psi.parts()) {
        throw DimensionError("ilr_balances: dimension mismatch");
    }
    const auto logs = p.log_parts();
    std::vector<double> out(psi.splits());
    for (std::size_t k = 0; k < psi.splits(); ++k) {
        double sum_plus = 0.0;
        double sum_minus = 0.0;
        std::size_t np = 0;
        std::size_t nm = 0;
        for (std::size_t j = 0; j < psi.parts(); ++j) {
            if (psi(j, k) == 1) {
                sum_plus += logs[j];
                ++np;
            } else if (psi(j, k) == -1) {
                sum_minus += logs[j];
                ++nm;
            }
        }
        const double plus = static_cast<double>(np);
        const double minus = static_cast<double>(nm);
        out[k] = std::sqrt(plus * minus / (plus + minus)) * (sum_plus / plus - sum_minus / minus);
    }
    return out;
}

/**
 * closure(exp(V m)). Throws `NumericalError` when the coordinates are so
 * extreme that some part underflows to zero.
 */
inline Composition inverse_ilr(std::span<const double> m, const ContrastMatrix& v) {
    if (m.size() != v.coords()) {
        throw DimensionError("inverse_ilr: dimension mismatch");
    }
    auto clr = multiply(v.matrix(), m);
    double peak = -std::numeric_limits<double>::infinity();
    for (double x : clr) {
        if (!std::isfinite(x)) {
            throw NumericalError("inverse_ilr: non-finite coordinates");
        }
        peak = std::max(peak, x);
    }
    for (auto& x : clr) {
        x = std::exp(x - peak);
        if (x == 0.0) {
            throw NumericalError("inverse_ilr: coordinates too extreme, a part underflows to zero");
        }
    }
    return Composition::closure(clr);
}

}

#endif
