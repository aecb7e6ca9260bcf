#ifndef ILRAPPROX_LINALG_HPP
#define ILRAPPROX_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ilrapprox/error.hpp"

/**
 * @file linalg.hpp
 * @brief Small dense matrices and a Jacobi eigensolver for symmetric matrices.
 *
 * Everything here targets dimensions up to a few dozen, which is all the
 * compositional machinery needs.
 */

namespace ilrapprox {

/**
 * Dense row-major matrix of doubles.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix out(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            out(i, i) = 1.0;
        }
        return out;
    }

    /// Build from nested rows; all rows must have the same length.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) {
            return Matrix();
        }
        Matrix out(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != out.cols_) {
                throw DimensionError("ragged rows in matrix literal");
            }
            std::copy(rows[i].begin(), rows[i].end(), out.data_.begin() + i * out.cols_);
        }
        return out;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            out[i] = (*this)(i, j);
        }
        return out;
    }

    std::span<const double> data() const { return data_; }

    Matrix transpose() const {
        Matrix out(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                out(j, i) = (*this)(i, j);
            }
        }
        return out;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matrix product: " + std::to_string(a.cols()) + " columns vs " +
                             std::to_string(b.rows()) + " rows");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

/// y = A x
inline std::vector<double> multiply(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw DimensionError("matrix-vector product: dimension mismatch");
    }
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            acc += a(i, j) * x[j];
        }
        out[i] = acc;
    }
    return out;
}

/// y = A' x
inline std::vector<double> multiply_transposed(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) {
        throw DimensionError("transposed matrix-vector product: dimension mismatch");
    }
    std::vector<double> out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out[j] += a(i, j) * x[i];
        }
    }
    return out;
}

inline double max_abs(const Matrix& m) {
    double out = 0.0;
    for (double v : m.data()) {
        out = std::max(out, std::abs(v));
    }
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("max_abs_diff: shape mismatch");
    }
    double out = 0.0;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        out = std::max(out, std::abs(x[i] - y[i]));
    }
    return out;
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data()) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

/**
 * Square symmetric matrix.
 *
 * Symmetry is exact in storage: construction from a general matrix averages
 * the two triangles, and the only mutator writes both (i, j) and (j, i).
 */
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    explicit SymmetricMatrix(std::size_t dim) : values_(dim, dim) {
        if (dim == 0) {
            throw DimensionError("symmetric matrix must have dim >= 1");
        }
    }

    /// Symmetrizes as (M + M')/2, which removes roundoff asymmetry from products.
    explicit SymmetricMatrix(const Matrix& m) : values_(m.rows(), m.cols()) {
        if (m.rows() != m.cols() || m.rows() == 0) {
            throw DimensionError("symmetric matrix requires a non-empty square input");
        }
        const std::size_t n = m.rows();
        for (std::size_t i = 0; i < n; ++i) {
            values_(i, i) = m(i, i);
            for (std::size_t j = i + 1; j < n; ++j) {
                const double v = 0.5 * (m(i, j) + m(j, i));
                values_(i, j) = v;
                values_(j, i) = v;
            }
        }
    }

    static SymmetricMatrix identity(std::size_t n) { return SymmetricMatrix(Matrix::identity(n)); }

    static SymmetricMatrix diagonal(std::span<const double> d) {
        SymmetricMatrix out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            out.set(i, i, d[i]);
        }
        return out;
    }

    std::size_t dim() const { return values_.rows(); }

    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

    void set(std::size_t i, std::size_t j, double v) {
        values_(i, j) = v;
        values_(j, i) = v;
    }

    const Matrix& matrix() const { return values_; }

    std::vector<double> diagonal_values() const {
        std::vector<double> out(dim());
        for (std::size_t i = 0; i < dim(); ++i) {
            out[i] = values_(i, i);
        }
        return out;
    }

    double trace() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            acc += values_(i, i);
        }
        return acc;
    }

    SymmetricMatrix scaled(double factor) const {
        SymmetricMatrix out = *this;
        for (std::size_t i = 0; i < dim(); ++i) {
            for (std::size_t j = i; j < dim(); ++j) {
                out.set(i, j, factor * values_(i, j));
            }
        }
        return out;
    }

    bool operator==(const SymmetricMatrix&) const = default;

private:
    Matrix values_;
};

/**
 * Eigendecomposition of a symmetric matrix.
 * `eigenvectors` holds one unit eigenvector per column, in the same order as `eigenvalues`.
 */
struct EigenResult {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
    int sweeps = 0;
};

/**
 * Options for `sym_eigen()`.
 */
struct JacobiOptions {
    /// Convergence when the off-diagonal Frobenius norm drops below `tolerance * ||S||_F`.
    double tolerance = 1e-14;
    int max_sweeps = 100;
};

/**
 * Symmetric eigendecomposition by cyclic Jacobi rotations.
 *
 * Eigenvalues are returned in nonincreasing order; a stable sort keeps equal
 * eigenvalues in the order the rotations left them, so identical inputs give
 * bitwise identical outputs.
 *
 * Throws `ConvergenceError` if the off-diagonal mass is still above threshold
 * after `max_sweeps` sweeps, and `NumericalError` for non-finite input.
 */
inline EigenResult sym_eigen(const SymmetricMatrix& s, const JacobiOptions& options = {}) {
    const std::size_t n = s.dim();
    Matrix a = s.matrix();
    Matrix q = Matrix::identity(n);

    for (double v : a.data()) {
        if (!std::isfinite(v)) {
            throw NumericalError("sym_eigen: non-finite matrix entry");
        }
    }

    auto off_norm = [&]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                acc += 2.0 * a(i, j) * a(i, j);
            }
        }
        return std::sqrt(acc);
    };

    const double threshold = options.tolerance * frobenius_norm(a);
    int sweep = 0;
    while (off_norm() > threshold) {
        if (sweep == options.max_sweeps) {
            throw ConvergenceError("sym_eigen: no convergence", sweep);
        }
        ++sweep;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) {
                    continue;
                }
                // Rotation angle that zeroes a(p, r); t is the smaller root of t^2 + 2 theta t - 1 = 0.
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akr = a(k, r);
                    a(k, p) = c * akp - sn * akr;
                    a(k, r) = sn * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double ark = a(r, k);
                    a(p, k) = c * apk - sn * ark;
                    a(r, k) = sn * apk + c * ark;
                }
                a(p, r) = 0.0;
                a(r, p) = 0.0;

                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p);
                    const double qkr = q(k, r);
                    q(k, p) = c * qkp - sn * qkr;
                    q(k, r) = sn * qkp + c * qkr;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenResult out;
    out.sweeps = sweep;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        out.eigenvalues[c] = a(order[c], order[c]);
        for (std::size_t k = 0; k < n; ++k) {
            out.eigenvectors(k, c) = q(k, order[c]);
        }
    }
    return out;
}

/// Eigenvalues only, nonincreasing.
inline std::vector<double> eigenvalues(const SymmetricMatrix& s) {
    return sym_eigen(s).eigenvalues;
}

/// Q diag(lambda) Q'
inline Matrix reconstruct(const EigenResult& e) {
    const std::size_t n = e.eigenvalues.size();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                acc += e.eigenvectors(i, k) * e.eigenvalues[k] * e.eigenvectors(j, k);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

/**
 * A' diag(d) A for a J x m matrix A and a J-vector d.
 */
inline SymmetricMatrix quadratic_form(const Matrix& a, std::span<const double> d) {
    if (a.rows() != d.size()) {
        throw DimensionError("quadratic_form: " + std::to_string(a.rows()) + " rows vs diagonal of length " +
                             std::to_string(d.size()));
    }
    const std::size_t m = a.cols();
    Matrix out(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) {
                acc += a(r, i) * d[r] * a(r, j);
            }
            out(i, j) = acc;
        }
    }
    return SymmetricMatrix(out);
}

/**
 * A' diag(d) S diag(d) A, the three-factor sandwich used by the delta method.
 */
inline SymmetricMatrix sandwich(const Matrix& a, std::span<const double> d, const SymmetricMatrix& s) {
    if (a.rows() != d.size() || s.dim() != d.size()) {
        throw DimensionError("sandwich: dimension mismatch");
    }
    Matrix scaled = a;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            scaled(r, c) *= d[r];
        }
    }
    return SymmetricMatrix(multiply(scaled.transpose(), multiply(s.matrix(), scaled)));
}

}

#endif
