/**
 * @file linalg.hpp
 * @brief Small dense linear algebra for response-surface work.
 *
 * Everything here is sized for r (responses) and p (model terms) in the
 * tens: row-major dense storage, a Cholesky solver for normal equations
 * and a cyclic Jacobi eigensolver for symmetric matrices.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rsopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw Error("ragged matrix initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Matrix diagonal(std::span<const double> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Vector column(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    const std::vector<double>& data() const noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator*(double s, Matrix m) { return m *= s; }
    friend Matrix operator*(Matrix m, double s) { return m *= s; }

    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        check_same_shape(a, b);
        Matrix c = a;
        for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] += b.data_[k];
        return c;
    }
    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        check_same_shape(a, b);
        Matrix c = a;
        for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] -= b.data_[k];
        return c;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw Error("matrix product dimension mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vector operator*(const Matrix& a, std::span<const double> v) {
        if (a.cols_ != v.size()) throw Error("matrix-vector dimension mismatch");
        Vector out(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * v[j];
            out[i] = s;
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    static void check_same_shape(const Matrix& a, const Matrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw Error("matrix shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("dot product dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

/// v' A v for symmetric A.
inline double quadratic_form(const Matrix& a, std::span<const double> v) {
    if (!a.square() || a.rows() != v.size()) throw Error("quadratic form dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double t = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) t += a(i, j) * v[j];
        s += v[i] * t;
    }
    return s;
}

inline double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.data()) best = std::max(best, std::abs(v));
    return best;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-9) {
    if (!m.square()) return false;
    const double scale = std::max(1.0, max_abs(m));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
    return true;
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// A pivot at or below `rel_pivot_tol` times the largest diagonal entry is
/// treated as rank deficiency.
class Cholesky {
public:
    explicit Cholesky(const Matrix& a, double rel_pivot_tol = 1e-10) : l_(a.rows(), a.cols()) {
        if (!a.square()) throw Error("Cholesky needs a square matrix");
        const std::size_t n = a.rows();
        double max_diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
        const double floor = rel_pivot_tol * max_diag;
        for (std::size_t j = 0; j < n; ++j) {
            double d = a(j, j);
            for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
            if (!(d > floor)) throw Error("singular design");
            const double ljj = std::sqrt(d);
            l_(j, j) = ljj;
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
                l_(i, j) = s / ljj;
            }
        }
    }

    const Matrix& factor() const noexcept { return l_; }

    /// Solves A x = b for a single right-hand side.
    Vector solve(std::span<const double> b) const {
        const std::size_t n = l_.rows();
        if (b.size() != n) throw Error("Cholesky solve dimension mismatch");
        Vector y(b.begin(), b.end());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < i; ++k) y[i] -= l_(i, k) * y[k];
            y[i] /= l_(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t k = i + 1; k < n; ++k) y[i] -= l_(k, i) * y[k];
            y[i] /= l_(i, i);
        }
        return y;
    }

    /// Solves A X = B column by column.
    Matrix solve(const Matrix& b) const {
        if (b.rows() != l_.rows()) throw Error("Cholesky solve dimension mismatch");
        Matrix x(b.rows(), b.cols());
        for (std::size_t j = 0; j < b.cols(); ++j) {
            const Vector col = solve(b.column(j));
            for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = col[i];
        }
        return x;
    }

    Matrix inverse() const {
        Matrix inv = solve(Matrix::identity(l_.rows()));
        // Symmetrize away round-off.
        for (std::size_t i = 0; i < inv.rows(); ++i)
            for (std::size_t j = i + 1; j < inv.cols(); ++j) {
                const double avg = 0.5 * (inv(i, j) + inv(j, i));
                inv(i, j) = inv(j, i) = avg;
            }
        return inv;
    }

private:
    Matrix l_;
};

/// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(Matrix a) {
    if (!a.square()) throw Error("determinant needs a square matrix");
    const std::size_t n = a.rows();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t i = c + 1; i < n; ++i)
            if (std::abs(a(i, c)) > std::abs(a(piv, c))) piv = i;
        if (a(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
            det = -det;
        }
        det *= a(c, c);
        for (std::size_t i = c + 1; i < n; ++i) {
            const double f = a(i, c) / a(c, c);
            for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
        }
    }
    return det;
}

struct SymmetricEigen {
    Vector values;   ///< descending
    Matrix vectors;  ///< column j pairs with values[j]
};

/// Cyclic Jacobi diagonalization of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// 1e-12 times the Frobenius norm of the input.
inline SymmetricEigen eigen_sym(const Matrix& c) {
    if (!c.square()) throw Error("eigen_sym needs a square matrix");
    const std::size_t n = c.rows();
    Matrix a = c;
    Matrix v = Matrix::identity(n);
    const double stop = 1e-12 * frobenius_norm(c);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = cs * akp - sn * akq;
                    a(k, q) = sn * akp + cs * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = cs * apk - sn * aqk;
                    a(q, k) = sn * apk + cs * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = cs * vkp - sn * vkq;
                    v(k, q) = sn * vkp + cs * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

/// Symmetric PSD square root via the spectral decomposition.
inline Matrix matrix_sqrt(const Matrix& c) {
    const SymmetricEigen eig = eigen_sym(c);
    const std::size_t n = c.rows();
    const double lmax = n ? std::max(0.0, eig.values.front()) : 0.0;
    Vector root(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double lam = eig.values[j];
        if (lam < -1e-6 * lmax || (lmax == 0.0 && lam < -1e-10)) throw Error("not PSD");
        root[j] = std::sqrt(std::max(lam, 0.0));
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += eig.vectors(i, k) * root[k] * eig.vectors(j, k);
            out(i, j) = out(j, i) = s;
        }
    return out;
}

}  // namespace rsopt
