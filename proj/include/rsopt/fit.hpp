/**
 * @file fit.hpp
 * @brief Multivariate least squares and the covariance of the fitted surface.
 *
 * All responses share the design matrix X, so one Cholesky factor of X'X
 * serves every column of Y. The covariance of the predicted response vector
 * at x is q(x) times the residual covariance, with q(x) = z'(x)(X'X)^{-1}z(x).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rsopt/linalg.hpp"
#include "rsopt/model.hpp"

namespace rsopt {

struct FittedModel {
    TermSpec terms;
    std::vector<std::string> responses;
    Matrix b_hat;      ///< p x r, column k holds the coefficients of response k
    Matrix sigma_hat;  ///< r x r residual covariance, divisor N - p
    Matrix xtx_inv;    ///< p x p
    Matrix residuals;  ///< N x r; empty when the model was loaded from disk
    std::size_t n_obs = 0;

    std::size_t n() const noexcept { return terms.n(); }
    std::size_t p() const noexcept { return terms.p(); }
    std::size_t r() const noexcept { return b_hat.cols(); }
};

inline FittedModel fit_ols(const Matrix& x, const Matrix& y, const TermSpec& terms,
                           std::vector<std::string> responses = {}) {
    const std::size_t n_obs = x.rows();
    const std::size_t p = x.cols();
    if (y.rows() != n_obs) throw Error("X and Y row counts differ");
    if (p != terms.p()) throw Error("X column count differs from the term count");
    if (n_obs <= p) throw Error("underdetermined design");
    if (responses.empty())
        for (std::size_t k = 0; k < y.cols(); ++k) responses.push_back("Y" + std::to_string(k + 1));
    if (responses.size() != y.cols()) throw Error("response name count differs from Y columns");

    const Matrix xt = x.transpose();
    const Cholesky chol(xt * x, 1e-10);
    FittedModel m{terms, std::move(responses), chol.solve(xt * y), Matrix{}, chol.inverse(), Matrix{}, n_obs};
    m.residuals = y - x * m.b_hat;

    // Y'(I - H)Y equals E'E for the least-squares residual matrix E.
    const std::size_t r = y.cols();
    m.sigma_hat = Matrix(r, r);
    const double dof = static_cast<double>(n_obs - p);
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = a; b < r; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_obs; ++i) s += m.residuals(i, a) * m.residuals(i, b);
            m.sigma_hat(a, b) = m.sigma_hat(b, a) = s / dof;
        }
    return m;
}

inline FittedModel fit_ols(const ExperimentData& data, const TermSpec& terms) {
    const DesignMatrices d = build_design_matrix(data, terms);
    return fit_ols(d.x, d.y, terms, data.responses());
}

/// Predicted response vector B'z(x).
inline Vector predict(const FittedModel& model, std::span<const double> x) {
    const Vector z = evaluate_basis(x, model.terms);
    Vector out(model.r(), 0.0);
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += z[j] * model.b_hat(j, k);
    return out;
}

/// q(x) = z'(x)(X'X)^{-1}z(x).
inline double unit_variance(const FittedModel& model, std::span<const double> x) {
    return quadratic_form(model.xtx_inv, evaluate_basis(x, model.terms));
}

inline Matrix covariance_at(const FittedModel& model, std::span<const double> x) {
    return unit_variance(model, x) * model.sigma_hat;
}

// ---------------------------------------------------------------------------
// Scalar criteria of a covariance matrix

enum class CriterionKind { trace, determinant, elementsum, lambda_max, lambda_min, lambda_j };

struct MatrixCriterion {
    CriterionKind kind = CriterionKind::trace;
    std::size_t j = 1;  ///< 1-based eigenvalue rank for lambda_j (1 = largest)
};

inline double matrix_criterion(const Matrix& c, MatrixCriterion crit) {
    if (!is_symmetric(c, 1e-9)) throw Error("criterion needs a symmetric matrix");
    const std::size_t r = c.rows();
    switch (crit.kind) {
    case CriterionKind::trace: {
        double s = 0.0;
        for (std::size_t i = 0; i < r; ++i) s += c(i, i);
        return s;
    }
    case CriterionKind::determinant:
        return determinant(c);
    case CriterionKind::elementsum: {
        double s = 0.0;
        for (double v : c.data()) s += v;
        return s;
    }
    case CriterionKind::lambda_max:
        return eigen_sym(c).values.front();
    case CriterionKind::lambda_min:
        return eigen_sym(c).values.back();
    case CriterionKind::lambda_j:
        if (crit.j == 0 || crit.j > r) throw Error("eigenvalue index out of range");
        return eigen_sym(c).values[crit.j - 1];
    }
    throw Error("unknown criterion");
}

// ---------------------------------------------------------------------------
// Weak Pareto comparison through sorted spectra

enum class CovVerdict { first_smaller, second_smaller, equal, incomparable };

struct CovCompare {
    CovVerdict verdict;
    Vector eigen_gaps;  ///< alpha_j - gamma_j over descending spectra
};

inline CovCompare compare_covariances(const Matrix& c1, const Matrix& c2) {
    if (c1.rows() != c2.rows() || !c1.square() || !c2.square())
        throw Error("covariance comparison needs equal square matrices");
    const Vector a = eigen_sym(c1).values;
    const Vector g = eigen_sym(c2).values;
    CovCompare out{CovVerdict::incomparable, Vector(a.size())};
    const double tol = 1e-12 * std::max({1.0, max_abs(c1), max_abs(c2)});
    bool all_neg = true, all_pos = true, all_tied = true;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double gap = a[j] - g[j];
        out.eigen_gaps[j] = gap;
        if (!(gap < -tol)) all_neg = false;
        if (!(gap > tol)) all_pos = false;
        if (std::abs(gap) > tol) all_tied = false;
    }
    if (all_tied)
        out.verdict = CovVerdict::equal;
    else if (all_neg)
        out.verdict = CovVerdict::first_smaller;
    else if (all_pos)
        out.verdict = CovVerdict::second_smaller;
    return out;
}

}  // namespace rsopt
