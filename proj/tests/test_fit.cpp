#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixture.hpp"

using namespace rsopt;
using rsopt::testing::example_data;
using rsopt::testing::example_model;
using rsopt::testing::example_terms;

namespace {

// Contrast oracle for an orthogonal +-1 design: coefficient j is the mean of
// z_j(x) * y over all observations.
Matrix contrast_coefficients(const ExperimentData& data, const TermSpec& terms) {
    Matrix b(terms.p(), data.r());
    for (const auto& run : data.runs())
        for (std::size_t j = 0; j < terms.p(); ++j) {
            const double sign = terms.terms()[j].evaluate(run.x);
            for (std::size_t k = 0; k < data.r(); ++k)
                for (double y : run.y[k]) b(j, k) += sign * y;
        }
    return (1.0 / static_cast<double>(data.observations())) * b;
}

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = g(rng);
    return a;
}

}  // namespace

TEST(FitOls, ExampleCoefficients) {
    const auto& m = example_model();
    const Vector beta1{104.86, -3.147, -0.142, -0.199, 2.379, -0.35, -0.106};
    const Vector beta2{70.45, -0.348, 3.59, 0.28, 0.323, -0.45, 0.614};
    for (std::size_t j = 0; j < 7; ++j) {
        EXPECT_NEAR(m.b_hat(j, 0), beta1[j], 0.01) << j;
        EXPECT_NEAR(m.b_hat(j, 1), beta2[j], 0.01) << j;
    }
}

TEST(FitOls, AgreesWithContrastOracle) {
    const auto& m = example_model();
    const Matrix oracle = contrast_coefficients(example_data(), example_terms());
    for (std::size_t j = 0; j < 7; ++j)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(m.b_hat(j, k), oracle(j, k), 1e-10);
    // Hand value: half the difference of the x1 level means of Y1.
    EXPECT_NEAR(oracle(1, 0), -3.148, 0.001);
}

TEST(FitOls, ExampleResidualCovariance) {
    const auto& m = example_model();
    EXPECT_NEAR(m.sigma_hat(0, 0), 4.190, 0.002);
    EXPECT_NEAR(m.sigma_hat(0, 1), 3.546, 0.002);
    EXPECT_NEAR(m.sigma_hat(1, 0), 3.546, 0.002);
    EXPECT_NEAR(m.sigma_hat(1, 1), 4.666, 0.002);
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(m.xtx_inv(i, j), i == j ? 0.03125 : 0.0, 1e-12);
    EXPECT_EQ(m.n_obs, 32u);
}

TEST(FitOls, ResidualsOrthogonalToDesign) {
    const auto d = build_design_matrix(example_data(), example_terms());
    const auto& m = example_model();
    const Matrix xr = d.x.transpose() * m.residuals;
    EXPECT_LT(max_abs(xr), 1e-9);
    // With an intercept each residual column averages to zero.
    for (std::size_t k = 0; k < m.r(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.residuals.rows(); ++i) s += m.residuals(i, k);
        EXPECT_NEAR(s / 32.0, 0.0, 1e-10);
    }
}

TEST(FitOls, PerfectFitHasZeroCovariance) {
    const auto d = build_design_matrix(example_data(), example_terms());
    Matrix y(d.x.rows(), 2, 7.5);
    const FittedModel m = fit_ols(d.x, y, example_terms());
    EXPECT_LT(max_abs(m.sigma_hat), 1e-20);
    EXPECT_LT(max_abs(m.residuals), 1e-12);
}

TEST(FitOls, RecoversExactCoefficients) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    const TermSpec terms = TermSpec::full_second_order(2);
    Matrix x(20, terms.p());
    for (std::size_t i = 0; i < 20; ++i) {
        const Vector z = evaluate_basis(Vector{g(rng), g(rng)}, terms);
        std::copy(z.begin(), z.end(), x.row(i).begin());
    }
    Matrix b(terms.p(), 3);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t k = 0; k < 3; ++k) b(i, k) = g(rng);
    const FittedModel m = fit_ols(x, x * b, terms);
    EXPECT_LT(max_abs(m.b_hat - b), 1e-9);
    EXPECT_LT(max_abs(m.sigma_hat), 1e-9);
}

TEST(FitOls, SingularDesignThrows) {
    const TermSpec terms(2, {Monomial{}, Monomial{{0}}, Monomial{{1}}});
    Matrix x(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        x(i, 0) = 1;
        x(i, 1) = static_cast<double>(i);
        x(i, 2) = 2.0 * static_cast<double>(i);  // collinear with x1
    }
    try {
        fit_ols(x, Matrix(4, 1, 1.0), terms);
        FAIL() << "expected singular design";
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "singular design");
    }
}

TEST(Predict, ExamplePoints) {
    const auto& m = example_model();
    const Vector y0 = predict(m, Vector{0, 0, 0});
    EXPECT_NEAR(y0[0], 104.86, 0.01);
    EXPECT_NEAR(y0[1], 70.45, 0.01);
    const Vector ya = predict(m, Vector{1, -1, 1});
    EXPECT_NEAR(ya[0], 99.039, 0.01);
    EXPECT_NEAR(ya[1], 65.405, 0.01);
    const Vector yb = predict(m, Vector{1, 1, -1});
    EXPECT_NEAR(yb[0], 104.612, 0.01);
    EXPECT_NEAR(yb[1], 73.574, 0.01);
}

TEST(UnitVariance, ExamplePoints) {
    const auto& m = example_model();
    EXPECT_NEAR(unit_variance(m, Vector{0, 0, 0}), 0.03125, 1e-12);
    EXPECT_NEAR(unit_variance(m, Vector{1, 1, -1}), 0.21875, 1e-12);
    const Matrix c = covariance_at(m, Vector{1, 1, -1});
    EXPECT_NEAR(c(0, 0), 0.21875 * m.sigma_hat(0, 0), 1e-12);
}

TEST(CovarianceAt, ExamplePoints) {
    const auto& m = example_model();
    const Matrix c0 = covariance_at(m, Vector{0, 0, 0});
    EXPECT_NEAR(c0(0, 0), 0.131, 0.001);
    EXPECT_NEAR(c0(1, 1), 0.1458, 0.001);
    EXPECT_NEAR(c0(0, 1), 0.111, 0.001);
    const Matrix c1 = covariance_at(m, Vector{1, 1, -1});
    EXPECT_NEAR(c1(0, 0), 0.917, 0.002);
    EXPECT_NEAR(c1(1, 1), 1.021, 0.002);
    EXPECT_NEAR(c1(0, 1), 0.776, 0.002);
}

TEST(MatrixCriterion, Kinds) {
    const Matrix s{{4.190, 3.546}, {3.546, 4.666}};
    EXPECT_NEAR(matrix_criterion(s, {CriterionKind::trace}), 8.856, 1e-12);
    EXPECT_NEAR(matrix_criterion(Matrix::identity(2), {CriterionKind::determinant}), 1.0, 1e-15);
    EXPECT_NEAR(matrix_criterion(s, {CriterionKind::determinant}), 4.190 * 4.666 - 3.546 * 3.546, 1e-12);
    EXPECT_NEAR(matrix_criterion(s, {CriterionKind::elementsum}), 4.190 + 4.666 + 2 * 3.546, 1e-12);
    const Matrix d{{2, 0}, {0, 1}};
    EXPECT_DOUBLE_EQ(matrix_criterion(d, {CriterionKind::lambda_max}), 2.0);
    EXPECT_DOUBLE_EQ(matrix_criterion(d, {CriterionKind::lambda_min}), 1.0);
    EXPECT_DOUBLE_EQ(matrix_criterion(d, {CriterionKind::lambda_j, 2}), 1.0);
    EXPECT_THROW(matrix_criterion(d, {CriterionKind::lambda_j, 3}), Error);
    EXPECT_THROW(matrix_criterion(Matrix{{1, 2}, {0, 1}}, {CriterionKind::trace}), Error);
}

TEST(EigenSym, KnownSpectra) {
    EXPECT_EQ(eigen_sym(Matrix{{3, 0}, {0, 1}}).values, (Vector{3, 1}));
    const auto e = eigen_sym(Matrix{{0, 1}, {1, 0}});
    EXPECT_NEAR(e.values[0], 1.0, 1e-15);
    EXPECT_NEAR(e.values[1], -1.0, 1e-15);
}

TEST(EigenSym, ReconstructionProperty) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = random_symmetric(rng, 5);
        const auto e = eigen_sym(a);
        for (std::size_t j = 1; j < 5; ++j) EXPECT_GE(e.values[j - 1], e.values[j]);
        const Matrix rec = e.vectors * Matrix::diagonal(e.values) * e.vectors.transpose();
        EXPECT_LT(max_abs(rec - a), 1e-10);
        EXPECT_LT(max_abs(e.vectors.transpose() * e.vectors - Matrix::identity(5)), 1e-12);
    }
}

TEST(MatrixSqrt, Basics) {
    const Matrix r = matrix_sqrt(Matrix{{4, 0}, {0, 9}});
    EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
    EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
    EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
    EXPECT_LT(max_abs(matrix_sqrt(Matrix::identity(3)) - Matrix::identity(3)), 1e-14);
    EXPECT_THROW(matrix_sqrt(Matrix{{1, 0}, {0, -1}}), Error);
    EXPECT_NO_THROW(matrix_sqrt(Matrix{{1, 0}, {0, -1e-12}}));
}

TEST(MatrixSqrt, SquaresBackToCovariance) {
    const auto& m = example_model();
    const Matrix c = covariance_at(m, Vector{1, 1, -1});
    const Matrix r = matrix_sqrt(c);
    EXPECT_LT(max_abs(r * r - c), 1e-9);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const Matrix a = random_symmetric(rng, 4);
        const Matrix psd = a * a.transpose();
        const Matrix root = matrix_sqrt(psd);
        EXPECT_LT(max_abs(root * root - psd), 1e-9);
    }
}

TEST(CompareCovariances, Verdicts) {
    const auto& s = example_model().sigma_hat;
    const auto c1 = compare_covariances(0.1 * s, 0.2 * s);
    EXPECT_EQ(c1.verdict, CovVerdict::first_smaller);
    EXPECT_EQ(compare_covariances(0.2 * s, 0.1 * s).verdict, CovVerdict::second_smaller);
    EXPECT_EQ(compare_covariances(s, s).verdict, CovVerdict::equal);
    const auto swapped = compare_covariances(Matrix{{2, 0}, {0, 1}}, Matrix{{1, 0}, {0, 2}});
    EXPECT_EQ(swapped.verdict, CovVerdict::equal);
    EXPECT_EQ(swapped.eigen_gaps, (Vector{0, 0}));
    EXPECT_EQ(compare_covariances(Matrix{{3, 0}, {0, 1}}, Matrix{{2, 0}, {0, 2}}).verdict, CovVerdict::incomparable);
    // Strict dominance is required on every eigenvalue.
    EXPECT_EQ(compare_covariances(Matrix{{2, 0}, {0, 1}}, Matrix{{3, 0}, {0, 1}}).verdict, CovVerdict::incomparable);
}

TEST(CovarianceAt, EigenvalueScalingIdentity) {
    const auto& m = example_model();
    const Vector base = eigen_sym(m.sigma_hat).values;
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 100; ++t) {
        const Vector x{u(rng), u(rng), u(rng)};
        const Vector lam = eigen_sym(covariance_at(m, x)).values;
        const double q = unit_variance(m, x);
        for (std::size_t j = 0; j < lam.size(); ++j) EXPECT_NEAR(lam[j], q * base[j], 1e-10);
    }
}
