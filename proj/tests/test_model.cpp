#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixture.hpp"

using namespace rsopt;
using rsopt::testing::example_data;
using rsopt::testing::example_terms;

TEST(EvaluateBasis, OriginKillsEveryNonInterceptTerm) {
    const Vector z = evaluate_basis(Vector{0, 0, 0}, example_terms());
    EXPECT_EQ(z, (Vector{1, 0, 0, 0, 0, 0, 0}));
}

TEST(EvaluateBasis, CornerSigns) {
    const Vector z = evaluate_basis(Vector{1, 1, -1}, example_terms());
    EXPECT_EQ(z, (Vector{1, 1, 1, -1, 1, -1, -1}));
}

TEST(EvaluateBasis, FullSecondOrderOrdering) {
    const TermSpec full = TermSpec::full_second_order(3);
    ASSERT_EQ(full.p(), 10u);
    EXPECT_EQ(full.names(), (std::vector<std::string>{"1", "x1", "x2", "x3", "x1^2", "x2^2", "x3^2", "x1*x2",
                                                      "x1*x3", "x2*x3"}));
    const Vector z = evaluate_basis(Vector{0.5, -1, 0.2}, full);
    const Vector expected{1, 0.5, -1, 0.2, 0.25, 1, 0.04, -0.5, 0.1, -0.2};
    for (std::size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(z[j], expected[j], 1e-15) << j;
}

TEST(EvaluateBasis, DimensionMismatchThrows) {
    EXPECT_THROW(evaluate_basis(Vector{1, 2}, example_terms()), Error);
}

TEST(TermSpec, SizeFormulaAndInvariants) {
    for (std::size_t n = 1; n <= 6; ++n) EXPECT_EQ(TermSpec::full_second_order(n).p(), 1 + n + n * (n + 1) / 2);
    EXPECT_THROW(TermSpec(2, {Monomial{{0}}}), Error);                       // no intercept first
    EXPECT_THROW(TermSpec(2, {Monomial{}, Monomial{{0}}, Monomial{{0}}}), Error);  // duplicate
    EXPECT_THROW(TermSpec(2, {Monomial{}, Monomial{{2}}}), Error);           // factor out of range
    EXPECT_THROW(TermSpec(2, {Monomial{}, Monomial{{0, 0, 1}}}), Error);     // cubic
}

TEST(TermSpec, ParsesNames) {
    const std::vector<std::string> names{"1", "x2", "x1*x2", "x3^2", "x3*x1"};
    const TermSpec t = TermSpec::from_names(3, names);
    EXPECT_EQ(t.names(), (std::vector<std::string>{"1", "x2", "x1*x2", "x3^2", "x1*x3"}));
    EXPECT_THROW(parse_monomial("y1"), Error);
    EXPECT_THROW(parse_monomial("x1^3"), Error);
    EXPECT_THROW(parse_monomial("x0"), Error);
}

// Scaling x_i by s scales a monomial containing x_i with multiplicity k by s^k.
TEST(EvaluateBasis, MonomialScalingProperty) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const TermSpec full = TermSpec::full_second_order(4);
    for (int trial = 0; trial < 200; ++trial) {
        Vector x(4);
        for (double& v : x) v = u(rng);
        const std::size_t i = static_cast<std::size_t>(trial % 4);
        const double s = u(rng);
        Vector xs = x;
        xs[i] *= s;
        const Vector z = evaluate_basis(x, full), zs = evaluate_basis(xs, full);
        for (std::size_t j = 0; j < full.p(); ++j) {
            const auto& f = full.terms()[j].factors;
            const auto k = std::count(f.begin(), f.end(), i);
            EXPECT_NEAR(zs[j], z[j] * std::pow(s, static_cast<double>(k)), 1e-12);
        }
    }
}

TEST(DesignMatrix, ExampleIsOrthogonal) {
    const auto d = build_design_matrix(example_data(), example_terms());
    ASSERT_EQ(d.x.rows(), 32u);
    ASSERT_EQ(d.x.cols(), 7u);
    ASSERT_EQ(d.y.cols(), 2u);
    const Matrix xtx = d.x.transpose() * d.x;
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) EXPECT_DOUBLE_EQ(xtx(i, j), i == j ? 32.0 : 0.0);
}

TEST(DesignMatrix, ReplicateRowsShareTheBasis) {
    const auto& data = example_data();
    const auto d = build_design_matrix(data, example_terms());
    std::size_t row = 0;
    for (const auto& run : data.runs()) {
        const Vector z = evaluate_basis(run.x, example_terms());
        for (std::size_t rep = 0; rep < run.replicates(); ++rep, ++row) {
            for (std::size_t j = 0; j < z.size(); ++j) EXPECT_EQ(d.x(row, j), z[j]);
            for (std::size_t k = 0; k < data.r(); ++k) EXPECT_EQ(d.y(row, k), run.y[k][rep]);
        }
    }
    EXPECT_EQ(row, data.observations());
}

TEST(DesignMatrix, SmallCases) {
    const ExperimentData one(1, {"Y"}, {rsopt::Run{"a", {0.3}, {{5.0}}}});
    const auto d1 = build_design_matrix(one, TermSpec(1, {Monomial{}}));
    EXPECT_EQ(d1.x, (Matrix{{1.0}}));

    const ExperimentData two(1, {"Y"}, {rsopt::Run{"a", {1}, {{1.0}}}, rsopt::Run{"b", {-1}, {{2.0}}}});
    const auto d2 = build_design_matrix(two, TermSpec(1, {Monomial{}, Monomial{{0}}}));
    EXPECT_EQ(d2.x, (Matrix{{1, 1}, {1, -1}}));

    EXPECT_THROW(build_design_matrix(one, TermSpec(1, {Monomial{}, Monomial{{0}}})), Error);
}

// Equal replication of a 2-level factorial with intercept, linears and
// two-factor interactions gives X'X = N I.
TEST(DesignMatrix, FactorialOrthogonalityProperty) {
    for (std::size_t n = 1; n <= 4; ++n)
        for (std::size_t reps = 1; reps <= 3; ++reps) {
            std::vector<rsopt::Run> runs;
            for (std::size_t mask = 0; mask < (1u << n); ++mask) {
                Vector x(n);
                for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1 ? 1.0 : -1.0;
                runs.push_back({std::to_string(mask), x, {Vector(reps, 1.0)}});
            }
            const ExperimentData data(n, {"Y"}, runs);
            const TermSpec terms = TermSpec::linear_with_interactions(n);
            if (terms.p() > data.observations()) continue;
            const auto d = build_design_matrix(data, terms);
            EXPECT_EQ(d.x.rows(), data.observations());
            const Matrix xtx = d.x.transpose() * d.x;
            const double big_n = static_cast<double>(data.observations());
            EXPECT_EQ(xtx, big_n * Matrix::identity(terms.p()));
        }
}

TEST(Region, HypercubeIsClosed) {
    const Region cube = Region::cube(3);
    EXPECT_TRUE(region_contains(cube, Vector{1, 0.707, 0.452}));
    EXPECT_TRUE(region_contains(cube, Vector{-1, -1, 1}));
    EXPECT_FALSE(region_contains(cube, Vector{1.01, 0, 0}));
}

TEST(Region, HypersphereBoundary) {
    const Region ball = Region::hypersphere(3, 1.0);
    EXPECT_TRUE(region_contains(ball, Vector{0.6, 0.8, 0}));
    EXPECT_FALSE(region_contains(ball, Vector{0.6, 0.81, 0}));
    const Vector p = ball.project(Vector{3, 4, 0});
    EXPECT_NEAR(p[0], 0.6, 1e-15);
    EXPECT_NEAR(p[1], 0.8, 1e-15);
}

TEST(Region, RejectsBadBounds) {
    EXPECT_THROW(Region::hypercube({0, 1}, {1, 1}), Error);
    EXPECT_THROW(Region::hypersphere(2, 0.0), Error);
}

TEST(ExperimentData, Validation) {
    EXPECT_THROW(ExperimentData(1, {"Y"}, {}), Error);
    EXPECT_THROW(ExperimentData(1, {"Y"}, {rsopt::Run{"a", {0}, {{}}}}), Error);
    EXPECT_THROW(ExperimentData(1, {"Y", "Z"}, {rsopt::Run{"a", {0}, {{1.0}, {1.0, 2.0}}}}), Error);
    EXPECT_THROW(example_data().check_within(Region::cube(3, -0.5, 0.5)), Error);
    EXPECT_NO_THROW(example_data().check_within(Region::cube(3)));
    EXPECT_EQ(example_data().observations(), 32u);
}
