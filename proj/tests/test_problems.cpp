// Copyright 2026 The tsavg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsavg/problem_io.hpp"
#include "tsavg/problems.hpp"
#include "tsavg/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace tsavg {
namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Brute-force prox in 1-d: scan u on [center - 1, center + 1] at 1e-4.
double grid_prox_1d(const std::function<double(double)>& g, double v, double step, double center) {
    double best_u = center, best = std::numeric_limits<double>::infinity();
    for (int i = -10000; i <= 10000; ++i) {
        const double u = center + i * 1e-4;
        const double obj = g(u) + (u - v) * (u - v) / (2.0 * step);
        if (obj < best) {
            best = obj;
            best_u = u;
        }
    }
    return best_u;
}

void expect_gradient_matches_fd(const SmoothProblem& p, std::uint64_t seed, int points = 100) {
    Rng rng(seed);
    for (int k = 0; k < points; ++k) {
        const Vector x = rng.normal_vector(p.dim);
        const Vector g = p.gradient(x);
        Vector fd(p.dim);
        for (Eigen::Index i = 0; i < p.dim; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
            Vector xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            fd(i) = (p.value(xp) - p.value(xm)) / (2.0 * h);
        }
        EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm())) << p.name << " point " << k;
        if (p.hess_vec) {
            const Vector d = rng.normal_vector(p.dim);
            const double h = 1e-6;
            const Vector fdh = (p.gradient(x + h * d) - p.gradient(x - h * d)) / (2.0 * h);
            const Vector hv = p.hess_vec(x, d);
            EXPECT_LE((hv - fdh).norm(), 1e-4 * std::max(1.0, hv.norm())) << p.name;
        }
        if (p.min_value) {
            EXPECT_GE(p.value(x), *p.min_value - 1e-12);
        }
    }
}

TEST(Quadratic, IdentityValueAndGradient) {
    const SmoothProblem p = quadratic_problem(Matrix::Identity(2, 2), Vector::Zero(2));
    EXPECT_DOUBLE_EQ(p.value(vec({3, 4})), 12.5);
    EXPECT_EQ(p.gradient(vec({3, 4})), vec({3, 4}));
    ASSERT_TRUE(p.minimizer.has_value());
    EXPECT_EQ(*p.minimizer, Vector::Zero(2));
    EXPECT_EQ(*p.min_value, 0.0);
}

TEST(Quadratic, DiagonalGradientByHand) {
    Matrix Q = Matrix::Zero(2, 2);
    Q(0, 0) = 1;
    Q(1, 1) = 4;
    const SmoothProblem p = quadratic_problem(Q, vec({1, 0}));
    // (1*1 - 1, 4*1 - 0)
    EXPECT_EQ(p.gradient(vec({1, 1})), vec({0, 4}));
    EXPECT_EQ(p.hess_vec(vec({1, 1}), vec({1, 1})), vec({1, 4}));
}

TEST(Quadratic, RejectsBadInput) {
    Matrix Q(2, 2);
    Q << 1, 2, 0, 1;
    EXPECT_THROW(quadratic_problem(Q, Vector::Zero(2)), std::invalid_argument);
    EXPECT_THROW(quadratic_problem(Matrix::Identity(2, 2), Vector::Zero(3)), std::invalid_argument);
    Matrix N = -Matrix::Identity(2, 2);
    EXPECT_THROW(quadratic_problem(N, Vector::Zero(2)), std::invalid_argument);
}

TEST(Quadratic, SingularHasNoMinimizer) {
    Matrix Q = Matrix::Zero(2, 2);
    Q(0, 0) = 1;
    const SmoothProblem p = quadratic_problem(Q, Vector::Zero(2));
    EXPECT_FALSE(p.minimizer.has_value());
}

TEST(LeastSquares, Examples) {
    const SmoothProblem p = least_squares_problem(Matrix::Identity(2, 2), Vector::Zero(2));
    EXPECT_DOUBLE_EQ(p.value(vec({1, 2})), 2.5);

    Matrix A(1, 2);
    A << 1, 1;
    const SmoothProblem q = least_squares_problem(A, vec({2}));
    EXPECT_EQ(q.gradient(vec({1, 1})), vec({0, 0}));

    Matrix B(2, 2);
    B << 1, 0, 0, 2;
    const SmoothProblem r = least_squares_problem(B, vec({1, 2}));
    // B^T (B 0 - b) = -(1*1, 2*2)
    EXPECT_EQ(r.gradient(vec({0, 0})), vec({-1, -4}));
}

TEST(LeastSquares, LipschitzIsSpectralNormSquared) {
    Rng rng(5);
    const Matrix A = rng.normal_matrix(12, 7);
    const SmoothProblem p = least_squares_problem(A, rng.normal_vector(12));
    Eigen::JacobiSVD<Matrix> svd(A);
    const double s = svd.singularValues()(0);
    EXPECT_NEAR(p.lipschitz, s * s, 1e-8 * s * s);
}

TEST(LeastSquares, DimensionMismatchRejected) {
    EXPECT_THROW(least_squares_problem(Matrix::Identity(3, 2), Vector::Zero(2)),
                 std::invalid_argument);
}

TEST(LeastSquares, MinimumFromNormalEquations) {
    const SmoothProblem p = random_least_squares(20, 40, 2024);
    ASSERT_TRUE(p.min_value.has_value());
    // Underdetermined and full row rank: the residual can be driven to zero.
    EXPECT_NEAR(*p.min_value, 0.0, 1e-20);
    const SmoothProblem q = random_least_squares(30, 10, 7);
    Rng rng(7);
    const Matrix A = rng.normal_matrix(30, 10) / std::sqrt(30.0);
    const Vector b = rng.normal_vector(30);
    const Vector xs = A.colPivHouseholderQr().solve(b);
    EXPECT_NEAR(*q.min_value, 0.5 * (A * xs - b).squaredNorm(), 1e-12);
}

TEST(SmoothProblem, FiniteDifferenceAgreement) {
    expect_gradient_matches_fd(half_norm_squared(5), 1);
    expect_gradient_matches_fd(random_least_squares(20, 40, 2024), 2);
    expect_gradient_matches_fd(random_quadratic(8, 3), 3);
    expect_gradient_matches_fd(quartic_problem(3), 4);
}

TEST(SmoothProblem, ArgminDistance) {
    const SmoothProblem p = random_least_squares(20, 40, 2024);
    ASSERT_TRUE(static_cast<bool>(p.argmin_distance));
    ASSERT_TRUE(p.minimizer.has_value());
    // Minimizers form x* + ker A; shifting along ker A keeps the distance 0.
    Rng rng(9);
    Rng same(2024);
    const Matrix A = same.normal_matrix(20, 40) / std::sqrt(20.0);
    Eigen::FullPivLU<Matrix> lu(A);
    const Matrix K = lu.kernel();
    const Vector shifted = *p.minimizer + K * rng.normal_vector(K.cols());
    EXPECT_NEAR(p.argmin_distance(shifted), 0.0, 1e-10);
    const Vector row = A.row(0).transpose();
    EXPECT_NEAR(p.argmin_distance(*p.minimizer + row), row.norm(), 1e-10);
}

TEST(L1, SoftThresholdExamples) {
    const ProxFriendly g = l1_regularizer(1.0);
    EXPECT_DOUBLE_EQ(g.prox(vec({2}), 1.0)(0), 1.0);
    EXPECT_DOUBLE_EQ(g.prox(vec({-0.5}), 1.0)(0), 0.0);
    EXPECT_DOUBLE_EQ(g.prox(vec({1.5}), 0.5)(0), 1.0);
    // The grid oracle for the last case.
    const double u = grid_prox_1d([](double x) { return std::abs(x); }, 1.5, 0.5, 1.0);
    EXPECT_NEAR(u, 1.0, 1e-4);
    EXPECT_THROW(l1_regularizer(-1.0), std::invalid_argument);
}

TEST(L1, ProxOptimalityByGridScan) {
    Rng rng(11);
    for (double w : {0.3, 1.0, 2.5}) {
        const ProxFriendly g = l1_regularizer(w);
        for (int k = 0; k < 20; ++k) {
            const double v = rng.uniform(-4, 4), step = rng.uniform(0.1, 2.0);
            const double p = g.prox(vec({v}), step)(0);
            const double u = grid_prox_1d([w](double x) { return w * std::abs(x); }, v, step, p);
            EXPECT_NEAR(u, p, 1e-4);
        }
    }
}

TEST(L1, FirmlyNonexpansive) {
    Rng rng(12);
    const ProxFriendly g = l1_regularizer(0.7);
    for (int k = 0; k < 200; ++k) {
        const Vector v = 3.0 * rng.normal_vector(6), w = 3.0 * rng.normal_vector(6);
        const double step = rng.uniform(0.05, 3.0);
        const Vector pv = g.prox(v, step), pw = g.prox(w, step);
        EXPECT_LE((pv - pw).norm(), (v - w).norm() + 1e-14);
        EXPECT_GE((pv - pw).dot(v - w), (pv - pw).squaredNorm() - 1e-12);
    }
}

CompositeProblem one_d(double a, double b, double w) {
    Matrix A(1, 1);
    A << a;
    return lasso_problem(A, vec({b}), w);
}

TEST(ForwardBackward, IdentityCase) {
    const CompositeProblem c = make_composite(Matrix::Identity(3, 3), Vector::Zero(3),
                                              zero_regularizer());
    const CocoerciveOperator M = forward_backward_operator(c, 1.0);
    EXPECT_DOUBLE_EQ(M.rho, 0.75);
    const Vector y = vec({1, -2, 3});
    EXPECT_LE((M.apply(y) - y).norm(), 1e-15);
}

TEST(ForwardBackward, OneDimensionalExample) {
    const CompositeProblem c = one_d(1.0, 0.0, 1.0);
    const CocoerciveOperator M = forward_backward_operator(c, 0.5);
    // Forward step 3 - 0.5*3 = 1.5, prox of 0.5|.| gives 1, (3 - 1)/0.5 = 4.
    const double u = grid_prox_1d([](double x) { return std::abs(x); }, 1.5, 0.5, 1.0);
    EXPECT_NEAR((3.0 - u) / 0.5, 4.0, 1e-3);
    EXPECT_DOUBLE_EQ(M.apply(vec({3}))(0), 4.0);
    EXPECT_DOUBLE_EQ(moreau_point(c, 0.5, vec({3}))(0), 1.0);
    EXPECT_DOUBLE_EQ(moreau_value(c, 0.5, vec({3})), 1.5);
}

TEST(ForwardBackward, StepOutsideRangeRejected) {
    const CompositeProblem c = one_d(1.0, 0.0, 1.0);
    EXPECT_THROW(forward_backward_operator(c, 2.0), std::invalid_argument);
    EXPECT_THROW(forward_backward_operator(c, 0.0), std::invalid_argument);
    EXPECT_NO_THROW(forward_backward_operator(c, 1.99));
}

TEST(ForwardBackward, ZeroAtSolutionAndGridEquivalence) {
    // f(y) = 1/2 (2y - 1)^2 + 0.3 |y| has its minimizer by grid search.
    const CompositeProblem c = one_d(2.0, 1.0, 0.3);
    double best = 0.0, fbest = std::numeric_limits<double>::infinity();
    for (int i = -200000; i <= 200000; ++i) {
        const double y = i * 1e-5;
        const double f = c.value(vec({y}));
        if (f < fbest) {
            fbest = f;
            best = y;
        }
    }
    const CocoerciveOperator M = forward_backward_operator(c, 0.2);
    EXPECT_NEAR(M.apply(vec({best}))(0), 0.0, 1e-3);
    const Vector z = composite_minimizer(c);
    EXPECT_NEAR(z(0), best, 1e-5);
    EXPECT_NEAR(M.apply(z)(0), 0.0, 1e-12);
    EXPECT_NEAR(moreau_value(c, 0.2, z), composite_min_value(c), 1e-12);
    // Away from the minimizer M is nonzero.
    EXPECT_GT(std::abs(M.apply(vec({best + 0.1}))(0)), 1e-3);
}

TEST(ForwardBackward, CocoercivityOnRandomPairs) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LassoData d = random_lasso_data(15, 25, seed, 5);
        const CompositeProblem c = lasso_problem(d.A, d.b, 0.2);
        const double lam = c.cocoercivity();
        for (double frac : {0.25, 0.5, 0.99}) {
            const double mu = frac * 2.0 * lam;
            const CocoerciveOperator M = forward_backward_operator(c, mu);
            EXPECT_NEAR(M.rho, mu * (1.0 - mu / (4.0 * lam)), 1e-15);
            Rng rng(100 + seed);
            for (int k = 0; k < 1000; ++k) {
                const Vector x = rng.normal_vector(25), y = rng.normal_vector(25);
                const Vector dm = M.apply(x) - M.apply(y);
                EXPECT_GE(dm.dot(x - y) - M.rho * dm.squaredNorm(), -1e-10);
            }
        }
    }
}

TEST(ForwardBackward, MonotoneAroundSolution) {
    const CompositeProblem c = default_lasso();
    const double mu = 1.0 / c.lipschitz();
    const CocoerciveOperator M = forward_backward_operator(c, mu);
    const Vector z = composite_minimizer(c);
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
        const Vector y = z + rng.normal_vector(c.dim());
        EXPECT_GE(M.apply(y).dot(y - z), -1e-10);
    }
}

TEST(Moreau, ValueAboveInfimum) {
    LassoData d = random_lasso_data(5, 8, 3, 3);
    const CompositeProblem c = lasso_problem(d.A, d.b, 0.1);
    const double fstar = composite_min_value(c);
    const double mu = 0.9 / c.lipschitz();
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        EXPECT_GE(moreau_value(c, mu, 2.0 * rng.normal_vector(8)), fstar - 1e-12);
    }
}

TEST(Composite, SmoothPartGradient) {
    LassoData d = random_lasso_data(10, 6, 2, 3);
    const CompositeProblem c = lasso_problem(d.A, d.b, 0.1);
    Rng rng(1);
    const Vector y = rng.normal_vector(6);
    EXPECT_LE((c.smooth_part.gradient(y) - d.A.transpose() * (d.A * y - d.b)).norm(), 1e-13);
}

TEST(Composite, DefaultLassoInstance) {
    const CompositeProblem c = default_lasso();
    EXPECT_EQ(c.A().rows(), 50);
    EXPECT_EQ(c.A().cols(), 100);
    EXPECT_DOUBLE_EQ(c.l1_weight, 0.1);
    const LassoData d = random_lasso_data(50, 100, 42);
    EXPECT_EQ((d.signal.array() != 0.0).count(), 10);
}

TEST(ProblemIo, RoundTrip) {
    ProblemSpec s;
    s.type = "least_squares";
    s.A = Matrix::Identity(2, 3);
    s.b = vec({1, 2});
    s.m = 2;
    s.n = 3;
    const ProblemSpec r = problem_spec_from_json(to_json(s));
    EXPECT_TRUE(r == s);
    EXPECT_EQ(r.m, 2);
    EXPECT_EQ(r.n, 3);

    ProblemSpec seeded;
    EXPECT_TRUE(problem_spec_from_json(to_json(seeded)) == seeded);
}

TEST(ProblemIo, Rejections) {
    EXPECT_THROW(problem_spec_from_json(nlohmann::json{{"type", "cubic"}}), std::invalid_argument);
    EXPECT_THROW(problem_spec_from_json(nlohmann::json{{"type", "lasso"}, {"A", {{1.0}}}}),
                 std::invalid_argument);
    EXPECT_THROW(problem_spec_from_json(nlohmann::json{{"n", 600}}), std::invalid_argument);
}

TEST(ProblemIo, SeededInstancesAreReproducible) {
    ProblemSpec s;
    s.type = "lasso";
    const CompositeProblem a = build_composite(s), b = build_composite(s);
    EXPECT_TRUE(a.A() == b.A());
    EXPECT_TRUE(a.b() == b.b());
    const CompositeProblem d = default_lasso();
    EXPECT_TRUE(a.A() == d.A());
}

}  // namespace
}  // namespace tsavg
