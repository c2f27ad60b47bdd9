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

#include "tsavg/algorithms.hpp"
#include "tsavg/problems.hpp"
#include "tsavg/rng.hpp"
#include "tsavg/transforms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace tsavg {
namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// ---------------------------------------------------------------------------
// Step rules
// ---------------------------------------------------------------------------

TEST(NesterovStepRule, FirstTerms) {
    const std::vector<double> t = nesterov_step_rule(5);
    ASSERT_EQ(t.size(), 6u);
    EXPECT_TRUE(std::isnan(t[0]));
    EXPECT_EQ(t[1], 1.0);
    EXPECT_DOUBLE_EQ(t[2], 0.5 * (1.0 + std::sqrt(5.0)));
    EXPECT_THROW(nesterov_step_rule(0), std::invalid_argument);
}

TEST(NesterovStepRule, RootIdentity) {
    const std::vector<double> t = nesterov_step_rule(10000);
    for (std::size_t k = 1; k < 10000; ++k) {
        const double a = t[k + 1] * t[k + 1] - t[k + 1], b = t[k] * t[k];
        EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, b)) << k;
    }
}

TEST(ProxStepRule, AlphaThreeValues) {
    const StepSequence s = prox_step_rule(3.0, 2);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_DOUBLE_EQ(s[1], 2.0);
    EXPECT_DOUBLE_EQ(s[2], 1.0 + std::sqrt(5.0));
    EXPECT_NEAR(s[2] * s[2], 2.0 * (s[1] + s[2]), 1e-14);
    EXPECT_THROW(prox_step_rule(1.0, 3), std::invalid_argument);
}

TEST(ProxStepRule, Invariants) {
    for (double alpha : {1.001, 2.0, 3.0, 5.0}) {
        const StepSequence s = prox_step_rule(alpha, 10000);
        const double am1 = alpha - 1.0;
        double sum = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            sum += s[k];
            const double sk2 = s[k] * s[k];
            EXPECT_NEAR(sk2, am1 * sum, 1e-8 * std::max(1.0, sk2)) << alpha << " k=" << k;
            if (k + 1 < s.size()) {
                EXPECT_NEAR(s[k + 1] * s[k + 1] - am1 * s[k + 1], sk2, 1e-10 * std::max(1.0, sk2));
            }
            if (k >= 1) {
                EXPECT_GE(s[k], k * am1 / 2.0);
                EXPECT_GE(s[k] * (1.0 + 1e-14), (k + 1) * am1 / 2.0) << alpha << " k=" << k;
            }
        }
    }
}

TEST(ProxStepRule, LinearGrowth) {
    const StepSequence s = prox_step_rule(3.0, 1000);
    const double r = s[1000] / (1000.0 * 2.0 / 2.0);
    EXPECT_GE(r, 1.0);
    EXPECT_LE(r, 1.2);
}

// ---------------------------------------------------------------------------
// Nesterov and the Ravine energy
// ---------------------------------------------------------------------------

TEST(Nesterov, FixedAtMinimizer) {
    const SmoothProblem p = random_least_squares(20, 30, 2);
    const IterateLog log = nesterov(p, 0.9 / p.lipschitz, 50, *p.minimizer);
    for (const auto& x : log.x) EXPECT_LE((x - *p.minimizer).norm(), 1e-12);
    for (std::size_t k = 2; k < log.size(); ++k) {
        ASSERT_TRUE(log.energy[k].has_value());
        EXPECT_LE(std::abs(*log.energy[k]), 1e-20);
    }
}

TEST(Nesterov, IdentityHessianLandsInTwoSteps) {
    const SmoothProblem p = half_norm_squared(1);
    const IterateLog log = nesterov(p, 1.0, 5, vec({7.0}));
    EXPECT_EQ(log.x[1](0), 7.0);
    EXPECT_EQ(log.x[2](0), 0.0);
}

TEST(Nesterov, RejectsLongSteps) {
    const SmoothProblem p = random_least_squares(20, 30, 2);
    EXPECT_THROW(nesterov(p, 1.5 / p.lipschitz, 10, Vector::Zero(30)), std::invalid_argument);
    EXPECT_THROW(nesterov(p, 0.0, 10, Vector::Zero(30)), std::invalid_argument);
}

TEST(Nesterov, EnergyInequality) {
    const SmoothProblem p = random_least_squares(20, 30, 17);
    const double lambda = 0.9 / p.lipschitz, L = p.lipschitz;
    Rng rng(3);
    const IterateLog log = nesterov(p, lambda, 2000, rng.normal_vector(30));
    const double E2 = *log.energy[2];
    const double c = lambda * (1.0 - 0.5 * L * lambda);
    for (std::size_t k = 1; k + 1 < log.size(); ++k) {
        const double t = log.s[k + 1];
        const Vector& y = *log.y[k];
        const double lhs = t * t * (p.value_gap(y) - c * p.gradient(y).squaredNorm());
        EXPECT_LE(lhs, E2 * (1.0 + 1e-9) + 1e-12) << k;
    }
}

TEST(RavineEnergy, NonnegativeAndNonincreasing) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const SmoothProblem p = random_quadratic(10, seed);
        const double L = p.lipschitz;
        for (double frac : {0.3, 0.9}) {
            const double lambda = frac / L;
            Rng rng(seed + 100);
            const IterateLog log = nesterov(p, lambda, 500, rng.normal_vector(10));
            const double scale = *log.energy[2];
            for (std::size_t k = 2; k < log.size(); ++k) {
                EXPECT_GE(*log.energy[k], -1e-12 * scale) << seed << " k=" << k;
                if (k + 1 < log.size()) {
                    EXPECT_LE(*log.energy[k + 1], *log.energy[k] + 1e-12 * scale) << k;
                }
                // Descent: f(x_k) - f* <= f(y_{k-1}) - f* - lambda (1 - L lambda/2) |grad f(y_{k-1})|^2.
                const Vector& yp = *log.y[k - 1];
                const double bound = p.value_gap(yp) -
                                     lambda * (1.0 - 0.5 * L * lambda) * p.gradient(yp).squaredNorm();
                EXPECT_LE(p.value_gap(log.x[k]), bound + 1e-12 * std::max(1.0, scale));
            }
        }
    }
}

TEST(RavineEnergy, NeedsMinimizer) {
    const SmoothProblem p = random_quadratic(4, 1);
    const IterateLog log = nesterov(p, 0.5 / p.lipschitz, 5, Vector::Zero(4));
    EXPECT_THROW(ravine_energy(log, p, 0.5 / p.lipschitz, std::nullopt), std::invalid_argument);
}

TEST(RavineWeights, BaseCasesAndMass) {
    EXPECT_EQ(ravine_weights({0.0}), std::vector<double>{1.0});
    const std::vector<double> w = ravine_weights({0.0, 0.0, 0.0, 0.0});
    EXPECT_EQ(w, (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
    const std::vector<double> v = ravine_weights({0.0, 0.3, 1.7, 0.2, 5.0});
    double total = 0.0;
    for (double x : v) {
        EXPECT_GE(x, 0.0);
        total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_THROW(ravine_weights({0.5, 0.2}), std::invalid_argument);
    EXPECT_THROW(ravine_weights({0.0, -0.2}), std::invalid_argument);
}

TEST(RavineWeights, ReconstructNesterovIterates) {
    const SmoothProblem p = random_quadratic(6, 9);
    Rng rng(4);
    const IterateLog log = nesterov(p, 0.8 / p.lipschitz, 32, rng.normal_vector(6));
    // alpha_i = (t_i - 1)/t_{i+1}, recomputed from the logged t.
    std::vector<double> alphas;
    const std::vector<double> t = nesterov_step_rule(40);
    for (std::size_t k = 0; k <= 30; ++k) {
        alphas.push_back((t[k + 1] - 1.0) / t[k + 2]);
        const std::vector<double> theta = ravine_weights(alphas);
        Vector acc = Vector::Zero(6);
        for (std::size_t i = 0; i < theta.size(); ++i) acc += theta[i] * *log.y[i + 1];
        EXPECT_LE((acc - log.x[k + 1]).norm(), 1e-10 * std::max(1.0, log.x[k + 1].norm())) << k;
    }
}

// ---------------------------------------------------------------------------
// Prox-averaging
// ---------------------------------------------------------------------------

TEST(ProxAveraging, StationaryAtMinimizer) {
    const IterateLog log = prox_averaging(l1_regularizer(1.0), 3.0, 20, vec({0.0, 0.0}),
                                          vec({0.0, 0.0}));
    for (std::size_t k = 0; k < log.size(); ++k) {
        EXPECT_EQ(log.x[k].norm(), 0.0);
        EXPECT_EQ(log.y[k]->norm(), 0.0);
    }
}

TEST(ProxAveraging, QuadraticScalarRecursion) {
    const IterateLog log = prox_averaging(l2_squared_regularizer(1.0), 3.0, 20, vec({1.0}),
                                          vec({1.0}));
    const StepSequence s = prox_step_rule(3.0, 20);
    double y = 1.0, x = 1.0;
    for (std::size_t k = 0; k < 20; ++k) {
        y = y / (1.0 + s[k + 1] / 2.0);
        x = (1.0 - 2.0 / s[k + 1]) * x + (2.0 / s[k + 1]) * y;
        EXPECT_NEAR((*log.y[k + 1])(0), y, 1e-14);
        EXPECT_NEAR(log.x[k + 1](0), x, 1e-14);
    }
    EXPECT_EQ(log.x[1], *log.y[1]);
}

TEST(ProxAveraging, WeightedAverageIdentity) {
    const IterateLog log = prox_averaging(l1_regularizer(1.0), 3.0, 100, vec({5.0}), vec({5.0}));
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k <= 100; ++k) {
        num += log.s[k] * (*log.y[k])(0);
        den += log.s[k];
        EXPECT_NEAR(log.x[k](0), num / den, 1e-10) << k;
    }
}

TEST(ProxAveraging, MonotoneAndTelescopedBounds) {
    LassoData d = random_lasso_data(12, 20, 5, 4);
    const CompositeProblem c = lasso_problem(d.A, d.b, 0.1);
    const ProxFriendly f = composite_as_prox(c);
    const double fstar = *f.min_value;
    const Vector zstar = composite_minimizer(c);
    for (double alpha : {2.0, 3.0, 5.0}) {
        const Vector y0 = Vector::Zero(20);
        const IterateLog log = prox_averaging(f, alpha, 60, y0, y0, true);
        const double budget = 0.5 * (alpha - 1.0) * (y0 - zstar).squaredNorm();
        double partial = 0.0;
        for (std::size_t k = 1; k < log.size(); ++k) {
            EXPECT_LE(*log.f_y[k], *log.f_y[k - 1] + 1e-12) << alpha << " k=" << k;
            if (k >= 2) {
                EXPECT_LE(*log.res_norm[k], *log.res_norm[k - 1] * (1.0 + 1e-9) + 1e-14);
            }
            partial += log.s[k] * (*log.f_y[k] - fstar);
            EXPECT_LE(partial, budget * (1.0 + 1e-9) + 1e-12) << alpha << " k=" << k;
            const double transfer = (alpha - 1.0) / (log.s[k] * log.s[k]) * partial;
            EXPECT_LE(*log.f_x[k] - fstar, transfer + 1e-12) << alpha << " k=" << k;
        }
    }
}

TEST(ProxAveraging, EqualStartFlag) {
    EXPECT_THROW(prox_averaging(l1_regularizer(1.0), 3.0, 5, vec({1.0}), vec({2.0}), true),
                 std::invalid_argument);
    EXPECT_NO_THROW(prox_averaging(l1_regularizer(1.0), 3.0, 5, vec({1.0}), vec({2.0})));
}

TEST(ProxAveraging, CsvHasEmptyCellsWhereUndefined) {
    const IterateLog log = prox_averaging(l1_regularizer(1.0), 3.0, 2, vec({1.0}), vec({1.0}));
    std::ostringstream os;
    write_csv(os, log);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "k,s_k,f_y_gap,f_x_gap,res_norm,E_k");
    std::getline(is, line);
    EXPECT_EQ(line, "0,0,1,1,,");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 4), "1,2,");
    EXPECT_EQ(line.back(), ',');
}

// ---------------------------------------------------------------------------
// Forward-backward
// ---------------------------------------------------------------------------

TEST(ForwardBackward, ScalarStep) {
    const CompositeProblem c = lasso_problem(Matrix::Identity(1, 1), Vector::Zero(1), 1.0);
    const IterateLog log = forward_backward(c, 0.5, 1, vec({3.0}));
    EXPECT_DOUBLE_EQ(log.x[1](0), 1.0);
}

TEST(ForwardBackward, StationaryAtZero) {
    LassoData d = random_lasso_data(15, 25, 8, 5);
    const CompositeProblem c = lasso_problem(d.A, d.b, 0.2);
    const Vector z = composite_minimizer(c);
    const IterateLog log = forward_backward(c, 1.0 / c.lipschitz(), 30, z);
    for (const auto& y : log.x) EXPECT_LE((y - z).norm(), 1e-12);
}

TEST(ForwardBackward, ValueIsNonincreasing) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        LassoData d = random_lasso_data(30, 60, seed, 6);
        const CompositeProblem c = lasso_problem(d.A, d.b, 0.1);
        Rng rng(seed);
        const IterateLog log = forward_backward(c, 1.0 / c.lipschitz(), 500, rng.normal_vector(60),
                                                composite_min_value(c));
        for (std::size_t k = 1; k < log.size(); ++k) {
            EXPECT_LE(*log.f_y[k], *log.f_y[k - 1] + 1e-13) << seed << " k=" << k;
            EXPECT_GE(*log.f_y_gap[k], -1e-10);
        }
    }
}

TEST(ForwardBackward, RejectsStepOutsideRange) {
    const CompositeProblem c = lasso_problem(Matrix::Identity(2, 2), Vector::Zero(2), 1.0);
    EXPECT_THROW(forward_backward(c, 2.0, 3, vec({1.0, 1.0})), std::invalid_argument);
    EXPECT_THROW(forward_backward(c, -0.1, 3, vec({1.0, 1.0})), std::invalid_argument);
}

}  // namespace
}  // namespace tsavg
