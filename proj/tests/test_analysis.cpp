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

#include "tsavg/analysis.hpp"
#include "tsavg/suites.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace tsavg {
namespace {

std::vector<double> grid(double a, double b, int n) {
    std::vector<double> t;
    for (int i = 0; i <= n; ++i) t.push_back(a + (b - a) * i / n);
    return t;
}

std::vector<double> power_series(const std::vector<double>& t, double p) {
    std::vector<double> v;
    for (double x : t) v.push_back(std::pow(x, -p));
    return v;
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Trajectory isihd_run(const SmoothProblem& p, const Vector& x0, double alpha, double T, double h) {
    Vector u0(2 * p.dim);
    u0 << x0, Vector::Zero(p.dim);
    return integrate(isihd_system(p, alpha), u0, 1.0, T, h, 10);
}

// ---------------------------------------------------------------------------
// rate_fit
// ---------------------------------------------------------------------------

TEST(RateFit, SyntheticPowers) {
    const std::vector<double> t = grid(1.0, 100.0, 1000);
    for (double p : {0.5, 1.0, 2.0, 3.0}) {
        const auto e = rate_fit(t, power_series(t, p), 0.5);
        ASSERT_TRUE(e.has_value());
        EXPECT_NEAR(*e, -p, 1e-6);
    }
}

TEST(RateFit, UndefinedCases) {
    const std::vector<double> t = grid(1.0, 100.0, 100);
    std::vector<double> v = power_series(t, 2.0);
    v[90] = 0.0;
    EXPECT_FALSE(rate_fit(t, v).has_value());
    v[90] = -1.0;
    EXPECT_FALSE(rate_fit(t, v).has_value());
    const std::vector<double> few = grid(1.0, 2.0, 30);
    EXPECT_FALSE(rate_fit(few, power_series(few, 1.0), 0.5).has_value());
    EXPECT_THROW(rate_fit(t, power_series(t, 1.0), 0.0), std::invalid_argument);
}

TEST(RateFit, AboveFloor) {
    const std::vector<double> t = grid(1.0, 100.0, 1000);
    std::vector<double> v = power_series(t, 2.0);
    for (std::size_t i = 600; i < v.size(); ++i) v[i] = 0.0;
    const RateFit fit = rate_fit_above_floor(t, v, 0.0);
    EXPECT_TRUE(fit.reached_floor);
    ASSERT_TRUE(fit.exponent.has_value());
    EXPECT_NEAR(*fit.exponent, -2.0, 1e-6);
}

TEST(RateFit, IsihdValueGapOnLeastSquares) {
    const SmoothProblem p = random_least_squares(20, 40, 2024);
    Rng rng(11);
    const Trajectory tr = isihd_run(p, rng.normal_vector(40), 5.0, 100.0, 1e-3);
    const auto& gap = tr.channel("value_gap");
    double peak = 0.0;
    for (double g : gap) peak = std::max(peak, g);
    const RateFit fit = rate_fit_above_floor(tr.times, gap, 1e-20 * peak);
    ASSERT_TRUE(fit.exponent.has_value());
    EXPECT_LE(*fit.exponent, -2.0 + kExponentTolerance);
}

// ---------------------------------------------------------------------------
// weighted_decay_check / integral_estimate
// ---------------------------------------------------------------------------

TEST(WeightedDecay, InverseSquareAtPowerOne) {
    const std::vector<double> t = grid(1.0, 100.0, 990);
    const DecayCheck d = weighted_decay_check(t, power_series(t, 2.0), 1.0);
    EXPECT_NEAR(d.ratio, 20.0 / 80.0, 1e-12);
    EXPECT_TRUE(d.pass());
}

TEST(WeightedDecay, ConstantFails) {
    const std::vector<double> t = grid(1.0, 100.0, 990);
    const DecayCheck d = weighted_decay_check(t, std::vector<double>(t.size(), 1.0), 1.0);
    EXPECT_GT(d.ratio, 1.0);
    EXPECT_FALSE(d.pass());
}

TEST(WeightedDecay, EmptyWindowRejected) {
    const std::vector<double> t{1.0, 9.0, 10.0};
    EXPECT_THROW(weighted_decay_check(t, {1.0, 1.0, 1.0}, 1.0), std::invalid_argument);
    EXPECT_THROW(weighted_decay_check(t, {1.0, 1.0, 1.0}, 1.0, Windows::absolute(3, 2, 8, 10)),
                 std::invalid_argument);
}

TEST(WeightedDecay, FloorCountsAsZero) {
    const std::vector<double> t = grid(1.0, 10.0, 90);
    std::vector<double> v(t.size(), 1e-18);
    v[0] = 1.0;
    EXPECT_FALSE(weighted_decay_check(t, v, 1.0).pass());
    EXPECT_EQ(weighted_decay_check(t, v, 1.0, {}, 1e-10).ratio, 0.0);
}

TEST(WeightedDecay, IsihdScaledVelocity) {
    const SmoothProblem p = random_least_squares(20, 40, 2024);
    Rng rng(11);
    const Trajectory tr = isihd_run(p, rng.normal_vector(40), 4.0, 50.0, 1e-3);
    const DecayCheck d = weighted_decay_check(tr.times, tr.channel("velocity_norm"), 1.0,
                                              Windows::absolute(10, 20, 40, 50));
    EXPECT_LT(d.ratio, 0.5);
}

TEST(IntegralEstimate, InverseCube) {
    const std::vector<double> t = grid(1.0, 100.0, 200000);
    const IntegralEstimate e = integral_estimate(t, power_series(t, 3.0), 1.0);
    EXPECT_NEAR(e.value, 0.99, 1e-3);
    EXPECT_TRUE(e.pass());
}

TEST(IntegralEstimate, ConstantFails) {
    const std::vector<double> t = grid(1.0, 100.0, 9900);
    const IntegralEstimate e = integral_estimate(t, std::vector<double>(t.size(), 1.0), 1.0);
    EXPECT_NEAR(e.last_window_share, (100.0 * 100.0 - 80.0 * 80.0) / (100.0 * 100.0 - 1.0), 1e-9);
    EXPECT_FALSE(e.pass());
}

TEST(IntegralEstimate, IsihdGradientAtAveragedPoint) {
    const SmoothProblem p = half_norm_squared(5);
    const Trajectory tr = isihd_run(p, vec({1.0, -1.0, 0.5, 2.0, -0.5}), 4.0, 100.0, 1e-3);
    const std::vector<double> g2 = detail::squared(tr.channel("y_grad_norm"));
    const IntegralEstimate e = integral_estimate(tr.times, g2, 3.0);
    EXPECT_TRUE(e.pass()) << e.last_window_share;

    // Coarser grid: every other sample.
    std::vector<double> t2, v2;
    for (std::size_t i = 0; i < tr.size(); i += 2) {
        t2.push_back(tr.times[i]);
        v2.push_back(g2[i]);
    }
    EXPECT_LT(std::abs(integral_estimate(t2, v2, 3.0).value - e.value), 0.01 * e.value);
}

// ---------------------------------------------------------------------------
// conservation_residual
// ---------------------------------------------------------------------------

ConservationParams params_for(const SmoothProblem& p, double alpha, const Vector& y0,
                              const Vector& y1) {
    ConservationParams cp;
    cp.alpha = alpha;
    cp.c0 = first_integral_constant(p.gradient(y0), alpha, 1.0, y1);
    cp.G = p.gradient;
    return cp;
}

Trajectory hessian_run(const SmoothProblem& p, double alpha, const Vector& y0, const Vector& y1,
                       double T, double h) {
    Vector u0(2 * p.dim);
    u0 << y0, y1;
    return integrate(explicit_hessian_system(p, alpha), u0, 1.0, T, h, 1);
}

TEST(Conservation, EquilibriumIsExact) {
    const SmoothProblem p = random_least_squares(20, 40, 3);
    const Vector z = *p.minimizer, zero = Vector::Zero(40);
    const Trajectory tr = hessian_run(p, 3.0, z, zero, 20.0, 1e-2);
    EXPECT_LE(conservation_residual(tr, DynamicsKind::explicit_hessian, params_for(p, 3.0, z, zero)),
              1e-14);
}

TEST(Conservation, QuadraticAndStepOrder) {
    const SmoothProblem p = half_norm_squared(2);
    const Vector y0 = vec({1.0, -2.0}), y1 = vec({0.5, 0.5});
    const ConservationParams cp = params_for(p, 3.0, y0, y1);
    const double r1 = conservation_residual(hessian_run(p, 3.0, y0, y1, 10.0, 1e-3),
                                            DynamicsKind::explicit_hessian, cp);
    EXPECT_LE(r1, 1e-6);
    const double ra = conservation_residual(hessian_run(p, 3.0, y0, y1, 10.0, 0.04),
                                            DynamicsKind::explicit_hessian, cp);
    const double rb = conservation_residual(hessian_run(p, 3.0, y0, y1, 10.0, 0.02),
                                            DynamicsKind::explicit_hessian, cp);
    EXPECT_GE(ra / rb, 12.0);
    EXPECT_LE(ra / rb, 20.0);
}

TEST(Conservation, DetectsWrongConstant) {
    const SmoothProblem p = half_norm_squared(2);
    const Vector y0 = vec({1.0, -2.0}), y1 = vec({0.5, 0.5});
    ConservationParams cp = params_for(p, 3.0, y0, y1);
    cp.c0.array() += 1.0;
    const double smax = 10.0;
    const double r = conservation_residual(hessian_run(p, 3.0, y0, y1, smax, 1e-3),
                                           DynamicsKind::explicit_hessian, cp);
    EXPECT_GE(r, std::sqrt(2.0) / std::pow(smax, 3.0));
}

TEST(Conservation, RejectsOtherKinds) {
    const SmoothProblem p = half_norm_squared(1);
    const Trajectory tr = isihd_run(p, vec({1.0}), 3.0, 2.0, 1e-2);
    const ConservationParams cp = params_for(p, 3.0, vec({1.0}), vec({0.0}));
    EXPECT_THROW(conservation_residual(tr, DynamicsKind::isihd, cp), std::invalid_argument);
    EXPECT_THROW(conservation_residual(tr, DynamicsKind::cocoercive, cp), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// jensen_check
// ---------------------------------------------------------------------------

TEST(Jensen, ConstantAndAffineAreEqualityCases) {
    Trajectory y;
    y.state_labels = {"y_0", "y_1"};
    for (double s : grid(1.0, 20.0, 200)) {
        y.times.push_back(s);
        y.states.push_back(vec({2.0, -1.0}));
    }
    const auto f = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
    EXPECT_NEAR(jensen_check(f, y, 3.0, {2.0, 10.0, 20.0}), 0.0, 1e-14);

    Trajectory z = integrate(rescaled_sd_field(half_norm_squared(2), 4.0), vec({1.0, 3.0}), 1.0,
                             20.0, 1e-3, 10);
    const auto affine = [](const Vector& v) { return 3.0 * v(0) - v(1) + 7.0; };
    EXPECT_NEAR(jensen_check(affine, z, 4.0, {5.0, 10.0, 20.0}), 0.0, 1e-12);
}

TEST(Jensen, QuadraticOnRescaledRun) {
    const SmoothProblem p = half_norm_squared(2);
    const Trajectory z = integrate(rescaled_sd_field(p, 4.0), vec({1.0, 3.0}), 1.0, 20.0, 1e-3, 10);
    EXPECT_LE(jensen_check(p.value, z, 4.0, {5.0, 10.0, 20.0}), 1e-6);
}

// ---------------------------------------------------------------------------
// Theorem suites
// ---------------------------------------------------------------------------

TEST(TheoremSuite, Thm2EquilibriumPassesVacuously) {
    const SmoothProblem p = half_norm_squared(5);
    RunArtifacts run;
    run.label = "eq";
    run.kind = "isihd";
    run.alpha = 5.0;
    run.argmin_distance = p.argmin_distance;
    run.trajectory = isihd_run(p, *p.minimizer, 5.0, 100.0, 1e-2);
    const RateReport r = theorem_suite("thm2", {run});
    EXPECT_TRUE(r.passed());
    for (const auto& [name, v] : r.verdicts) EXPECT_TRUE(v.pass) << name;
}

TEST(TheoremSuite, ThmProxOnAbsoluteValue) {
    ProxFriendly g = l1_regularizer(1.0);
    RunArtifacts run;
    run.label = "abs";
    run.kind = "prox_averaging";
    run.alpha = 3.0;
    run.minimizer = Vector::Zero(1);
    run.log = prox_averaging(g, 3.0, 2000, vec({5.0}), vec({5.0}));
    const RateReport r = theorem_suite("thm_prox", {run});
    EXPECT_TRUE(r.passed());
    for (const char* k : {"abs/y_gap_exponent", "abs/x_gap_exponent"}) {
        ASSERT_TRUE(r.verdicts.count(k)) << k;
        EXPECT_TRUE(r.verdicts.at(k).pass) << k << " " << r.verdicts.at(k).value;
    }
}

TEST(TheoremSuite, Thm6OnBilevelRun) {
    const SmoothProblem p = half_norm_squared(5);
    Vector z0(10);
    z0 << 1.0, -1.0, 0.5, 2.0, -0.5, 1.0, -1.0, 0.5, 2.0, -0.5;
    RunArtifacts run;
    run.label = "bl";
    run.kind = "bilevel";
    run.alpha = 3.0;
    run.trajectory = integrate(bilevel_system(p, 3.0), z0, 1.0, 100.0, 1e-2, 10);
    const RateReport r = theorem_suite("thm6", {run});
    ASSERT_TRUE(r.verdicts.count("bl/phi"));
    ASSERT_TRUE(r.verdicts.count("bl/t_psi_gap"));
    EXPECT_TRUE(r.verdicts.at("bl/phi").pass);
    EXPECT_TRUE(r.verdicts.at("bl/phi").hard);
    EXPECT_TRUE(r.verdicts.at("bl/t_psi_gap").pass);
    EXPECT_TRUE(r.passed());
}

TEST(TheoremSuite, MissingChannelsAreNamed) {
    Trajectory tr;
    tr.times = {1.0, 2.0};
    tr.states = {vec({1.0, 0.0}), vec({0.5, 0.0})};
    tr.channel_names = {"value_gap"};
    tr.channels = {{1.0, 0.5}};
    RunArtifacts run;
    run.label = "bare";
    run.kind = "isihd";
    run.alpha = 3.0;
    run.trajectory = tr;
    try {
        theorem_suite("thm2", {run});
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("velocity_norm"), std::string::npos) << msg;
        EXPECT_NE(msg.find("y_grad_norm"), std::string::npos) << msg;
    }
    EXPECT_THROW(theorem_suite("thm9", {}), std::invalid_argument);
}

TEST(TheoremSuite, SmallMatrixPassesAndSignFlipFails) {
    TestMatrix m = default_test_matrix();
    m.problems.resize(1);  // 1/2|x|^2
    m.alphas = {3.0, 5.0};
    for (const char* s : {"thm2", "thm4", "thm5"}) {
        const RateReport ok = run_suite(s, m);
        EXPECT_TRUE(ok.passed()) << s;
        EXPECT_GT(ok.count(true, true), 0u) << s;
        const RateReport bad = run_suite(s, m, true);
        EXPECT_FALSE(bad.passed()) << s;
    }
}

TEST(TheoremSuite, AlphaMarginMakesVerdictsInformational) {
    TestMatrix m = default_test_matrix();
    m.problems.resize(1);
    m.alphas = {1.001};
    const RateReport r = run_suite("thm2", m);
    for (const auto& [name, v] : r.verdicts) {
        if (name.find("decay") != std::string::npos || name.find("s2_") != std::string::npos) {
            EXPECT_FALSE(v.hard) << name;
        }
    }
    EXPECT_TRUE(r.passed());
}

TEST(RateReportJson, Shape) {
    RateReport r;
    r.suite = "thm4";
    r.add("a", Verdict{true, true, 0.1, 0.5, ""});
    r.add("b", Verdict{false, false, 0.9, 0.5, "informational"});
    r.exponents["e"] = std::nullopt;
    r.integrals["i"] = 1.5;
    const nlohmann::json j = to_json(r);
    EXPECT_EQ(j["suite"], "thm4");
    EXPECT_EQ(j["verdicts"]["a"], true);
    EXPECT_EQ(j["verdicts"]["b"], false);
    EXPECT_TRUE(j["exponents"]["e"].is_null());
    EXPECT_EQ(j["integrals"]["i"], 1.5);
    EXPECT_EQ(j["passed"], true);
}

}  // namespace
}  // namespace tsavg
