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

#ifndef TSAVG_SUITES_HPP
#define TSAVG_SUITES_HPP

// Theorem suites: runs on a fixed test matrix, turned into RateReports.
//
// Hard vs informational verdicts is decided from the run configuration
// alone, never from the outcome:
//  * alpha-dependent verdicts are informational when (alpha-1) ln(T/s0) < 1,
//    since the powers (s0/s)^(alpha-1) are then indistinguishable from
//    constants on the horizon;
//  * value-rate verdicts of the averaged inertial systems are informational
//    for alpha <= 3;
//  * trajectory verdicts on averaged variables are informational (they
//    retain an O(s^-(alpha-1)) memory of the transient);
//  * decay verdicts on quantities carrying the averaging memory
//    s^(-(alpha-1)/beta0) are hard only when that power exceeds 1/2, the
//    least power the 0.5 window ratio can resolve;
//  * on problems without quadratic growth, decay and trajectory verdicts are
//    informational (the little-o slack can be arbitrarily thin);
//  * invariants (conservation, monotonicity, exact bounds and identities)
//    are always hard.

#include "tsavg/algorithms.hpp"
#include "tsavg/analysis.hpp"
#include "tsavg/problems.hpp"
#include "tsavg/rng.hpp"

#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace tsavg {

inline constexpr double kMonotoneSlack = 1e-12;  // relative slack of samplewise monotonicity
inline constexpr double kIdentityTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Test matrix
// ---------------------------------------------------------------------------

struct ProblemCase {
    std::string name;
    SmoothProblem problem;
    Vector x0;
    bool quadratic_growth = true;
};

struct TestMatrix {
    std::vector<ProblemCase> problems;
    std::vector<double> alphas{1.001, 2.0, 3.0, 5.0};
};

/// 1/2|x|^2 in dimension 5, a 20x40 least-squares instance, and the quartic
/// in dimension 3 (convex, no quadratic growth).
inline TestMatrix default_test_matrix() {
    TestMatrix m;
    Vector xq(5);
    xq << 1.0, -1.0, 0.5, 2.0, -0.5;
    m.problems.push_back({"half_norm_5", half_norm_squared(5), xq, true});
    Rng rng(11);
    m.problems.push_back({"ls_20x40", random_least_squares(20, 40, 2024), rng.normal_vector(40), true});
    Vector xt(3);
    xt << 0.9, -0.7, 0.5;
    m.problems.push_back({"quartic_3", quartic_problem(3), xt, false});
    return m;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"thm1", "thm2", "thm3", "thm4",
                                                "thm5", "thm6", "thm_prox", "thm_cocoercive"};
    return names;
}

inline bool is_suite_name(const std::string& s) {
    const auto& n = suite_names();
    return std::find(n.begin(), n.end(), s) != n.end();
}

// ---------------------------------------------------------------------------
// Sign-flip mutations
// ---------------------------------------------------------------------------

inline SmoothProblem sign_flipped(const SmoothProblem& p) {
    SmoothProblem q = p;
    q.name = p.name + "_flipped";
    q.gradient = [g = p.gradient](const Vector& x) -> Vector { return -g(x); };
    if (p.hess_vec) {
        q.hess_vec = [h = p.hess_vec](const Vector& x, const Vector& v) -> Vector { return -h(x, v); };
    }
    return q;
}

inline CocoerciveOperator sign_flipped(const CocoerciveOperator& M) {
    CocoerciveOperator q = M;
    q.name = M.name + "_flipped";
    q.apply = [a = M.apply](const Vector& y) -> Vector { return -a(y); };
    if (M.jvp) q.jvp = [j = M.jvp](const Vector& y, const Vector& d) -> Vector { return -j(y, d); };
    return q;
}

/// Prox step taken in the wrong direction: v -> 2v - prox(v).
inline ProxFriendly sign_flipped(const ProxFriendly& g) {
    ProxFriendly q = g;
    q.name = g.name + "_flipped";
    q.prox = [p = g.prox](const Vector& v, double step) -> Vector { return 2.0 * v - p(v, step); };
    return q;
}

// ---------------------------------------------------------------------------
// Run artifacts
// ---------------------------------------------------------------------------

/// Everything a suite needs from one run.
struct RunArtifacts {
    std::string label;
    std::string kind;  // dynamics or algorithm name
    double alpha = kNaN;  // NaN for runs that do not depend on alpha
    double s0 = 1.0;
    bool quadratic_growth = true;
    std::optional<Trajectory> trajectory;
    std::optional<IterateLog> log;
    std::function<double(const Vector&)> argmin_distance;
    std::optional<ConservationParams> conservation;
    std::optional<Vector> minimizer;  // z* for the prox bounds
    double lambda_step = kNaN;        // Nesterov step
    double lipschitz = kNaN;
    std::optional<std::string> failure;  // integration error, if any
};

namespace detail {

inline void require_channels(const Trajectory& traj, const std::vector<std::string>& names,
                             const std::string& who) {
    std::string missing;
    for (const auto& n : names) {
        if (!traj.has_channel(n)) missing += (missing.empty() ? "" : ", ") + n;
    }
    if (!missing.empty()) {
        throw std::invalid_argument(who + ": missing channels: " + missing);
    }
}

inline std::vector<double> squared(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * v[i];
    return out;
}

inline bool alpha_identifiable(double alpha, double s0, double T) {
    return std::isnan(alpha) || (alpha - 1.0) * std::log(T / s0) >= 1.0;
}

// Verdict builder bound to one run.
struct SuiteCtx {
    RateReport& report;
    const RunArtifacts& run;
    double T = 1.0;

    std::string key(const std::string& what) const { return run.label + "/" + what; }

    bool identifiable() const { return alpha_identifiable(run.alpha, run.s0, T); }
    bool rate_hard() const { return identifiable() && run.quadratic_growth; }

    // Quantities carrying the averaging memory s^(-(alpha-1)/beta0) can only
    // show a window ratio below 0.5 when that power exceeds 1/2.
    bool memory_hard(double beta0) const {
        return rate_hard() && (run.alpha - 1.0) / beta0 > 0.5;
    }

    static double peak(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    // Resolution floor: gap-like channels scale as a squared norm.
    static double floor_of(const std::vector<double>& v, bool gap_like) {
        const double r = gap_like ? kNormResolution * kNormResolution : kNormResolution;
        return r * peak(v);
    }

    void decay(const std::string& what, const std::vector<double>& t, const std::vector<double>& v,
               double p, bool hard, bool gap_like = false) {
        const DecayCheck d = weighted_decay_check(t, v, p, Windows{}, floor_of(v, gap_like));
        report.tail_ratios[key(what)] = d.ratio;
        report.add(key(what), Verdict{d.pass(), hard, d.ratio, kDecayRatioMax, ""});
    }

    void integral(const std::string& what, const std::vector<double>& t,
                  const std::vector<double>& v, double p, bool hard) {
        const IntegralEstimate e = integral_estimate(t, v, p);
        report.integrals[key(what)] = e.value;
        report.add(key(what), Verdict{e.pass(), hard, e.last_window_share, kIntegralShareMax, ""});
    }

    void exponent(const std::string& what, const std::vector<double>& t,
                  const std::vector<double>& v, double target, double floor, bool hard) {
        floor = std::max(floor, floor_of(v, true));
        const RateFit fit = rate_fit_above_floor(t, v, floor);
        report.exponents[key(what)] = fit.exponent;
        Verdict verdict;
        verdict.hard = hard;
        verdict.threshold = target + kExponentTolerance;
        if (fit.exponent) {
            verdict.value = *fit.exponent;
            verdict.pass = *fit.exponent <= target + kExponentTolerance;
        } else if (fit.reached_floor) {
            verdict.pass = true;
            verdict.note = "reached the floor before a tail could be fitted";
        } else {
            verdict.note = "undefined: fewer than 20 positive tail samples";
        }
        report.add(key(what), verdict);
    }

    void bound(const std::string& what, double worst_excess, bool hard = true,
               const std::string& note = "") {
        report.add(key(what), Verdict{worst_excess <= 0.0, hard, worst_excess, 0.0, note});
    }

    void trajectory(const std::string& what, const Trajectory& traj, Eigen::Index offset,
                    Eigen::Index len, bool hard) {
        const double c = cauchy_gap(traj, offset, len);
        report.add(key(what + "_cauchy"), Verdict{c < kTrajectoryTolerance, hard, c,
                                                  kTrajectoryTolerance, ""});
        if (run.argmin_distance) {
            const Vector end = traj.states.back().segment(offset, len);
            const double d = run.argmin_distance(end) / (1.0 + end.norm());
            report.add(key(what + "_argmin"), Verdict{d < kTrajectoryTolerance, hard, d,
                                                      kTrajectoryTolerance, ""});
        }
    }
};

// Largest relative increase over consecutive samples (<= 0 when nonincreasing).
inline double worst_increase(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double scale = kMonotoneSlack * std::max(1.0, std::abs(v.front()));
    double worst = -kInf;
    for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] - v[i - 1] - scale);
    return v.size() < 2 ? 0.0 : worst;
}

inline Eigen::Index half_dim(const Trajectory& traj) { return traj.states.front().size() / 2; }

// ---------------------------------------------------------------------------
// Per-kind analyzers
// ---------------------------------------------------------------------------

inline void analyze_perturbed_sd(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"value_gap", "grad_norm", "velocity_norm"}, "thm1");
    const auto& t = tr.times;
    const bool id = c.identifiable();
    c.integral("int_t_velocity_sq", t, squared(tr.channel("velocity_norm")), 1.0, id);
    c.integral("int_t_grad_sq", t, squared(tr.channel("grad_norm")), 1.0, id);
    c.integral("int_value_gap", t, tr.channel("value_gap"), 0.0, id);
    c.decay("t_value_gap", t, tr.channel("value_gap"), 1.0, c.rate_hard(), true);
    c.trajectory("trajectory", tr, 0, tr.states.front().size(), c.rate_hard());
}

inline void analyze_isihd(SuiteCtx& c, const Trajectory& tr, bool value_rate) {
    require_channels(tr, {"value_gap", "velocity_norm", "y_grad_norm"}, "thm2");
    const auto& t = tr.times;
    const Eigen::Index n = half_dim(tr);
    c.integral("int_s3_grad_y_sq", t, squared(tr.channel("y_grad_norm")), 3.0, c.identifiable());
    c.decay("s2_grad_y", t, tr.channel("y_grad_norm"), 2.0, c.rate_hard());
    c.decay("s_velocity", t, tr.channel("velocity_norm"), 1.0, c.memory_hard(1.0));
    const bool vhard = value_rate && c.rate_hard();
    c.decay("s2_value_gap", t, tr.channel("value_gap"), 2.0, vhard, true);
    c.exponent("value_gap_exponent", t, tr.channel("value_gap"), -2.0, 0.0, vhard);
    c.trajectory("trajectory_x", tr, 0, n, false);
}

inline void analyze_explicit_hessian(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"value_gap", "grad_norm", "velocity_norm"}, "thm3");
    const auto& t = tr.times;
    const bool id = c.identifiable();
    c.integral("int_s_velocity_sq", t, squared(tr.channel("velocity_norm")), 1.0, id);
    c.integral("int_s_value_gap", t, tr.channel("value_gap"), 1.0, id);
    c.integral("int_s3_grad_sq", t, squared(tr.channel("grad_norm")), 3.0, id);
    c.decay("s2_value_gap", t, tr.channel("value_gap"), 2.0, c.rate_hard(), true);
    if (c.run.conservation) {
        const double r = conservation_residual(tr, DynamicsKind::explicit_hessian, *c.run.conservation);
        c.report.add(c.key("conservation"),
                     Verdict{r <= kConservationTolerance, true, r, kConservationTolerance, ""});
    }
    c.trajectory("trajectory_y", tr, 0, half_dim(tr), c.rate_hard());
}

inline void analyze_regularized_newton(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"value_gap", "grad_norm", "velocity_norm", "vdot_norm"}, "thm4");
    const auto& t = tr.times;
    c.integral("int_value_gap", t, tr.channel("value_gap"), 0.0, true);
    c.integral("int_t_velocity_sq", t, squared(tr.channel("velocity_norm")), 1.0, true);
    c.integral("int_t_vdot_sq", t, squared(tr.channel("vdot_norm")), 1.0, true);
    c.integral("int_t_grad_sq", t, squared(tr.channel("grad_norm")), 1.0, true);
    const bool h = c.rate_hard();
    c.decay("t_value_gap", t, tr.channel("value_gap"), 1.0, h, true);
    c.decay("t_grad", t, tr.channel("grad_norm"), 1.0, h);
    c.decay("t_velocity", t, tr.channel("velocity_norm"), 1.0, h);
    c.decay("t_vdot", t, tr.channel("vdot_norm"), 1.0, h);
    c.bound("grad_nonincreasing", worst_increase(tr.channel("grad_norm")));
    c.bound("value_nonincreasing", worst_increase(tr.channel("value_gap")));
    c.trajectory("trajectory", tr, 0, tr.states.front().size(), h);
}

inline void analyze_combined(SuiteCtx& c, const Trajectory& tr, bool value_rate) {
    require_channels(tr, {"value_gap", "w_norm", "velocity_norm"}, "thm5");
    const auto& t = tr.times;
    c.integral("int_s3_w_sq", t, squared(tr.channel("w_norm")), 3.0, c.identifiable());
    c.decay("s2_w", t, tr.channel("w_norm"), 2.0, c.rate_hard());
    c.decay("s_velocity", t, tr.channel("velocity_norm"), 1.0, c.memory_hard(1.0));
    const bool vhard = value_rate && c.rate_hard();
    c.decay("s2_value_gap", t, tr.channel("value_gap"), 2.0, vhard, true);
    c.exponent("value_gap_exponent", t, tr.channel("value_gap"), -2.0, 0.0, vhard);
    const Eigen::Index n = half_dim(tr);
    c.trajectory("trajectory_y", tr, 0, n, c.rate_hard());
    c.trajectory("trajectory_x", tr, n, n, false);
}

inline void analyze_bilevel(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"psi_gap", "phi", "velocity_norm"}, "thm6");
    const auto& t = tr.times;
    c.decay("t_psi_gap", t, tr.channel("psi_gap"), 1.0, c.rate_hard(), true);
    c.decay("phi", t, tr.channel("phi"), 0.0, c.memory_hard(2.0), true);
    c.integral("int_t_zdot_sq", t, squared(tr.channel("velocity_norm")), 1.0, c.identifiable());
    const Eigen::Index n = half_dim(tr);
    // Y is tied to the averaged X through the coupling term.
    c.trajectory("trajectory_Y", tr, 0, n, false);
    c.trajectory("trajectory_X", tr, n, n, false);
}

inline void analyze_general_damping(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"y_value_gap", "velocity_norm"}, "thm6");
    const auto& t = tr.times;
    c.decay("s2_y_value_gap", t, tr.channel("y_value_gap"), 2.0, c.rate_hard(), true);
    c.decay("s_velocity", t, tr.channel("velocity_norm"), 1.0, c.memory_hard(2.0));
    c.trajectory("trajectory_x", tr, 0, half_dim(tr), false);
}

inline void analyze_cocoercive(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"m_norm"}, "thm_cocoercive");
    const auto& t = tr.times;
    c.decay("s_m_norm", t, tr.channel("m_norm"), 1.0, c.rate_hard());
    c.integral("int_s_m_sq", t, squared(tr.channel("m_norm")), 1.0, c.identifiable());
    c.trajectory("trajectory", tr, 0, tr.states.front().size(), c.rate_hard());
}

inline void analyze_operator_flow(SuiteCtx& c, const Trajectory& tr) {
    require_channels(tr, {"m_norm"}, "thm_cocoercive");
    const auto& t = tr.times;
    c.decay("sqrt_t_m_norm", t, tr.channel("m_norm"), 0.5, c.rate_hard());
    c.integral("int_m_sq", t, squared(tr.channel("m_norm")), 0.0, true);
    c.bound("m_nonincreasing", worst_increase(tr.channel("m_norm")));
    c.trajectory("trajectory", tr, 0, tr.states.front().size(), c.rate_hard());
}

inline void analyze_cocoercive_inertial(SuiteCtx& c, const Trajectory& tr) {
    detail::require(c.run.conservation.has_value(), "thm_cocoercive: inertial run needs c0 and M");
    const double r = conservation_residual(tr, DynamicsKind::cocoercive_inertial, *c.run.conservation);
    c.report.add(c.key("conservation"),
                 Verdict{r <= kConservationTolerance, true, r, kConservationTolerance, ""});
}

inline void analyze_prox_averaging(SuiteCtx& c, const IterateLog& log) {
    detail::require(c.run.minimizer.has_value(), "thm_prox: prox run needs z*");
    const std::size_t K = log.size() - 1;
    std::string missing;
    for (std::size_t k = 0; k <= K; ++k) {
        if (!log.f_y_gap[k] || !log.f_x_gap[k] || !log.y[k]) {
            missing = "f_y_gap, f_x_gap, y";
            break;
        }
    }
    if (!missing.empty()) throw std::invalid_argument("thm_prox: missing channels: " + missing);
    const double am1 = c.run.alpha - 1.0;
    const auto& s = log.s;

    // Rates in k, fitted on k >= 1.
    std::vector<double> kk, gy, gx;
    for (std::size_t k = 1; k <= K; ++k) {
        kk.push_back(static_cast<double>(k));
        gy.push_back(*log.f_y_gap[k]);
        gx.push_back(*log.f_x_gap[k]);
    }
    const double fstar = *log.f_y[0] - *log.f_y_gap[0];
    const double floor = 1e-13 * (1.0 + std::abs(fstar));
    c.exponent("y_gap_exponent", kk, gy, -2.0, floor, true);
    c.exponent("x_gap_exponent", kk, gx, -2.0, floor, true);

    // Telescoped and transfer bounds at every partial sum.
    const Vector& y0 = *log.y[0];
    const double rhs = 0.5 * am1 * (y0 - *c.run.minimizer).squaredNorm();
    double partial = 0.0, tele = -kInf, transfer = -kInf;
    for (std::size_t k = 1; k <= K; ++k) {
        partial += s[k] * *log.f_y_gap[k];
        tele = std::max(tele, partial - rhs - kIdentityTolerance * (1.0 + rhs));
        const double avg = am1 / (s[k] * s[k]) * partial;
        transfer = std::max(transfer, *log.f_x_gap[k] - avg - kIdentityTolerance * (1.0 + std::abs(avg)));
    }
    c.bound("telescoped_bound", tele);
    c.bound("transfer_bound", transfer);

    std::vector<double> fy, eta;
    for (std::size_t k = 0; k <= K; ++k) fy.push_back(*log.f_y[k]);
    for (std::size_t k = 1; k <= K; ++k) eta.push_back(log.res_norm[k].value_or(0.0));
    c.bound("f_y_nonincreasing", worst_increase(fy));
    c.bound("eta_nonincreasing", worst_increase(eta));

    // x_k as the s-weighted average of y_1..y_k.
    double worst = 0.0, ymax = 0.0;
    Vector acc = Vector::Zero(y0.size());
    double wsum = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        acc += s[k] * *log.y[k];
        wsum += s[k];
        ymax = std::max(ymax, log.y[k]->norm());
        worst = std::max(worst, (log.x[k] - acc / wsum).norm());
    }
    c.bound("weighted_average", worst - kIdentityTolerance * (1.0 + ymax));
}

inline void analyze_nesterov(SuiteCtx& c, const IterateLog& log) {
    const std::size_t K = log.size() - 1;
    std::vector<double> E;
    for (std::size_t k = 2; k <= K; ++k) {
        if (!log.energy[k]) throw std::invalid_argument("thm_prox: missing channels: E_k");
        E.push_back(*log.energy[k]);
    }
    double neg = -kInf;
    for (double e : E) neg = std::max(neg, -e - kMonotoneSlack * std::max(1.0, E.front()));
    c.bound("energy_nonnegative", E.empty() ? 0.0 : neg);
    c.bound("energy_nonincreasing", worst_increase(E));

    const double lam = c.run.lambda_step, L = c.run.lipschitz;
    const double cc = lam * (1.0 - 0.5 * L * lam);
    double worst = -kInf;
    for (std::size_t k = 2; k <= K; ++k) {
        const double rhs = *log.f_y_gap[k - 1] - cc * log.res_norm[k - 1].value() * log.res_norm[k - 1].value();
        worst = std::max(worst, *log.f_x_gap[k] - rhs -
                                    kMonotoneSlack * std::max(1.0, *log.f_x_gap[0]));
    }
    c.bound("descent_inequality", worst);

    // x_{k+1} = sum_i theta_{k+1,i} y_i for k <= 30.
    std::vector<double> alphas;
    double werr = 0.0, scale = 1.0;
    const std::size_t kmax = std::min<std::size_t>(30, K - 1);
    const std::vector<double> t = nesterov_step_rule(static_cast<int>(kmax) + 2);
    for (std::size_t k = 0; k <= kmax; ++k) {
        const std::size_t m = k + 1;  // alpha_m = (t_m - 1)/t_{m+1}
        alphas.push_back((t[m] - 1.0) / t[m + 1]);
        const std::vector<double> th = ravine_weights(alphas);
        Vector acc = Vector::Zero(log.x[1].size());
        for (std::size_t i = 1; i <= m; ++i) {
            acc += th[i - 1] * *log.y[i];
            scale = std::max(scale, log.y[i]->norm());
        }
        werr = std::max(werr, (log.x[m] - acc).norm());
    }
    c.bound("ravine_weights", werr - kIdentityTolerance * scale);
}

}  // namespace detail

/// Aggregates verdicts for one theorem over its runs.
inline RateReport theorem_suite(const std::string& name, const std::vector<RunArtifacts>& runs) {
    if (!is_suite_name(name)) throw std::invalid_argument("unknown suite '" + name + "'");
    RateReport report;
    report.suite = name;
    for (const RunArtifacts& run : runs) {
        if (run.failure) {
            report.add(run.label + "/integration", Verdict{false, true, kNaN, kNaN, *run.failure});
            continue;
        }
        detail::SuiteCtx c{report, run, 1.0};
        if (run.trajectory) {
            const Trajectory& tr = *run.trajectory;
            detail::require(tr.size() >= 2, name + ": trajectory needs at least two samples");
            c.T = tr.back_time();
            if (run.kind == "perturbed_sd") {
                detail::analyze_perturbed_sd(c, tr);
            } else if (run.kind == "isihd") {
                detail::analyze_isihd(c, tr, run.alpha > 3.0);
            } else if (run.kind == "explicit_hessian") {
                detail::analyze_explicit_hessian(c, tr);
            } else if (run.kind == "regularized_newton") {
                detail::analyze_regularized_newton(c, tr);
            } else if (run.kind == "combined") {
                detail::analyze_combined(c, tr, run.alpha > 3.0);
            } else if (run.kind == "bilevel") {
                detail::analyze_bilevel(c, tr);
            } else if (run.kind == "general_damping") {
                detail::analyze_general_damping(c, tr);
            } else if (run.kind == "cocoercive") {
                detail::analyze_cocoercive(c, tr);
            } else if (run.kind == "operator_flow") {
                detail::analyze_operator_flow(c, tr);
            } else if (run.kind == "cocoercive_inertial") {
                detail::analyze_cocoercive_inertial(c, tr);
            } else {
                throw std::invalid_argument(name + ": no analyzer for run kind '" + run.kind + "'");
            }
        } else if (run.log) {
            if (run.kind == "prox_averaging") {
                detail::analyze_prox_averaging(c, *run.log);
            } else if (run.kind == "nesterov") {
                detail::analyze_nesterov(c, *run.log);
            } else {
                throw std::invalid_argument(name + ": no analyzer for run kind '" + run.kind + "'");
            }
        } else {
            throw std::invalid_argument(name + ": run '" + run.label + "' has no trajectory or log");
        }
    }
    // Headline numbers: the first decay ratio and exponent in key order.
    if (!report.tail_ratios.empty()) {
        report.channel = report.tail_ratios.begin()->first;
        report.tail_ratio = report.tail_ratios.begin()->second;
    }
    for (const auto& [k, e] : report.exponents) {
        if (e) {
            report.fitted_exponent = e;
            break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Run generation on the test matrix
// ---------------------------------------------------------------------------

/// Horizon of the rescaled inertial runs. Their stiffness grows like
/// s L/(alpha-1), so alpha near 1 gets a shorter horizon.
inline double inertial_horizon(double alpha) { return alpha - 1.0 < 0.5 ? 20.0 : 100.0; }

namespace detail {

inline std::string alpha_tag(double alpha) {
    std::ostringstream os;
    os << "a=" << alpha;
    return os.str();
}

template <class Make>
RunArtifacts guarded_run(RunArtifacts run, Make&& make) {
    try {
        run.trajectory = make();
    } catch (const DivergenceError& e) {
        run.failure = std::string("diverged: ") + e.what();
    } catch (const StiffnessError& e) {
        run.failure = std::string("stiff: ") + e.what();
    }
    return run;
}

inline RunArtifacts base_run(const ProblemCase& pc, const std::string& kind, double alpha) {
    RunArtifacts r;
    r.label = pc.name + (std::isnan(alpha) ? "" : "/" + alpha_tag(alpha)) + "/" + kind;
    r.kind = kind;
    r.alpha = alpha;
    r.quadratic_growth = pc.quadratic_growth;
    r.argmin_distance = pc.problem.argmin_distance;
    return r;
}

inline Vector stack(const Vector& a, const Vector& b) {
    Vector u(a.size() + b.size());
    u << a, b;
    return u;
}

inline IntegrateOptions suite_integrate_options() {
    IntegrateOptions o;
    o.keep_step_log = false;
    return o;
}

/// The default LASSO instance, built once.
inline const CompositeProblem& shared_default_lasso() {
    static const CompositeProblem lasso = default_lasso();
    return lasso;
}

/// Small strongly convex LASSO (m = 40 > n = 20) for the prox-averaging runs.
inline const CompositeProblem& shared_small_lasso() {
    static const CompositeProblem lasso = [] {
        LassoData d = random_lasso_data(40, 20, 5, 5);
        return lasso_problem(d.A, d.b, 0.1);
    }();
    return lasso;
}

}  // namespace detail

/// Runs of one suite on the matrix. With `flip`, every gradient, operator
/// or prox handed to the dynamics has its sign reversed; the analysis
/// quantities (gaps, c0, G) keep the true problem.
inline std::vector<RunArtifacts> suite_runs(const std::string& name, const TestMatrix& m,
                                            bool flip = false) {
    if (!is_suite_name(name)) throw std::invalid_argument("unknown suite '" + name + "'");
    const IntegrateOptions opts = detail::suite_integrate_options();
    std::vector<RunArtifacts> runs;
    auto field_problem = [flip](const SmoothProblem& p) { return flip ? sign_flipped(p) : p; };

    if (name == "thm1") {
        for (const auto& pc : m.problems)
            for (double a : m.alphas) {
                const Eigen::Index n = pc.problem.dim;
                const Vector c = (0.1 / std::sqrt(static_cast<double>(n))) * Vector::Ones(n);
                runs.push_back(detail::guarded_run(detail::base_run(pc, "perturbed_sd", a), [&] {
                    return integrate(perturbed_sd_field(field_problem(pc.problem), c, a), pc.x0, 1.0,
                                     100.0, 1e-2, 10, opts);
                }));
            }
    } else if (name == "thm2") {
        for (const auto& pc : m.problems)
            for (double a : m.alphas) {
                const Vector u0 = detail::stack(pc.x0, Vector::Zero(pc.problem.dim));
                runs.push_back(detail::guarded_run(detail::base_run(pc, "isihd", a), [&] {
                    return integrate(isihd_system(field_problem(pc.problem), a), u0, 1.0,
                                     inertial_horizon(a), 1e-3, 10, opts);
                }));
            }
    } else if (name == "thm3") {
        for (const auto& pc : m.problems)
            for (double a : m.alphas) {
                const Vector u0 = detail::stack(pc.x0, Vector::Zero(pc.problem.dim));
                RunArtifacts r = detail::base_run(pc, "explicit_hessian", a);
                ConservationParams cp;
                cp.alpha = a;
                cp.s0 = 1.0;
                cp.c0 = first_integral_constant(pc.problem.gradient(pc.x0), a, 1.0,
                                                Vector::Zero(pc.problem.dim));
                cp.G = pc.problem.gradient;
                r.conservation = cp;
                runs.push_back(detail::guarded_run(r, [&] {
                    return integrate(explicit_hessian_system(field_problem(pc.problem), a), u0, 1.0,
                                     30.0, 1e-3, 10, opts);
                }));
            }
    } else if (name == "thm4") {
        for (const auto& pc : m.problems) {
            runs.push_back(detail::guarded_run(detail::base_run(pc, "regularized_newton", kNaN), [&] {
                return integrate(regularized_newton_system(field_problem(pc.problem), 1.0), pc.x0,
                                 1.0, 100.0, 1e-2, 10, opts);
            }));
        }
    } else if (name == "thm5") {
        for (const auto& pc : m.problems)
            for (double a : m.alphas) {
                const Vector u0 = detail::stack(pc.x0, pc.x0);
                runs.push_back(detail::guarded_run(detail::base_run(pc, "combined", a), [&] {
                    return integrate(combined_system(field_problem(pc.problem), a, 1.0), u0, 1.0,
                                     inertial_horizon(a), 1e-3, 10, opts);
                }));
            }
    } else if (name == "thm6") {
        for (const auto& pc : m.problems)
            for (double a : m.alphas) {
                const Vector z0 = detail::stack(pc.x0, pc.x0);
                runs.push_back(detail::guarded_run(detail::base_run(pc, "bilevel", a), [&] {
                    return integrate(bilevel_system(field_problem(pc.problem), a), z0, 1.0, 100.0,
                                     1e-2, 10, opts);
                }));
                const Vector u0 = detail::stack(pc.x0, Vector::Zero(pc.problem.dim));
                runs.push_back(detail::guarded_run(detail::base_run(pc, "general_damping", a), [&] {
                    return integrate(general_damping_system(field_problem(pc.problem), a, 2.0), u0,
                                     1.0, inertial_horizon(a), 1e-3, 10, opts);
                }));
            }
    } else if (name == "thm_cocoercive") {
        auto op = [flip](const CocoerciveOperator& M) { return flip ? sign_flipped(M) : M; };
        std::vector<ProblemCase> cases = m.problems;
        // The default LASSO through its forward-backward operator.
        const CompositeProblem& lasso = detail::shared_default_lasso();
        for (const auto& pc : cases) {
            const CocoerciveOperator M = gradient_operator(pc.problem);
            for (double a : m.alphas) {
                const Vector c0 = first_integral_constant(M.apply(pc.x0), a, 1.0,
                                                          Vector::Zero(pc.problem.dim));
                runs.push_back(detail::guarded_run(detail::base_run(pc, "cocoercive", a), [&] {
                    return integrate(cocoercive_system(op(M), a, c0), pc.x0, 1.0, 50.0, 1e-3, 10, opts);
                }));
                if (pc.quadratic_growth && pc.problem.hess_vec) {
                    RunArtifacts r = detail::base_run(pc, "cocoercive_inertial", a);
                    ConservationParams cp;
                    cp.alpha = a;
                    cp.c0 = c0;
                    cp.G = M.apply;
                    r.conservation = cp;
                    const Vector u0 = detail::stack(pc.x0, Vector::Zero(pc.problem.dim));
                    runs.push_back(detail::guarded_run(r, [&] {
                        return integrate(cocoercive_inertial_system(op(M), a), u0, 1.0, 30.0, 1e-3,
                                         10, opts);
                    }));
                }
            }
            runs.push_back(detail::guarded_run(detail::base_run(pc, "operator_flow", kNaN), [&] {
                return integrate(operator_flow_field(op(M)), pc.x0, 1.0, 100.0, 1e-2, 10, opts);
            }));
        }
        const double mu = 1.0 / lasso.lipschitz();
        const CocoerciveOperator M = forward_backward_operator(lasso, mu);
        const Vector y0 = Vector::Zero(lasso.dim());
        ProblemCase lc{"lasso_50x100", lasso.smooth_part, y0, false};
        lc.problem.argmin_distance = {};
        for (double a : m.alphas) {
            const Vector c0 = first_integral_constant(M.apply(y0), a, 1.0, Vector::Zero(lasso.dim()));
            runs.push_back(detail::guarded_run(detail::base_run(lc, "cocoercive", a), [&] {
                return integrate(cocoercive_system(op(M), a, c0), y0, 1.0, 50.0, 1e-3, 10, opts);
            }));
        }
        runs.push_back(detail::guarded_run(detail::base_run(lc, "operator_flow", kNaN), [&] {
            return integrate(operator_flow_field(op(M)), y0, 1.0, 100.0, 1e-2, 10, opts);
        }));
    } else if (name == "thm_prox") {
        const int K = 2000;
        Rng rng(3);
        const Vector y_l1 = 3.0 * rng.normal_vector(20);
        ProxFriendly l1 = l1_regularizer(1.0);
        l1.min_value = 0.0;
        const CompositeProblem& small = detail::shared_small_lasso();
        ProxFriendly comp = composite_as_prox(small);
        const Vector z_comp = composite_minimizer(small);
        const Vector y_comp = Vector::Zero(small.dim());
        for (double a : m.alphas) {
            RunArtifacts r;
            r.label = "l1_20/" + detail::alpha_tag(a) + "/prox_averaging";
            r.kind = "prox_averaging";
            r.alpha = a;
            r.minimizer = Vector::Zero(20);
            try {
                r.log = prox_averaging(flip ? sign_flipped(l1) : l1, a, K, y_l1, y_l1);
            } catch (const DivergenceError& e) {
                r.failure = e.what();
            }
            runs.push_back(r);

            RunArtifacts q;
            q.label = "lasso_40x20/" + detail::alpha_tag(a) + "/prox_averaging";
            q.kind = "prox_averaging";
            q.alpha = a;
            q.minimizer = z_comp;
            try {
                q.log = prox_averaging(flip ? sign_flipped(comp) : comp, a, K, y_comp, y_comp);
            } catch (const DivergenceError& e) {
                q.failure = e.what();
            }
            runs.push_back(q);
        }
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const SmoothProblem p = random_quadratic(20, seed);
            Rng r0(100 + seed);
            RunArtifacts r;
            r.label = "quadratic_20_seed" + std::to_string(seed) + "/nesterov";
            r.kind = "nesterov";
            r.lambda_step = 0.9 / p.lipschitz;
            r.lipschitz = p.lipschitz;
            try {
                SmoothProblem fp = field_problem(p);
                IterateLog log = nesterov(fp, r.lambda_step, K, r0.normal_vector(20));
                // Gaps and energies of the true problem.
                for (std::size_t k = 0; k < log.size(); ++k) {
                    log.f_x_gap[k] = p.value_gap(log.x[k]);
                    if (log.y[k]) {
                        log.f_y_gap[k] = p.value_gap(*log.y[k]);
                        log.res_norm[k] = p.gradient(*log.y[k]).norm();
                    }
                }
                log.energy = ravine_energy(log, p, r.lambda_step, p.minimizer);
                r.log = std::move(log);
            } catch (const DivergenceError& e) {
                r.failure = e.what();
            }
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

inline RateReport run_suite(const std::string& name, const TestMatrix& m, bool flip = false) {
    return theorem_suite(name, suite_runs(name, m, flip));
}

// ---------------------------------------------------------------------------
// Verify battery
// ---------------------------------------------------------------------------

struct SuiteOutcome {
    RateReport report;
    double seconds = 0.0;
};

struct VerifyResult {
    std::vector<SuiteOutcome> suites;
    double seconds = 0.0;
    bool passed() const {
        for (const auto& s : suites)
            if (!s.report.passed()) return false;
        return true;
    }
};

/// Runs the selected suites (all when empty); `flip_suite` injects the sign
/// error into that suite only. Prints a table to `out` when given.
inline VerifyResult verify(std::vector<std::string> selector, const TestMatrix& m,
                           const std::string& flip_suite = "", std::ostream* out = nullptr) {
    if (selector.empty()) selector = suite_names();
    for (const auto& s : selector) {
        if (!is_suite_name(s)) throw std::invalid_argument("unknown suite '" + s + "'");
    }
    if (!flip_suite.empty() && !is_suite_name(flip_suite)) {
        throw std::invalid_argument("unknown suite '" + flip_suite + "'");
    }
    using clock = std::chrono::steady_clock;
    VerifyResult res;
    const auto t0 = clock::now();
    const std::streamsize saved_precision = out ? out->precision() : 6;
    if (out) {
        *out << std::left << std::setw(16) << "suite" << std::setw(8) << "status" << std::right
             << std::setw(10) << "hard ok" << std::setw(10) << "hard bad" << std::setw(10)
             << "info ok" << std::setw(10) << "info bad" << std::setw(10) << "seconds" << '\n';
    }
    for (const auto& name : selector) {
        const auto a = clock::now();
        SuiteOutcome o;
        o.report = run_suite(name, m, name == flip_suite);
        o.seconds = std::chrono::duration<double>(clock::now() - a).count();
        if (out) {
            const RateReport& r = o.report;
            *out << std::left << std::setw(16) << name << std::setw(8)
                 << (r.passed() ? "PASS" : "FAIL") << std::right << std::setw(10)
                 << r.count(true, true) << std::setw(10) << r.count(true, false) << std::setw(10)
                 << r.count(false, true) << std::setw(10) << r.count(false, false) << std::setw(10)
                 << std::fixed << std::setprecision(2) << o.seconds << '\n';
            out->unsetf(std::ios::floatfield);
            out->precision(saved_precision);
            for (const auto& f : r.hard_failures()) {
                const Verdict& v = r.verdicts.at(f);
                *out << "    failed: " << f << " value=" << detail::format_double(v.value);
                if (!v.note.empty()) *out << " (" << v.note << ")";
                *out << '\n';
            }
            out->flush();
        }
        res.suites.push_back(std::move(o));
    }
    res.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (out) {
        *out << (res.passed() ? "verify: all hard verdicts pass" : "verify: hard verdict failures")
             << " in " << std::fixed << std::setprecision(1) << res.seconds << " s\n";
        out->unsetf(std::ios::floatfield);
        out->precision(saved_precision);
    }
    return res;
}

}  // namespace tsavg

#endif  // TSAVG_SUITES_HPP
