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

#ifndef TSAVG_ANALYSIS_HPP
#define TSAVG_ANALYSIS_HPP

#include "tsavg/dynamics.hpp"
#include "tsavg/transforms.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsavg {

// Pinned thresholds of the finite-horizon surrogates.
inline constexpr double kDecayRatioMax = 0.5;       // late/early weighted sup
inline constexpr double kIntegralShareMax = 0.05;   // last-window share of an integral
inline constexpr double kExponentTolerance = 0.2;   // fitted exponent slack
inline constexpr double kTrajectoryTolerance = 1e-3;
inline constexpr double kConservationTolerance = 1e-6;
inline constexpr std::size_t kMinFitSamples = 20;
// Norm-like channels below this fraction of their peak are numerical zero;
// gap-like (squared) channels use its square.
inline constexpr double kNormResolution = 1e-10;

// ---------------------------------------------------------------------------
// Rate fits
// ---------------------------------------------------------------------------

struct RateFit {
    std::optional<double> exponent;
    std::size_t samples = 0;     // points used by the regression
    bool reached_floor = false;  // series fell to the floor inside the horizon
};

namespace detail {

inline void require_series(const std::vector<double>& t, const std::vector<double>& v,
                           const char* what) {
    require(t.size() == v.size(), std::string(what) + ": times/values length mismatch");
    require(!t.empty(), std::string(what) + ": empty series");
}

// Least-squares slope of log v against log t on [lo, hi).
inline RateFit loglog_slope(const std::vector<double>& t, const std::vector<double>& v,
                            std::size_t lo, std::size_t hi) {
    RateFit fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        if (!(t[i] > 0.0) || !(v[i] > 0.0)) continue;
        const double lx = std::log(t[i]), ly = std::log(v[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    fit.samples = n;
    if (n < kMinFitSamples) return fit;
    const double dn = static_cast<double>(n);
    const double den = sxx - sx * sx / dn;
    if (!(den > 0.0)) return fit;
    fit.exponent = (sxy - sx * sy / dn) / den;
    return fit;
}

}  // namespace detail

/// Slope of log v against log t on the last `tail_fraction` of the samples.
///
/// Undefined (nullopt) when the tail holds a nonpositive value or fewer than
/// 20 samples.
inline std::optional<double> rate_fit(const std::vector<double>& times,
                                      const std::vector<double>& values,
                                      double tail_fraction = 0.5) {
    detail::require_series(times, values, "rate_fit");
    detail::require(tail_fraction > 0.0 && tail_fraction <= 1.0,
                    "rate_fit: tail_fraction must be in (0, 1]");
    const std::size_t n = times.size();
    const auto lo = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - tail_fraction)));
    for (std::size_t i = lo; i < n; ++i) {
        if (!(values[i] > 0.0)) return std::nullopt;
    }
    return detail::loglog_slope(times, values, lo, n).exponent;
}

/// Rate fit on the segment before the series first drops to `floor`.
///
/// The tail is taken from that pre-floor segment; `reached_floor` reports
/// whether the floor was hit at all.
inline RateFit rate_fit_above_floor(const std::vector<double>& times,
                                    const std::vector<double>& values, double floor,
                                    double tail_fraction = 0.5) {
    detail::require_series(times, values, "rate_fit_above_floor");
    std::size_t end = times.size();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(values[i] > floor)) {
            end = i;
            break;
        }
    }
    const auto lo = static_cast<std::size_t>(std::floor(static_cast<double>(end) * (1.0 - tail_fraction)));
    RateFit fit = detail::loglog_slope(times, values, lo, end);
    fit.reached_floor = end < times.size();
    return fit;
}

// ---------------------------------------------------------------------------
// Window checks
// ---------------------------------------------------------------------------

/// Early and late windows. Relative windows are fractions of the final time.
struct Windows {
    double early_lo = 0.2, early_hi = 0.4;
    double late_lo = 0.8, late_hi = 1.0;
    bool relative = true;

    static Windows absolute(double a, double b, double c, double d) {
        return Windows{a, b, c, d, false};
    }
};

struct DecayCheck {
    double early_sup = 0.0;
    double late_sup = 0.0;
    double ratio = 0.0;  // late / early; 0 when both are 0
    bool pass() const { return ratio < kDecayRatioMax; }
};

/// sup of t^p |v| over each window and their ratio. Values with
/// |v| <= floor count as zero (converged to numerical resolution).
inline DecayCheck weighted_decay_check(const std::vector<double>& times,
                                       const std::vector<double>& values, double p,
                                       const Windows& w = {}, double floor = 0.0) {
    detail::require_series(times, values, "weighted_decay_check");
    const double T = times.back();
    const double scale = w.relative ? T : 1.0;
    const double e0 = w.early_lo * scale, e1 = w.early_hi * scale;
    const double l0 = w.late_lo * scale, l1 = w.late_hi * scale;
    detail::require(e0 < e1 && l0 < l1, "weighted_decay_check: windows must be nonempty intervals");
    DecayCheck out;
    std::size_t ne = 0, nl = 0;
    const double slack = 1e-12 * std::max(1.0, std::abs(T));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double av = std::abs(values[i]);
        const double wv = av <= floor ? 0.0 : std::pow(t, p) * av;
        if (t >= e0 - slack && t <= e1 + slack) {
            out.early_sup = std::max(out.early_sup, wv);
            ++ne;
        }
        if (t >= l0 - slack && t <= l1 + slack) {
            out.late_sup = std::max(out.late_sup, wv);
            ++nl;
        }
    }
    detail::require(ne > 0 && nl > 0, "weighted_decay_check: a window holds no samples");
    if (out.late_sup == 0.0) {
        out.ratio = 0.0;
    } else if (out.early_sup == 0.0) {
        out.ratio = kInf;
    } else {
        out.ratio = out.late_sup / out.early_sup;
    }
    return out;
}

struct IntegralEstimate {
    double value = 0.0;
    double last_window_share = 0.0;  // part of the integral over the last window
    bool pass() const { return last_window_share < kIntegralShareMax; }
};

/// Trapezoid integral of t^p v over the grid. The last window is
/// [late_lo T, T] with T the final time.
inline IntegralEstimate integral_estimate(const std::vector<double>& times,
                                          const std::vector<double>& values, double p,
                                          double late_lo = 0.8) {
    detail::require_series(times, values, "integral_estimate");
    const double cut = late_lo * times.back();
    double total = 0.0, tail = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double a = std::pow(times[i], p) * values[i];
        const double b = std::pow(times[i + 1], p) * values[i + 1];
        const double piece = 0.5 * (times[i + 1] - times[i]) * (a + b);
        total += piece;
        if (times[i] >= cut) tail += piece;
    }
    IntegralEstimate out;
    out.value = total;
    out.last_window_share = total > 0.0 ? tail / total : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Conservation and Jensen
// ---------------------------------------------------------------------------

struct ConservationParams {
    double alpha = 3.0;
    double s0 = 1.0;
    Vector c0;
    std::function<Vector(const Vector&)> G;  // grad f or M
};

/// max_s |y'(s) + (s/(alpha+1)) G(y(s)) - c0 / s^alpha| over the grid.
///
/// Only the two second-order systems with a first integral qualify; the
/// trajectory must carry the (y, v) layout they produce.
inline double conservation_residual(const Trajectory& traj, DynamicsKind kind,
                                    const ConservationParams& params) {
    if (kind != DynamicsKind::explicit_hessian && kind != DynamicsKind::cocoercive_inertial) {
        throw std::invalid_argument(std::string("conservation_residual: '") + to_string(kind) +
                                    "' has no first integral of this form");
    }
    detail::require_alpha(params.alpha);
    detail::require(static_cast<bool>(params.G), "conservation_residual: G is required");
    detail::require(!traj.empty(), "conservation_residual: empty trajectory");
    const Eigen::Index n = params.c0.size();
    detail::require(traj.states.front().size() == 2 * n,
                    "conservation_residual: state must be (y, v) with the size of c0");
    detail::require(traj.state_labels.size() == static_cast<std::size_t>(2 * n) &&
                        traj.state_labels.front() == "y_0" &&
                        traj.state_labels[static_cast<std::size_t>(n)] == "v_0",
                    "conservation_residual: trajectory is not a (y, v) second-order run");
    const double a = params.alpha;
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double s = traj.times[i];
        const Vector y = traj.states[i].head(n);
        const Vector v = traj.states[i].tail(n);
        const Vector r = v + (s / (a + 1.0)) * params.G(y) - params.c0 / std::pow(s, a);
        worst = std::max(worst, r.norm());
    }
    return worst;
}

/// max over `samples` of f(int y dmu_s) - int f(y) dmu_s for the discrete
/// (normalized) form of the averaging measure. Nonpositive up to rounding.
inline double jensen_check(const std::function<double(const Vector&)>& f, const Trajectory& y_traj,
                           double alpha, const std::vector<double>& samples) {
    detail::require(static_cast<bool>(f), "jensen_check: f is required");
    detail::require(!samples.empty(), "jensen_check: no sample times");
    double worst = -kInf;
    for (double s : samples) {
        const detail::QuadratureNodes q = discrete_averaging_measure(y_traj, alpha, s);
        Vector mean = Vector::Zero(q.y.front().size());
        double avg_f = 0.0;
        for (std::size_t j = 0; j < q.u.size(); ++j) {
            mean += q.w[j] * q.y[j];
            avg_f += q.w[j] * f(q.y[j]);
        }
        worst = std::max(worst, f(mean) - avg_f);
    }
    return worst;
}

/// |state(T) - state(T/2)| relative to 1 + |state(T)| over a block.
inline double cauchy_gap(const Trajectory& traj, Eigen::Index offset, Eigen::Index len) {
    detail::require(!traj.empty(), "cauchy_gap: empty trajectory");
    const double T = traj.back_time();
    const double mid = std::max(traj.front_time(), 0.5 * T);
    const Vector end = traj.states.back().segment(offset, len);
    const Vector half = interpolate_state(traj, mid).segment(offset, len);
    return (end - half).norm() / (1.0 + end.norm());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One pass/fail outcome. Informational verdicts (hard = false) are reported
/// but do not decide the suite.
struct Verdict {
    bool pass = false;
    bool hard = true;
    double value = kNaN;
    double threshold = kNaN;
    std::string note;
};

struct RateReport {
    std::string suite;
    std::string channel;
    std::optional<double> fitted_exponent;
    double tail_ratio = kNaN;
    std::map<std::string, Verdict> verdicts;
    std::map<std::string, std::optional<double>> exponents;
    std::map<std::string, double> integrals;
    std::map<std::string, double> tail_ratios;

    void add(const std::string& name, Verdict v) { verdicts[name] = std::move(v); }

    bool passed() const {
        for (const auto& [name, v] : verdicts)
            if (v.hard && !v.pass) return false;
        return true;
    }

    std::vector<std::string> hard_failures() const {
        std::vector<std::string> out;
        for (const auto& [name, v] : verdicts)
            if (v.hard && !v.pass) out.push_back(name);
        return out;
    }

    std::size_t count(bool hard, bool pass) const {
        std::size_t n = 0;
        for (const auto& [name, v] : verdicts) n += (v.hard == hard && v.pass == pass) ? 1 : 0;
        return n;
    }

    void merge(const RateReport& o) {
        for (const auto& [k, v] : o.verdicts) verdicts[k] = v;
        for (const auto& [k, v] : o.exponents) exponents[k] = v;
        for (const auto& [k, v] : o.integrals) integrals[k] = v;
        for (const auto& [k, v] : o.tail_ratios) tail_ratios[k] = v;
    }
};

namespace detail {

inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const RateReport& r) {
    nlohmann::json j;
    j["suite"] = r.suite;
    j["channel"] = r.channel;
    j["fitted_exponent"] = r.fitted_exponent ? nlohmann::json(*r.fitted_exponent) : nlohmann::json(nullptr);
    j["tail_ratio"] = detail::number_or_null(r.tail_ratio);
    j["passed"] = r.passed();
    nlohmann::json verdicts = nlohmann::json::object();
    nlohmann::json details = nlohmann::json::object();
    std::vector<std::string> informational;
    for (const auto& [name, v] : r.verdicts) {
        verdicts[name] = v.pass;
        if (!v.hard) informational.push_back(name);
        nlohmann::json d;
        d["value"] = detail::number_or_null(v.value);
        d["threshold"] = detail::number_or_null(v.threshold);
        d["hard"] = v.hard;
        if (!v.note.empty()) d["note"] = v.note;
        details[name] = d;
    }
    j["verdicts"] = verdicts;
    j["informational"] = informational;
    j["details"] = details;
    nlohmann::json ex = nlohmann::json::object();
    for (const auto& [k, v] : r.exponents) ex[k] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    j["exponents"] = ex;
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [k, v] : r.integrals) in[k] = detail::number_or_null(v);
    j["integrals"] = in;
    nlohmann::json tr = nlohmann::json::object();
    for (const auto& [k, v] : r.tail_ratios) tr[k] = detail::number_or_null(v);
    j["tail_ratios"] = tr;
    return j;
}

}  // namespace tsavg

#endif  // TSAVG_ANALYSIS_HPP
