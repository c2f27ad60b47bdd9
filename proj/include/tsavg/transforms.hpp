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

#ifndef TSAVG_TRANSFORMS_HPP
#define TSAVG_TRANSFORMS_HPP

#include "tsavg/dynamics.hpp"
#include "tsavg/trajectory.hpp"

#include <functional>
#include <vector>

namespace tsavg {

/// Increasing change of time t = tau(s).
struct TimeScale {
    std::function<double(double)> tau;
    std::function<double(double)> tau_dot;
    std::function<double(double)> inverse;
};

/// tau(s) = s^2 / (2 (alpha + sign)), sign in {-1, +1}.
inline TimeScale quadratic_scale(double alpha, int offset_sign = -1) {
    detail::require(offset_sign == -1 || offset_sign == 1, "offset_sign must be -1 or +1");
    const double d = alpha + static_cast<double>(offset_sign);
    detail::require(std::isfinite(d) && d > 0.0, "quadratic_scale: alpha + sign must be > 0");
    TimeScale ts;
    ts.tau = [d](double s) { return s * s / (2.0 * d); };
    ts.tau_dot = [d](double s) { return s / d; };
    ts.inverse = [d](double t) { return std::sqrt(2.0 * d * t); };
    return ts;
}

inline TimeScale identity_scale() {
    TimeScale ts;
    ts.tau = [](double s) { return s; };
    ts.tau_dot = [](double) { return 1.0; };
    ts.inverse = [](double t) { return t; };
    return ts;
}

/// Probability measure mu_s = (s0/s)^(alpha-1) delta_{s0} + (alpha-1) u^(alpha-2) / s^(alpha-1) du.
struct AveragingMeasure {
    double alpha;
    double s0;

    AveragingMeasure(double a, double start) : alpha(a), s0(start) {
        detail::require_alpha(alpha);
        detail::require(s0 > 0.0, "AveragingMeasure: s0 must be > 0");
    }

    double atom_weight(double s) const { return std::pow(s0 / s, alpha - 1.0); }

    double density(double u, double s) const {
        return (alpha - 1.0) * std::pow(u, alpha - 2.0) / std::pow(s, alpha - 1.0);
    }

    /// Exact mass of the continuous part on [s0, s].
    double continuous_mass(double s) const { return 1.0 - atom_weight(s); }

    /// Atom plus trapezoid quadrature of the density on `nodes` uniform intervals.
    double total_mass(double s, int nodes = 20000) const {
        const double h = (s - s0) / nodes;
        double acc = 0.0;
        for (int i = 0; i <= nodes; ++i) {
            const double w = (i == 0 || i == nodes) ? 0.5 : 1.0;
            acc += w * density(s0 + i * h, s);
        }
        return atom_weight(s) + acc * h;
    }

    /// The correction xi(s) = -s0^alpha x1 / ((alpha-1) s^(alpha-1)).
    Vector xi(double s, const Vector& x1) const {
        return -(std::pow(s0, alpha) / ((alpha - 1.0) * std::pow(s, alpha - 1.0))) * x1;
    }
};

/// Copy of a trajectory restricted to the state block [offset, offset+len).
inline Trajectory select_block(const Trajectory& traj, Eigen::Index offset, Eigen::Index len,
                               const std::string& prefix) {
    detail::require(!traj.empty(), "select_block: empty trajectory");
    detail::require(offset >= 0 && len > 0 && offset + len <= traj.states.front().size(),
                    "select_block: block outside the state");
    Trajectory out;
    out.times = traj.times;
    out.states = traj.block(offset, len);
    out.state_labels = block_labels({prefix}, len);
    out.channel_names = traj.channel_names;
    out.channels = traj.channels;
    out.stats = traj.stats;
    return out;
}

/// y(s) = z(tau(s)) on `s_grid`, states and channels linearly interpolated.
inline Trajectory rescale_trajectory(const Trajectory& traj, const TimeScale& scale,
                                     const std::vector<double>& s_grid) {
    detail::require(!traj.empty(), "rescale_trajectory: empty trajectory");
    detail::require(!s_grid.empty(), "rescale_trajectory: empty grid");
    Trajectory out;
    out.state_labels = traj.state_labels;
    out.channel_names = traj.channel_names;
    out.channels.assign(traj.channels.size(), {});
    for (double s : s_grid) {
        const double t = scale.tau(s);
        out.times.push_back(s);
        out.states.push_back(interpolate_state(traj, t));
        for (std::size_t c = 0; c < traj.channels.size(); ++c) {
            out.channels[c].push_back(interpolate_series(traj.times, traj.channels[c], t));
        }
    }
    out.validate();
    return out;
}

/// Solves x' = -((alpha-1)/s)(x - y(s)) on y_traj's grid by RK4, with y
/// linear between samples. Returns the x trajectory (no channels).
inline Trajectory averaging_ode(const Trajectory& y_traj, double alpha, const Vector& x0) {
    detail::require_alpha(alpha);
    detail::require(!y_traj.empty(), "averaging_ode: empty trajectory");
    detail::require(y_traj.front_time() > 0.0, "averaging_ode: trajectory must start at s0 > 0");
    detail::require_dim(x0.size(), y_traj.states.front().size(), "averaging_ode");
    const double am1 = alpha - 1.0;

    Trajectory out;
    out.state_labels = block_labels({"x"}, x0.size());
    out.times.push_back(y_traj.times.front());
    out.states.push_back(x0);
    Vector x = x0;
    for (std::size_t j = 0; j + 1 < y_traj.size(); ++j) {
        const double sa = y_traj.times[j], sb = y_traj.times[j + 1];
        const Vector& ya = y_traj.states[j];
        const Vector& yb = y_traj.states[j + 1];
        auto rhs = [&](double s, const Vector& u) -> Vector {
            const double w = (s - sa) / (sb - sa);
            return -(am1 / s) * (u - ((1.0 - w) * ya + w * yb));
        };
        x = rk4_step(rhs, sa, x, sb - sa);
        out.times.push_back(sb);
        out.states.push_back(x);
    }
    return out;
}

namespace detail {

// Trapezoid nodes and weights of int_{s0}^{s} u^(alpha-2) (.) du over the
// stored grid, the last interval cut at s (its end value interpolated).
struct QuadratureNodes {
    std::vector<double> u;
    std::vector<Vector> y;
    std::vector<double> w;
};

inline QuadratureNodes averaging_nodes(const Trajectory& y_traj, double alpha, double s) {
    require_in_range(y_traj.times, s, "averaging_quadrature");
    QuadratureNodes q;
    for (std::size_t j = 0; j < y_traj.size() && y_traj.times[j] < s; ++j) {
        q.u.push_back(y_traj.times[j]);
        q.y.push_back(y_traj.states[j]);
    }
    if (q.u.empty() || q.u.back() < s) {
        q.u.push_back(s);
        q.y.push_back(interpolate_state(y_traj, s));
    }
    q.w.assign(q.u.size(), 0.0);
    for (std::size_t j = 0; j + 1 < q.u.size(); ++j) {
        const double h = q.u[j + 1] - q.u[j];
        q.w[j] += 0.5 * h * std::pow(q.u[j], alpha - 2.0);
        q.w[j + 1] += 0.5 * h * std::pow(q.u[j + 1], alpha - 2.0);
    }
    return q;
}

}  // namespace detail

/// x(s) = (s0/s)^(alpha-1) x0 + ((alpha-1)/s^(alpha-1)) int_{s0}^{s} u^(alpha-2) y(u) du
/// by the trapezoid rule on the stored grid.
inline Vector averaging_quadrature(const Trajectory& y_traj, double alpha, const Vector& x0,
                                   double s) {
    detail::require_alpha(alpha);
    detail::require(!y_traj.empty(), "averaging_quadrature: empty trajectory");
    const double s0 = y_traj.front_time();
    detail::require(s0 > 0.0, "averaging_quadrature: trajectory must start at s0 > 0");
    detail::require_dim(x0.size(), y_traj.states.front().size(), "averaging_quadrature");
    const detail::QuadratureNodes q = detail::averaging_nodes(y_traj, alpha, s);
    Vector acc = Vector::Zero(x0.size());
    for (std::size_t j = 0; j < q.u.size(); ++j) acc += q.w[j] * q.y[j];
    return std::pow(s0 / s, alpha - 1.0) * x0 + ((alpha - 1.0) / std::pow(s, alpha - 1.0)) * acc;
}

/// Same point written as int y dmu_s + xi(s): the atom carries y(s0), the
/// first stored sample, and x1 enters only through xi.
inline Vector averaging_measure_form(const Trajectory& y_traj, double alpha, const Vector& x1,
                                     double s) {
    detail::require(!y_traj.empty(), "averaging_measure_form: empty trajectory");
    const AveragingMeasure mu(alpha, y_traj.front_time());
    const detail::QuadratureNodes q = detail::averaging_nodes(y_traj, alpha, s);
    Vector acc = Vector::Zero(x1.size());
    for (std::size_t j = 0; j < q.u.size(); ++j) acc += q.w[j] * q.y[j];
    return mu.atom_weight(s) * y_traj.states.front() +
           ((alpha - 1.0) / std::pow(s, alpha - 1.0)) * acc + mu.xi(s, x1);
}

/// Discrete form of mu_s on the stored grid: atom at s0 plus trapezoid
/// weights, rescaled to total mass exactly 1. Returns (nodes, states, weights).
inline detail::QuadratureNodes discrete_averaging_measure(const Trajectory& y_traj, double alpha,
                                                          double s) {
    const AveragingMeasure mu(alpha, y_traj.front_time());
    detail::QuadratureNodes q = detail::averaging_nodes(y_traj, alpha, s);
    const double scale = (alpha - 1.0) / std::pow(s, alpha - 1.0);
    double total = 0.0;
    for (double& w : q.w) {
        w *= scale;
        total += w;
    }
    q.w.front() += mu.atom_weight(s);
    total += mu.atom_weight(s);
    for (double& w : q.w) w /= total;
    return q;
}

/// (sum s_i y_i) / (sum s_i).
inline Vector discrete_weighted_average(const std::vector<Vector>& points,
                                        const std::vector<double>& weights) {
    detail::require(!points.empty(), "discrete_weighted_average: no points");
    detail::require(points.size() == weights.size(),
                    "discrete_weighted_average: points/weights length mismatch");
    double total = 0.0;
    for (double w : weights) {
        detail::require(std::isfinite(w) && w >= 0.0,
                        "discrete_weighted_average: weights must be nonnegative");
        total += w;
    }
    detail::require(total > 0.0, "discrete_weighted_average: weights are all zero");
    Vector acc = Vector::Zero(points.front().size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        detail::require_dim(points[i].size(), acc.size(), "discrete_weighted_average");
        acc += weights[i] * points[i];
    }
    return acc / total;
}

}  // namespace tsavg

#endif  // TSAVG_TRANSFORMS_HPP
