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

#ifndef TSAVG_DYNAMICS_HPP
#define TSAVG_DYNAMICS_HPP

#include "tsavg/linalg.hpp"
#include "tsavg/problems.hpp"
#include "tsavg/trajectory.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace tsavg {

/// Right-hand side u' = eval(s, u) of a first-order system.
///
/// `stiffness_hint(s)` bounds the local Lipschitz scale of eval in u; the
/// integrator halves its step while hint * h > 1. `channels(s, u)` returns
/// the derived scalars named in `channel_names`, evaluated at recorded
/// samples only.
struct VectorField {
    std::string name;
    Eigen::Index dim = 0;
    std::function<Vector(double, const Vector&)> eval;
    std::function<double(double)> stiffness_hint;
    std::vector<std::string> state_labels;
    std::vector<std::string> channel_names;
    std::function<std::vector<double>(double, const Vector&)> channels;
};

enum class DynamicsKind {
    sd,
    perturbed_sd,
    rescaled_sd,
    isihd,
    explicit_hessian,
    regularized_newton,
    combined,
    bilevel,
    cocoercive,
    // Companions used as cross-checks: the second-order cocoercive dynamic
    // and the inertial system with a general extrapolation coefficient beta0.
    cocoercive_inertial,
    general_damping,
};

inline constexpr std::array<DynamicsKind, 11> kAllDynamics = {
    DynamicsKind::sd,          DynamicsKind::perturbed_sd,       DynamicsKind::rescaled_sd,
    DynamicsKind::isihd,       DynamicsKind::explicit_hessian,   DynamicsKind::regularized_newton,
    DynamicsKind::combined,    DynamicsKind::bilevel,            DynamicsKind::cocoercive,
    DynamicsKind::cocoercive_inertial, DynamicsKind::general_damping,
};

inline const char* to_string(DynamicsKind k) {
    switch (k) {
        case DynamicsKind::sd: return "sd";
        case DynamicsKind::perturbed_sd: return "perturbed_sd";
        case DynamicsKind::rescaled_sd: return "rescaled_sd";
        case DynamicsKind::isihd: return "isihd";
        case DynamicsKind::explicit_hessian: return "explicit_hessian";
        case DynamicsKind::regularized_newton: return "regularized_newton";
        case DynamicsKind::combined: return "combined";
        case DynamicsKind::bilevel: return "bilevel";
        case DynamicsKind::cocoercive: return "cocoercive";
        case DynamicsKind::cocoercive_inertial: return "cocoercive_inertial";
        case DynamicsKind::general_damping: return "general_damping";
    }
    return "?";
}

inline DynamicsKind dynamics_kind_from_string(const std::string& s) {
    for (DynamicsKind k : kAllDynamics)
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown dynamics kind '" + s + "'");
}

/// Equation of each system, as printed by `list`.
inline const char* equation(DynamicsKind k) {
    switch (k) {
        case DynamicsKind::sd: return "z' = -grad f(z)";
        case DynamicsKind::perturbed_sd: return "z' = -grad f(z) + c / t^((alpha+1)/2)";
        case DynamicsKind::rescaled_sd: return "y' = -(s/(alpha-1)) grad f(y)";
        case DynamicsKind::isihd:
            return "x'' + (alpha/s) x' + grad f(x + (s/(alpha-1)) x') = 0";
        case DynamicsKind::explicit_hessian:
            return "y'' + (alpha/s) y' + (s/(alpha+1)) Hess f(y) y' + grad f(y) = 0";
        case DynamicsKind::regularized_newton:
            return "(lambda I + Hess f(z)) z' = -grad f(z)";
        case DynamicsKind::combined:
            return "(lambda I + Hess f(y)) y' = -(lambda s/(alpha-1)) grad f(y); "
                   "x' = -((alpha-1)/s)(x - y)";
        case DynamicsKind::bilevel:
            return "Y' = -2 grad f(Y) - ((alpha-1)/(4t))(Y - X); X' = -((alpha-1)/(4t))(X - Y)";
        case DynamicsKind::cocoercive: return "y' = -(s/(alpha+1)) M(y) + c0 / s^alpha";
        case DynamicsKind::cocoercive_inertial:
            return "y'' + (alpha/s) y' + (s/(alpha+1)) DM(y) y' + M(y) = 0";
        case DynamicsKind::general_damping:
            return "x'' + (alpha/s) x' + grad f(x + beta0 (s/(alpha-1)) x') = 0";
    }
    return "";
}

/// Number of n-blocks in the state of each system.
inline int state_blocks(DynamicsKind k) {
    switch (k) {
        case DynamicsKind::sd:
        case DynamicsKind::perturbed_sd:
        case DynamicsKind::rescaled_sd:
        case DynamicsKind::regularized_newton:
        case DynamicsKind::cocoercive: return 1;
        default: return 2;
    }
}

/// Which system, its parameters, initial data and time window.
///
/// `initial_velocity` is the x1 of second-order data; empty means zero.
/// For first-order systems it is ignored except by `cocoercive`, where it
/// enters c0. The window [s0, horizon] is in the system's own time variable
/// (t for sd/perturbed_sd/regularized_newton/bilevel, s otherwise).
struct DynamicsSpec {
    DynamicsKind kind = DynamicsKind::isihd;
    double alpha = 3.0;
    double lambda = 1.0;
    double mu = kNaN;  // NaN selects 1/|A|^2 for operator systems
    double beta0 = 2.0;
    double s0 = 1.0;
    double horizon = 20.0;
    Vector initial_position;
    Vector initial_velocity;
    Vector perturbation;  // c of perturbed_sd; empty means zero

    Vector velocity_or_zero() const {
        return initial_velocity.size() ? initial_velocity : Vector::Zero(initial_position.size());
    }

    void validate() const {
        detail::require(std::isfinite(s0) && s0 > 0.0, "s0 must be > 0");
        detail::require(std::isfinite(horizon) && horizon >= s0, "horizon must be >= s0");
        detail::require(initial_position.size() > 0, "initial_position is required");
        if (initial_velocity.size()) {
            detail::require_dim(initial_velocity.size(), initial_position.size(),
                                "initial_velocity");
        }
        if (kind != DynamicsKind::sd && kind != DynamicsKind::regularized_newton) {
            detail::require_alpha(alpha);
        }
        if (kind == DynamicsKind::regularized_newton || kind == DynamicsKind::combined) {
            detail::require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
        }
        if (kind == DynamicsKind::general_damping) {
            detail::require(std::isfinite(beta0) && beta0 > 0.0, "beta0 must be > 0");
        }
        if (kind == DynamicsKind::perturbed_sd && perturbation.size()) {
            detail::require_dim(perturbation.size(), initial_position.size(), "perturbation");
        }
        if (std::isfinite(mu)) detail::require(mu > 0.0, "mu must be > 0");
    }

    /// True when value-rate claims for the inertial systems need alpha > 3.
    bool value_rate_flagged() const { return alpha <= 3.0; }
};

namespace detail {

inline void require_time(double s) {
    if (!(s > 0.0)) throw std::invalid_argument("time must be > 0 (got " + format_double(s) + ")");
}

inline std::vector<double> smooth_channels(const SmoothProblem& p, const Vector& x) {
    return {p.value_gap(x), p.gradient(x).norm()};
}

inline bool has_lipschitz(const SmoothProblem& p) {
    return std::isfinite(p.lipschitz) && p.lipschitz > 0.0;
}

// Solves (lambda I + Hess f(y)) d = rhs by conjugate gradient.
inline Vector newton_direction(const SmoothProblem& p, double lambda, const Vector& y,
                               const Vector& rhs) {
    Vector d = Vector::Zero(rhs.size());
    const CgResult r = conjugate_gradient(
        [&](const Vector& v) -> Vector { return lambda * v + p.hess_vec(y, v); }, rhs, d);
    if (!r.converged) {
        throw StiffnessError("conjugate gradient did not converge (relative residual " +
                             format_double(r.rel_residual) + " after " +
                             std::to_string(r.iterations) + " iterations)");
    }
    return d;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Field factories
// ---------------------------------------------------------------------------

/// z' = -grad f(z).
inline VectorField sd_field(const SmoothProblem& p) {
    VectorField f;
    f.name = "sd";
    f.dim = p.dim;
    f.eval = [p](double, const Vector& z) -> Vector { return -p.gradient(z); };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L](double) { return L; };
    }
    f.state_labels = block_labels({"z"}, p.dim);
    f.channel_names = {"value_gap", "grad_norm"};
    f.channels = [p](double, const Vector& z) { return detail::smooth_channels(p, z); };
    return f;
}

/// z' = -grad f(z) + c / t^((alpha+1)/2).
inline VectorField perturbed_sd_field(const SmoothProblem& p, const Vector& c, double alpha) {
    detail::require_alpha(alpha);
    detail::require_dim(c.size(), p.dim, "perturbed_sd_field");
    const double power = 0.5 * (alpha + 1.0);
    VectorField f;
    f.name = "perturbed_sd";
    f.dim = p.dim;
    f.eval = [p, c, power](double t, const Vector& z) -> Vector {
        detail::require_time(t);
        return -p.gradient(z) + c / std::pow(t, power);
    };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L](double) { return L; };
    }
    f.state_labels = block_labels({"z"}, p.dim);
    f.channel_names = {"value_gap", "grad_norm", "velocity_norm"};
    f.channels = [p, c, power](double t, const Vector& z) {
        const Vector g = p.gradient(z);
        return std::vector<double>{p.value_gap(z), g.norm(), (c / std::pow(t, power) - g).norm()};
    };
    return f;
}

/// y' = -(s/(alpha-1)) grad f(y).
inline VectorField rescaled_sd_field(const SmoothProblem& p, double alpha) {
    detail::require_alpha(alpha);
    const double am1 = alpha - 1.0;
    VectorField f;
    f.name = "rescaled_sd";
    f.dim = p.dim;
    f.eval = [p, am1](double s, const Vector& y) -> Vector { return -(s / am1) * p.gradient(y); };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L, am1](double s) { return s * L / am1; };
    }
    f.state_labels = block_labels({"y"}, p.dim);
    f.channel_names = {"value_gap", "grad_norm"};
    f.channels = [p](double, const Vector& y) { return detail::smooth_channels(p, y); };
    return f;
}

/// x'' + (alpha/s) x' + grad f(x + beta0 (s/(alpha-1)) x') = 0 as (x, v).
///
/// beta0 = 1 is the implicit-Hessian system; beta0 = 2 is the second-order
/// form of the bilevel dynamic.
inline VectorField general_damping_system(const SmoothProblem& p, double alpha, double beta0) {
    detail::require_alpha(alpha);
    detail::require(beta0 > 0.0, "beta0 must be > 0");
    const Eigen::Index n = p.dim;
    const double am1 = alpha - 1.0;
    VectorField f;
    f.name = beta0 == 1.0 ? "isihd" : "general_damping";
    f.dim = 2 * n;
    f.eval = [p, n, alpha, am1, beta0](double s, const Vector& u) -> Vector {
        detail::require_time(s);
        const auto x = u.head(n);
        const auto v = u.tail(n);
        Vector out(2 * n);
        out.head(n) = v;
        out.tail(n) = -(alpha / s) * v - p.gradient(x + (beta0 * s / am1) * v);
        return out;
    };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L, alpha, am1, beta0](double s) {
            return alpha / s + beta0 * s * L / am1;
        };
    }
    f.state_labels = block_labels({"x", "v"}, n);
    f.channel_names = {"value_gap", "grad_norm", "velocity_norm", "y_value_gap", "y_grad_norm"};
    f.channels = [p, n, am1, beta0](double s, const Vector& u) {
        const Vector x = u.head(n);
        const Vector v = u.tail(n);
        const Vector y = x + (beta0 * s / am1) * v;
        return std::vector<double>{p.value_gap(x), p.gradient(x).norm(), v.norm(),
                                   p.value_gap(y), p.gradient(y).norm()};
    };
    return f;
}

/// x'' + (alpha/s) x' + grad f(x + (s/(alpha-1)) x') = 0 as (x, v = x').
inline VectorField isihd_system(const SmoothProblem& p, double alpha) {
    VectorField f = general_damping_system(p, alpha, 1.0);
    f.name = "isihd";
    return f;
}

/// y'' + (alpha/s) y' + (s/(alpha+1)) Hess f(y) y' + grad f(y) = 0 as (y, v).
inline VectorField explicit_hessian_system(const SmoothProblem& p, double alpha) {
    detail::require_alpha(alpha);
    detail::require(p.has_hessian(), "explicit_hessian_system: problem has no hess_vec");
    const Eigen::Index n = p.dim;
    const double ap1 = alpha + 1.0;
    VectorField f;
    f.name = "explicit_hessian";
    f.dim = 2 * n;
    f.eval = [p, n, alpha, ap1](double s, const Vector& u) -> Vector {
        detail::require_time(s);
        const Vector y = u.head(n);
        const Vector v = u.tail(n);
        Vector out(2 * n);
        out.head(n) = v;
        out.tail(n) = -(alpha / s) * v - (s / ap1) * p.hess_vec(y, v) - p.gradient(y);
        return out;
    };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L, alpha, ap1](double s) { return alpha / s + s * L / ap1; };
    }
    f.state_labels = block_labels({"y", "v"}, n);
    f.channel_names = {"value_gap", "grad_norm", "velocity_norm"};
    f.channels = [p, n](double, const Vector& u) {
        const Vector y = u.head(n);
        return std::vector<double>{p.value_gap(y), p.gradient(y).norm(), u.tail(n).norm()};
    };
    return f;
}

/// c0 = s0^alpha y1 + s0^(alpha+1)/(alpha+1) G(y0), the conserved quantity
/// s^alpha y' + s^(alpha+1)/(alpha+1) G(y) of the explicit-Hessian and
/// cocoercive systems (G = grad f or M).
inline Vector first_integral_constant(const Vector& g_y0, double alpha, double s0,
                                      const Vector& y1) {
    detail::require_alpha(alpha);
    detail::require_dim(y1.size(), g_y0.size(), "first_integral_constant");
    return std::pow(s0, alpha) * y1 + (std::pow(s0, alpha + 1.0) / (alpha + 1.0)) * g_y0;
}

/// (lambda I + Hess f(z)) z' = -grad f(z), solved by conjugate gradient.
///
/// Channels: v = grad f(z) through its norm, |z'| and |v'| with
/// v' = -lambda z' - v.
inline VectorField regularized_newton_system(const SmoothProblem& p, double lambda) {
    detail::require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
    detail::require(p.has_hessian(), "regularized_newton_system: problem has no hess_vec");
    VectorField f;
    f.name = "regularized_newton";
    f.dim = p.dim;
    f.eval = [p, lambda](double, const Vector& z) -> Vector {
        return detail::newton_direction(p, lambda, z, -p.gradient(z));
    };
    // The Jacobian of z' has spectrum in [-1, 0] for quadratics.
    f.stiffness_hint = [](double) { return 1.0; };
    f.state_labels = block_labels({"z"}, p.dim);
    f.channel_names = {"value_gap", "grad_norm", "velocity_norm", "vdot_norm"};
    f.channels = [p, lambda](double, const Vector& z) {
        const Vector v = p.gradient(z);
        const Vector zdot = detail::newton_direction(p, lambda, z, -v);
        return std::vector<double>{p.value_gap(z), v.norm(), zdot.norm(),
                                   (-lambda * zdot - v).norm()};
    };
    return f;
}

/// Cascade (y, x): (lambda I + Hess f(y)) y' = -(lambda s/(alpha-1)) grad f(y),
/// x' = -((alpha-1)/s)(x - y). Channel w_norm = |grad f(y)|.
inline VectorField combined_system(const SmoothProblem& p, double alpha, double lambda) {
    detail::require_alpha(alpha);
    detail::require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
    detail::require(p.has_hessian(), "combined_system: problem has no hess_vec");
    const Eigen::Index n = p.dim;
    const double am1 = alpha - 1.0;
    VectorField f;
    f.name = "combined";
    f.dim = 2 * n;
    f.eval = [p, n, am1, lambda](double s, const Vector& u) -> Vector {
        detail::require_time(s);
        const Vector y = u.head(n);
        const Vector x = u.tail(n);
        Vector out(2 * n);
        out.head(n) = detail::newton_direction(p, lambda, y, -(lambda * s / am1) * p.gradient(y));
        out.tail(n) = -(am1 / s) * (x - y);
        return out;
    };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L, am1, lambda](double s) {
            return std::max(lambda * s * L / (am1 * (lambda + L)), am1 / s);
        };
    }
    f.state_labels = block_labels({"y", "x"}, n);
    f.channel_names = {"value_gap", "w_norm", "velocity_norm", "y_value_gap"};
    f.channels = [p, n, am1](double s, const Vector& u) {
        const Vector y = u.head(n);
        const Vector x = u.tail(n);
        return std::vector<double>{p.value_gap(x), p.gradient(y).norm(),
                                   ((am1 / s) * (x - y)).norm(), p.value_gap(y)};
    };
    return f;
}

/// Z = (Y, X): Y' = -2 grad f(Y) - ((alpha-1)/(4t))(Y - X),
/// X' = -((alpha-1)/(4t))(X - Y). Channels psi_gap = f(Y) - inf f,
/// phi = |Y - X|^2 / 2.
inline VectorField bilevel_system(const SmoothProblem& p, double alpha) {
    detail::require_alpha(alpha);
    const Eigen::Index n = p.dim;
    const double k = (alpha - 1.0) / 4.0;
    VectorField f;
    f.name = "bilevel";
    f.dim = 2 * n;
    f.eval = [p, n, k](double t, const Vector& u) -> Vector {
        detail::require_time(t);
        const Vector Y = u.head(n);
        const Vector X = u.tail(n);
        const Vector d = (k / t) * (Y - X);
        Vector out(2 * n);
        out.head(n) = -2.0 * p.gradient(Y) - d;
        out.tail(n) = d;
        return out;
    };
    if (detail::has_lipschitz(p)) {
        const double L = p.lipschitz;
        f.stiffness_hint = [L, k](double t) { return 2.0 * L + 2.0 * k / t; };
    }
    f.state_labels = block_labels({"Y", "X"}, n);
    f.channel_names = {"psi_gap", "phi", "grad_norm", "value_gap", "velocity_norm"};
    f.channels = [p, n, k](double t, const Vector& u) {
        const Vector Y = u.head(n);
        const Vector X = u.tail(n);
        const Vector g = p.gradient(Y);
        const Vector d = (k / t) * (Y - X);
        const double zdot = std::sqrt((2.0 * g + d).squaredNorm() + d.squaredNorm());
        return std::vector<double>{p.value_gap(Y), 0.5 * (Y - X).squaredNorm(), g.norm(),
                                   p.value_gap(X), zdot};
    };
    return f;
}

/// z' = -M(z) in the original time t. Channel m_norm = |M(z)|.
inline VectorField operator_flow_field(const CocoerciveOperator& M,
                                       std::function<double(const Vector&)> gap = {}) {
    VectorField f;
    f.name = "operator_flow";
    f.dim = M.dim;
    f.eval = [M](double, const Vector& z) -> Vector { return -M.apply(z); };
    if (M.rho > 0.0) {
        const double rho = M.rho;
        f.stiffness_hint = [rho](double) { return 1.0 / rho; };
    }
    f.state_labels = block_labels({"z"}, M.dim);
    f.channel_names = {"m_norm"};
    if (gap) f.channel_names.push_back("value_gap");
    f.channels = [M, gap](double, const Vector& z) {
        std::vector<double> out{M.apply(z).norm()};
        if (gap) out.push_back(gap(z));
        return out;
    };
    return f;
}

/// y' = -(s/(alpha+1)) M(y) + c0 / s^alpha. Channel m_norm = |M(y)|, plus
/// value_gap when a gap function is supplied.
inline VectorField cocoercive_system(const CocoerciveOperator& M, double alpha, const Vector& c0,
                                     std::function<double(const Vector&)> gap = {}) {
    detail::require_alpha(alpha);
    detail::require_dim(c0.size(), M.dim, "cocoercive_system");
    const double ap1 = alpha + 1.0;
    VectorField f;
    f.name = "cocoercive";
    f.dim = M.dim;
    f.eval = [M, alpha, ap1, c0](double s, const Vector& y) -> Vector {
        detail::require_time(s);
        return -(s / ap1) * M.apply(y) + c0 / std::pow(s, alpha);
    };
    if (M.rho > 0.0) {
        const double rho = M.rho;
        f.stiffness_hint = [rho, ap1](double s) { return s / (ap1 * rho); };
    }
    f.state_labels = block_labels({"y"}, M.dim);
    f.channel_names = {"m_norm"};
    if (gap) f.channel_names.push_back("value_gap");
    f.channels = [M, gap](double, const Vector& y) {
        std::vector<double> out{M.apply(y).norm()};
        if (gap) out.push_back(gap(y));
        return out;
    };
    return f;
}

/// y'' + (alpha/s) y' + (s/(alpha+1)) DM(y) y' + M(y) = 0 as (y, v); needs M.jvp.
///
/// Its first integral is the reduced cocoercive form above.
inline VectorField cocoercive_inertial_system(const CocoerciveOperator& M, double alpha,
                                              std::function<double(const Vector&)> gap = {}) {
    detail::require_alpha(alpha);
    detail::require(static_cast<bool>(M.jvp), "cocoercive_inertial_system: operator has no jvp");
    const Eigen::Index n = M.dim;
    const double ap1 = alpha + 1.0;
    VectorField f;
    f.name = "cocoercive_inertial";
    f.dim = 2 * n;
    f.eval = [M, n, alpha, ap1](double s, const Vector& u) -> Vector {
        detail::require_time(s);
        const Vector y = u.head(n);
        const Vector v = u.tail(n);
        Vector out(2 * n);
        out.head(n) = v;
        out.tail(n) = -(alpha / s) * v - (s / ap1) * M.jvp(y, v) - M.apply(y);
        return out;
    };
    if (M.rho > 0.0) {
        const double rho = M.rho;
        f.stiffness_hint = [rho, alpha, ap1](double s) { return alpha / s + s / (ap1 * rho); };
    }
    f.state_labels = block_labels({"y", "v"}, n);
    f.channel_names = {"m_norm", "velocity_norm"};
    if (gap) f.channel_names.push_back("value_gap");
    f.channels = [M, n, gap](double, const Vector& u) {
        const Vector y = u.head(n);
        std::vector<double> out{M.apply(y).norm(), u.tail(n).norm()};
        if (gap) out.push_back(gap(y));
        return out;
    };
    return f;
}

// ---------------------------------------------------------------------------
// Construction from a DynamicsSpec
// ---------------------------------------------------------------------------

/// Field for a smooth problem. Operator kinds use M = grad f.
inline VectorField make_field(const DynamicsSpec& spec, const SmoothProblem& p) {
    spec.validate();
    detail::require_dim(spec.initial_position.size(), p.dim, "make_field");
    switch (spec.kind) {
        case DynamicsKind::sd: return sd_field(p);
        case DynamicsKind::perturbed_sd:
            return perturbed_sd_field(
                p, spec.perturbation.size() ? spec.perturbation : Vector::Zero(p.dim), spec.alpha);
        case DynamicsKind::rescaled_sd: return rescaled_sd_field(p, spec.alpha);
        case DynamicsKind::isihd: return isihd_system(p, spec.alpha);
        case DynamicsKind::explicit_hessian: return explicit_hessian_system(p, spec.alpha);
        case DynamicsKind::regularized_newton: return regularized_newton_system(p, spec.lambda);
        case DynamicsKind::combined: return combined_system(p, spec.alpha, spec.lambda);
        case DynamicsKind::bilevel: return bilevel_system(p, spec.alpha);
        case DynamicsKind::general_damping: return general_damping_system(p, spec.alpha, spec.beta0);
        case DynamicsKind::cocoercive:
        case DynamicsKind::cocoercive_inertial: {
            const CocoerciveOperator M = gradient_operator(p);
            std::function<double(const Vector&)> gap;
            if (p.gap || p.min_value) gap = [p](const Vector& y) { return p.value_gap(y); };
            if (spec.kind == DynamicsKind::cocoercive_inertial) {
                return cocoercive_inertial_system(M, spec.alpha, gap);
            }
            const Vector c0 = first_integral_constant(M.apply(spec.initial_position), spec.alpha,
                                                      spec.s0, spec.velocity_or_zero());
            return cocoercive_system(M, spec.alpha, c0, gap);
        }
    }
    throw std::invalid_argument("make_field: unhandled kind");
}

/// Field for an operator; only the cocoercive kinds apply.
inline VectorField make_field(const DynamicsSpec& spec, const CocoerciveOperator& M,
                              std::function<double(const Vector&)> gap = {}) {
    spec.validate();
    detail::require_dim(spec.initial_position.size(), M.dim, "make_field");
    if (spec.kind == DynamicsKind::cocoercive) {
        const Vector c0 = first_integral_constant(M.apply(spec.initial_position), spec.alpha,
                                                  spec.s0, spec.velocity_or_zero());
        return cocoercive_system(M, spec.alpha, c0, std::move(gap));
    }
    if (spec.kind == DynamicsKind::cocoercive_inertial) {
        return cocoercive_inertial_system(M, spec.alpha, std::move(gap));
    }
    throw std::invalid_argument(std::string("dynamics '") + to_string(spec.kind) +
                                "' needs a smooth problem, not an operator");
}

/// Initial state of the system from position x0 and velocity x1.
///
/// combined: (y, x) with y(s0) = x0 + (s0/(alpha-1)) x1.
/// bilevel: (Y, X) with X = x0, Y = x0 + (2 s/(alpha-1)) x1 where s is the
/// second-order time matching t0 = spec.s0, s = sqrt(2 (alpha-1) t0).
inline Vector initial_state(const DynamicsSpec& spec) {
    spec.validate();
    const Vector& x0 = spec.initial_position;
    const Vector x1 = spec.velocity_or_zero();
    const Eigen::Index n = x0.size();
    if (state_blocks(spec.kind) == 1) return x0;
    Vector u(2 * n);
    switch (spec.kind) {
        case DynamicsKind::combined:
            u << x0 + (spec.s0 / (spec.alpha - 1.0)) * x1, x0;
            break;
        case DynamicsKind::bilevel: {
            const double s = std::sqrt(2.0 * (spec.alpha - 1.0) * spec.s0);
            u << x0 + (2.0 * s / (spec.alpha - 1.0)) * x1, x0;
            break;
        }
        default:
            u << x0, x1;
            break;
    }
    return u;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// One classical Runge-Kutta step.
template <class Eval>
Vector rk4_step(const Eval& eval, double s, const Vector& u, double h) {
    const Vector k1 = eval(s, u);
    const Vector k2 = eval(s + 0.5 * h, u + (0.5 * h) * k1);
    const Vector k3 = eval(s + 0.5 * h, u + (0.5 * h) * k2);
    const Vector k4 = eval(s + h, u + h * k3);
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct IntegrateOptions {
    int max_halvings = 20;
    double blowup_norm = 1e12;
    bool keep_step_log = true;
};

namespace detail {

inline bool state_ok(const Vector& u, double blowup) {
    return u.allFinite() && u.norm() <= blowup;
}

inline void record_sample(Trajectory& traj, const VectorField& field, double s, const Vector& u) {
    traj.times.push_back(s);
    traj.states.push_back(u);
    if (field.channels) {
        const std::vector<double> vals = field.channels(s, u);
        for (std::size_t c = 0; c < vals.size(); ++c) traj.channels[c].push_back(vals[c]);
    }
}

}  // namespace detail

/// Classical RK4 from (s0, u0) to horizon with nominal step h.
///
/// The step is halved (at most `max_halvings` times) while
/// stiffness_hint * h > 1 at either end of the step; the last step is cut to
/// land on the horizon. Every `record_every`-th accepted step is stored, and
/// the final point always is. A non-finite state or one with norm above
/// `blowup_norm` raises DivergenceError carrying the last finite time.
inline Trajectory integrate(const VectorField& field, const Vector& u0, double s0, double horizon,
                            double h, int record_every = 1, IntegrateOptions opts = {}) {
    detail::require(static_cast<bool>(field.eval), "integrate: field has no eval");
    detail::require_dim(u0.size(), field.dim, "integrate");
    detail::require(std::isfinite(h) && h > 0.0, "integrate: step h must be > 0");
    detail::require(record_every >= 1, "integrate: record_every must be >= 1");
    detail::require(std::isfinite(s0) && std::isfinite(horizon) && horizon >= s0,
                    "integrate: horizon must be >= s0");
    if (!detail::state_ok(u0, opts.blowup_norm)) {
        throw DivergenceError("initial state is not finite", s0);
    }

    Trajectory traj;
    traj.state_labels = field.state_labels;
    traj.channel_names = field.channel_names;
    traj.channels.assign(field.channel_names.size(), {});
    detail::record_sample(traj, field, s0, u0);

    Vector u = u0;
    double s = s0;
    std::size_t accepted = 0;
    const double end_slack = 1e-12 * std::max(1.0, std::abs(horizon));
    while (horizon - s > end_slack) {
        double step = h;
        int halvings = 0;
        if (field.stiffness_hint) {
            while (halvings < opts.max_halvings &&
                   std::max(field.stiffness_hint(s), field.stiffness_hint(s + step)) * step > 1.0) {
                step *= 0.5;
                ++halvings;
            }
        }
        bool last = false;
        if (s + step >= horizon - end_slack) {
            step = horizon - s;
            last = true;
        }
        Vector next = rk4_step(field.eval, s, u, step);
        if (!detail::state_ok(next, opts.blowup_norm)) {
            throw DivergenceError(
                field.name + ": state diverged after s = " + detail::format_double(s), s);
        }
        u = std::move(next);
        s = last ? horizon : s + step;
        ++accepted;

        auto& st = traj.stats;
        st.accepted_steps = accepted;
        if (halvings > 0) ++st.halved_steps;
        st.min_step = std::min(st.min_step, step);
        st.max_step = std::max(st.max_step, step);
        if (opts.keep_step_log) st.step_log.push_back(step);

        if (last || accepted % static_cast<std::size_t>(record_every) == 0) {
            detail::record_sample(traj, field, s, u);
        }
    }
    return traj;
}

inline Trajectory integrate(const VectorField& field, const DynamicsSpec& spec, double h,
                            int record_every = 1, IntegrateOptions opts = {}) {
    return integrate(field, initial_state(spec), spec.s0, spec.horizon, h, record_every, opts);
}

/// Prox time-stepping of the nonsmooth inclusion in state (x, y), both
/// starting at x0 (zero initial velocity).
///
/// y_{j+1} = prox(y_j, h s_{j+1}/(alpha-1)) is implicit Euler for
/// y' in -(s/(alpha-1)) dg(y); x_{j+1} = x_j + h ((alpha-1)/s_j)(y_j - x_j)
/// is explicit Euler and a convex combination, so x stays in dom g.
/// Channels: g_x, g_y and, when g.min_value is set, value_gap (x) and
/// y_value_gap.
inline Trajectory nonsmooth_inclusion_flow(const ProxFriendly& g, double alpha, const Vector& x0,
                                           double horizon, double s0 = 1.0, double h = 1e-3,
                                           int record_every = 1) {
    detail::require_alpha(alpha);
    detail::require(std::isfinite(h) && h > 0.0, "nonsmooth_inclusion_flow: h must be > 0");
    detail::require(s0 > 0.0 && horizon >= s0, "nonsmooth_inclusion_flow: need 0 < s0 <= horizon");
    detail::require(record_every >= 1, "record_every must be >= 1");
    detail::require(h * (alpha - 1.0) / s0 <= 1.0,
                    "nonsmooth_inclusion_flow: h (alpha-1)/s0 must be <= 1");
    detail::require(std::isfinite(g.value(x0)), "nonsmooth_inclusion_flow: x0 outside dom g");
    const Eigen::Index n = x0.size();
    const double am1 = alpha - 1.0;

    Trajectory traj;
    traj.state_labels = block_labels({"x", "y"}, n);
    traj.channel_names = {"g_x", "g_y"};
    if (g.min_value) {
        traj.channel_names.push_back("value_gap");
        traj.channel_names.push_back("y_value_gap");
    }
    traj.channels.assign(traj.channel_names.size(), {});
    auto record = [&](double s, const Vector& x, const Vector& y) {
        Vector u(2 * n);
        u << x, y;
        traj.times.push_back(s);
        traj.states.push_back(std::move(u));
        const double gx = g.value(x), gy = g.value(y);
        traj.channels[0].push_back(gx);
        traj.channels[1].push_back(gy);
        if (g.min_value) {
            traj.channels[2].push_back(gx - *g.min_value);
            traj.channels[3].push_back(gy - *g.min_value);
        }
    };

    Vector x = x0, y = x0;
    record(s0, x, y);
    const auto steps = static_cast<long>(std::ceil((horizon - s0) / h - 1e-9));
    for (long j = 0; j < steps; ++j) {
        const double s = s0 + static_cast<double>(j) * h;
        const double s_next = j + 1 == steps ? horizon : s0 + static_cast<double>(j + 1) * h;
        const double hj = s_next - s;
        Vector y_next = g.prox(y, hj * s_next / am1);
        if (!y_next.allFinite()) {
            throw DivergenceError("nonsmooth_inclusion_flow: prox returned a non-finite point", s);
        }
        x += (hj * am1 / s) * (y - x);
        y = std::move(y_next);
        if (j + 1 == steps || (j + 1) % record_every == 0) record(s_next, x, y);
    }
    return traj;
}

}  // namespace tsavg

#endif  // TSAVG_DYNAMICS_HPP
