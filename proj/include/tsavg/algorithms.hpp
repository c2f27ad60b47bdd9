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

#ifndef TSAVG_ALGORITHMS_HPP
#define TSAVG_ALGORITHMS_HPP

#include "tsavg/problems.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tsavg {

/// s_0 = 0, s_{k+1} = (alpha - 1 + sqrt((alpha-1)^2 + 4 s_k^2)) / 2.
struct StepSequence {
    double alpha = 3.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t k) const { return values[k]; }
};

/// t_1 .. t_K with t_1 = 1, t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2; index 0 unused (NaN).
inline std::vector<double> nesterov_step_rule(int K) {
    detail::require(K >= 1, "nesterov_step_rule: K must be >= 1");
    std::vector<double> t(static_cast<std::size_t>(K) + 1, kNaN);
    t[1] = 1.0;
    for (int k = 1; k < K; ++k) {
        const double tk = t[static_cast<std::size_t>(k)];
        t[static_cast<std::size_t>(k) + 1] = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    }
    return t;
}

/// s_0 .. s_K.
inline StepSequence prox_step_rule(double alpha, int K) {
    detail::require_alpha(alpha);
    detail::require(K >= 0, "prox_step_rule: K must be >= 0");
    const double am1 = alpha - 1.0;
    StepSequence seq;
    seq.alpha = alpha;
    seq.values.resize(static_cast<std::size_t>(K) + 1);
    seq.values[0] = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        const double sk = seq.values[k];
        seq.values[k + 1] = 0.5 * (am1 + std::sqrt(am1 * am1 + 4.0 * sk * sk));
    }
    return seq;
}

/// Per-iteration records k = 0..K. Entries that are undefined at a given k
/// (y_0 of Nesterov, E_k for k < 2, gaps without a known f*) are empty.
struct IterateLog {
    std::string algorithm;
    std::vector<double> s;  // s_k (prox-averaging) or t_k (Nesterov)
    std::vector<Vector> x;
    std::vector<std::optional<Vector>> y;
    std::vector<std::optional<double>> f_y;
    std::vector<std::optional<double>> f_x;
    std::vector<std::optional<double>> f_y_gap;
    std::vector<std::optional<double>> f_x_gap;
    std::vector<std::optional<double>> res_norm;
    std::vector<std::optional<double>> energy;

    std::size_t size() const { return x.size(); }

    void push(double sk, Vector xk) {
        s.push_back(sk);
        x.push_back(std::move(xk));
        y.emplace_back();
        f_y.emplace_back();
        f_x.emplace_back();
        f_y_gap.emplace_back();
        f_x_gap.emplace_back();
        res_norm.emplace_back();
        energy.emplace_back();
    }

    void validate() const {
        const std::size_t n = x.size();
        detail::require(s.size() == n && y.size() == n && f_y.size() == n && f_x.size() == n &&
                            f_y_gap.size() == n && f_x_gap.size() == n && res_norm.size() == n &&
                            energy.size() == n,
                        "IterateLog: series lengths differ");
    }

    /// Values of a series where defined, with their indices.
    static std::pair<std::vector<double>, std::vector<double>> defined(
        const std::vector<std::optional<double>>& series, std::size_t from = 0) {
        std::pair<std::vector<double>, std::vector<double>> out;
        for (std::size_t k = from; k < series.size(); ++k) {
            if (series[k]) {
                out.first.push_back(static_cast<double>(k));
                out.second.push_back(*series[k]);
            }
        }
        return out;
    }
};

/// CSV `k,s_k,f_y_gap,f_x_gap,res_norm,E_k`, empty cells where undefined.
inline void write_csv(std::ostream& os, const IterateLog& log) {
    auto cell = [&](const std::optional<double>& v) {
        if (v) os << detail::format_double(*v);
    };
    os << "k,s_k,f_y_gap,f_x_gap,res_norm,E_k\n";
    for (std::size_t k = 0; k < log.size(); ++k) {
        os << k << ',';
        if (std::isfinite(log.s[k])) os << detail::format_double(log.s[k]);
        os << ',';
        cell(log.f_y_gap[k]);
        os << ',';
        cell(log.f_x_gap[k]);
        os << ',';
        cell(log.res_norm[k]);
        os << ',';
        cell(log.energy[k]);
        os << '\n';
    }
}

namespace detail {

inline std::optional<double> gap_of(const SmoothProblem& p, const Vector& x) {
    if (p.gap || p.min_value) return p.value_gap(x);
    return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Nesterov / Ravine
// ---------------------------------------------------------------------------

/// E_k = t_k^2 (f(y_{k-1}) - f* - lambda (1 - L lambda/2) |grad f(y_{k-1})|^2)
///       + |(t_k - 1)(x_k - x_{k-1}) + x_k - z*|^2 / (2 lambda),   k >= 2.
/// Entries k < 2 are empty.
inline std::vector<std::optional<double>> ravine_energy(const IterateLog& log,
                                                        const SmoothProblem& p,
                                                        double lambda_step,
                                                        const std::optional<Vector>& z_star) {
    detail::require(z_star.has_value(), "ravine_energy: the energy needs a minimizer z*");
    detail::require(std::isfinite(p.lipschitz), "ravine_energy: problem needs a Lipschitz bound");
    log.validate();
    const double L = p.lipschitz;
    const double c = lambda_step * (1.0 - 0.5 * L * lambda_step);
    std::vector<std::optional<double>> E(log.size());
    for (std::size_t k = 2; k < log.size(); ++k) {
        detail::require(log.y[k - 1].has_value(), "ravine_energy: log has no y_{k-1}");
        const Vector& yp = *log.y[k - 1];
        const double tk = log.s[k];
        const double gap = p.value_gap(yp);
        const double term1 = tk * tk * (gap - c * p.gradient(yp).squaredNorm());
        const Vector w = (tk - 1.0) * (log.x[k] - log.x[k - 1]) + log.x[k] - *z_star;
        E[k] = term1 + w.squaredNorm() / (2.0 * lambda_step);
    }
    return E;
}

/// Nesterov's scheme with x_0 = x_1 = x0:
/// y_k = x_k + alpha_k (x_k - x_{k-1}), alpha_k = (t_k - 1)/t_{k+1},
/// x_{k+1} = y_k - lambda grad f(y_k).
///
/// Rows k = 0..K; y_k, f(y_k) and |grad f(y_k)| from k = 1, E_k from k = 2
/// when the problem has a known minimizer. `s` holds t_k.
inline IterateLog nesterov(const SmoothProblem& p, double lambda_step, int K, const Vector& x0) {
    detail::require(K >= 1, "nesterov: K must be >= 1");
    detail::require_dim(x0.size(), p.dim, "nesterov");
    detail::require(std::isfinite(p.lipschitz) && p.lipschitz > 0.0,
                    "nesterov: problem needs a positive Lipschitz bound");
    if (!(lambda_step > 0.0) || lambda_step > (1.0 / p.lipschitz) * (1.0 + 1e-12)) {
        throw std::invalid_argument("nesterov: step lambda must lie in (0, 1/L] = (0, " +
                                    detail::format_double(1.0 / p.lipschitz) +
                                    "]; the convergence theory is void otherwise");
    }
    const std::vector<double> t = nesterov_step_rule(K + 1);

    IterateLog log;
    log.algorithm = "nesterov";
    log.push(kNaN, x0);  // x_0
    log.f_x[0] = p.value(x0);
    log.f_x_gap[0] = detail::gap_of(p, x0);

    Vector x_prev = x0, x = x0;  // x_0, x_1
    for (int k = 1; k <= K; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        log.push(t[ku], x);
        log.f_x[ku] = p.value(x);
        log.f_x_gap[ku] = detail::gap_of(p, x);

        const double ak = (t[ku] - 1.0) / t[ku + 1];
        const Vector y = x + ak * (x - x_prev);
        const Vector g = p.gradient(y);
        log.y[ku] = y;
        log.f_y[ku] = p.value(y);
        log.f_y_gap[ku] = detail::gap_of(p, y);
        log.res_norm[ku] = g.norm();

        Vector next = y - lambda_step * g;
        if (!next.allFinite()) throw DivergenceError("nesterov: iterate is not finite", k);
        x_prev = std::move(x);
        x = std::move(next);
    }
    if (p.minimizer) log.energy = ravine_energy(log, p, lambda_step, p.minimizer);
    return log;
}

/// theta_{k+1,i}, i = 1..k+1, for alphas = (alpha_1, .., alpha_{k+1}):
/// theta_{k+1,k+1} = 1/(1+alpha_{k+1}) and
/// theta_{k+1,i} = 1/(1+alpha_{k+1}) prod_{j=1}^{k+1-i} alpha_{k+2-j}/(1+alpha_{k+1-j}).
///
/// Requires alpha_1 = 0 (true for Nesterov's rule), which makes x_1 = y_1
/// and the weights sum to one. Returned vector is 0-based: out[i-1] = theta_{k+1,i}.
inline std::vector<double> ravine_weights(const std::vector<double>& alphas) {
    detail::require(!alphas.empty(), "ravine_weights: need at least alpha_1");
    for (double a : alphas) {
        detail::require(std::isfinite(a) && a >= 0.0, "ravine_weights: alphas must be >= 0");
    }
    detail::require(alphas.front() == 0.0,
                    "ravine_weights: alpha_1 must be 0 (x_1 = y_1), otherwise the weights "
                    "leave mass on x_0");
    const std::size_t n = alphas.size();  // k + 1
    auto a = [&](std::size_t i) { return alphas[i - 1]; };  // 1-based alpha_i
    std::vector<double> theta(n);
    const double lead = 1.0 / (1.0 + a(n));
    theta[n - 1] = lead;
    double prod = 1.0;
    // theta_{k+1,i} for i = k, k-1, .., 1 extends the product by one factor.
    for (std::size_t i = n - 1; i >= 1; --i) {
        const std::size_t j = n - i;  // factor index, alpha_{k+2-j} / (1 + alpha_{k+1-j})
        prod *= a(n + 1 - j) / (1.0 + a(n - j));
        theta[i - 1] = lead * prod;
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Prox-averaging and forward-backward
// ---------------------------------------------------------------------------

/// y_{k+1} = prox(y_k, s_{k+1}/(alpha-1)),
/// x_{k+1} = (1 - (alpha-1)/s_{k+1}) x_k + ((alpha-1)/s_{k+1}) y_{k+1}.
///
/// Rows k = 0..K with s_k, y_k, x_k, g(y_k), g(x_k) and, from k = 1,
/// |eta_k| = ((alpha-1)/s_k) |y_k - y_{k-1}|. Gaps use g.min_value when set.
/// With `require_equal_start` the call rejects y0 != x0 (zero initial velocity).
inline IterateLog prox_averaging(const ProxFriendly& g, double alpha, int K, const Vector& y0,
                                 const Vector& x0, bool require_equal_start = false) {
    detail::require_alpha(alpha);
    detail::require(K >= 0, "prox_averaging: K must be >= 0");
    detail::require_dim(x0.size(), y0.size(), "prox_averaging");
    if (require_equal_start) {
        detail::require(y0 == x0, "prox_averaging: y0 must equal x0 in the zero-velocity setting");
    }
    const double am1 = alpha - 1.0;
    const StepSequence s = prox_step_rule(alpha, K);

    IterateLog log;
    log.algorithm = "prox_averaging";
    auto fill = [&](std::size_t k, const Vector& y, const Vector& x) {
        log.y[k] = y;
        log.f_y[k] = g.value(y);
        log.f_x[k] = g.value(x);
        if (g.min_value) {
            log.f_y_gap[k] = *log.f_y[k] - *g.min_value;
            log.f_x_gap[k] = *log.f_x[k] - *g.min_value;
        }
    };
    log.push(s[0], x0);
    fill(0, y0, x0);

    Vector y = y0, x = x0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        const double sk1 = s[k + 1];
        Vector y_next = g.prox(y, sk1 / am1);
        if (!y_next.allFinite()) {
            throw DivergenceError("prox_averaging: prox returned a non-finite point",
                                  static_cast<double>(k));
        }
        const double c = am1 / sk1;
        x = (1.0 - c) * x + c * y_next;
        log.push(sk1, x);
        fill(k + 1, y_next, x);
        log.res_norm[k + 1] = c * (y_next - y).norm();
        y = std::move(y_next);
    }
    return log;
}

/// y_{k+1} = prox_{mu g}(y_k - mu A^T (A y_k - b)) = y_k - mu M(y_k).
///
/// Rows k = 0..K with f(y_k) and |M(y_k)|; gaps only when `f_star` is given.
inline IterateLog forward_backward(const CompositeProblem& composite, double mu, int K,
                                   const Vector& y0, std::optional<double> f_star = std::nullopt) {
    detail::require(K >= 0, "forward_backward: K must be >= 0");
    detail::require_dim(y0.size(), composite.dim(), "forward_backward");
    const CocoerciveOperator M = forward_backward_operator(composite, mu);

    IterateLog log;
    log.algorithm = "forward_backward";
    Vector y = y0;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(K); ++k) {
        const Vector m = M.apply(y);
        log.push(kNaN, y);
        log.y[k] = y;
        log.f_y[k] = composite.value(y);
        log.f_x[k] = log.f_y[k];
        if (f_star) {
            log.f_y_gap[k] = *log.f_y[k] - *f_star;
            log.f_x_gap[k] = log.f_y_gap[k];
        }
        log.res_norm[k] = m.norm();
        if (k == static_cast<std::size_t>(K)) break;
        y = y - mu * m;
        if (!y.allFinite()) {
            throw DivergenceError("forward_backward: iterate is not finite", static_cast<double>(k));
        }
    }
    return log;
}

}  // namespace tsavg

#endif  // TSAVG_ALGORITHMS_HPP
