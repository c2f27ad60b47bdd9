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

#ifndef TSAVG_PROBLEMS_HPP
#define TSAVG_PROBLEMS_HPP

#include "tsavg/core.hpp"
#include "tsavg/linalg.hpp"
#include "tsavg/rng.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace tsavg {

/// Smooth convex objective: value, gradient, optional Hessian-vector product.
///
/// `gap`, when set, evaluates f(x) - inf f without cancellation; otherwise
/// value_gap() falls back to value(x) - min_value. `lipschitz` is a bound on
/// the gradient's Lipschitz constant over the region the runs visit (global
/// for quadratics, local for the quartic).
struct SmoothProblem {
    std::string name;
    Eigen::Index dim = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Vector(const Vector&, const Vector&)> hess_vec;
    std::optional<double> min_value;
    std::optional<Vector> minimizer;
    std::function<double(const Vector&)> gap;
    std::function<double(const Vector&)> argmin_distance;  // dist(x, argmin f), when known
    double lipschitz = kNaN;

    bool has_hessian() const { return static_cast<bool>(hess_vec); }

    double value_gap(const Vector& x) const {
        if (gap) return gap(x);
        if (min_value) return value(x) - *min_value;
        return value(x);
    }
};

/// Convex function given through its value and proximal map.
///
/// `prox(v, step)` returns argmin_u value(u) + |u - v|^2 / (2 step).
/// `prox_jvp(v, step, d)` is the directional derivative of the prox at v
/// along d where the prox is differentiable (piecewise for l1).
struct ProxFriendly {
    std::string name;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&, double)> prox;
    std::function<Vector(const Vector&, double, const Vector&)> prox_jvp;
    std::optional<double> min_value;
    std::optional<Vector> minimizer;
};

/// Single-valued rho-cocoercive operator M.
struct CocoerciveOperator {
    std::string name;
    Eigen::Index dim = 0;
    std::function<Vector(const Vector&)> apply;
    double rho = 0.0;
    // Directional derivative of M (exists a.e. for forward-backward maps).
    std::function<Vector(const Vector&, const Vector&)> jvp;
};

namespace detail {

struct MinValueCache {
    std::once_flag flag;
    double value = kNaN;
    Vector point;
};

}  // namespace detail

/// 1/2 |A y - b|^2 + g(y).
struct CompositeProblem {
    std::shared_ptr<const Matrix> design;  // A, m x n
    Vector observations;                   // b
    ProxFriendly regularizer;              // g
    SmoothProblem smooth_part;             // 1/2 |A y - b|^2
    double l1_weight = 0.0;                // informational, when g is l1
    std::shared_ptr<detail::MinValueCache> min_cache = std::make_shared<detail::MinValueCache>();

    const Matrix& A() const { return *design; }
    const Vector& b() const { return observations; }
    Eigen::Index dim() const { return design->cols(); }

    /// Lipschitz constant of the smooth gradient, |A|^2.
    double lipschitz() const { return smooth_part.lipschitz; }

    /// Cocoercivity constant of the smooth gradient (Baillon-Haddad), 1/|A|^2.
    double cocoercivity() const { return 1.0 / smooth_part.lipschitz; }

    double value(const Vector& y) const { return smooth_part.value(y) + regularizer.value(y); }
};

// ---------------------------------------------------------------------------
// Smooth objectives
// ---------------------------------------------------------------------------

/// f(x) = 1/2 x^T Q x - c^T x.
inline SmoothProblem quadratic_problem(const Matrix& Q, const Vector& c) {
    detail::require(Q.rows() == Q.cols(), "quadratic_problem: Q must be square");
    detail::require_dim(c.size(), Q.rows(), "quadratic_problem");
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    detail::require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    "quadratic_problem: Q must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(Q), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    detail::require(lo >= -1e-12 * std::max(1.0, hi), "quadratic_problem: Q must be PSD");

    auto q = std::make_shared<const Matrix>(Q);
    auto cc = std::make_shared<const Vector>(c);

    SmoothProblem p;
    p.name = "quadratic";
    p.dim = Q.rows();
    p.value = [q, cc](const Vector& x) { return 0.5 * x.dot(*q * x) - cc->dot(x); };
    p.gradient = [q, cc](const Vector& x) -> Vector { return *q * x - *cc; };
    p.hess_vec = [q](const Vector&, const Vector& v) -> Vector { return *q * v; };
    p.lipschitz = std::max(hi, 0.0);
    if (lo > 1e-12 * std::max(1.0, hi)) {
        Vector xs = Eigen::MatrixXd(Q).ldlt().solve(c);
        p.minimizer = xs;
        p.min_value = -0.5 * c.dot(xs);
        auto xsp = std::make_shared<const Vector>(xs);
        p.gap = [q, xsp](const Vector& x) {
            const Vector d = x - *xsp;
            return 0.5 * d.dot(*q * d);
        };
        p.argmin_distance = [xsp](const Vector& x) { return (x - *xsp).norm(); };
    }
    return p;
}

/// f(x) = 1/2 |x|^2, the identity quadratic.
inline SmoothProblem half_norm_squared(Eigen::Index n) {
    SmoothProblem p = quadratic_problem(Matrix::Identity(n, n), Vector::Zero(n));
    p.name = "half_norm_squared";
    return p;
}

/// f(y) = 1/2 |A y - b|^2 with |A|^2 from power iteration.
///
/// The min-norm least-squares solution is recorded as the minimizer; the gap
/// is 1/2 |A (y - y_ls)|^2, exact by orthogonality of the optimal residual.
inline SmoothProblem least_squares_problem(const Matrix& A, const Vector& b) {
    detail::require_dim(b.size(), A.rows(), "least_squares_problem");
    detail::require(A.cols() > 0, "least_squares_problem: A has no columns");
    auto a = std::make_shared<const Matrix>(A);
    auto bb = std::make_shared<const Vector>(b);

    SmoothProblem p;
    p.name = "least_squares";
    p.dim = A.cols();
    p.value = [a, bb](const Vector& y) { return 0.5 * (*a * y - *bb).squaredNorm(); };
    p.gradient = [a, bb](const Vector& y) -> Vector { return a->transpose() * (*a * y - *bb); };
    p.hess_vec = [a](const Vector&, const Vector& v) -> Vector {
        return a->transpose() * (*a * v);
    };
    p.lipschitz = spectral_norm_squared(A);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod{Eigen::MatrixXd(A)};
    Vector ys = cod.solve(b);
    p.minimizer = ys;
    p.min_value = 0.5 * (A * ys - b).squaredNorm();
    auto ysp = std::make_shared<const Vector>(ys);
    p.gap = [a, ysp](const Vector& y) { return 0.5 * (*a * (y - *ysp)).squaredNorm(); };
    // argmin is y_ls + ker A; the distance is the row-space component of y - y_ls.
    auto proj = std::make_shared<const Matrix>(cod.pseudoInverse() * Eigen::MatrixXd(A));
    p.argmin_distance = [proj, ysp](const Vector& y) { return (*proj * (y - *ysp)).norm(); };
    return p;
}

/// f(x) = 1/4 sum x_i^4: convex, not strongly convex, minimizer 0.
///
/// The gradient is only locally Lipschitz; `lipschitz` is set to 3 r^2,
/// valid on the ball of radius r (trajectories started inside it stay in it).
inline SmoothProblem quartic_problem(Eigen::Index n, double radius = 1.0) {
    detail::require(n > 0, "quartic_problem: n must be positive");
    SmoothProblem p;
    p.name = "quartic";
    p.dim = n;
    p.value = [](const Vector& x) { return 0.25 * x.array().pow(4).sum(); };
    p.gradient = [](const Vector& x) -> Vector { return x.array().cube().matrix(); };
    p.hess_vec = [](const Vector& x, const Vector& v) -> Vector {
        return (3.0 * x.array().square() * v.array()).matrix();
    };
    p.min_value = 0.0;
    p.minimizer = Vector::Zero(n);
    p.gap = [](const Vector& x) { return 0.25 * x.array().pow(4).sum(); };
    p.argmin_distance = [](const Vector& x) { return x.norm(); };
    p.lipschitz = 3.0 * radius * radius;
    return p;
}

// ---------------------------------------------------------------------------
// Prox-friendly functions
// ---------------------------------------------------------------------------

inline ProxFriendly zero_regularizer() {
    ProxFriendly g;
    g.name = "zero";
    g.value = [](const Vector&) { return 0.0; };
    g.prox = [](const Vector& v, double) -> Vector { return v; };
    g.prox_jvp = [](const Vector&, double, const Vector& d) -> Vector { return d; };
    return g;
}

inline double soft_threshold(double v, double threshold) {
    if (v > threshold) return v - threshold;
    if (v < -threshold) return v + threshold;
    return 0.0;
}

/// g(u) = weight * |u|_1; prox is componentwise soft-thresholding.
inline ProxFriendly l1_regularizer(double weight) {
    detail::require(std::isfinite(weight) && weight >= 0.0, "l1_regularizer: weight must be >= 0");
    ProxFriendly g;
    g.name = "l1";
    g.value = [weight](const Vector& u) { return weight * u.lpNorm<1>(); };
    g.prox = [weight](const Vector& v, double step) -> Vector {
        detail::require(step > 0.0, "prox: step must be positive");
        const double thr = weight * step;
        return v.unaryExpr([thr](double x) { return soft_threshold(x, thr); });
    };
    g.prox_jvp = [weight](const Vector& v, double step, const Vector& d) -> Vector {
        const double thr = weight * step;
        return (v.array().abs() > thr).select(d, 0.0);
    };
    g.min_value = 0.0;
    return g;
}

/// g(u) = weight/2 |u|^2; prox is v / (1 + weight * step).
inline ProxFriendly l2_squared_regularizer(double weight) {
    detail::require(std::isfinite(weight) && weight >= 0.0,
                    "l2_squared_regularizer: weight must be >= 0");
    ProxFriendly g;
    g.name = "l2_squared";
    g.value = [weight](const Vector& u) { return 0.5 * weight * u.squaredNorm(); };
    g.prox = [weight](const Vector& v, double step) -> Vector {
        detail::require(step > 0.0, "prox: step must be positive");
        return v / (1.0 + weight * step);
    };
    g.prox_jvp = [weight](const Vector&, double step, const Vector& d) -> Vector {
        return d / (1.0 + weight * step);
    };
    g.min_value = 0.0;
    return g;
}

// ---------------------------------------------------------------------------
// Composite problems and the forward-backward operator
// ---------------------------------------------------------------------------

inline CompositeProblem make_composite(const Matrix& A, const Vector& b, ProxFriendly g,
                                       double l1_weight = 0.0) {
    CompositeProblem c;
    c.design = std::make_shared<const Matrix>(A);
    c.observations = b;
    c.regularizer = std::move(g);
    c.smooth_part = least_squares_problem(A, b);
    c.l1_weight = l1_weight;
    return c;
}

inline CompositeProblem lasso_problem(const Matrix& A, const Vector& b, double l1_weight) {
    CompositeProblem c = make_composite(A, b, l1_regularizer(l1_weight), l1_weight);
    return c;
}

namespace detail {

inline void require_fb_step(const CompositeProblem& composite, double mu) {
    const double lam = composite.cocoercivity();
    require(std::isfinite(mu) && mu > 0.0 && mu < 2.0 * lam,
            "forward-backward step mu must lie in (0, 2/|A|^2) = (0, " +
                std::to_string(2.0 * lam) + "), got " + std::to_string(mu));
}

}  // namespace detail

/// prox_{mu g}(y - mu A^T (A y - b)): the forward-backward point y_W.
inline Vector moreau_point(const CompositeProblem& composite, double mu, const Vector& y) {
    detail::require_fb_step(composite, mu);
    detail::require_dim(y.size(), composite.dim(), "moreau_point");
    return composite.regularizer.prox(y - mu * composite.smooth_part.gradient(y), mu);
}

/// f(y_W) with y_W the forward-backward point of y.
inline double moreau_value(const CompositeProblem& composite, double mu, const Vector& y) {
    return composite.value(moreau_point(composite, mu, y));
}

/// M(y) = (y - prox_{mu g}(y - mu A^T (A y - b))) / mu, rho = mu (1 - mu / (4 lambda)).
inline CocoerciveOperator forward_backward_operator(const CompositeProblem& composite, double mu) {
    detail::require_fb_step(composite, mu);
    const double lam = composite.cocoercivity();

    CocoerciveOperator m;
    m.name = "forward_backward";
    m.dim = composite.dim();
    m.rho = mu * (1.0 - mu / (4.0 * lam));
    m.apply = [composite, mu](const Vector& y) -> Vector {
        const Vector fwd = y - mu * composite.smooth_part.gradient(y);
        return (y - composite.regularizer.prox(fwd, mu)) / mu;
    };
    if (composite.regularizer.prox_jvp) {
        m.jvp = [composite, mu](const Vector& y, const Vector& d) -> Vector {
            const Vector fwd = y - mu * composite.smooth_part.gradient(y);
            const Vector dfwd = d - mu * composite.smooth_part.hess_vec(y, d);
            return (d - composite.regularizer.prox_jvp(fwd, mu, dfwd)) / mu;
        };
    }
    return m;
}

/// Gradient of a smooth problem viewed as a (1/L)-cocoercive operator.
inline CocoerciveOperator gradient_operator(const SmoothProblem& p) {
    detail::require(std::isfinite(p.lipschitz) && p.lipschitz > 0.0,
                    "gradient_operator: problem needs a positive Lipschitz bound");
    CocoerciveOperator m;
    m.name = "gradient_" + p.name;
    m.dim = p.dim;
    m.rho = 1.0 / p.lipschitz;
    m.apply = p.gradient;
    if (p.hess_vec) m.jvp = p.hess_vec;
    return m;
}

/// Identity map, 1-cocoercive.
inline CocoerciveOperator identity_operator(Eigen::Index n) {
    CocoerciveOperator m;
    m.name = "identity";
    m.dim = n;
    m.rho = 1.0;
    m.apply = [](const Vector& y) -> Vector { return y; };
    m.jvp = [](const Vector&, const Vector& d) -> Vector { return d; };
    return m;
}

struct FbOracleResult {
    Vector point;
    double value = kNaN;
    long iterations = 0;
};

/// Long forward-backward run at step 1/|A|^2; returns the final iterate and f.
///
/// Stops early once an iteration leaves the point unchanged to 1e-15
/// relative, which is the floating-point fixed point of the map.
inline FbOracleResult forward_backward_oracle(const CompositeProblem& composite,
                                              long max_iterations = 1000000) {
    const double mu = 1.0 / composite.lipschitz();
    Vector y = Vector::Zero(composite.dim());
    long it = 0;
    for (; it < max_iterations; ++it) {
        Vector next = composite.regularizer.prox(y - mu * composite.smooth_part.gradient(y), mu);
        const double move = (next - y).norm();
        y = std::move(next);
        if (move <= 1e-15 * (1.0 + y.norm())) break;
    }
    return {y, composite.value(y), it};
}

/// inf f for a composite, computed once per instance and cached.
inline double composite_min_value(const CompositeProblem& composite) {
    auto& cache = *composite.min_cache;
    std::call_once(cache.flag, [&] {
        FbOracleResult r = forward_backward_oracle(composite);
        cache.value = r.value;
        cache.point = r.point;
    });
    return cache.value;
}

inline Vector composite_minimizer(const CompositeProblem& composite) {
    composite_min_value(composite);
    return composite.min_cache->point;
}

/// The full composite objective h + g as a prox-friendly function.
///
/// Its prox solves argmin_u h(u) + g(u) + |u - v|^2 / (2 step) with a
/// restarted FISTA inner loop to `inner_tol` relative change.
inline ProxFriendly composite_as_prox(const CompositeProblem& composite, double inner_tol = 1e-14,
                                      int max_inner = 200000) {
    ProxFriendly f;
    f.name = "composite";
    f.value = [composite](const Vector& u) { return composite.value(u); };
    f.prox = [composite, inner_tol, max_inner](const Vector& v, double step) -> Vector {
        detail::require(step > 0.0, "prox: step must be positive");
        const double lip = composite.lipschitz() + 1.0 / step;
        const double eta = 1.0 / lip;
        auto grad = [&](const Vector& u) -> Vector {
            return composite.smooth_part.gradient(u) + (u - v) / step;
        };
        Vector u = v;
        Vector z = v;
        double t = 1.0;
        for (int it = 0; it < max_inner; ++it) {
            Vector next = composite.regularizer.prox(z - eta * grad(z), eta);
            const Vector delta = next - u;
            // Gradient-mapping restart keeps the iteration monotone.
            if ((z - next).dot(delta) > 0.0) {
                t = 1.0;
                z = u;
                continue;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            z = next + ((t - 1.0) / t_next) * delta;
            t = t_next;
            u = std::move(next);
            if (delta.norm() <= inner_tol * (1.0 + u.norm())) break;
        }
        return u;
    };
    f.min_value = composite_min_value(composite);
    return f;
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// A with N(0, 1/m) entries, b with N(0, 1) entries.
inline SmoothProblem random_least_squares(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix A = rng.normal_matrix(m, n) / std::sqrt(static_cast<double>(m));
    Vector b = rng.normal_vector(m);
    SmoothProblem p = least_squares_problem(A, b);
    p.name = "least_squares_" + std::to_string(m) + "x" + std::to_string(n);
    return p;
}

/// Q = B^T B / n + 0.01 I, c with N(0, 1) entries.
inline SmoothProblem random_quadratic(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix B = rng.normal_matrix(n, n);
    Matrix Q = B.transpose() * B / static_cast<double>(n);
    Q = 0.5 * (Q + Q.transpose()).eval();
    Q.diagonal().array() += 0.01;
    Vector c = rng.normal_vector(n);
    SmoothProblem p = quadratic_problem(Q, c);
    p.name = "quadratic_" + std::to_string(n);
    return p;
}

struct LassoData {
    Matrix A;
    Vector b;
    Vector signal;
};

/// A with N(0,1)/sqrt(m) entries, b = A x_true + 0.01 noise, x_true with
/// `support` nonzero N(0,1) entries at distinct random positions.
inline LassoData random_lasso_data(Eigen::Index m, Eigen::Index n, std::uint64_t seed,
                                   Eigen::Index support = 10) {
    detail::require(m > 0 && n > 0, "random_lasso_data: sizes must be positive");
    Rng rng(seed);
    LassoData d;
    d.A = rng.normal_matrix(m, n) / std::sqrt(static_cast<double>(m));
    d.signal = Vector::Zero(n);
    const Eigen::Index k = std::min(support, n);
    Eigen::Index placed = 0;
    while (placed < k) {
        const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        if (d.signal(j) != 0.0) continue;
        double v = rng.normal();
        if (v == 0.0) v = 1.0;
        d.signal(j) = v;
        ++placed;
    }
    d.b = d.A * d.signal + 0.01 * rng.normal_vector(m);
    return d;
}

inline CompositeProblem default_lasso(std::uint64_t seed = 42, Eigen::Index m = 50,
                                      Eigen::Index n = 100, double l1_weight = 0.1) {
    LassoData d = random_lasso_data(m, n, seed);
    return lasso_problem(d.A, d.b, l1_weight);
}

}  // namespace tsavg

#endif  // TSAVG_PROBLEMS_HPP
