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

#ifndef TSAVG_LINALG_HPP
#define TSAVG_LINALG_HPP

#include "tsavg/core.hpp"

namespace tsavg {

struct CgOptions {
    double rel_tol = 1e-12;
    int max_iter = 0;  // 0 selects 10 * dim
};

struct CgResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

/// Matrix-free conjugate gradient for a symmetric positive definite operator.
///
/// `apply(v)` returns the operator applied to v. The solution is written into
/// `x`, which also serves as the initial guess.
template <class Apply>
CgResult conjugate_gradient(const Apply& apply, const Vector& rhs, Vector& x,
                            CgOptions opts = {}) {
    const Eigen::Index n = rhs.size();
    if (x.size() != n) x = Vector::Zero(n);
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * n);

    CgResult out;
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        x.setZero();
        out.converged = true;
        return out;
    }

    // Solve for the unit right-hand side so tiny (subnormal) data do not
    // underflow the curvature p^T A p; rescale at the end.
    const Vector b = rhs / rhs_norm;
    Vector y = x / rhs_norm;
    Vector r = b - apply(y);
    Vector p = r;
    double rr = r.squaredNorm();
    int it = 0;
    for (; it < max_iter; ++it) {
        out.rel_residual = std::sqrt(rr);
        if (out.rel_residual <= opts.rel_tol) break;
        const Vector q = apply(p);
        const double pq = p.dot(q);
        if (!(pq > 0.0)) break;  // operator not positive definite along p
        const double step = rr / pq;
        y += step * p;
        r -= step * q;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
    }
    out.rel_residual = std::sqrt(rr);
    out.iterations = it;
    out.converged = out.rel_residual <= opts.rel_tol;
    x = rhs_norm * y;
    return out;
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
template <class Apply>
double power_iteration(const Apply& apply, Eigen::Index dim, int iterations = 50,
                       double tol = 1e-10) {
    Vector v = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = apply(v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / norm;
        if (it > 0 && std::abs(next - estimate) <= tol * std::max(1.0, std::abs(next))) {
            return next;
        }
        estimate = next;
    }
    return estimate;
}

/// ||A||_2^2, the Lipschitz constant of y -> A^T (A y - b).
inline double spectral_norm_squared(const Matrix& A, int iterations = 50, double tol = 1e-10) {
    return power_iteration([&](const Vector& v) -> Vector { return A.transpose() * (A * v); },
                           A.cols(), iterations, tol);
}

}  // namespace tsavg

#endif  // TSAVG_LINALG_HPP
