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

#ifndef TSAVG_CORE_HPP
#define TSAVG_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace tsavg {

using Vector = Eigen::VectorXd;
// Dense, row-major storage for design matrices and quadratic forms.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when an integration produces a non-finite or exploding state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double last_finite_time)
        : std::runtime_error(what), last_finite_time_(last_finite_time) {}

    double last_finite_time() const noexcept { return last_finite_time_; }

private:
    double last_finite_time_;
};

/// Raised when an inner linear solve fails to converge (stiff Newton-type fields).
class StiffnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_alpha(double alpha) {
    require(std::isfinite(alpha) && alpha > 1.0,
            "alpha must be > 1 (got " + std::to_string(alpha) + ")");
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(got) + " vs " + std::to_string(want) + ")");
    }
}

// Shortest round-trip decimal form; 17 significant digits always suffice.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace tsavg

#endif  // TSAVG_CORE_HPP
