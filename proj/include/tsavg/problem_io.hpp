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

#ifndef TSAVG_PROBLEM_IO_HPP
#define TSAVG_PROBLEM_IO_HPP

#include "tsavg/problems.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace tsavg {

/// Serializable description of a problem instance.
///
/// JSON form: {"type": "least_squares"|"quadratic"|"lasso"|"quartic",
/// "A": [[...]], "b": [...], "l1_weight": w, "seed": s, "m": m, "n": n}.
/// For "quadratic", A holds Q and b holds c. When A is absent the instance is
/// drawn from `seed` (see Rng for the generator).
struct ProblemSpec {
    std::string type = "lasso";
    std::optional<Matrix> A;
    std::optional<Vector> b;
    double l1_weight = 0.1;
    std::uint64_t seed = 42;
    Eigen::Index m = 50;
    Eigen::Index n = 100;

    bool operator==(const ProblemSpec& o) const {
        auto same_m = [](const std::optional<Matrix>& x, const std::optional<Matrix>& y) {
            if (x.has_value() != y.has_value()) return false;
            return !x || (x->rows() == y->rows() && x->cols() == y->cols() && *x == *y);
        };
        auto same_v = [](const std::optional<Vector>& x, const std::optional<Vector>& y) {
            if (x.has_value() != y.has_value()) return false;
            return !x || (x->size() == y->size() && *x == *y);
        };
        return type == o.type && same_m(A, o.A) && same_v(b, o.b) && l1_weight == o.l1_weight &&
               seed == o.seed && m == o.m && n == o.n;
    }
};

namespace detail {

inline nlohmann::json vector_to_json(const Vector& v) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

inline Vector vector_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw std::invalid_argument(std::string(what) + " must be numeric");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vector_to_json(m.row(r).transpose()));
    return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw std::invalid_argument(std::string(what) + " must be a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        Vector row = vector_from_json(j[static_cast<std::size_t>(r)], what);
        if (row.size() != cols) throw std::invalid_argument(std::string(what) + " is ragged");
        m.row(r) = row.transpose();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json to_json(const ProblemSpec& spec) {
    nlohmann::json j;
    j["type"] = spec.type;
    if (spec.A) j["A"] = detail::matrix_to_json(*spec.A);
    if (spec.b) j["b"] = detail::vector_to_json(*spec.b);
    j["l1_weight"] = spec.l1_weight;
    j["seed"] = spec.seed;
    j["m"] = spec.m;
    j["n"] = spec.n;
    return j;
}

inline ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("problem must be a JSON object");
    ProblemSpec spec;
    spec.type = j.value("type", std::string("lasso"));
    if (spec.type != "least_squares" && spec.type != "quadratic" && spec.type != "lasso" &&
        spec.type != "quartic") {
        throw std::invalid_argument("unknown problem type '" + spec.type + "'");
    }
    if (j.contains("A")) spec.A = detail::matrix_from_json(j["A"], "A");
    if (j.contains("b")) spec.b = detail::vector_from_json(j["b"], "b");
    spec.l1_weight = j.value("l1_weight", 0.1);
    spec.seed = j.value("seed", std::uint64_t{42});
    spec.m = j.value("m", Eigen::Index{50});
    spec.n = j.value("n", Eigen::Index{100});
    if (spec.A.has_value() != spec.b.has_value()) {
        throw std::invalid_argument("problem: A and b must be given together");
    }
    if (spec.A) {
        spec.m = spec.A->rows();
        spec.n = spec.A->cols();
    }
    if (spec.l1_weight < 0.0) throw std::invalid_argument("problem: l1_weight must be >= 0");
    if (spec.m <= 0 || spec.n <= 0 || spec.n > 500) {
        throw std::invalid_argument("problem: sizes must satisfy 0 < m and 0 < n <= 500");
    }
    return spec;
}

/// Smooth objective of a ProblemSpec; for "lasso" this is the 1/2|Ay-b|^2 part.
inline SmoothProblem build_smooth(const ProblemSpec& spec) {
    if (spec.type == "quartic") return quartic_problem(spec.n);
    if (spec.type == "quadratic") {
        if (spec.A) return quadratic_problem(*spec.A, *spec.b);
        return random_quadratic(spec.n, spec.seed);
    }
    if (spec.A) return least_squares_problem(*spec.A, *spec.b);
    if (spec.type == "lasso") {
        LassoData d = random_lasso_data(spec.m, spec.n, spec.seed);
        return least_squares_problem(d.A, d.b);
    }
    return random_least_squares(spec.m, spec.n, spec.seed);
}

/// Composite view: lasso carries an l1 regularizer, least_squares a zero one.
inline CompositeProblem build_composite(const ProblemSpec& spec) {
    if (spec.type != "lasso" && spec.type != "least_squares") {
        throw std::invalid_argument("problem type '" + spec.type + "' has no composite form");
    }
    Matrix A;
    Vector b;
    if (spec.A) {
        A = *spec.A;
        b = *spec.b;
    } else if (spec.type == "lasso") {
        LassoData d = random_lasso_data(spec.m, spec.n, spec.seed);
        A = std::move(d.A);
        b = std::move(d.b);
    } else {
        Rng rng(spec.seed);
        A = rng.normal_matrix(spec.m, spec.n) / std::sqrt(static_cast<double>(spec.m));
        b = rng.normal_vector(spec.m);
    }
    if (spec.type == "lasso") return lasso_problem(A, b, spec.l1_weight);
    return make_composite(A, b, zero_regularizer());
}

}  // namespace tsavg

#endif  // TSAVG_PROBLEM_IO_HPP
