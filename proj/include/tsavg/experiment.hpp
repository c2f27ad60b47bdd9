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

#ifndef TSAVG_EXPERIMENT_HPP
#define TSAVG_EXPERIMENT_HPP

#include "tsavg/problem_io.hpp"
#include "tsavg/suites.hpp"
#include "tsavg/svg.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace tsavg {

/// Bad or inconsistent configuration, detected before anything runs.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitVerdictFailure = 1,
    kExitConfigError = 2,
    kExitDivergence = 3,
    kExitIoError = 4,
};

inline const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{"prox_averaging", "nesterov", "forward_backward"};
    return names;
}

/// Dynamics kinds, "operator_flow", and the algorithm names.
inline std::vector<std::string> experiment_kinds() {
    std::vector<std::string> out;
    for (DynamicsKind k : kAllDynamics) out.emplace_back(to_string(k));
    out.emplace_back("operator_flow");
    for (const auto& a : algorithm_names()) out.push_back(a);
    return out;
}

inline bool kind_uses_alpha(const std::string& kind) {
    return kind != "sd" && kind != "regularized_newton" && kind != "operator_flow" &&
           kind != "nesterov" && kind != "forward_backward";
}

inline bool kind_uses_lambda(const std::string& kind) {
    return kind == "regularized_newton" || kind == "combined";
}

inline bool kind_is_operator(const std::string& kind) {
    return kind == "cocoercive" || kind == "cocoercive_inertial" || kind == "operator_flow";
}

inline bool problem_is_composite(const ProblemSpec& p) {
    return p.type == "lasso" || p.type == "least_squares";
}

/// mu is the forward-backward step for operator kinds on composites and
/// forward_backward, and the gradient step for nesterov.
inline bool kind_uses_mu(const std::string& kind, const ProblemSpec& p) {
    return kind == "forward_backward" || kind == "nesterov" ||
           (kind_is_operator(kind) && problem_is_composite(p));
}

/// Suite whose analyzer applies to runs of `kind`; empty when none does.
inline std::string suite_for_kind(const std::string& kind) {
    if (kind == "perturbed_sd") return "thm1";
    if (kind == "isihd") return "thm2";
    if (kind == "explicit_hessian") return "thm3";
    if (kind == "regularized_newton") return "thm4";
    if (kind == "combined") return "thm5";
    if (kind == "bilevel" || kind == "general_damping") return "thm6";
    if (kind_is_operator(kind)) return "thm_cocoercive";
    if (kind == "prox_averaging" || kind == "nesterov") return "thm_prox";
    return "";
}

/// One experiment: a problem, a system or algorithm, and parameter sweeps.
///
/// JSON keys: name, problem, kind, alpha, lambda, mu (each a number or a
/// list), beta0, s0, horizon, step, record_every, iterations, x0, x1,
/// perturbation, out_dir, emit_svg. Absent mu means 1/L (0.9/L for nesterov).
struct ExperimentConfig {
    std::string name = "lasso";
    ProblemSpec problem;
    std::string kind = "cocoercive";
    std::vector<double> alphas{1.001, 2.0, 3.0, 5.0};
    std::vector<double> lambdas{1.0};
    std::vector<double> mus;
    double beta0 = 2.0;
    double s0 = 1.0;
    double horizon = 50.0;
    double step = 1e-3;
    int record_every = 10;
    int iterations = 2000;
    std::optional<Vector> x0;
    std::optional<Vector> x1;
    std::optional<Vector> perturbation;
    std::string out_dir;
    bool emit_svg = true;

    bool operator==(const ExperimentConfig& o) const {
        auto same = [](const std::optional<Vector>& a, const std::optional<Vector>& b) {
            if (a.has_value() != b.has_value()) return false;
            return !a || (a->size() == b->size() && *a == *b);
        };
        return name == o.name && problem == o.problem && kind == o.kind && alphas == o.alphas &&
               lambdas == o.lambdas && mus == o.mus && beta0 == o.beta0 && s0 == o.s0 &&
               horizon == o.horizon && step == o.step && record_every == o.record_every &&
               iterations == o.iterations && same(x0, o.x0) && same(x1, o.x1) &&
               same(perturbation, o.perturbation) && out_dir == o.out_dir &&
               emit_svg == o.emit_svg;
    }
};

inline constexpr std::size_t kMaxSweepPoints = 256;

namespace detail {

inline std::vector<double> number_list(const nlohmann::json& j, const char* what) {
    std::vector<double> out;
    if (j.is_number()) {
        out.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(std::string(what) + " must hold numbers");
            out.push_back(v.get<double>());
        }
    } else {
        throw ConfigError(std::string(what) + " must be a number or a list of numbers");
    }
    if (out.empty()) throw ConfigError(std::string(what) + " must not be empty");
    for (double v : out)
        if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
    return out;
}

inline Eigen::Index problem_dim(const ProblemSpec& p) { return p.A ? p.A->cols() : p.n; }

}  // namespace detail

/// Throws ConfigError on any inconsistency.
inline void validate(const ExperimentConfig& c) {
    const auto kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) {
        throw ConfigError("unknown kind '" + c.kind + "'");
    }
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("name must be a non-empty file-name stem");
    }
    for (double a : c.alphas)
        if (!(a > 1.0)) throw ConfigError("alpha must be > 1, got " + detail::format_double(a));
    for (double l : c.lambdas)
        if (!(l > 0.0)) throw ConfigError("lambda must be > 0");
    for (double m : c.mus)
        if (!(m > 0.0)) throw ConfigError("mu must be > 0");
    if (!(c.beta0 > 0.0)) throw ConfigError("beta0 must be > 0");
    if (!(c.s0 > 0.0) || !std::isfinite(c.s0)) throw ConfigError("s0 must be > 0");
    if (!(c.horizon >= c.s0) || !std::isfinite(c.horizon)) throw ConfigError("horizon must be >= s0");
    if (!(c.step > 0.0) || !std::isfinite(c.step)) throw ConfigError("step must be > 0");
    if (c.record_every < 1) throw ConfigError("record_every must be >= 1");
    if (c.iterations < 1) throw ConfigError("iterations must be >= 1");

    const bool composite = problem_is_composite(c.problem);
    const bool needs_composite = c.kind == "prox_averaging" || c.kind == "forward_backward";
    if (needs_composite && !composite) {
        throw ConfigError(c.kind + " needs a lasso or least_squares problem");
    }
    const bool smooth_only = !kind_is_operator(c.kind) && !needs_composite;
    if (smooth_only && c.problem.type == "lasso") {
        throw ConfigError(c.kind + " needs a smooth problem; lasso is nonsmooth");
    }
    const Eigen::Index n = detail::problem_dim(c.problem);
    for (const auto* v : {&c.x0, &c.x1, &c.perturbation}) {
        if (*v && (*v)->size() != n) {
            throw ConfigError("initial data must have the problem dimension " + std::to_string(n));
        }
    }
    const std::size_t points = (kind_uses_alpha(c.kind) ? c.alphas.size() : 1) *
                               (kind_uses_lambda(c.kind) ? c.lambdas.size() : 1) *
                               (kind_uses_mu(c.kind, c.problem) ? std::max<std::size_t>(1, c.mus.size()) : 1);
    if (points > kMaxSweepPoints) {
        throw ConfigError("sweep has " + std::to_string(points) + " points; the limit is " +
                          std::to_string(kMaxSweepPoints));
    }
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["problem"] = to_json(c.problem);
    j["kind"] = c.kind;
    j["alpha"] = c.alphas;
    j["lambda"] = c.lambdas;
    if (!c.mus.empty()) j["mu"] = c.mus;
    j["beta0"] = c.beta0;
    j["s0"] = c.s0;
    j["horizon"] = c.horizon;
    j["step"] = c.step;
    j["record_every"] = c.record_every;
    j["iterations"] = c.iterations;
    if (c.x0) j["x0"] = detail::vector_to_json(*c.x0);
    if (c.x1) j["x1"] = detail::vector_to_json(*c.x1);
    if (c.perturbation) j["perturbation"] = detail::vector_to_json(*c.perturbation);
    if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
    j["emit_svg"] = c.emit_svg;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> known{
        "name", "problem", "kind", "alpha", "lambda", "mu", "beta0", "s0", "horizon", "step",
        "record_every", "iterations", "x0", "x1", "perturbation", "out_dir", "emit_svg"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw ConfigError("unknown config key '" + k + "'");
        }
    }
    ExperimentConfig c;
    try {
        c.name = j.value("name", c.name);
        if (j.contains("problem")) c.problem = problem_spec_from_json(j["problem"]);
        c.kind = j.value("kind", c.kind);
        if (j.contains("alpha")) c.alphas = detail::number_list(j["alpha"], "alpha");
        if (j.contains("lambda")) c.lambdas = detail::number_list(j["lambda"], "lambda");
        if (j.contains("mu")) c.mus = detail::number_list(j["mu"], "mu");
        c.beta0 = j.value("beta0", c.beta0);
        c.s0 = j.value("s0", c.s0);
        c.horizon = j.value("horizon", c.horizon);
        c.step = j.value("step", c.step);
        c.record_every = j.value("record_every", c.record_every);
        c.iterations = j.value("iterations", c.iterations);
        if (j.contains("x0")) c.x0 = detail::vector_from_json(j["x0"], "x0");
        if (j.contains("x1")) c.x1 = detail::vector_from_json(j["x1"], "x1");
        if (j.contains("perturbation")) {
            c.perturbation = detail::vector_from_json(j["perturbation"], "perturbation");
        }
        c.out_dir = j.value("out_dir", c.out_dir);
        c.emit_svg = j.value("emit_svg", c.emit_svg);
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    validate(c);
    return c;
}

/// Reads and parses a config file. Unreadable files and bad JSON are
/// ConfigErrors too: nothing has run yet.
inline ExperimentConfig load_experiment_config(const std::string& path,
                                               const nlohmann::json& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (j.is_object() && overrides.is_object()) {
        for (const auto& [k, v] : overrides.items()) j[k] = v;
    }
    return experiment_config_from_json(j);
}

/// One combination of swept parameters. Unused axes are NaN.
struct SweepPoint {
    double alpha = kNaN;
    double lambda = kNaN;
    double mu = kNaN;  // NaN: default step

    std::string tag() const {
        std::ostringstream os;
        auto part = [&](const char* key, double v) {
            if (std::isnan(v)) return;
            if (os.tellp() > 0) os << '_';
            os << key << v;
        };
        part("a", alpha);
        part("lambda", lambda);
        part("mu", mu);
        return os.str();
    }
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
    const std::vector<double> none{kNaN};
    const auto& as = kind_uses_alpha(c.kind) ? c.alphas : none;
    const auto& ls = kind_uses_lambda(c.kind) ? c.lambdas : none;
    const auto& ms = kind_uses_mu(c.kind, c.problem) && !c.mus.empty() ? c.mus : none;
    std::vector<SweepPoint> out;
    for (double a : as)
        for (double l : ls)
            for (double m : ms) out.push_back(SweepPoint{a, l, m});
    return out;
}

/// Outputs of one sweep point.
struct PointResult {
    SweepPoint point;
    std::string stem;
    RateReport report;
    std::optional<Trajectory> trajectory;
    std::optional<IterateLog> log;
    std::optional<std::string> divergence;
    std::optional<std::string> io_error;
    double seconds = 0.0;
};

struct ExperimentResult {
    std::vector<PointResult> points;
    std::vector<std::string> files;  // written, relative to out_dir
    std::string out_dir;
    int exit_code = kExitOk;
};

namespace detail {

// Instance data built once per experiment and shared read-only by workers.
struct ExperimentContext {
    const ExperimentConfig& cfg;
    Eigen::Index n = 0;
    std::optional<SmoothProblem> smooth;
    std::optional<CompositeProblem> composite;
    double f_star = kNaN;
    Vector z_star;

    explicit ExperimentContext(const ExperimentConfig& c) : cfg(c) {
        n = problem_dim(c.problem);
        if (c.problem.type != "lasso") smooth = build_smooth(c.problem);
        if (problem_is_composite(c.problem)) {
            composite = build_composite(c.problem);
            if (kind_is_operator(c.kind) || c.kind == "prox_averaging" ||
                c.kind == "forward_backward") {
                f_star = composite_min_value(*composite);
                z_star = composite_minimizer(*composite);
            }
        }
    }

    bool quadratic_growth() const {
        return cfg.problem.type != "quartic" && cfg.problem.type != "lasso";
    }
};

// Systems stated in the original time t; the rest run in s.
inline const char* time_label(const std::string& kind) {
    return kind == "sd" || kind == "perturbed_sd" || kind == "regularized_newton" ||
                   kind == "bilevel" || kind == "operator_flow"
               ? "t"
               : "s";
}

inline std::string stem_for(const ExperimentConfig& c, const SweepPoint& p) {
    const std::string tag = p.tag();
    return c.name + "_" + c.kind + (tag.empty() ? "" : "_" + tag);
}

inline RunArtifacts experiment_run(const ExperimentContext& ctx, const SweepPoint& pt) {
    const ExperimentConfig& c = ctx.cfg;
    const Vector x0 = c.x0 ? *c.x0 : Vector::Zero(ctx.n);
    const Vector x1 = c.x1 ? *c.x1 : Vector::Zero(ctx.n);
    RunArtifacts r;
    r.label = c.problem.type + (std::isnan(pt.alpha) ? "" : "/" + alpha_tag(pt.alpha)) + "/" + c.kind;
    r.kind = c.kind;
    r.alpha = pt.alpha;
    r.s0 = c.s0;
    r.quadratic_growth = ctx.quadratic_growth();
    IntegrateOptions opts;
    opts.keep_step_log = false;

    if (c.kind == "prox_averaging") {
        ProxFriendly g = composite_as_prox(*ctx.composite);
        g.min_value = ctx.f_star;
        r.minimizer = ctx.z_star;
        r.log = prox_averaging(g, pt.alpha, c.iterations, x0, x0);
        return r;
    }
    if (c.kind == "forward_backward") {
        const double mu = std::isnan(pt.mu) ? 1.0 / ctx.composite->lipschitz() : pt.mu;
        r.log = forward_backward(*ctx.composite, mu, c.iterations, x0, ctx.f_star);
        return r;
    }
    if (c.kind == "nesterov") {
        const SmoothProblem& p = *ctx.smooth;
        r.lambda_step = std::isnan(pt.mu) ? 0.9 / p.lipschitz : pt.mu;
        r.lipschitz = p.lipschitz;
        r.log = nesterov(p, r.lambda_step, c.iterations, x0);
        return r;
    }
    if (kind_is_operator(c.kind)) {
        CocoerciveOperator M;
        std::function<double(const Vector&)> gap;
        if (ctx.composite) {
            const double mu = std::isnan(pt.mu) ? 1.0 / ctx.composite->lipschitz() : pt.mu;
            M = forward_backward_operator(*ctx.composite, mu);
            const CompositeProblem comp = *ctx.composite;
            const double fs = ctx.f_star;
            gap = [comp, mu, fs](const Vector& y) { return moreau_value(comp, mu, y) - fs; };
        } else {
            const SmoothProblem p = *ctx.smooth;
            M = gradient_operator(p);
            if (p.gap || p.min_value) gap = [p](const Vector& y) { return p.value_gap(y); };
            r.argmin_distance = p.argmin_distance;
        }
        if (c.kind == "operator_flow") {
            r.trajectory = integrate(operator_flow_field(M, gap), x0, c.s0, c.horizon, c.step,
                                     c.record_every, opts);
            return r;
        }
        const Vector c0 = first_integral_constant(M.apply(x0), pt.alpha, c.s0, x1);
        if (c.kind == "cocoercive") {
            r.trajectory = integrate(cocoercive_system(M, pt.alpha, c0, gap), x0, c.s0, c.horizon,
                                     c.step, c.record_every, opts);
            return r;
        }
        if (!M.jvp) throw ConfigError("cocoercive_inertial needs an operator with a jvp");
        ConservationParams cp;
        cp.alpha = pt.alpha;
        cp.s0 = c.s0;
        cp.c0 = c0;
        cp.G = M.apply;
        r.conservation = cp;
        r.trajectory = integrate(cocoercive_inertial_system(M, pt.alpha, gap), stack(x0, x1), c.s0,
                                 c.horizon, c.step, c.record_every, opts);
        return r;
    }

    const SmoothProblem& p = *ctx.smooth;
    r.argmin_distance = p.argmin_distance;
    DynamicsSpec ds;
    ds.kind = dynamics_kind_from_string(c.kind);
    ds.alpha = std::isnan(pt.alpha) ? 2.0 : pt.alpha;
    ds.lambda = std::isnan(pt.lambda) ? 1.0 : pt.lambda;
    ds.beta0 = c.beta0;
    ds.s0 = c.s0;
    ds.horizon = c.horizon;
    ds.initial_position = x0;
    ds.initial_velocity = x1;
    if (c.perturbation) ds.perturbation = *c.perturbation;
    if (ds.kind == DynamicsKind::explicit_hessian) {
        ConservationParams cp;
        cp.alpha = ds.alpha;
        cp.s0 = c.s0;
        cp.c0 = first_integral_constant(p.gradient(x0), ds.alpha, c.s0, x1);
        cp.G = p.gradient;
        r.conservation = cp;
    }
    r.trajectory = integrate(make_field(ds, p), ds, c.step, c.record_every, opts);
    return r;
}

// Report for kinds no theorem suite covers: the fitted gap exponent only.
inline RateReport observational_report(const RunArtifacts& run) {
    RateReport rep;
    rep.suite = "none";
    std::vector<double> t, v;
    if (run.trajectory && run.trajectory->has_channel("value_gap")) {
        t = run.trajectory->times;
        v = run.trajectory->channel("value_gap");
    } else if (run.log) {
        auto [k, g] = IterateLog::defined(run.log->f_y_gap, 1);
        t = std::move(k);
        v = std::move(g);
    }
    if (!t.empty()) {
        const std::optional<double> e = rate_fit(t, v);
        rep.exponents[run.label + "/value_gap_exponent"] = e;
        rep.fitted_exponent = e;
    }
    return rep;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw OutputError("write to '" + path.string() + "' failed");
}

inline PointResult run_point(const ExperimentContext& ctx, const SweepPoint& pt,
                             const std::filesystem::path& dir) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    PointResult res;
    res.point = pt;
    res.stem = stem_for(ctx.cfg, pt);
    RunArtifacts run;
    try {
        run = experiment_run(ctx, pt);
    } catch (const DivergenceError& e) {
        res.divergence = std::string("diverged: ") + e.what();
    } catch (const StiffnessError& e) {
        res.divergence = std::string("stiff: ") + e.what();
    }
    if (res.divergence) {
        run.label = res.stem;
        run.kind = ctx.cfg.kind;
        run.failure = res.divergence;
        const std::string suite = suite_for_kind(ctx.cfg.kind);
        res.report = theorem_suite(suite.empty() ? "thm1" : suite, {run});
        if (suite.empty()) res.report.suite = "none";
    } else {
        const std::string suite = suite_for_kind(ctx.cfg.kind);
        res.report = suite.empty() ? observational_report(run) : theorem_suite(suite, {run});
    }
    try {
        if (run.trajectory) {
            std::ostringstream os;
            write_csv(os, *run.trajectory, time_label(ctx.cfg.kind));
            write_text(dir / (res.stem + ".csv"), os.str());
        } else if (run.log) {
            std::ostringstream os;
            write_csv(os, *run.log);
            write_text(dir / (res.stem + ".csv"), os.str());
        }
        write_text(dir / (res.stem + ".report.json"), to_json(res.report).dump(2) + "\n");
    } catch (const OutputError& e) {
        res.io_error = e.what();
    }
    res.trajectory = std::move(run.trajectory);
    res.log = std::move(run.log);
    res.seconds = std::chrono::duration<double>(clock::now() - start).count();
    return res;
}

struct PlotData {
    std::string x_label;
    std::vector<double> x, y;
};

inline std::optional<PlotData> gap_curve(const PointResult& r, const std::string& kind) {
    if (r.trajectory) {
        for (const char* ch : {"value_gap", "psi_gap", "y_value_gap"}) {
            if (r.trajectory->has_channel(ch)) {
                return PlotData{time_label(kind), r.trajectory->times, r.trajectory->channel(ch)};
            }
        }
    } else if (r.log) {
        auto [k, g] = IterateLog::defined(r.log->f_y_gap);
        if (!k.empty()) return PlotData{"k", std::move(k), std::move(g)};
    }
    return std::nullopt;
}

inline std::optional<std::pair<std::string, PlotData>> norm_curve(const PointResult& r,
                                                                  const std::string& kind) {
    if (r.trajectory) {
        for (const char* ch : {"m_norm", "grad_norm", "y_grad_norm", "w_norm", "velocity_norm"}) {
            if (r.trajectory->has_channel(ch)) {
                return std::make_pair(std::string(ch),
                                      PlotData{time_label(kind), r.trajectory->times,
                                               r.trajectory->channel(ch)});
            }
        }
    } else if (r.log) {
        auto [k, g] = IterateLog::defined(r.log->res_norm);
        if (!k.empty()) return std::make_pair(std::string("res_norm"), PlotData{"k", k, g});
    }
    return std::nullopt;
}

}  // namespace detail

/// Output directory: explicit value, then config, then TSAVG_OUT_DIR, then
/// "tsavg_out".
inline std::string resolve_out_dir(const ExperimentConfig& c, const std::string& flag = "") {
    if (!flag.empty()) return flag;
    if (!c.out_dir.empty()) return c.out_dir;
    if (const char* env = std::getenv("TSAVG_OUT_DIR"); env && *env) return env;
    return "tsavg_out";
}

/// Runs every sweep point (up to `jobs` at once) and writes per point
/// `<stem>.csv` and `<stem>.report.json`, plus `<name>_value_gap.svg` and
/// `<name>_<norm channel>.svg` when emit_svg is set.
///
/// Exit code: 4 on any write failure, else 3 if a point diverged, else 1
/// if a hard verdict failed, else 0. Config problems throw ConfigError.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1,
                                       const std::string& out_flag = "",
                                       std::ostream* progress = nullptr) {
    validate(cfg);
    ExperimentResult result;
    result.out_dir = resolve_out_dir(cfg, out_flag);
    const std::filesystem::path dir(result.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        result.exit_code = kExitIoError;
        if (progress) *progress << "cannot create output directory '" << dir.string() << "'\n";
        return result;
    }

    std::optional<detail::ExperimentContext> ctx;
    try {
        ctx.emplace(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const std::vector<SweepPoint> points = sweep_points(cfg);
    result.points.resize(points.size());

    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                result.points[i] = detail::run_point(*ctx, points[i], dir);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    bool diverged = false, io = false, hard_fail = false;
    for (const PointResult& r : result.points) {
        if (r.trajectory || r.log) result.files.push_back(r.stem + ".csv");
        result.files.push_back(r.stem + ".report.json");
        diverged = diverged || r.divergence.has_value();
        io = io || r.io_error.has_value();
        hard_fail = hard_fail || !r.report.passed();
        if (progress) {
            *progress << r.stem << ": "
                      << (r.io_error      ? "write failed (" + *r.io_error + ")"
                          : r.divergence  ? *r.divergence
                          : r.report.passed() ? std::string("ok")
                                              : std::string("hard verdict failures"))
                      << '\n';
        }
    }

    if (cfg.emit_svg) {
        SvgPlot gaps, norms;
        gaps.title = cfg.name + ": value gap (log scale)";
        gaps.y_label = "value gap";
        std::string norm_channel;
        for (const PointResult& r : result.points) {
            const std::string label = r.point.tag().empty() ? cfg.kind : r.point.tag();
            if (auto g = detail::gap_curve(r, cfg.kind)) {
                gaps.x_label = g->x_label;
                gaps.series.push_back(SvgSeries{label, std::move(g->x), std::move(g->y)});
            }
            if (auto nc = detail::norm_curve(r, cfg.kind)) {
                norm_channel = nc->first;
                norms.x_label = nc->second.x_label;
                norms.series.push_back(
                    SvgSeries{label, std::move(nc->second.x), std::move(nc->second.y)});
            }
        }
        norms.title = cfg.name + ": " + norm_channel + " (log scale)";
        norms.y_label = norm_channel;
        try {
            if (!gaps.series.empty()) {
                detail::write_text(dir / (cfg.name + "_value_gap.svg"), render_svg(gaps));
                result.files.push_back(cfg.name + "_value_gap.svg");
            }
            if (!norms.series.empty()) {
                const std::string f = cfg.name + "_" + norm_channel + ".svg";
                detail::write_text(dir / f, render_svg(norms));
                result.files.push_back(f);
            }
        } catch (const OutputError& e) {
            io = true;
            if (progress) *progress << e.what() << '\n';
        }
    }
    result.exit_code = io ? kExitIoError : diverged ? kExitDivergence
                                        : hard_fail ? kExitVerdictFailure
                                                    : kExitOk;
    return result;
}

}  // namespace tsavg

#endif  // TSAVG_EXPERIMENT_HPP
