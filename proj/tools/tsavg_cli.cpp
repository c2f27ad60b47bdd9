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

// tsavg command-line tool: run experiments, the verify battery, and list
// what is available.

#include "tsavg/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct Entry {
    std::string name;
    std::string tag;
};

std::vector<Entry> dynamics_entries() {
    std::vector<Entry> out;
    for (tsavg::DynamicsKind k : tsavg::kAllDynamics) {
        out.push_back({tsavg::to_string(k), tsavg::equation(k)});
    }
    out.push_back({"operator_flow", "z' = -M(z)"});
    return out;
}

std::vector<Entry> algorithm_entries() {
    return {
        {"prox_averaging",
         "y_{k+1} = prox_{(s_{k+1}/(alpha-1)) g}(y_k); "
         "x_{k+1} = (1 - (alpha-1)/s_{k+1}) x_k + ((alpha-1)/s_{k+1}) y_{k+1}"},
        {"nesterov", "y_k = x_k + alpha_k (x_k - x_{k-1}); x_{k+1} = y_k - lambda grad f(y_k)"},
        {"forward_backward", "y_{k+1} = prox_{mu g}(y_k - mu A^T (A y_k - b))"},
    };
}

std::vector<Entry> problem_entries() {
    return {
        {"least_squares", "1/2 |A x - b|^2"},
        {"quadratic", "1/2 x^T Q x - c^T x, Q PSD"},
        {"lasso", "1/2 |A y - b|^2 + w |y|_1"},
        {"quartic", "1/4 sum_i x_i^4"},
    };
}

std::vector<Entry> suite_entries() {
    return {
        {"thm1", "perturbed_sd: integrability and t-weighted value gap"},
        {"thm2", "isihd: s^2 |grad f(y)|, s |x'|, s^2 value gap, trajectory limit"},
        {"thm3", "explicit_hessian: weighted integrals, s^2 value gap, first integral"},
        {"thm4", "regularized_newton: integrals, t-weighted gap/gradient/velocity, monotonicity"},
        {"thm5", "combined: s^2 |w|, s |x'|, s^2 value gap"},
        {"thm6", "bilevel and general_damping (beta0 = 2): t psi gap, Phi, s |x'|"},
        {"thm_prox", "prox_averaging and nesterov: rates in k, telescoped bounds, energy"},
        {"thm_cocoercive", "cocoercive, cocoercive_inertial, operator_flow: s |M(y)|, integrals"},
    };
}

int cmd_list(bool as_json) {
    const std::vector<std::pair<std::string, std::vector<Entry>>> groups{
        {"dynamics", dynamics_entries()},
        {"algorithms", algorithm_entries()},
        {"problems", problem_entries()},
        {"suites", suite_entries()},
    };
    if (as_json) {
        json j = json::object();
        for (const auto& [group, entries] : groups) {
            json arr = json::array();
            for (const auto& e : entries) arr.push_back({{"name", e.name}, {"tag", e.tag}});
            j[group] = arr;
        }
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    for (const auto& [group, entries] : groups) {
        std::cout << group << ":\n";
        for (const auto& e : entries) {
            std::cout << "  " << e.name << std::string(e.name.size() < 20 ? 20 - e.name.size() : 1, ' ')
                      << e.tag << '\n';
        }
    }
    return 0;
}

json parse_overrides(const std::vector<std::string>& sets) {
    json o = json::object();
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw tsavg::ConfigError("--set expects key=value, got '" + s + "'");
        }
        const std::string key = s.substr(0, eq);
        const std::string val = s.substr(eq + 1);
        try {
            o[key] = json::parse(val);
        } catch (const json::parse_error&) {
            o[key] = val;  // bare strings
        }
    }
    return o;
}

int cmd_run(const std::string& path, int jobs, const std::string& out,
            const std::vector<std::string>& sets) {
    tsavg::ExperimentConfig cfg;
    try {
        cfg = tsavg::load_experiment_config(path, parse_overrides(sets));
    } catch (const tsavg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return tsavg::kExitConfigError;
    }
    try {
        const tsavg::ExperimentResult r = tsavg::run_experiment(cfg, jobs, out, &std::cout);
        std::cout << "wrote " << r.files.size() << " files to " << r.out_dir << '\n';
        return r.exit_code;
    } catch (const tsavg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return tsavg::kExitConfigError;
    } catch (const tsavg::OutputError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return tsavg::kExitIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return tsavg::kExitConfigError;
    }
}

int cmd_verify(const std::vector<std::string>& selector, const std::string& flip) {
    try {
        const tsavg::VerifyResult r =
            tsavg::verify(selector, tsavg::default_test_matrix(), flip, &std::cout);
        return r.passed() ? tsavg::kExitOk : tsavg::kExitVerdictFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "verify: " << e.what() << '\n';
        return tsavg::kExitConfigError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsavg: time scaling and averaging of gradient dynamics"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment config");
    std::string config_path, out_dir;
    int jobs = 1;
    std::vector<std::string> sets;
    run->add_option("config", config_path, "Experiment JSON")->required();
    run->add_option("--jobs,-j", jobs, "Sweep points run concurrently")
        ->check(CLI::PositiveNumber);
    run->add_option("--out,-o", out_dir, "Output directory (default: $TSAVG_OUT_DIR or tsavg_out)");
    run->add_option("--set", sets, "Override a top-level config field, key=json");

    auto* ver = app.add_subcommand("verify", "Run theorem suites on the built-in test matrix");
    std::vector<std::string> selector;
    std::string flip;
    ver->add_option("suites", selector, "Suites to run (default: all)");
    ver->add_option("--inject-sign-flip", flip)->group("");

    auto* list = app.add_subcommand("list", "List dynamics, algorithms, problems and suites");
    bool as_json = false;
    list->add_flag("--json", as_json, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tsavg::kExitConfigError;
    }
    if (*run) return cmd_run(config_path, jobs, out_dir, sets);
    if (*ver) return cmd_verify(selector, flip);
    return cmd_list(as_json);
}
