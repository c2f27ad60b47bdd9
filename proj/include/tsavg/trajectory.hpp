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

#ifndef TSAVG_TRAJECTORY_HPP
#define TSAVG_TRAJECTORY_HPP

#include "tsavg/core.hpp"

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

namespace tsavg {

struct IntegrationStats {
    std::size_t accepted_steps = 0;
    std::size_t halved_steps = 0;  // steps taken below the nominal size
    double min_step = kInf;
    double max_step = 0.0;
    std::vector<double> step_log;  // every accepted step size, in order
};

/// Sampled solution of an ODE: times, states, and derived scalar channels.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<std::string> state_labels;  // one per state component
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;  // channels[c][i] at times[i]
    IntegrationStats stats;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double front_time() const { return times.front(); }
    double back_time() const { return times.back(); }

    bool has_channel(const std::string& name) const {
        return std::find(channel_names.begin(), channel_names.end(), name) != channel_names.end();
    }

    const std::vector<double>& channel(const std::string& name) const {
        auto it = std::find(channel_names.begin(), channel_names.end(), name);
        if (it == channel_names.end()) {
            throw std::invalid_argument("trajectory has no channel '" + name + "'");
        }
        return channels[static_cast<std::size_t>(it - channel_names.begin())];
    }

    void add_channel(const std::string& name, std::vector<double> values) {
        detail::require(values.size() == times.size(), "channel length must match the grid");
        detail::require(!has_channel(name), "duplicate channel '" + name + "'");
        channel_names.push_back(name);
        channels.push_back(std::move(values));
    }

    /// Component block [offset, offset + len) of every state.
    std::vector<Vector> block(Eigen::Index offset, Eigen::Index len) const {
        std::vector<Vector> out;
        out.reserve(states.size());
        for (const auto& s : states) out.push_back(s.segment(offset, len));
        return out;
    }

    /// Throws unless times strictly increase and every channel matches the grid.
    void validate() const {
        detail::require(states.size() == times.size(), "states/times length mismatch");
        for (std::size_t i = 1; i < times.size(); ++i) {
            detail::require(times[i] > times[i - 1], "trajectory times must strictly increase");
        }
        detail::require(channels.size() == channel_names.size(), "channel name count mismatch");
        for (const auto& c : channels) {
            detail::require(c.size() == times.size(), "channel length must match the grid");
        }
    }
};

inline std::vector<std::string> block_labels(const std::vector<std::string>& blocks,
                                             Eigen::Index block_dim) {
    std::vector<std::string> out;
    for (const auto& b : blocks)
        for (Eigen::Index i = 0; i < block_dim; ++i) out.push_back(b + "_" + std::to_string(i));
    return out;
}

namespace detail {

// Index i with grid[i] <= t <= grid[i+1]; grid increasing, t inside the range.
inline std::size_t bracket(const std::vector<double>& grid, double t) {
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    if (i + 1 >= grid.size()) i = grid.size() >= 2 ? grid.size() - 2 : 0;
    return i;
}

inline void require_in_range(const std::vector<double>& grid, double t, const char* what) {
    const double slack = 1e-12 * std::max(1.0, std::abs(grid.back()));
    if (grid.empty() || t < grid.front() - slack || t > grid.back() + slack) {
        throw std::invalid_argument(std::string(what) + ": time " + format_double(t) +
                                    " outside the stored range");
    }
}

}  // namespace detail

/// Piecewise-linear state at time t.
inline Vector interpolate_state(const Trajectory& traj, double t) {
    detail::require_in_range(traj.times, t, "interpolate_state");
    if (traj.size() == 1) return traj.states.front();
    const std::size_t i = detail::bracket(traj.times, t);
    const double t0 = traj.times[i], t1 = traj.times[i + 1];
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    return (1.0 - w) * traj.states[i] + w * traj.states[i + 1];
}

inline double interpolate_series(const std::vector<double>& grid, const std::vector<double>& vals,
                                 double t) {
    detail::require_in_range(grid, t, "interpolate_series");
    if (grid.size() == 1) return vals.front();
    const std::size_t i = detail::bracket(grid, t);
    const double w = std::clamp((t - grid[i]) / (grid[i + 1] - grid[i]), 0.0, 1.0);
    return (1.0 - w) * vals[i] + w * vals[i + 1];
}

/// CSV: header `<time_label>,<state labels>,<channel names>`, one row per
/// sample, every number printed with 17 significant digits.
inline void write_csv(std::ostream& os, const Trajectory& traj, const std::string& time_label = "s") {
    os << time_label;
    for (const auto& l : traj.state_labels) os << ',' << l;
    for (const auto& c : traj.channel_names) os << ',' << c;
    os << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << detail::format_double(traj.times[i]);
        for (Eigen::Index k = 0; k < traj.states[i].size(); ++k) {
            os << ',' << detail::format_double(traj.states[i](k));
        }
        for (const auto& c : traj.channels) os << ',' << detail::format_double(c[i]);
        os << '\n';
    }
}

}  // namespace tsavg

#endif  // TSAVG_TRAJECTORY_HPP
