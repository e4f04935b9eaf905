/*
 Copyright 2026 The thruster-biped Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef BIPED_IO_HPP
#define BIPED_IO_HPP

// Output files of a run. All files are first written next to their final
// name with a ".partial" suffix and renamed once every file succeeded; on
// failure the partial files are removed and nothing is left behind.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "biped/config.hpp"
#include "biped/errors.hpp"
#include "biped/plot.hpp"
#include "biped/walk.hpp"

namespace biped {

inline constexpr const char* kTraceColumns =
    "t,phase,q1,q2,q3,ph_x,ph_y,dq1,dq2,dq3,dph_x,dph_y,u2,u3,F_th,lamT1,lamN1,lamT2,lamN2,"
    "y1,y2,dy1,dy2,V,Gamma,w1,w2,s";

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Shortest text that reads back to the same double; fixed across platforms
// for a given value, which keeps traces bit-identical between runs.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string trace_row(const LogRow& r) {
    std::string s;
    s.reserve(400);
    auto put = [&](double v) {
        s += ',';
        s += detail::fmt(v);
    };
    s += detail::fmt(r.t);
    s += ',';
    s += to_string(r.phase);
    for (int i = 0; i < 3; ++i) put(r.q(i));
    for (int i = 0; i < 2; ++i) put(r.ph(i));
    for (int i = 0; i < 3; ++i) put(r.dq(i));
    for (int i = 0; i < 2; ++i) put(r.dph(i));
    put(r.u(0));
    put(r.u(1));
    put(r.F_th);
    for (int i = 0; i < 4; ++i) put(r.lambda(i));
    for (int i = 0; i < 2; ++i) put(r.y(i));
    for (int i = 0; i < 2; ++i) put(r.dy(i));
    put(r.V);
    put(r.Gamma);
    put(r.w(0));
    put(r.w(1));
    put(r.s);
    return s;
}

/// trace.csv contents; keeps rows whose index is a multiple of `decimation`,
/// i.e. ceil(rows / decimation) of them.
inline std::string trace_csv(const GaitLog& log, int decimation = 1) {
    if (decimation < 1) throw InvalidArgument("trace_csv: decimation must be at least 1");
    std::string out = kTraceColumns;
    out += '\n';
    for (size_t i = 0; i < log.rows.size(); i += static_cast<size_t>(decimation)) {
        out += trace_row(log.rows[i]);
        out += '\n';
    }
    return out;
}

inline std::string steps_csv(const std::vector<StepMetrics>& m) {
    std::string out =
        "step,t_start,ss_duration,residual_ss_start,residual_post_impact,residual_ds_exit,gait_diff,"
        "max_abs_u,max_y,min_lambda_N,max_ratio,peak_lambda_N_ds,peak_thrust,contact_violations,"
        "saturated_samples,qp_failures,min_gamma_minus_V\n";
    for (const StepMetrics& s : m) {
        out += std::to_string(s.step);
        for (double v : {s.t_start, s.ss_duration, s.residual_ss_start, s.residual_post_impact, s.residual_ds_exit,
                         s.gait_diff, s.max_abs_u, s.max_y, s.min_lambda_N, s.max_ratio, s.peak_lambda_N_ds,
                         s.peak_thrust})
            out += ',' + detail::fmt(v);
        out += ',' + std::to_string(s.contact_violations);
        out += ',' + std::to_string(s.saturated_samples);
        out += ',' + std::to_string(s.qp_failures);
        out += ',' + detail::fmt(s.min_gamma_minus_V) + '\n';
    }
    return out;
}

inline std::string summary_text(const GaitLog& log, const std::vector<StepMetrics>& m) {
    std::ostringstream o;
    o << "status: " << to_string(log.status) << "\n";
    if (!log.message.empty()) o << "message: " << log.message << "\n";
    o << "steps_completed: " << log.steps_completed << "\n";
    o << "samples: " << log.rows.size() << "\n";
    double min_n = INFINITY, max_ratio = 0, peak_n = 0, peak_f = 0, max_u = 0, max_y = 0, gmv = INFINITY;
    int viol = 0, qpf = 0, sat = 0;
    for (const StepMetrics& s : m) {
        min_n = std::min(min_n, s.min_lambda_N);
        max_ratio = std::max(max_ratio, s.max_ratio);
        peak_n = std::max(peak_n, s.peak_lambda_N_ds);
        peak_f = std::max(peak_f, s.peak_thrust);
        max_u = std::max(max_u, s.max_abs_u);
        max_y = std::max(max_y, s.max_y);
        gmv = std::min(gmv, s.min_gamma_minus_V);
        viol += s.contact_violations;
        qpf += s.qp_failures;
        sat += s.saturated_samples;
    }
    o << "min_lambda_N: " << detail::fmt(min_n) << "\n";
    o << "max_friction_ratio: " << detail::fmt(max_ratio) << "\n";
    o << "peak_lambda_N_ds: " << detail::fmt(peak_n) << "\n";
    o << "peak_thrust: " << detail::fmt(peak_f) << "\n";
    o << "max_abs_u_ss: " << detail::fmt(max_u) << "\n";
    o << "max_output_error: " << detail::fmt(max_y) << "\n";
    o << "min_gamma_minus_V: " << detail::fmt(gmv) << "\n";
    o << "contact_violations: " << viol << "\n";
    o << "qp_failures: " << qpf << "\n";
    o << "saturated_samples: " << sat << "\n";
    o << "guard_direction_violations: " << log.guard_direction_violations << "\n";
    return o.str();
}

/// SVG figures: q1 phase portrait, contact ratios and thrust.
inline std::vector<std::pair<std::string, std::string>> plot_files(const GaitLog& log) {
    Series portrait{"q1", {}, {}};
    Series r1{"foot 1", {}, {}}, r2{"foot 2", {}, {}};
    Series thrust{"F_th", {}, {}};
    for (const LogRow& r : log.rows) {
        if (r.phase == PhaseTag::SS) {
            portrait.x.push_back(r.q(0));
            portrait.y.push_back(r.dq(0));
        }
        if (std::isfinite(r.lambda(1)) && r.lambda(1) > 0) {
            r1.x.push_back(r.t);
            r1.y.push_back(std::abs(r.lambda(0)) / r.lambda(1));
        }
        if (std::isfinite(r.lambda(3)) && r.lambda(3) > 0) {
            r2.x.push_back(r.t);
            r2.y.push_back(std::abs(r.lambda(2)) / r.lambda(3));
        }
        if (r.phase == PhaseTag::DS) {
            thrust.x.push_back(r.t);
            thrust.y.push_back(r.F_th);
        }
    }
    return {
        {"phase_portrait.svg", svg_plot("stance leg phase portrait", "q1 [rad]", "dq1 [rad/s]", {portrait}, true)},
        {"contact_ratio.svg", svg_plot("friction ratio |lamT|/lamN", "t [s]", "ratio", {r1, r2}, false)},
        {"thrust.svg", svg_plot("thrust in double support", "t [s]", "F_th [N]", {thrust}, false)},
    };
}

/// Writes trace.csv, steps.csv, scenario_resolved.json, summary.txt and,
/// with `plots`, the SVG figures into `dir` (created if needed).
inline void write_logs(const GaitLog& log, const ScenarioConfig& cfg, const std::string& dir, bool plots = false) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

    const auto metrics = step_metrics(log, cfg.sim.mu_s);
    std::vector<std::pair<std::string, std::string>> files = {
        {"trace.csv", trace_csv(log, cfg.io.log_decimation)},
        {"steps.csv", steps_csv(metrics)},
        {"scenario_resolved.json", dump_config(cfg)},
        {"summary.txt", summary_text(log, metrics)},
    };
    if (plots)
        for (auto& f : plot_files(log)) files.push_back(std::move(f));

    std::vector<fs::path> written;
    auto cleanup = [&] {
        for (const auto& p : written) fs::remove(p, ec);
    };
    for (const auto& [name, body] : files) {
        const fs::path tmp = fs::path(dir) / (name + ".partial");
        written.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary);
        out << body;
        out.close();
        if (!out) {
            cleanup();
            throw IoError("cannot write '" + tmp.string() + "'");
        }
    }
    for (const auto& [name, body] : files) {
        fs::rename(fs::path(dir) / (name + ".partial"), fs::path(dir) / name, ec);
        if (ec) {
            cleanup();
            throw IoError("cannot move '" + name + "' into place: " + ec.message());
        }
    }
}

}  // namespace biped

#endif  // BIPED_IO_HPP
