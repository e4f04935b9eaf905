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

// biped_sim: command line front end.
//
//   biped_sim run <config> [--out DIR] [--emit-plots]
//   biped_sim design-gait <config> [--out FILE]
//   biped_sim sweep <config> --u-max 1.0,0.6,0.45 [--out DIR] [--jobs N] [--emit-plots]
//   biped_sim validate <config>
//
// Exit codes: 0 ok, 1 I/O or usage, 2 config error, 3 fall or failed check,
// 4 numerical failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biped/biped.hpp"

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kFall = 3, kNumerical = 4 };

int exit_for(biped::WalkStatus s) {
    switch (s) {
        case biped::WalkStatus::ok: return kOk;
        case biped::WalkStatus::fall: return kFall;
        case biped::WalkStatus::numerical: return kNumerical;
    }
    return kNumerical;
}

biped::ScenarioConfig load(const std::string& path) { return biped::load_config(path); }

void print_summary(const biped::GaitLog& log, const biped::ScenarioConfig& cfg, std::ostream& os) {
    os << biped::summary_text(log, biped::step_metrics(log, cfg.sim.mu_s));
}

int cmd_run(const std::string& path, const std::string& out, bool plots) {
    biped::ScenarioConfig cfg = load(path);
    if (!out.empty()) cfg.io.output_dir = out;
    const biped::GaitLog log = biped::run_walk(cfg);
    biped::write_logs(log, cfg, cfg.io.output_dir, plots);
    print_summary(log, cfg, std::cout);
    std::cout << "output: " << cfg.io.output_dir << "\n";
    return exit_for(log.status);
}

int cmd_design(const std::string& path, const std::string& out) {
    const biped::ScenarioConfig cfg = load(path);
    const biped::GaitParams g = biped::gait_from_config(cfg);
    nlohmann::json j;
    j["theta_plus"] = g.theta_plus;
    j["theta_minus"] = g.theta_minus;
    j["degree"] = g.bezier.cols() - 1;
    for (int r = 0; r < 2; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < g.bezier.cols(); ++k) row.push_back(g.bezier(r, k));
        j["bezier"].push_back(row);
    }
    j["kp"] = {g.kp(0), g.kp(1)};
    j["kd"] = {g.kd(0), g.kd(1)};
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out);
        f << text;
        if (!f) throw biped::IoError("cannot write '" + out + "'");
        std::cout << "gait written to " << out << "\n";
    }
    return kOk;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            size_t used = 0;
            const double x = std::stod(item, &used);
            if (used != item.size() || !(x > 0)) throw std::invalid_argument(item);
            v.push_back(x);
        } catch (const std::exception&) {
            throw biped::ConfigError("--u-max: '" + item + "' is not a positive number");
        }
    }
    if (v.empty()) throw biped::ConfigError("--u-max: empty list");
    return v;
}

std::string level_dir(double u) {
    char b[64];
    std::snprintf(b, sizeof b, "u_max_%g", u);
    return b;
}

int cmd_sweep(const std::string& path, const std::string& levels_arg, const std::string& out, int jobs,
              bool plots) {
    const biped::ScenarioConfig base = load(path);
    const std::vector<double> levels = parse_list(levels_arg);
    const std::string root = out.empty() ? base.io.output_dir : out;

    struct Result {
        biped::WalkStatus status = biped::WalkStatus::numerical;
        std::string message;
        double max_u = 0, max_y = 0, min_gmv = INFINITY;
        int steps = 0;
        std::string error;
    };
    std::vector<Result> results(levels.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next.fetch_add(1)) < levels.size();) {
            Result& r = results[i];
            try {
                biped::ScenarioConfig cfg = base;
                cfg.erg.u_max = biped::Vec2::Constant(levels[i]);
                cfg.io.output_dir = (std::filesystem::path(root) / level_dir(levels[i])).string();
                cfg.validate();
                const biped::GaitLog log = biped::run_walk(cfg);
                biped::write_logs(log, cfg, cfg.io.output_dir, plots);
                r.status = log.status;
                r.message = log.message;
                r.steps = log.steps_completed;
                for (const auto& m : biped::step_metrics(log, cfg.sim.mu_s)) {
                    r.max_u = std::max(r.max_u, m.max_abs_u);
                    r.max_y = std::max(r.max_y, m.max_y);
                    r.min_gmv = std::min(r.min_gmv, m.min_gamma_minus_V);
                }
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(levels.size())));
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // Merged report, in the order the levels were given.
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    std::ofstream csv(std::filesystem::path(root) / "sweep.csv");
    csv << "u_max,status,steps,max_abs_u,max_y,min_gamma_minus_V\n";
    std::printf("%-10s %-10s %6s %12s %12s %14s\n", "u_max", "status", "steps", "max|u|", "max||y||", "min(G-V)");
    int code = kOk;
    for (size_t i = 0; i < levels.size(); ++i) {
        const Result& r = results[i];
        if (!r.error.empty()) {
            std::printf("%-10g error: %s\n", levels[i], r.error.c_str());
            code = std::max(code, static_cast<int>(kNumerical));
            continue;
        }
        std::printf("%-10g %-10s %6d %12.6g %12.6g %14.6g\n", levels[i], biped::to_string(r.status), r.steps,
                    r.max_u, r.max_y, r.min_gmv);
        csv << levels[i] << ',' << biped::to_string(r.status) << ',' << r.steps << ',' << r.max_u << ',' << r.max_y
            << ',' << r.min_gmv << '\n';
        code = std::max(code, exit_for(r.status));
    }
    std::cout << "output: " << root << "\n";
    return code;
}

int cmd_validate(const std::string& path) {
    const biped::ScenarioConfig cfg = load(path);
    bool all = true;
    for (const biped::Check& c : biped::run_validation(cfg)) {
        std::printf("%s  %-48s value=%.3g bound=%.3g\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                    c.tolerance);
        all = all && c.passed;
    }
    return all ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar thruster-assisted biped simulator"};
    app.require_subcommand(1);
    bool plots = false;
    app.add_flag("--emit-plots", plots, "also write SVG figures next to the CSV files");

    std::string config, out, levels;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    auto* run = app.add_subcommand("run", "simulate a scenario and write its logs");
    run->add_option("config", config, "scenario file")->required();
    run->add_option("--out", out, "output directory (default: io.output_dir)");
    run->add_flag("--emit-plots", plots, "also write SVG figures");

    auto* design = app.add_subcommand("design-gait", "print the gait designed from a scenario's gait section");
    design->add_option("spec", config, "scenario file")->required();
    design->add_option("--out", out, "write the gait JSON here instead of stdout");

    auto* sweep = app.add_subcommand("sweep", "run a scenario at several single-support torque limits");
    sweep->add_option("config", config, "scenario file")->required();
    sweep->add_option("--u-max", levels, "comma separated torque limits [N m]")->required();
    sweep->add_option("--out", out, "root output directory (default: io.output_dir)");
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--emit-plots", plots, "also write SVG figures");

    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    validate->add_option("config", config, "scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kIo;
    }

    try {
        if (*run) return cmd_run(config, out, plots);
        if (*design) return cmd_design(config, out);
        if (*sweep) return cmd_sweep(config, levels, out, jobs, plots);
        if (*validate) return cmd_validate(config);
    } catch (const biped::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const biped::DesignInfeasible& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const biped::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const biped::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kIo;
}
