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

#ifndef BIPED_INTEGRATE_HPP
#define BIPED_INTEGRATE_HPP

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "biped/errors.hpp"
#include "biped/hybrid.hpp"

namespace biped {

class IntegrationBlowup : public NumericalError {
public:
    IntegrationBlowup(double t, Eigen::VectorXd last_state)
        : NumericalError("integration produced a non-finite state"),
          t_(t), last_state_(std::move(last_state)) {}
    double last_valid_time() const { return t_; }
    const Eigen::VectorXd& last_valid_state() const { return last_state_; }

private:
    double t_;
    Eigen::VectorXd last_state_;
};

/// One classic fourth-order Runge-Kutta step of x' = field(t, x).
template <typename Field, typename State>
State rk4_step(const Field& field, double t, const State& x, double h) {
    const State k1 = field(t, x);
    const State k2 = field(t + 0.5 * h, State(x + 0.5 * h * k1));
    const State k3 = field(t + 0.5 * h, State(x + 0.5 * h * k2));
    const State k4 = field(t + h, State(x + h * k3));
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename State>
struct Trace {
    std::vector<double> t;
    std::vector<State> x;
    std::optional<LocatedEvent<State>> event;
};

/// Fixed-step RK4 from t_span[0] to t_span[1]. With a state guard, integration
/// stops at the first step where the guard goes from > 0 to <= 0 and the
/// crossing is refined by re-integrating a partial step from the bracket start.
/// The last step is shortened to land exactly on t_span[1].
template <typename Field, typename State, typename Guard>
Trace<State> integrate_rk4(const Field& field, const State& x0, double dt,
                           std::pair<double, double> t_span, const Guard& guard) {
    if (!(dt > 0.0)) throw InvalidArgument("integrate_rk4: dt must be positive");
    Trace<State> tr;
    double t = t_span.first;
    State x = x0;
    tr.t.push_back(t);
    tr.x.push_back(x);
    double g_prev = guard(x);
    const double span = t_span.second - t_span.first;
    const auto n_steps = static_cast<long>(std::ceil(span / dt - 1e-9));
    for (long n = 0; n < n_steps; ++n) {
        const double tn = n + 1 == n_steps ? t_span.second : t_span.first + (n + 1) * dt;
        const double h = tn - t;
        State xn = rk4_step(field, t, x, h);
        if (!xn.allFinite()) throw IntegrationBlowup(t, Eigen::VectorXd(x));
        const double g = guard(xn);
        if (g_prev > 0.0 && g <= 0.0) {
            const double t_lo = t;
            const State x_lo = x;
            auto state_at = [&](double s) -> State {
                return s == t_lo ? x_lo : State(rk4_step(field, t_lo, x_lo, s - t_lo));
            };
            auto located = locate_event(
                t_lo, tn, state_at, guard);
            tr.t.push_back(located.t);
            tr.x.push_back(located.x);
            tr.event = located;
            return tr;
        }
        g_prev = g;
        t = tn;
        x = xn;
        tr.t.push_back(t);
        tr.x.push_back(x);
    }
    return tr;
}

template <typename Field, typename State>
Trace<State> integrate_rk4(const Field& field, const State& x0, double dt,
                           std::pair<double, double> t_span) {
    return integrate_rk4(field, x0, dt, t_span, [](const State&) { return 1.0; });
}

}  // namespace biped

#endif  // BIPED_INTEGRATE_HPP
