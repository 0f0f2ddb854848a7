// ode.hpp: adaptive Runge-Kutta-Fehlberg 7(8) integration sampled on an output grid

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "spinprobe/errors.hpp"

namespace spinprobe {

struct OdeTolerances {
    double abs_tol{1e-11};
    double rel_tol{1e-11};
    double initial_step{1e-3};
    std::size_t max_steps_per_output{200000};
};

// The output grid must start at zero and increase strictly.
inline void validate_time_grid(std::span<const double> times, const char* who) {
    if (times.empty()) throw ConfigError(std::string(who) + ": empty time grid");
    if (times.front() != 0.0) throw ConfigError(std::string(who) + ": time grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]) || !std::isfinite(times[i]))
            throw ConfigError(std::string(who) + ": time grid must be strictly increasing");
}

inline std::vector<double> uniform_grid(double t_final, double dt) {
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw ConfigError("uniform_grid: need dt > 0 and t_final >= 0");
    const auto n = static_cast<std::size_t>(std::floor(t_final / dt + 1e-9));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * dt;
    return t;
}

// Integrates dx/dt = rhs(x, dxdt, t) with RKF78 error control, stepping exactly onto each
// grid time and calling observe(x, index) there (index 0 is the initial state).
template <class Rhs, class Observer>
void integrate_on_grid(std::vector<double>& state, Rhs&& rhs, std::span<const double> times,
                       const OdeTolerances& tol, Observer&& observe) {
    namespace odeint = boost::numeric::odeint;
    using stepper_type = odeint::runge_kutta_fehlberg78<std::vector<double>>;
    auto stepper = odeint::make_controlled(tol.abs_tol, tol.rel_tol, stepper_type());
    std::size_t index = 0;
    auto sys = [&rhs](const std::vector<double>& x, std::vector<double>& dxdt, double t) { rhs(x, dxdt, t); };
    auto obs = [&](const std::vector<double>& x, double) { observe(x, index++); };
    try {
        odeint::integrate_times(stepper, sys, state, times.begin(), times.end(), tol.initial_step, obs,
                                odeint::max_step_checker(static_cast<int>(tol.max_steps_per_output)));
    } catch (const odeint::step_adjustment_error& e) {
        throw IntegratorError(std::string("step size underflow: ") + e.what());
    } catch (const odeint::no_progress_error& e) {
        throw IntegratorError(std::string("integrator made no progress: ") + e.what());
    }
    if (index != times.size()) throw IntegratorError("integrator stopped before the end of the grid");
}

} // namespace spinprobe
