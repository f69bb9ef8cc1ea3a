// Embedded Dormand-Prince 5(4) adaptive integrator for the small complex
// states used here (scalars, 2-vectors, 2x2 matrices). Steps are clipped to
// land exactly on requested sample times.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <type_traits>
#include <utility>
#include <vector>

#include "ptlab/errors.hpp"
#include "ptlab/mat2.hpp"

namespace ptlab {

inline double sup_abs(cplx v) { return std::abs(v); }

struct OdeControl {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double h_init = 1e-3;
    double h_min = 1e-13;
    std::size_t max_steps = 20'000'000;
};

namespace detail {

template <class State, class Rhs>
struct Dopri5 {
    Rhs rhs;
    OdeControl ctrl;
    State y;
    State k1;
    double t;
    bool have_k1 = false;

    double h_next = 0.0;

    Dopri5(Rhs f, State y0, double t0, const OdeControl& c)
        : rhs(std::move(f)), ctrl(c), y(std::move(y0)), k1(), t(t0) {}

    // invalidates cached derivative state after an external modification of y
    void reset_state(State y_new) {
        y = std::move(y_new);
        have_k1 = false;
    }

    // advances by one accepted step, clipped at t_end; returns true once t_end
    // is reached
    bool step_until(double t_end) {
        if (t_end == t) return true;
        const double dir = t_end > t ? 1.0 : -1.0;
        if (h_next == 0.0 || h_next * dir <= 0.0)
            h_next = std::min(std::abs(ctrl.h_init), std::abs(t_end - t)) * dir;
        double h = h_next;
        std::size_t steps = 0;
        while (true) {
            if (++steps > ctrl.max_steps)
                throw IntegrationFailure("dopri5: step budget exhausted");
            const bool clipped = dir * (t + h) >= dir * t_end;
            if (clipped) h = t_end - t;
            if (!have_k1) {
                k1 = rhs(t, y);
                have_k1 = true;
            }
            const State k2 = rhs(t + h * (1.0 / 5), y + (h * (1.0 / 5)) * k1);
            const State k3 = rhs(t + h * (3.0 / 10), y + (h * (3.0 / 40)) * k1 +
                                                         (h * (9.0 / 40)) * k2);
            const State k4 = rhs(t + h * (4.0 / 5), y + (h * (44.0 / 45)) * k1 -
                                                        (h * (56.0 / 15)) * k2 +
                                                        (h * (32.0 / 9)) * k3);
            const State k5 =
                rhs(t + h * (8.0 / 9), y + (h * (19372.0 / 6561)) * k1 -
                                           (h * (25360.0 / 2187)) * k2 +
                                           (h * (64448.0 / 6561)) * k3 -
                                           (h * (212.0 / 729)) * k4);
            const State k6 = rhs(t + h, y + (h * (9017.0 / 3168)) * k1 -
                                            (h * (355.0 / 33)) * k2 +
                                            (h * (46732.0 / 5247)) * k3 +
                                            (h * (49.0 / 176)) * k4 -
                                            (h * (5103.0 / 18656)) * k5);
            const State y5 = y + (h * (35.0 / 384)) * k1 + (h * (500.0 / 1113)) * k3 +
                             (h * (125.0 / 192)) * k4 - (h * (2187.0 / 6784)) * k5 +
                             (h * (11.0 / 84)) * k6;
            const State k7 = rhs(t + h, y5);
            const State y4 = y + (h * (5179.0 / 57600)) * k1 + (h * (7571.0 / 16695)) * k3 +
                             (h * (393.0 / 640)) * k4 - (h * (92097.0 / 339200)) * k5 +
                             (h * (187.0 / 2100)) * k6 + (h * (1.0 / 40)) * k7;

            const double scale =
                ctrl.abs_tol + ctrl.rel_tol * std::max(sup_abs(y), sup_abs(y5));
            const double err = sup_abs(y5 - y4) / scale;
            const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            const double h_new = h * std::clamp(grow, 0.2, 5.0);
            if (err <= 1.0) {
                t = clipped ? t_end : t + h;
                y = y5;
                k1 = k7; // first-same-as-last
                if (!clipped || std::abs(h_new) > std::abs(h_next)) h_next = h_new;
                return clipped;
            }
            h = h_new;
            if (std::abs(h) < ctrl.h_min)
                throw StepSizeUnderflow("dopri5: step size underflow");
        }
    }

    void advance_to(double t_end) {
        std::size_t steps = 0;
        while (!step_until(t_end)) {
            if (++steps > ctrl.max_steps)
                throw IntegrationFailure("dopri5: step budget exhausted");
        }
    }
};

} // namespace detail

// Integrates y' = f(t, y) and returns the state at each requested time.
// Times must be monotone; the first entry is the initial time of y0.
template <class State, class Rhs>
std::vector<State> integrate_at_times(Rhs&& f, State y0, const std::vector<double>& times,
                                      const OdeControl& ctrl = {}) {
    std::vector<State> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    detail::Dopri5<State, std::decay_t<Rhs>> stepper(std::forward<Rhs>(f), std::move(y0),
                                                     times.front(), ctrl);
    out.push_back(stepper.y);
    for (std::size_t i = 1; i < times.size(); ++i) {
        stepper.advance_to(times[i]);
        out.push_back(stepper.y);
    }
    return out;
}

template <class State, class Rhs>
State integrate_to(Rhs&& f, State y0, double t0, double t1, const OdeControl& ctrl = {}) {
    detail::Dopri5<State, std::decay_t<Rhs>> stepper(std::forward<Rhs>(f), std::move(y0), t0,
                                                     ctrl);
    stepper.advance_to(t1);
    return stepper.y;
}

inline std::vector<double> linspace(double t0, double t1, std::size_t n) {
    std::vector<double> ts(n);
    if (n == 1) {
        ts[0] = t0;
        return ts;
    }
    for (std::size_t i = 0; i < n; ++i)
        ts[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (n > 1) ts.back() = t1;
    return ts;
}

} // namespace ptlab
