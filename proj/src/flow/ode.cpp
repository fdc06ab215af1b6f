#include "matherlab/flow/ode.hpp"

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

namespace matherlab::flow {

namespace odeint = boost::numeric::odeint;

double integrate_ode(const Rhs& rhs, State& z, double t0, double t1, const OdeOptions& opt, const Observer& obs) {
    if (t1 == t0) return t0;
    using Stepper = odeint::runge_kutta_fehlberg78<State>;
    auto ctrl = odeint::make_controlled<Stepper>(opt.tol, opt.tol);
    auto sys = [&rhs](const State& x, State& dx, double t) { rhs(x, dx, t); };

    const double dir = t1 > t0 ? 1.0 : -1.0;
    double t = t0;
    double dt = dir * std::min(opt.h0, std::abs(t1 - t0));
    long steps = 0;
    while (dir * (t1 - t) > 0) {
        if (dir * (t + dt - t1) > 0) dt = t1 - t;
        const double min_step = 1e-14 * std::max(1.0, std::abs(t));
        int tries = 0;
        while (ctrl.try_step(sys, z, t, dt) == odeint::fail) {
            if (std::abs(dt) < min_step || ++tries > 200)
                throw StepUnderflow("integrator step size underflow at t = " + std::to_string(t));
        }
        for (double v : z)
            if (!std::isfinite(v)) throw StepUnderflow("integrator produced non-finite state at t = " + std::to_string(t));
        if (++steps > opt.max_steps) throw StepUnderflow("integrator exceeded the step budget");
        if (obs && obs(t, z)) return t;
        // Land exactly on t1 when within rounding.
        if (std::abs(t1 - t) <= 1e-15 * std::max(1.0, std::abs(t1))) t = t1;
        if (dir * dt < 0) dt = -dt;
    }
    return t1;
}

}  // namespace matherlab::flow
