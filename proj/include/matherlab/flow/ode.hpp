#pragma once

#include "matherlab/common.hpp"

#include <functional>

namespace matherlab::flow {

using State = std::vector<double>;
using Rhs = std::function<void(const State& z, State& dz, double t)>;

struct OdeOptions {
    double tol = 1e-12;  // absolute and relative error per step
    double h0 = 1e-2;
    long max_steps = 5'000'000;
};

class StepUnderflow : public Error {
public:
    using Error::Error;
};

// Observer is called after every accepted step; returning true stops.
using Observer = std::function<bool(double t, const State& z)>;

// Adaptive Runge-Kutta-Fehlberg 7(8) from t0 to t1 (either direction).
// Returns the time actually reached.
double integrate_ode(const Rhs& rhs, State& z, double t0, double t1, const OdeOptions& opt,
                     const Observer& obs = {});

}  // namespace matherlab::flow
