#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace matherlab::oracle {

// Reduced Lagrangian of 1/2 |y|^2 + V(x1, x2) on H = E with time x2:
// sqrt(2 (E - V)) sqrt(1 + v^2).
struct JacobiMetric {
    std::function<double(double, double)> V, Vx, Vxx;
    double E;

    void jet(double x, double v, double t, double& L, double& Lx, double& Lv, double& Lxx, double& Lxv,
             double& Lvv) const {
        double f = std::sqrt(2 * (E - V(x, t)));
        double fx = -Vx(x, t) / f;
        double fxx = (-Vxx(x, t) - fx * fx) / f;
        double g = std::sqrt(1 + v * v), gv = v / g, gvv = 1 / (g * g * g);
        L = f * g;
        Lx = fx * g;
        Lv = f * gv;
        Lxx = fxx * g;
        Lxv = fx * gv;
        Lvv = f * gvv;
    }
};

inline JacobiMetric pendulum_metric(double eps, double E) {
    return {[eps](double x, double) { return -eps * (1 - std::cos(x)); },
            [eps](double x, double) { return -eps * std::sin(x); },
            [eps](double x, double) { return -eps * std::cos(x); }, E};
}

inline JacobiMetric pendulum_rotor_metric(double eps, double mu, double E) {
    return {[=](double x, double t) { return -eps * (1 - std::cos(x)) * (1 + mu * (1 - std::cos(t))); },
            [=](double x, double t) { return -eps * std::sin(x) * (1 + mu * (1 - std::cos(t))); },
            [=](double x, double t) { return -eps * std::cos(x) * (1 + mu * (1 - std::cos(t))); }, E};
}

// Midpoint-rule minimization with N cells; tridiagonal Newton.
inline double dense_min(const JacobiMetric& Lm, double x, double xp, double t0, double t1, int N) {
    const double h = (t1 - t0) / N;
    std::vector<double> u(N + 1);
    for (int k = 0; k <= N; ++k) u[k] = x + (xp - x) * k / N;
    for (int it = 0; it < 50; ++it) {
        std::vector<double> g(N + 1, 0), dg(N + 1, 0), off(N + 1, 0);
        for (int k = 0; k < N; ++k) {
            double L, Lx, Lv, Lxx, Lxv, Lvv;
            Lm.jet(0.5 * (u[k] + u[k + 1]), (u[k + 1] - u[k]) / h, t0 + (k + 0.5) * h, L, Lx, Lv, Lxx, Lxv, Lvv);
            g[k] += h * (0.5 * Lx - Lv / h);
            g[k + 1] += h * (0.5 * Lx + Lv / h);
            dg[k] += h * (0.25 * Lxx - Lxv / h + Lvv / (h * h));
            dg[k + 1] += h * (0.25 * Lxx + Lxv / h + Lvv / (h * h));
            off[k] = h * (0.25 * Lxx - Lvv / (h * h));
        }
        double gn = 0;
        for (int k = 1; k < N; ++k) gn = std::max(gn, std::abs(g[k]));
        if (gn < 1e-13) break;
        // Thomas algorithm on the interior block.
        std::vector<double> c(N + 1), d(N + 1);
        for (int k = 1; k < N; ++k) {
            double a = k > 1 ? off[k - 1] : 0;
            double den = dg[k] - (k > 1 ? a * c[k - 1] : 0);
            c[k] = off[k] / den;
            d[k] = (-g[k] - (k > 1 ? a * d[k - 1] : 0)) / den;
        }
        std::vector<double> s(N + 1, 0);
        for (int k = N - 1; k >= 1; --k) s[k] = d[k] - (k < N - 1 ? c[k] * s[k + 1] : 0);
        for (int k = 1; k < N; ++k) u[k] += s[k];
    }
    double S = 0;
    for (int k = 0; k < N; ++k) {
        double L, Lx, Lv, Lxx, Lxv, Lvv;
        Lm.jet(0.5 * (u[k] + u[k + 1]), (u[k + 1] - u[k]) / h, t0 + (k + 0.5) * h, L, Lx, Lv, Lxx, Lxv, Lvv);
        S += h * L;
    }
    return S;
}

inline double dense_oracle(const JacobiMetric& Lm, double x, double xp, double t0, double t1, int N) {
    return (4 * dense_min(Lm, x, xp, t0, t1, 2 * N) - dense_min(Lm, x, xp, t0, t1, N)) / 3;
}

}  // namespace matherlab::oracle
