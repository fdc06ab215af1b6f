#include "matherlab/action/action.hpp"

#include "matherlab/flow/flow.hpp"

#include <algorithm>
#include <iomanip>

namespace matherlab::action {

namespace {

Vec state(double x, double y) { return (Vec(2) << x, y).finished(); }

// Reduced-Lagrangian jet of a 1-dof Hamiltonian at (x, v, t).
struct Jet1 {
    double L, Lx, Lv, Lxx, Lxv, Lvv;
};

Jet1 jet_of(const model::Hamiltonian& K, double x, double v, double t) {
    double y = momentum_for_velocity(K, x, v, t);
    Vec z = state(x, y);
    Mat H = K.hessian(z, t);
    Vec g = K.gradient(z, t);
    Jet1 j;
    j.L = v * y - K.value(z, t);
    j.Lv = y;
    j.Lx = -g[0];
    j.Lvv = 1.0 / H(1, 1);
    j.Lxv = -H(0, 1) / H(1, 1);
    j.Lxx = -H(0, 0) + H(0, 1) * H(0, 1) / H(1, 1);
    return j;
}

// Minimizes the midpoint-rule action over N sub-intervals and returns the
// discrete momentum at the left end.
double collocation_momentum(const model::Hamiltonian& K, double x, double xp, double t0, double t1, int N = 8) {
    const double h = (t1 - t0) / N;
    Vec u(N + 1);
    for (int k = 0; k <= N; ++k) u[k] = x + (xp - x) * k / N;
    auto action = [&](const Vec& w) {
        double S = 0;
        for (int k = 0; k < N; ++k)
            S += h * jet_of(K, 0.5 * (w[k] + w[k + 1]), (w[k + 1] - w[k]) / h, t0 + (k + 0.5) * h).L;
        return S;
    };
    double S = action(u);
    for (int it = 0; it < 30; ++it) {
        Vec g = Vec::Zero(N + 1);
        Mat Hs = Mat::Zero(N + 1, N + 1);
        for (int k = 0; k < N; ++k) {
            Jet1 j = jet_of(K, 0.5 * (u[k] + u[k + 1]), (u[k + 1] - u[k]) / h, t0 + (k + 0.5) * h);
            g[k] += h * (0.5 * j.Lx - j.Lv / h);
            g[k + 1] += h * (0.5 * j.Lx + j.Lv / h);
            Hs(k, k) += h * (0.25 * j.Lxx - j.Lxv / h + j.Lvv / (h * h));
            Hs(k + 1, k + 1) += h * (0.25 * j.Lxx + j.Lxv / h + j.Lvv / (h * h));
            Hs(k, k + 1) += h * (0.25 * j.Lxx - j.Lvv / (h * h));
            Hs(k + 1, k) = Hs(k, k + 1);
        }
        Vec gi = g.segment(1, N - 1);
        if (gi.lpNorm<Eigen::Infinity>() < 1e-11) break;
        Mat Hi = Hs.block(1, 1, N - 1, N - 1);
        Eigen::LLT<Mat> llt(Hi);
        Vec d = llt.info() == Eigen::Success ? Vec(-llt.solve(gi)) : Vec(-gi);
        double lam = 1;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls, lam *= 0.5) {
            Vec w = u;
            w.segment(1, N - 1) += lam * d;
            double Sw = action(w);
            if (Sw <= S + 1e-4 * lam * gi.dot(d)) {
                u = w;
                S = Sw;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    Jet1 j = jet_of(K, 0.5 * (u[0] + u[1]), (u[1] - u[0]) / h, t0 + 0.5 * h);
    return j.Lv - 0.5 * h * j.Lx;
}

std::vector<double> segment_times(double T, int m, const std::vector<double>& custom) {
    if (!custom.empty()) {
        if (static_cast<int>(custom.size()) != m + 1) throw DimensionError("loop: partition must hold m + 1 times");
        if (std::abs(custom.front()) > 1e-12 || std::abs(custom.back() - T) > 1e-9 * T)
            throw DomainError("loop: partition must span one loop");
        for (int i = 0; i < m; ++i)
            if (!(custom[i + 1] > custom[i])) throw DomainError("loop: partition must be increasing");
        std::vector<double> t = custom;
        t.front() = 0;
        t.back() = T;
        return t;
    }
    std::vector<double> t(m + 1);
    for (int i = 0; i <= m; ++i) t[i] = T * i / m;
    return t;
}

// Segments through pts (m points) closing at pts[0] + 2π g.
std::vector<Segment> evaluate(const ReducedSystem& sys, const std::vector<double>& pts, int g,
                              const std::vector<double>& times, const std::vector<std::optional<double>>& y_guess,
                              const SegmentOptions& opt) {
    const int m = static_cast<int>(pts.size());
    std::vector<Segment> seg(m);
    parallel_for(m, [&](int i) {
        double xp = i + 1 < m ? pts[i + 1] : pts[0] + kTwoPi * g;
        seg[i] = two_point_action(sys, pts[i], xp, times[i], times[i + 1], opt, y_guess[i]);
    });
    return seg;
}

// Momentum guesses for moved endpoints from the linearized segment maps.
std::vector<std::optional<double>> predict_momenta(const std::vector<Segment>& seg, const std::vector<double>& old_pts,
                                                   const std::vector<double>& new_pts) {
    const int m = static_cast<int>(seg.size());
    std::vector<std::optional<double>> y(m);
    for (int i = 0; i < m; ++i) {
        int j = (i + 1) % m;
        double dx = new_pts[i] - old_pts[i], dxp = new_pts[j] - old_pts[j];
        y[i] = seg[i].y0 + (dxp - seg[i].M(0, 0) * dx) / seg[i].M(0, 1);
    }
    return y;
}

double total(const std::vector<Segment>& seg) {
    double S = 0;
    for (const auto& s : seg) S += s.F;
    return S;
}

// Gradient of the total action with respect to points[first..m-1].
Vec gradient(const std::vector<Segment>& seg, int first) {
    const int m = static_cast<int>(seg.size());
    Vec g(m - first);
    for (int i = first; i < m; ++i) g[i - first] = seg[(i + m - 1) % m].dF_dxp + seg[i].dF_dx;
    return g;
}

Mat full_hessian(const std::vector<Segment>& seg) {
    const int m = static_cast<int>(seg.size());
    Mat J = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        J(i, i) += seg[(i + m - 1) % m].F_xpxp + seg[i].F_xx;
        int j = (i + 1) % m;
        J(i, j) += seg[i].F_xxp;
        J(j, i) += seg[i].F_xxp;
    }
    return J;
}

BrokenConfiguration make_config(const ReducedSystem& sys, std::vector<double> pts, int g, std::vector<double> times,
                                std::vector<Segment> seg) {
    BrokenConfiguration c;
    c.points = std::move(pts);
    c.times = std::move(times);
    c.energy = sys.energy;
    c.g = g;
    c.segments = std::move(seg);
    c.total_action = total(c.segments);
    Vec gi = gradient(c.segments, 1);
    c.interior_EL_residual = gi.size() ? gi.lpNorm<Eigen::Infinity>() : 0.0;
    Mat Ji = full_hessian(c.segments).bottomRightCorner(c.m() - 1, c.m() - 1);
    c.interior_positive = Eigen::LLT<Mat>(Ji).info() == Eigen::Success &&
                          Eigen::SelfAdjointEigenSolver<Mat>(Ji, Eigen::EigenvaluesOnly).eigenvalues()[0] > 0;
    return c;
}

double wrapped_distance(double a, double b) { return std::abs(wrap_centered(a - b)); }

}  // namespace

// ---------------------------------------------------------------------------

double ReducedSystem::loop_time() const { return K->autonomous() ? kTwoPi : K->period(); }

model::LagrangianPtr ReducedSystem::lagrangian() const { return std::make_shared<model::LegendreLagrangian>(K); }

ReducedSystem reduce(const HamiltonianPtr& H, double E, int eliminate) {
    if (H->dof() != 2) throw DimensionError("reduce: expects two degrees of freedom");
    ReducedSystem s;
    s.K = flow::reduce_isoenergetic(H, E, eliminate, flow::ReductionConvention::tonelli, 1.0);
    s.energy = E;
    return s;
}

double momentum_for_velocity(const model::Hamiltonian& K, double x, double v, double t) {
    if (K.dof() != 1) throw DimensionError("momentum_for_velocity: one degree of freedom expected");
    auto f = [&](double y, bool& ok) {
        try {
            ok = true;
            return K.gradient(state(x, y), t)[1] - v;
        } catch (const DomainError&) {
            ok = false;
            return 0.0;
        }
    };
    bool ok = false;
    double a = 0, fa = f(0, ok);
    if (!ok) throw DomainError("momentum_for_velocity: y = 0 outside the domain");
    if (fa == 0) return 0;
    const double dir = fa < 0 ? 1.0 : -1.0;
    double step = std::max(1.0, std::abs(v)), b = a, fb = fa;
    bool bracketed = false;
    for (int it = 0; it < 400 && !bracketed; ++it) {
        b = a + dir * step;
        fb = f(b, ok);
        if (!ok) {
            step *= 0.5;
            continue;
        }
        if (fa * fb <= 0) {
            bracketed = true;
        } else {
            a = b;
            fa = fb;
            step *= 2;
        }
    }
    if (!bracketed) throw NoConvergence("momentum_for_velocity: no bracket", std::abs(fa));
    double lo = std::min(a, b), hi = std::max(a, b);
    double flo = a < b ? fa : fb;
    double y = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double fy = f(y, ok);
        if (std::abs(fy) <= 1e-14 * (1 + std::abs(v)) || hi - lo <= 1e-15 * (1 + std::abs(y))) return y;
        if ((fy < 0) == (flo < 0)) {
            lo = y;
            flo = fy;
        } else {
            hi = y;
        }
        double dfy = K.hessian(state(x, y), t)(1, 1);
        double yn = y - fy / dfy;
        y = (dfy > 0 && yn > lo && yn < hi) ? yn : 0.5 * (lo + hi);
    }
    return y;
}

// ---------------------------------------------------------------------------

Segment two_point_action(const ReducedSystem& sys, double x, double xp, double t0, double t1,
                         const SegmentOptions& opt, std::optional<double> y_guess) {
    const model::Hamiltonian& K = *sys.K;
    const double dt = t1 - t0;
    if (!(dt > 0)) throw DomainError("two_point_action: segment time must be positive");
    double y = y_guess ? *y_guess : collocation_momentum(K, x, xp, t0, t1);
    const double tol = opt.tol * std::max(1.0, std::abs(xp - x));

    auto shoot = [&](double yy) -> std::optional<flow::TangentResult> {
        try {
            return flow::tangent_flow(K, state(x, yy), t0, dt, opt.ode_tol, true);
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };

    auto tf = shoot(y);
    if (!tf && y_guess) {
        y = collocation_momentum(K, x, xp, t0, t1);
        tf = shoot(y);
    }
    if (!tf) throw NoConvergence("two_point_action: initial orbit leaves the domain", 0.0);

    Segment s;
    double r = tf->z[0] - xp;
    int it = 0;
    for (; it < opt.max_iter && std::abs(r) > tol; ++it) {
        double b = tf->M(0, 1);
        if (!(b > 0)) throw DomainError("two_point_action: conjugate point inside the segment");
        double step = -r / b;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
            auto trial = shoot(y + step);
            if (!trial) continue;
            double rt = trial->z[0] - xp;
            if (std::abs(rt) < std::abs(r) || ls == 39) {
                y += step;
                tf = trial;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (std::abs(r) > tol) throw NoConvergence("two_point_action: shooting diverged", std::abs(r));
    const double a = tf->M(0, 0), b = tf->M(0, 1), d = tf->M(1, 1);
    if (!(b > 0)) throw DomainError("two_point_action: conjugate point inside the segment");

    s.t0 = t0;
    s.t1 = t1;
    s.x = x;
    s.xp = xp;
    s.F = tf->action;
    s.y0 = y;
    s.y1 = tf->z[1];
    s.dF_dx = -s.y0;
    s.dF_dxp = s.y1;
    s.F_xx = a / b;
    s.F_xpxp = d / b;
    s.F_xxp = -1.0 / b;
    s.M = tf->M;
    s.iterations = it;
    if (opt.curve_samples >= 2) {
        Vec z = state(x, y);
        const int n = opt.curve_samples - 1;
        s.curve.push_back({t0, z[0], z[1]});
        for (int k = 1; k <= n; ++k) {
            double ta = t0 + dt * (k - 1) / n;
            z = flow::flow_map(K, z, ta, dt / n, opt.ode_tol);
            s.curve.push_back({t0 + dt * k / n, z[0], z[1]});
        }
    }
    return s;
}

Segment two_point_action(const ReducedSystem& sys, double x, double xp, int i, int m, const SegmentOptions& opt) {
    if (m < 1 || i < 0 || i >= m) throw DomainError("two_point_action: segment index out of range");
    const double T = sys.loop_time();
    return two_point_action(sys, x, xp, T * i / m, T * (i + 1) / m, opt);
}

// ---------------------------------------------------------------------------

double BrokenConfiguration::momentum_jump() const {
    return segments.back().dF_dxp + segments.front().dF_dx;
}

double BrokenConfiguration::velocity_corner(const ReducedSystem& sys) const {
    const auto& a = segments.front();
    const auto& b = segments.back();
    double v0 = sys.K->gradient(state(a.x, a.y0), a.t0)[1];
    double v1 = sys.K->gradient(state(b.xp, b.y1), b.t1)[1];
    return std::abs(v0 - v1);
}

double BrokenConfiguration::full_EL_residual() const {
    return std::max(interior_EL_residual, std::abs(momentum_jump()));
}

LoopAction loop_action(const ReducedSystem& sys, double x, const LoopOptions& opt, const std::vector<double>* guess) {
    const int m = opt.m;
    if (m < 3) throw DomainError("loop_action: need at least 3 segments");
    if (guess && static_cast<int>(guess->size()) != m - 1)
        throw DimensionError("loop_action: guess must hold m - 1 interior points");
    auto times = segment_times(sys.loop_time(), m, opt.times);
    std::vector<double> pts(m);
    pts[0] = x;
    for (int i = 1; i < m; ++i) pts[i] = guess ? (*guess)[i - 1] : x + kTwoPi * opt.g * times[i] / times[m];

    auto seg = evaluate(sys, pts, opt.g, times, std::vector<std::optional<double>>(m), opt.segment);
    double S = total(seg);
    Vec g = gradient(seg, 1);
    double res = g.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_iter && res > opt.tol; ++it) {
        Mat Hi = full_hessian(seg).bottomRightCorner(m - 1, m - 1);
        // Tridiagonal interior block: no corner coupling once x_0 is fixed.
        Eigen::LLT<Mat> llt(Hi);
        bool convex = llt.info() == Eigen::Success;
        Vec d;
        if (convex) {
            d = -llt.solve(g);
        } else {
            double lmin = Eigen::SelfAdjointEigenSolver<Mat>(Hi, Eigen::EigenvaluesOnly).eigenvalues()[0];
            double shift = -lmin + 1e-3 * std::max(1.0, Hi.diagonal().cwiseAbs().maxCoeff());
            d = -(Hi + shift * Mat::Identity(m - 1, m - 1)).llt().solve(g);
        }
        double lam = 1;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, lam *= 0.5) {
            std::vector<double> trial = pts;
            for (int i = 1; i < m; ++i) trial[i] += lam * d[i - 1];
            std::vector<Segment> ts;
            try {
                ts = evaluate(sys, trial, opt.g, times, predict_momenta(seg, pts, trial), opt.segment);
            } catch (const Error&) {
                continue;
            }
            double St = total(ts);
            Vec gt = gradient(ts, 1);
            double rt = gt.lpNorm<Eigen::Infinity>();
            bool armijo = St <= S + 1e-4 * lam * g.dot(d);
            // Near convergence the action differences sit at round-off.
            bool newton_ok = convex && lam == 1 && rt < res;
            if (armijo || newton_ok) {
                pts = std::move(trial);
                seg = std::move(ts);
                S = St;
                g = gt;
                res = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (res > opt.tol) throw NoConvergence("loop_action: Newton on the interior points failed", res);
    LoopAction out;
    out.config = make_config(sys, std::move(pts), opt.g, std::move(times), std::move(seg));
    out.F = out.config.total_action;
    if (!out.config.interior_positive) warn("loop_action: interior Jacobi block is not positive definite (saddle)");
    return out;
}

BrokenConfiguration stationary_configuration(const ReducedSystem& sys, const std::vector<double>& guess,
                                             const LoopOptions& opt) {
    const int m = static_cast<int>(guess.size());
    if (m < 3) throw DomainError("stationary_configuration: need at least 3 points");
    auto times = segment_times(sys.loop_time(), m, opt.times);
    std::vector<double> pts = guess;
    auto seg = evaluate(sys, pts, opt.g, times, std::vector<std::optional<double>>(m), opt.segment);
    Vec g = gradient(seg, 0);
    double res = g.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_iter && res > opt.tol; ++it) {
        Mat J = full_hessian(seg);
        Vec d = -J.completeOrthogonalDecomposition().solve(g);
        double lam = 1;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, lam *= 0.5) {
            std::vector<double> trial = pts;
            for (int i = 0; i < m; ++i) trial[i] += lam * d[i];
            std::vector<Segment> ts;
            try {
                ts = evaluate(sys, trial, opt.g, times, predict_momenta(seg, pts, trial), opt.segment);
            } catch (const Error&) {
                continue;
            }
            Vec gt = gradient(ts, 0);
            double rt = gt.lpNorm<Eigen::Infinity>();
            if (rt < (1 - 1e-4 * lam) * res) {
                pts = std::move(trial);
                seg = std::move(ts);
                g = gt;
                res = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (res > opt.tol) throw NoConvergence("stationary_configuration: Newton failed", res);
    return make_config(sys, std::move(pts), opt.g, std::move(times), std::move(seg));
}

// ---------------------------------------------------------------------------

JacobiMatrix jacobi_matrix(const BrokenConfiguration& c) {
    const int m = c.m();
    if (m < 3 || static_cast<int>(c.segments.size()) != m)
        throw DimensionError("jacobi_matrix: configuration needs at least 3 segments");
    JacobiMatrix out;
    out.A.resize(m);
    out.B.resize(m);
    for (int i = 0; i < m; ++i) {
        out.A[i] = c.segments[(i + m - 1) % m].F_xpxp + c.segments[i].F_xx;
        out.B[i] = c.segments[i].F_xxp;
        if (!(out.B[i] < 0)) throw DomainError("jacobi_matrix: twist condition B_i < 0 violated");
    }
    out.J = full_hessian(c.segments);
    Eigen::SelfAdjointEigenSolver<Mat> es(out.J, Eigen::EigenvaluesOnly);
    out.eigenvalues = es.eigenvalues();
    out.gap = out.eigenvalues[1] - out.eigenvalues[0];
    return out;
}

double loop_second_derivative(const JacobiMatrix& J) {
    const int m = static_cast<int>(J.J.rows());
    Mat Ji = J.J.bottomRightCorner(m - 1, m - 1);
    Vec c = J.J.col(0).tail(m - 1);
    return J.J(0, 0) - c.dot(Ji.ldlt().solve(c));
}

HyperbolicityReport hyperbolicity_check(const ReducedSystem& sys, const BrokenConfiguration& c, double ode_tol) {
    HyperbolicityReport h;
    h.lambda0 = jacobi_matrix(c).eigenvalues[0];
    h.jacobi_positive = h.lambda0 > 1e-8;

    flow::RefineOptions ro;
    ro.period = sys.loop_time();
    ro.winding = {c.g};
    ro.segments = 4;
    ro.tol = 1e-9;
    ro.ode_tol = ode_tol;
    auto orb = flow::periodic_orbit_refine(*sys.K, state(c.points[0], c.segments[0].y0), sys.loop_time(), ro);
    h.closure_residual = orb.residual;
    const double tr = orb.monodromy.trace();
    h.floquet_trace = tr;
    std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0, 0.0));
    h.multipliers = {0.5 * (tr + disc), 0.5 * (tr - disc)};
    h.hyperbolic = std::abs(tr) > 2 + 1e-6;
    h.parabolic = std::abs(std::abs(tr) - 2) <= 1e-6;
    h.consistent = h.jacobi_positive == h.hyperbolic;
    return h;
}

// ---------------------------------------------------------------------------

LocalMinimum refine_minimum(const ReducedSystem& sys, double x0, const LoopOptions& opt,
                            const BrokenConfiguration* warm, double bracket) {
    double lo = x0 - bracket, hi = x0 + bracket;
    double x = x0;
    std::vector<double> guess;
    if (warm && warm->m() == opt.m) {
        double shift = x0 - warm->points[0];
        for (int i = 1; i < opt.m; ++i) guess.push_back(warm->points[i] + shift);
    }
    LoopAction la;
    double F2 = 0;
    for (int it = 0; it < 80; ++it) {
        la = loop_action(sys, x, opt, guess.empty() ? nullptr : &guess);
        double d = la.config.momentum_jump();
        F2 = loop_second_derivative(jacobi_matrix(la.config));
        if (std::abs(d) <= 1e-9) break;
        if (d > 0)
            hi = x;
        else
            lo = x;
        double xn = x - d / F2;
        if (!(F2 > 0) || xn <= lo || xn >= hi) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 1e-13) break;
        guess.assign(la.config.points.begin() + 1, la.config.points.end());
        for (auto& p : guess) p += xn - x;
        x = xn;
    }
    LocalMinimum lm;
    lm.x = x;
    lm.F = la.F;
    lm.F_xx = F2;
    lm.config = std::move(la.config);
    return lm;
}

MinimalConfiguration minimal_configuration(const ReducedSystem& sys, const MinimalOptions& opt) {
    const int S = std::max(3, opt.starts);
    MinimalConfiguration out;
    std::vector<BrokenConfiguration> cfg(S);
    out.sample_x.resize(S);
    out.sample_F.resize(S);
    std::vector<double> guess;
    // Starts whose loop Newton fails are skipped.
    int failed = 0;
    for (int k = 0; k < S; ++k) {
        double x = kTwoPi * k / S;
        out.sample_x[k] = x;
        LoopAction la;
        bool ok = false;
        try {
            la = loop_action(sys, x, opt.loop, guess.empty() ? nullptr : &guess);
            ok = true;
        } catch (const NoConvergence&) {
        }
        if (!ok && !guess.empty()) {
            try {
                la = loop_action(sys, x, opt.loop);
                ok = true;
            } catch (const NoConvergence&) {
            }
        }
        if (!ok) {
            out.sample_F[k] = std::numeric_limits<double>::infinity();
            guess.clear();
            ++failed;
            continue;
        }
        out.sample_F[k] = la.F;
        guess.assign(la.config.points.begin() + 1, la.config.points.end());
        for (auto& p : guess) p += kTwoPi / S;
        cfg[k] = std::move(la.config);
    }
    if (failed == S) throw NoConvergence("minimal_configuration: every start failed", 0.0);
    auto [mn, mx] = std::minmax_element(out.sample_F.begin(), out.sample_F.end());
    if (*mx - *mn < opt.flat_tol) {
        out.degenerate_integrable = true;
        int k = static_cast<int>(mn - out.sample_F.begin());
        out.x_star = out.sample_x[k];
        out.F = out.sample_F[k];
        out.config = cfg[k];
        LocalMinimum lm{out.x_star, out.F, 0.0, cfg[k]};
        out.minima.push_back(lm);
        out.basins.push_back(lm);
        return out;
    }
    for (int k = 0; k < S; ++k) {
        double f = out.sample_F[k], fl = out.sample_F[(k + S - 1) % S], fr = out.sample_F[(k + 1) % S];
        if (!std::isfinite(f) || !(f <= fl && f < fr)) continue;
        LocalMinimum lm;
        try {
            lm = refine_minimum(sys, out.sample_x[k], opt.loop, &cfg[k], kTwoPi / S);
        } catch (const NoConvergence&) {
            continue;
        }
        lm.x = wrap_angle(lm.x);
        bool dup = false;
        for (auto& o : out.minima)
            if (wrapped_distance(o.x, lm.x) < 1e-6) {
                dup = true;
                if (lm.F < o.F) o = lm;
            }
        if (!dup) out.minima.push_back(std::move(lm));
    }
    if (out.minima.empty()) throw NoConvergence("minimal_configuration: no local minimum found", 0.0);
    std::sort(out.minima.begin(), out.minima.end(), [](const auto& a, const auto& b) { return a.F < b.F; });
    const auto& best = out.minima.front();
    out.x_star = best.x;
    out.F = best.F;
    out.config = best.config;
    for (const auto& lm : out.minima)
        if (lm.F - best.F <= opt.basin_tol) out.basins.push_back(lm);
    if (out.minima.size() > 1) out.gap = out.minima[1].F - best.F;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

BranchPoint point_of(const ReducedSystem& sys, const LocalMinimum& lm, bool hyp) {
    BranchPoint p;
    p.E = sys.energy;
    p.x = lm.x;
    p.F = lm.F;
    p.F_xx = lm.F_xx;
    if (hyp) {
        auto h = hyperbolicity_check(sys, lm.config);
        p.lambda0 = h.lambda0;
        p.trace = h.floquet_trace;
        p.hyperbolic = h.hyperbolic;
    } else {
        p.lambda0 = jacobi_matrix(lm.config).eigenvalues[0];
    }
    return p;
}

}  // namespace

ContinuationResult continue_in_energy(const ReducedFamily& family, double E_lo, double E_hi, int steps,
                                      const ContinuationOptions& opt) {
    if (steps < 1 || !(E_hi > E_lo)) throw DomainError("continue_in_energy: empty energy range");
    ContinuationResult out;
    for (int k = 0; k <= steps; ++k) out.energies.push_back(E_lo + (E_hi - E_lo) * k / steps);
    const LoopOptions& lo = opt.minimal.loop;
    const double fold_tol = 1e-8;

    struct Live {
        int branch;
        LocalMinimum last;
        double x_prev;
        bool has_prev = false;
        bool alive = true;
    };
    std::vector<Live> live;

    auto first = minimal_configuration(family(out.energies[0]), opt.minimal);
    if (first.degenerate_integrable) {
        Branch b;
        b.flat = true;
        for (double E : out.energies) {
            auto sys = family(E);
            auto la = loop_action(sys, 0.0, lo);
            BranchPoint p;
            p.E = E;
            p.F = la.F;
            p.lambda0 = jacobi_matrix(la.config).eigenvalues[0];
            if (opt.hyperbolicity) {
                auto h = hyperbolicity_check(sys, la.config);
                p.trace = h.floquet_trace;
                p.hyperbolic = h.hyperbolic;
            }
            b.points.push_back(p);
            out.global_branch.push_back(0);
        }
        out.branches.push_back(std::move(b));
        return out;
    }

    auto start_branch = [&](const ReducedSystem& sys, const LocalMinimum& lm) {
        Branch b;
        b.id = static_cast<int>(out.branches.size());
        b.points.push_back(point_of(sys, lm, opt.hyperbolicity));
        out.branches.push_back(std::move(b));
        live.push_back({static_cast<int>(out.branches.size()) - 1, lm, lm.x});
    };
    {
        auto sys = family(out.energies[0]);
        for (const auto& lm : first.minima) start_branch(sys, lm);
    }

    auto global_at = [&](double E) {
        int arg = -1;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : out.branches)
            for (const auto& p : b.points)
                if (p.E == E && p.F < best) {
                    best = p.F;
                    arg = b.id;
                }
        return arg;
    };
    out.global_branch.push_back(global_at(out.energies[0]));

    auto track = [&](const ReducedSystem& sys, const Live& l, double x_pred) -> std::optional<LocalMinimum> {
        try {
            auto lm = refine_minimum(sys, x_pred, lo, &l.last.config, 0.5);
            if (!(lm.F_xx > fold_tol) || std::abs(lm.x - x_pred) > 0.5) return std::nullopt;
            return lm;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    for (int k = 1; k <= steps; ++k) {
        const double E = out.energies[k];
        auto sys = family(E);
        for (auto& l : live) {
            if (!l.alive) continue;
            double x_pred = l.has_prev ? 2 * l.last.x - l.x_prev : l.last.x;
            auto lm = track(sys, l, x_pred);
            if (!lm) {
                l.alive = false;
                out.branches[l.branch].fold = true;
                continue;
            }
            // Two branches collapsing onto one minimum end at a fold.
            bool merged = false;
            for (const auto& o : live)
                if (&o != &l && o.alive && o.last.config.energy == E &&
                    wrapped_distance(o.last.x, lm->x) < opt.match_tol)
                    merged = true;
            if (merged) {
                l.alive = false;
                out.branches[l.branch].fold = true;
                continue;
            }
            l.x_prev = l.last.x;
            l.has_prev = true;
            l.last = std::move(*lm);
            out.branches[l.branch].points.push_back(point_of(sys, l.last, opt.hyperbolicity));
        }
        auto mc = minimal_configuration(sys, opt.minimal);
        for (const auto& lm : mc.minima) {
            bool known = false;
            for (const auto& l : live)
                if (l.alive && l.last.config.energy == E && wrapped_distance(l.last.x, lm.x) < opt.match_tol)
                    known = true;
            if (!known) start_branch(sys, lm);
        }
        out.global_branch.push_back(global_at(E));

        int a = out.global_branch[k - 1], b = out.global_branch[k];
        if (a < 0 || b < 0 || a == b) continue;
        auto at = [&](int br, double EE) -> const BranchPoint* {
            for (const auto& p : out.branches[br].points)
                if (p.E == EE) return &p;
            return nullptr;
        };
        const BranchPoint *a0 = at(a, out.energies[k - 1]), *a1 = at(a, E);
        const BranchPoint *b0 = at(b, out.energies[k - 1]), *b1 = at(b, E);
        if (!a0 || !a1 || !b0 || !b1) continue;

        // Bisection on the action difference between the two branches.
        auto branch_F = [&](const BranchPoint* p0, const BranchPoint* p1, double EE) {
            double s = (EE - p0->E) / (p1->E - p0->E);
            double xg = p0->x + s * wrap_centered(p1->x - p0->x);
            return refine_minimum(family(EE), xg, lo, nullptr, 0.5).F;
        };
        double El = out.energies[k - 1], Eh = E;
        double Dl = a0->F - b0->F;
        double Em = 0.5 * (El + Eh), Fa = 0, Fb = 0;
        for (int it = 0; it < 60; ++it) {
            Em = 0.5 * (El + Eh);
            Fa = branch_F(a0, a1, Em);
            Fb = branch_F(b0, b1, Em);
            double D = Fa - Fb;
            if (std::abs(D) <= opt.bisect_tol || Eh - El < 1e-14 * std::max(1.0, std::abs(Em))) break;
            if ((D < 0) == (Dl < 0)) {
                El = Em;
                Dl = D;
            } else {
                Eh = Em;
            }
        }
        const double h = 1e-5 * std::max(1.0, std::abs(Em));
        Bifurcation bf;
        bf.E = Em;
        bf.branch_a = a;
        bf.branch_b = b;
        bf.F_a = Fa;
        bf.F_b = Fb;
        bf.dFdE_a = (branch_F(a0, a1, Em + h) - branch_F(a0, a1, Em - h)) / (2 * h);
        bf.dFdE_b = (branch_F(b0, b1, Em + h) - branch_F(b0, b1, Em - h)) / (2 * h);
        out.bifurcations.push_back(bf);
    }
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const BrokenConfiguration& c) {
    nlohmann::json j;
    j["points"] = c.points;
    j["times"] = c.times;
    j["energy"] = c.energy;
    j["g"] = c.g;
    j["total_action"] = c.total_action;
    j["interior_EL_residual"] = c.interior_EL_residual;
    j["interior_positive"] = c.interior_positive;
    std::vector<double> y0, y1;
    for (const auto& s : c.segments) {
        y0.push_back(s.y0);
        y1.push_back(s.y1);
    }
    j["momenta_start"] = y0;
    j["momenta_end"] = y1;
    return j;
}

nlohmann::json to_json(const JacobiMatrix& J) {
    nlohmann::json j;
    j["A"] = std::vector<double>(J.A.data(), J.A.data() + J.A.size());
    j["B"] = std::vector<double>(J.B.data(), J.B.data() + J.B.size());
    j["eigenvalues"] = std::vector<double>(J.eigenvalues.data(), J.eigenvalues.data() + J.eigenvalues.size());
    j["gap"] = J.gap;
    return j;
}

nlohmann::json to_json(const HyperbolicityReport& h) {
    nlohmann::json j;
    j["lambda0"] = h.lambda0;
    j["jacobi_positive"] = h.jacobi_positive;
    j["floquet_trace"] = h.floquet_trace;
    j["multipliers"] = {{h.multipliers[0].real(), h.multipliers[0].imag()},
                        {h.multipliers[1].real(), h.multipliers[1].imag()}};
    j["hyperbolic"] = h.hyperbolic;
    j["parabolic"] = h.parabolic;
    j["consistent"] = h.consistent;
    j["closure_residual"] = h.closure_residual;
    return j;
}

nlohmann::json to_json(const MinimalConfiguration& r) {
    nlohmann::json j;
    j["x_star"] = r.x_star;
    j["F"] = r.F;
    j["degenerate_integrable"] = r.degenerate_integrable;
    j["gap"] = std::isfinite(r.gap) ? nlohmann::json(r.gap) : nlohmann::json(nullptr);
    j["config"] = to_json(r.config);
    j["minima"] = nlohmann::json::array();
    for (const auto& m : r.minima) j["minima"].push_back({{"x", m.x}, {"F", m.F}, {"F_xx", m.F_xx}});
    j["basins"] = r.basins.size();
    return j;
}

nlohmann::json to_json(const ContinuationResult& r) {
    nlohmann::json j;
    j["energies"] = r.energies;
    j["global_branch"] = r.global_branch;
    j["branches"] = nlohmann::json::array();
    for (const auto& b : r.branches) {
        nlohmann::json jb{{"id", b.id}, {"fold", b.fold}, {"flat", b.flat}, {"points", nlohmann::json::array()}};
        for (const auto& p : b.points)
            jb["points"].push_back({{"E", p.E}, {"x", p.x}, {"F", p.F}, {"F_xx", p.F_xx}, {"lambda0", p.lambda0},
                                    {"trace", p.trace}, {"hyperbolic", p.hyperbolic}});
        j["branches"].push_back(jb);
    }
    j["bifurcations"] = nlohmann::json::array();
    for (const auto& b : r.bifurcations)
        j["bifurcations"].push_back({{"E", b.E}, {"branch_a", b.branch_a}, {"branch_b", b.branch_b}, {"F_a", b.F_a},
                                     {"F_b", b.F_b}, {"dFdE_a", b.dFdE_a}, {"dFdE_b", b.dFdE_b}});
    return j;
}

void write_branches_csv(const ContinuationResult& r, std::ostream& os) {
    os << "branch,E,x,F,lambda0,trace,verdict\n";
    os << std::setprecision(17);
    for (const auto& b : r.branches)
        for (const auto& p : b.points) {
            const char* verdict = b.flat ? "flat" : (p.hyperbolic ? "hyperbolic" : "non-hyperbolic");
            os << b.id << ',' << p.E << ',' << p.x << ',' << p.F << ',' << p.lambda0 << ',' << p.trace << ','
               << verdict << '\n';
        }
}

}  // namespace matherlab::action
