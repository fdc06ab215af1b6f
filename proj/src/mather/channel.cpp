#include "matherlab/mather/mather.hpp"

#include "matherlab/flow/flow.hpp"

#include <algorithm>
#include <iomanip>

namespace matherlab::mather {

PeriodLaw fit_period_law(const std::vector<double>& E, const std::vector<double>& T) {
    if (E.size() != T.size()) throw DimensionError("fit_period_law: size mismatch");
    if (E.size() < 2) throw DomainError("fit_period_law: at least two points required");
    const int n = static_cast<int>(E.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        if (!(E[i] > 0)) throw DomainError("fit_period_law: energies must be positive");
        double x = -std::log(E[i]), y = T[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    if (vx <= 0) throw DomainError("fit_period_law: energies do not vary");
    PeriodLaw p;
    p.points = n;
    p.slope = cxy / vx;
    p.intercept = (sy - p.slope * sx) / n;
    p.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    return p;
}

namespace {

// Partition of the reduced loop with equal shares of real time, taken along
// the slowest of a few sample states, mixed half and half with uniform steps.
std::vector<double> graded_times(const model::Hamiltonian& H, const flow::TimePeriodicHamiltonian& red, int k, int m) {
    const int M = 4096, S = 8;
    const double T = red.period();
    std::vector<double> cum(M + 1, 0.0), dens(M);
    for (int j = 0; j < M; ++j) {
        double tau = T * (j + 0.5) / M, worst = 0;
        for (int s = 0; s < S; ++s) {
            double x = kTwoPi * s / S;
            try {
                Vec w(2);
                w << x, action::momentum_for_velocity(red, x, 0.0, tau);
                Vec z = red.lift(w, tau);
                double speed = std::abs(H.gradient(z, 0.0)[H.dof() + k]);
                if (speed > 0) worst = std::max(worst, 1.0 / speed);
            } catch (const Error&) {
            }
        }
        dens[j] = worst;
    }
    double total = 0;
    for (double v : dens) total += v;
    for (int j = 0; j < M; ++j)
        cum[j + 1] = cum[j] + 0.5 / M + (total > 0 ? 0.5 * dens[j] / total : 0.5 / M);
    std::vector<double> t(m + 1);
    int j = 0;
    for (int i = 0; i <= m; ++i) {
        double target = cum[M] * i / m;
        while (j < M - 1 && cum[j + 1] < target) ++j;
        double f = (target - cum[j]) / (cum[j + 1] - cum[j]);
        t[i] = T * (j + std::clamp(f, 0.0, 1.0)) / M;
    }
    t.front() = 0;
    t.back() = T;
    return t;
}

}  // namespace

ChannelData channel_track(const model::HamiltonianPtr& H, const IntVec& g, double E0, double E1, int steps,
                          const ChannelOptions& opt) {
    if (!H || H->dof() != 2 || g.size() != 2) throw DimensionError("channel_track: two degrees of freedom expected");
    if (steps < 2) throw DomainError("channel_track: at least two energies required");
    if (opt.log_spacing && !(E0 > 0 && E1 > 0)) throw DomainError("channel_track: log spacing needs positive energies");
    int k = std::abs(g[0]) == 1 ? 0 : (std::abs(g[1]) == 1 ? 1 : -1);
    if (k < 0) throw DomainError("channel_track: class needs a component equal to +-1");
    const int other = 1 - k;

    ChannelData d;
    d.g = g;
    d.E0 = E0;
    d.E1 = E1;
    d.eliminate = k;

    action::MinimalOptions mo = opt.minimal;
    mo.loop.g = g[other];

    // Continue from the highest energy down towards the fixed point, where
    // the loops get long and only warm starts converge reliably.
    std::vector<double> energies(steps);
    for (int s = 0; s < steps; ++s) {
        const double f = static_cast<double>(s) / (steps - 1);
        energies[s] = opt.log_spacing ? E0 * std::pow(E1 / E0, f) : E0 + (E1 - E0) * f;
    }
    std::sort(energies.rbegin(), energies.rend());

    std::optional<action::BrokenConfiguration> prev;
    double prev_x = 0, prev_E = 0;
    for (double E : energies) {
        ChannelPoint pt;
        pt.E = E;
        try {
            auto red = flow::reduce_isoenergetic(H, E, k, flow::ReductionConvention::tonelli, g[k]);
            action::ReducedSystem sys{red, E};
            if (opt.graded) mo.loop.times = graded_times(*H, *red, k, mo.loop.m);
            action::BrokenConfiguration cfg;
            if (!prev) {
                auto global = action::minimal_configuration(sys, mo);
                cfg = global.config;
                pt.x = global.x_star;
                pt.action = global.F;
            } else {
                action::BrokenConfiguration warm = *prev;
                if (opt.graded) warm.times = mo.loop.times;
                auto lm = action::refine_minimum(sys, prev_x, mo.loop, &warm, 0.5);
                cfg = lm.config;
                pt.x = wrap_angle(lm.x);
                pt.action = lm.F;
                if (opt.global_check) {
                    try {
                        auto global = action::minimal_configuration(sys, mo);
                        if (std::abs(wrap_centered(global.x_star - pt.x)) > opt.jump_tol &&
                            global.F < pt.action - 1e-12) {
                            d.bifurcations.push_back(opt.log_spacing ? std::sqrt(prev_E * E) : 0.5 * (prev_E + E));
                            cfg = global.config;
                            pt.x = global.x_star;
                            pt.action = global.F;
                        }
                    } catch (const NoConvergence&) {
                    }
                }
            }
            auto hc = action::hyperbolicity_check(sys, cfg, opt.ode_tol);
            pt.lambda0 = hc.lambda0;
            pt.trace = hc.floquet_trace;
            pt.hyperbolic = hc.hyperbolic;
            if (hc.lambda0 <= 1e-10) d.bifurcations.push_back(E);

            Vec w(2);
            w << cfg.points[0], cfg.segments[0].y0;
            Vec z = red->lift(w, 0.0);
            flow::Section sec{k, z[k], g[k], true};
            auto pr = flow::poincare_map(*H, sec, z, 0.0, 1e6, opt.ode_tol);
            pt.period = pr.time;
            Vec target = z;
            target[0] += kTwoPi * g[0];
            target[1] += kTwoPi * g[1];
            pt.closure = (pr.hit - target).norm();

            prev = cfg;
            prev_x = pt.x;
            prev_E = E;
        } catch (const Error& e) {
            warn(std::string("channel_track: orbit lost at E = ") + std::to_string(E) + ": " + e.what());
            d.ended_early = true;
            break;
        }
        d.points.push_back(pt);
    }
    std::sort(d.points.begin(), d.points.end(), [](const auto& a, const auto& b) { return a.E < b.E; });

    std::vector<std::pair<double, double>> et;
    for (const auto& p : d.points) et.push_back({p.E, p.period});
    std::sort(et.begin(), et.end());
    int use = std::max(2, static_cast<int>(std::lround(opt.tail_fraction * et.size())));
    if (static_cast<int>(et.size()) >= 2) {
        use = std::min<int>(use, static_cast<int>(et.size()));
        std::vector<double> Es, Ts;
        for (int i = 0; i < use; ++i) {
            Es.push_back(et[i].first);
            Ts.push_back(et[i].second);
        }
        d.law = fit_period_law(Es, Ts);
    }
    return d;
}

void write_channel_csv(const ChannelData& d, std::ostream& os) {
    os << "E,x,period,action,lambda0,trace,hyperbolic,closure\n" << std::setprecision(17);
    for (const auto& p : d.points)
        os << p.E << ',' << p.x << ',' << p.period << ',' << p.action << ',' << p.lambda0 << ',' << p.trace << ','
           << (p.hyperbolic ? 1 : 0) << ',' << p.closure << '\n';
}

nlohmann::json to_json(const ChannelData& d) {
    nlohmann::json j;
    j["g"] = d.g;
    j["E0"] = d.E0;
    j["E1"] = d.E1;
    j["eliminate"] = d.eliminate;
    j["points"] = d.points.size();
    j["law"] = {{"slope", d.law.slope}, {"intercept", d.law.intercept}, {"r2", d.law.r2}, {"points", d.law.points}};
    j["bifurcations"] = d.bifurcations;
    j["ended_early"] = d.ended_early;
    return j;
}

}  // namespace matherlab::mather
