#include "matherlab/mather/mather.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <iomanip>
#include <numeric>

namespace matherlab::mather {

namespace {

Vec state(double x, double y) { return (Vec(2) << x, y).finished(); }

// Same Hamiltonian, read as periodic over `q` of its periods.
class RepeatedPeriod final : public model::Hamiltonian {
public:
    RepeatedPeriod(model::HamiltonianPtr K, int q) : K_(std::move(K)), q_(q) {}
    int dof() const override { return K_->dof(); }
    double value(const Vec& z, double t) const override { return K_->value(z, t); }
    Vec gradient(const Vec& z, double t) const override { return K_->gradient(z, t); }
    Mat hessian(const Vec& z, double t) const override { return K_->hessian(z, t); }
    bool autonomous() const override { return false; }
    double period() const override { return q_ * K_->period(); }

private:
    model::HamiltonianPtr K_;
    int q_;
};

template <class F>
double solve_increasing(F f, double lo, double hi) {
    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, it);
    return 0.5 * (r.first + r.second);
}

// Convergents of the continued fraction of r.
std::vector<std::pair<long, long>> convergents(double r, long max_q) {
    std::vector<std::pair<long, long>> out;
    long p0 = 1, q0 = 0, p1 = static_cast<long>(std::floor(r)), q1 = 1;
    double frac = r - std::floor(r);
    out.push_back({p1, q1});
    while (frac > 1e-13 && q1 <= max_q) {
        double inv = 1.0 / frac;
        long a = static_cast<long>(std::floor(inv));
        frac = inv - a;
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_q) break;
        out.push_back({p2, q2});
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return out;
}

}  // namespace

const char* to_string(AlphaMethod m) { return m == AlphaMethod::weak_kam ? "weak-KAM" : "periodic-orbit"; }

AlphaBeta::AlphaBeta(action::ReducedSystem sys, AlphaBetaOptions opt) : sys_(std::move(sys)), opt_(std::move(opt)) {
    if (!sys_.K || sys_.K->dof() != 1) throw DimensionError("AlphaBeta: one degree of freedom expected");
    autonomous_ = sys_.K->autonomous();
}

const weakkam::ActionKernel& AlphaBeta::kernel() const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!kernel_) kernel_ = std::make_shared<weakkam::ActionKernel>(sys_, opt_.kernel);
    return *kernel_;
}

double AlphaBeta::critical_energy() const {
    if (!autonomous_) throw DomainError("critical_energy: time-periodic system");
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (e_crit_) return *e_crit_;
    }
    const auto& K = *sys_.K;
    auto fmin = [&](double x) {
        double y = action::momentum_for_velocity(K, x, 0.0, 0.0);
        return K.value(state(x, y), 0.0);
    };
    const int n = 256;
    int best = 0;
    double fb = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double f = fmin(kTwoPi * i / n);
        if (f > fb) {
            fb = f;
            best = i;
        }
    }
    const double h = kTwoPi / n;
    double x0 = kTwoPi * best / n;
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -fmin(x); }, x0 - h, x0 + h, 50);
    std::lock_guard<std::mutex> lock(mu_);
    x_crit_ = wrap_angle(r.first);
    e_crit_ = -r.second;
    return *e_crit_;
}

double AlphaBeta::y_on_level(double x, double E, int dir) const {
    const auto& K = *sys_.K;
    double ys = action::momentum_for_velocity(K, x, 0.0, 0.0);
    auto f = [&](double y) { return K.value(state(x, y), 0.0) - E; };
    if (f(ys) > 0) throw DomainError("AlphaBeta: energy below the level minimum");
    double step = 1.0, b = ys + dir * step;
    for (int it = 0; it < 200 && f(b) <= 0; ++it) {
        step *= 2;
        b = ys + dir * step;
    }
    double lo = std::min(ys, b), hi = std::max(ys, b);
    return solve_increasing([&](double y) { return dir * f(y); }, lo, hi);
}

// Quadrature along the level: I = (1/2π) ∮ y dx, T = ∮ dx / |K_y|.  The
// integrands peak at the ends of each half, next to the critical point.
RotationOrbit AlphaBeta::rotation_orbit(double E, int direction) const {
    if (!autonomous_) throw DomainError("rotation_orbit: time-periodic system");
    double Ec = critical_energy();
    if (E <= Ec) throw DomainError("rotation_orbit: energy at or below the critical level");
    const auto& K = *sys_.K;
    const int dir = direction >= 0 ? 1 : -1;
    const double xc = x_crit_;
    boost::math::quadrature::tanh_sinh<double> ts(12);
    auto both = [&](auto f) {
        constexpr double half = std::numbers::pi;
        return ts.integrate(f, xc, xc + half, 1e-13) + ts.integrate(f, xc + half, xc + 2 * half, 1e-13);
    };
    double I = dir * both([&](double x) { return y_on_level(x, E, dir); }) / kTwoPi;
    double T = both([&](double x) {
        double y = y_on_level(x, E, dir);
        return 1.0 / std::abs(K.gradient(state(x, y), 0.0)[1]);
    });
    RotationOrbit o;
    o.energy = E;
    o.direction = dir;
    o.period = T;
    o.omega = dir * kTwoPi / T;
    o.action_variable = I;
    o.mean_action = (kTwoPi * I - E * T) / T;
    return o;
}

// Energies are searched as E = Ec + exp(u).
double AlphaBeta::energy_for_period(double T, int dir) const {
    double Ec = critical_energy();
    double scale = std::max(1.0, std::abs(Ec));
    double ulo = std::log(1e-9 * scale), uhi = std::log(scale);
    auto per = [&](double u) { return rotation_orbit(Ec + std::exp(u), dir).period; };
    if (per(ulo) <= T) return Ec + std::exp(ulo);
    for (int it = 0; it < 200 && per(uhi) > T; ++it) uhi += 1.0;
    double u = solve_increasing([&](double v) { return T - per(v); }, ulo, uhi);
    return Ec + std::exp(u);
}

double AlphaBeta::energy_for_action(double I, int dir) const {
    double Ec = critical_energy();
    double scale = std::max(1.0, std::abs(Ec));
    double ulo = std::log(1e-9 * scale), uhi = std::log(scale);
    auto act = [&](double u) { return rotation_orbit(Ec + std::exp(u), dir).action_variable; };
    for (int it = 0; it < 200 && act(uhi) < I; ++it) uhi += 1.0;
    double u = solve_increasing([&](double v) { return act(v) - I; }, ulo, uhi);
    return Ec + std::exp(u);
}

double AlphaBeta::beta_rational(int p, int q) const {
    if (autonomous_) throw DomainError("beta_rational: autonomous system");
    if (q <= 0) throw DomainError("beta_rational: denominator must be positive");
    int g = std::gcd(std::abs(p), q);
    if (g > 1) {
        p /= g;
        q /= g;
    }
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = beta_cache_.find({p, q});
        if (it != beta_cache_.end()) return it->second;
    }
    action::ReducedSystem sq{std::make_shared<RepeatedPeriod>(sys_.K, q), sys_.energy};
    action::MinimalOptions mo = opt_.loop;
    mo.loop.m = std::max(4, opt_.loop.loop.m * q);
    mo.loop.g = p;
    auto r = action::minimal_configuration(sq, mo);
    double b = r.F / (q * sys_.loop_time());
    std::lock_guard<std::mutex> lock(mu_);
    beta_cache_[{p, q}] = b;
    return b;
}

AlphaValue AlphaBeta::alpha(double c, AlphaMethod m) const {
    AlphaValue out;
    out.method = m;
    if (m == AlphaMethod::weak_kam) {
        auto s = weakkam::solve_weak_kam(kernel(), c, weakkam::Direction::backward, opt_.weak_kam);
        out.alpha = s.alpha;
        out.omega = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    if (autonomous_) {
        double Ec = critical_energy();
        int dir = c >= 0 ? 1 : -1;
        double scale = std::max(1.0, std::abs(Ec));
        double I0 = rotation_orbit(Ec + 1e-9 * scale, dir).action_variable;
        if (std::abs(c) <= I0) {
            out.alpha = Ec;
            out.omega = 0;
            out.flat = true;
            return out;
        }
        double E = energy_for_action(std::abs(c), dir);
        auto o = rotation_orbit(E, dir);
        out.alpha = E;
        out.omega = o.omega;
        return out;
    }
    // Legendre transform of beta over the Farey rotations in range.
    const double T = sys_.loop_time();
    const double rlo = opt_.omega_min * T / kTwoPi, rhi = opt_.omega_max * T / kTwoPi;
    double best = -std::numeric_limits<double>::infinity(), best_w = 0;
    for (int q = 1; q <= opt_.max_denominator; ++q)
        for (int p = static_cast<int>(std::ceil(rlo * q)); p <= static_cast<int>(std::floor(rhi * q)); ++p) {
            if (std::gcd(std::abs(p), q) != 1) continue;
            double w = kTwoPi * p / (q * T);
            double v = c * w - beta_rational(p, q);
            if (v > best) {
                best = v;
                best_w = w;
            }
        }
    out.alpha = best;
    out.omega = best_w;
    return out;
}

double AlphaBeta::beta(double omega) const {
    if (autonomous_) {
        double Ec = critical_energy();
        if (omega == 0) return -Ec;
        int dir = omega > 0 ? 1 : -1;
        double T = kTwoPi / std::abs(omega);
        double E = energy_for_period(T, dir);
        auto o = rotation_orbit(E, dir);
        if (o.period < T * (1 - 1e-9)) return -Ec + std::abs(omega) * o.action_variable;
        return o.mean_action;
    }
    const double T = sys_.loop_time();
    const double r = omega * T / kTwoPi;
    const long qmax = opt_.max_denominator;
    auto cv = convergents(r, qmax);
    auto [p, q] = cv.back();
    if (std::abs(r - static_cast<double>(p) / q) < 1e-12) return beta_rational(static_cast<int>(p), static_cast<int>(q));
    if (cv.size() < 2) return beta_rational(static_cast<int>(p), static_cast<int>(q));
    // The last two convergents bracket r; interpolate linearly in the rotation.
    auto [p1, q1] = cv[cv.size() - 2];
    double r1 = static_cast<double>(p1) / q1, r2 = static_cast<double>(p) / q;
    double b1 = beta_rational(static_cast<int>(p1), static_cast<int>(q1));
    double b2 = beta_rational(static_cast<int>(p), static_cast<int>(q));
    return b1 + (b2 - b1) * (r - r1) / (r2 - r1);
}

AlphaBeta::Agreement AlphaBeta::compare_methods(double c) const {
    Agreement a;
    a.periodic = alpha(c, AlphaMethod::periodic_orbit).alpha;
    auto s = weakkam::solve_weak_kam(kernel(), c, weakkam::Direction::backward, opt_.weak_kam);
    a.weak_kam = s.alpha;
    a.tolerance = opt_.agreement_factor * s.grid_tol();
    a.agree = std::abs(a.periodic - a.weak_kam) <= a.tolerance;
    if (!a.agree)
        warn("alpha: weak-KAM and periodic-orbit values differ by " + std::to_string(std::abs(a.periodic - a.weak_kam)));
    return a;
}

// ---------------------------------------------------------------------------

namespace {

bool convex_samples(std::vector<double> x, std::vector<double> y) {
    std::vector<size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    for (size_t k = 1; k + 1 < idx.size(); ++k) {
        double x0 = x[idx[k - 1]], x1 = x[idx[k]], x2 = x[idx[k + 1]];
        if (x2 - x0 <= 0) continue;
        double interp = y[idx[k - 1]] + (y[idx[k + 1]] - y[idx[k - 1]]) * (x1 - x0) / (x2 - x0);
        if (y[idx[k]] > interp + 1e-8) return false;
    }
    return true;
}

}  // namespace

AlphaBetaData alpha_beta_tables(const AlphaBeta& ab, const std::vector<double>& cs, const std::vector<double>& omegas,
                                AlphaMethod method) {
    AlphaBetaData d;
    d.c = cs;
    d.omega = omegas;
    d.alpha_method = method;
    std::vector<AlphaValue> av(cs.size());
    for (size_t i = 0; i < cs.size(); ++i) av[i] = ab.alpha(cs[i], method);
    for (const auto& a : av) d.alpha.push_back(a.alpha);
    for (double w : omegas) d.beta.push_back(ab.beta(w));
    d.residual = Mat(cs.size(), omegas.size());
    d.min_residual = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cs.size(); ++i)
        for (size_t j = 0; j < omegas.size(); ++j) {
            d.residual(i, j) = d.alpha[i] + d.beta[j] - cs[i] * omegas[j];
            d.min_residual = std::min(d.min_residual, d.residual(i, j));
        }
    for (size_t i = 0; i < cs.size(); ++i) {
        double w = method == AlphaMethod::periodic_orbit ? av[i].omega
                                                          : ab.alpha(cs[i], AlphaMethod::periodic_orbit).omega;
        DualPair p{cs[i], w, d.alpha[i] + ab.beta(w) - cs[i] * w};
        d.max_dual_residual = std::max(d.max_dual_residual, std::abs(p.residual));
        d.dual_pairs.push_back(p);
    }
    d.alpha_convex = convex_samples(d.c, d.alpha);
    d.beta_convex = convex_samples(d.omega, d.beta);
    return d;
}

std::vector<std::pair<double, double>> fenchel_legendre(const AlphaBeta& ab, double omega, double c_lo, double c_hi,
                                                        int samples, double tol, AlphaMethod method) {
    if (!(c_hi > c_lo) || samples < 2) throw DomainError("fenchel_legendre: empty sampling range");
    const double b = ab.beta(omega);
    auto phi = [&](double c) { return ab.alpha(c, method).alpha + b - c * omega - tol; };
    std::vector<double> cs(samples + 1), ph(samples + 1);
    for (int k = 0; k <= samples; ++k) {
        cs[k] = c_lo + (c_hi - c_lo) * k / samples;
        ph[k] = phi(cs[k]);
    }
    auto edge = [&](double in, double out) {
        for (int it = 0; it < 40; ++it) {
            double mid = 0.5 * (in + out);
            (phi(mid) <= 0 ? in : out) = mid;
        }
        return in;
    };
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k <= samples; ++k) {
        if (ph[k] > 0) continue;
        int j = k;
        while (j + 1 <= samples && ph[j + 1] <= 0) ++j;
        double a = k > 0 ? edge(cs[k], cs[k - 1]) : cs[k];
        double z = j < samples ? edge(cs[j], cs[j + 1]) : cs[j];
        out.push_back({a, z});
        k = j;
    }
    return out;
}

void write_alpha_csv(const AlphaBetaData& d, std::ostream& os) {
    os << "c,alpha,method\n" << std::setprecision(17);
    for (size_t i = 0; i < d.c.size(); ++i) os << d.c[i] << ',' << d.alpha[i] << ',' << to_string(d.alpha_method) << '\n';
}

void write_beta_csv(const AlphaBetaData& d, std::ostream& os) {
    os << "omega,beta,method\n" << std::setprecision(17);
    for (size_t j = 0; j < d.omega.size(); ++j) os << d.omega[j] << ',' << d.beta[j] << ",periodic-orbit\n";
}

void write_duality_csv(const AlphaBetaData& d, std::ostream& os) {
    os << "kind,c,omega,residual\n" << std::setprecision(17);
    for (size_t i = 0; i < d.c.size(); ++i)
        for (size_t j = 0; j < d.omega.size(); ++j)
            os << "cross," << d.c[i] << ',' << d.omega[j] << ',' << d.residual(i, j) << '\n';
    for (const auto& p : d.dual_pairs) os << "dual," << p.c << ',' << p.omega << ',' << p.residual << '\n';
}

}  // namespace matherlab::mather
