// Acceptance run: one PASS/FAIL line per criterion.

#include "matherlab/flow/flow.hpp"
#include "matherlab/mather/mather.hpp"
#include "matherlab/normalform/normalform.hpp"
#include "support/jacobi_oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace matherlab;
using model::FourierTaylorSeries;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(const char* id, const char* title, const std::function<void(Verdict&)>& body) {
    Verdict v;
    auto t0 = Clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failures;
    std::printf("%s %s  %s:%s (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
}

std::shared_ptr<model::MechanicalHamiltonian> rotor1() {
    FourierTaylorSeries V(1, Vec::Zero(1), 2, 0);
    return std::make_shared<model::MechanicalHamiltonian>(Mat::Identity(1, 1), V);
}

// Product pendulum with the coupling -d (1 - cos x1)(1 - cos x2); it leaves
// the axes and the Hessian at the origin unchanged.
std::shared_ptr<model::MechanicalHamiltonian> coupled_pendulum(double e1, double e2, double d) {
    FourierTaylorSeries V(2, Vec::Zero(2), 1, 0);
    V.add_real_mode({0, 0}, {0, 0}, -e1 - e2 - d);
    V.add_real_mode({1, 0}, {0, 0}, e1 + d);
    V.add_real_mode({0, 1}, {0, 0}, e2 + d);
    V.add_real_mode({1, 1}, {0, 0}, -0.5 * d);
    V.add_real_mode({1, -1}, {0, 0}, -0.5 * d);
    return std::make_shared<model::MechanicalHamiltonian>(Mat::Identity(2, 2), V);
}

void ac1(Verdict& v) {
    for (double eps : {0.01, 0.04}) {
        auto t0 = Clock::now();
        auto f = mather::flat_polygon(model::pendulum(eps));
        const double t = seconds_since(t0);
        using boost::math::quadrature::gauss_kronrod;
        const double oracle =
            gauss_kronrod<double, 61>::integrate([&](double x) { return std::sqrt(2 * eps * (1 - std::cos(x))); }, 0.0,
                                                 kTwoPi, 15, 1e-14) /
            kTwoPi;
        const double em = std::abs(f.half_width_minus / oracle - 1), ep = std::abs(f.half_width_plus / oracle - 1);
        v.detail << " eps=" << eps << " width=[" << -f.half_width_minus << ", " << f.half_width_plus
                 << "] oracle=" << oracle << " rel.err=" << std::max(em, ep) << " time=" << t << "s;";
        v.require(em <= 0.02 && ep <= 0.02, "half-width within 2%");
        v.require(t <= 120, "runtime <= 2 min");
    }
}

void duality_suite(Verdict& v, const char* name, const mather::AlphaBeta& ab, unsigned seed, double c_lo, double c_hi,
                   double w_lo, double w_hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uc(c_lo, c_hi), uw(w_lo, w_hi);
    std::vector<double> cs(20), ws(10);
    for (auto& c : cs) c = uc(rng);
    for (auto& w : ws) w = uw(rng);
    auto d = mather::alpha_beta_tables(ab, cs, ws);
    const long cross = d.residual.size();
    v.detail << " " << name << ": " << cross << " cross-samples min residual " << d.min_residual << ", "
             << d.dual_pairs.size() << " dual pairs max residual " << d.max_dual_residual << ";";
    v.require(cross >= 200, std::string(name) + " sample count");
    v.require(d.min_residual >= -1e-6, std::string(name) + " Fenchel inequality");
    v.require(d.dual_pairs.size() == 20, std::string(name) + " dual pair count");
    v.require(d.max_dual_residual <= 1e-5, std::string(name) + " dual pair equality");
}

void ac2(Verdict& v) {
    mather::AlphaBeta pend(action::ReducedSystem{model::pendulum(0.04), 0.0});
    duality_suite(v, "pendulum", pend, 1, -1.0, 1.0, -1.0, 1.0);

    // Double-resonance model reduced on the energy level; time is x2.
    auto sys = action::reduce(model::pendulum_rotor(0.04, 0.5), 1.0, 1);
    mather::AlphaBetaOptions o;
    o.max_denominator = 4;
    o.omega_min = -1.2;
    o.omega_max = 1.2;
    mather::AlphaBeta dr(sys, o);
    duality_suite(v, "double resonance", dr, 2, -0.5, 0.5, -1.0, 1.0);
}

void ac3(Verdict& v) {
    FourierTaylorSeries h(2, Vec::Zero(2), 8, 8);
    h.add_real_mode({0, 0}, {2, 0}, 0.5);
    h.add_real_mode({0, 0}, {0, 2}, 0.5);
    FourierTaylorSeries P(2, Vec::Zero(2), 8, 8);
    P.add_real_mode({1, 0}, {0, 0}, 1.0);
    P.add_real_mode({0, 1}, {0, 0}, 0.5);
    P.add_real_mode({1, 1}, {0, 0}, 0.0, 0.3);
    model::NearIntegrableSystem sys;
    sys.h = h;
    sys.P = P;
    sys.R = 1;
    const resonance::RationalVec omega{resonance::Rational(0), resonance::Rational(1)};
    const Vec y = (Vec(2) << 0.0, 1.0).finished();
    normalform::NormalFormOptions opt;
    opt.symplectic_samples = 100;
    auto t0 = Clock::now();
    auto sweep = normalform::epsilon_sweep(sys, y, omega, {1e-3, 1e-4, 1e-5}, opt);
    auto rep = normalform::verify_remainder(sweep);
    const double t = seconds_since(t0);
    double rr = -1;
    for (const auto& f : rep.fits)
        if (f.piece == "R_r") rr = f.measured;
    double defect = 0;
    for (const auto& r : sweep) defect = std::max(defect, r.symplectic_defect);
    const double drop = sweep[0].nonresonant_before / sweep[0].nonresonant_after_step1;
    v.detail << " R_r exponent " << rr << " (need >= 4/3), symplectic defect " << defect << ", step-1 drop " << drop
             << "x at eps=1e-3, time " << t << "s";
    v.require(rr >= 4.0 / 3.0, "remainder exponent");
    v.require(defect <= 1e-7, "symplecticity");
    v.require(drop >= 10, "non-resonant content drop");
    v.require(t <= 300, "runtime <= 5 min");
}

void ac4(Verdict& v) {
    Vec eps = (Vec(2) << 0.1, 0.2).finished();
    auto H = model::product_pendulum(Mat::Identity(2, 2), eps);
    action::LoopOptions lo;
    lo.m = 16;
    int checked = 0, disagree = 0, hyperbolic = 0;
    auto t0 = Clock::now();
    for (int k = 0; k < 20; ++k) {
        const double E = 0.1 * std::pow(30.0, k / 19.0);
        auto sys = action::reduce(H, E, 0);
        for (double x : {0.0, std::numbers::pi}) {
            auto conf = action::stationary_configuration(sys, std::vector<double>(lo.m, x), lo);
            auto hc = action::hyperbolicity_check(sys, conf);
            const bool jac = hc.lambda0 > 1e-8, flo = std::abs(hc.floquet_trace) > 2 + 1e-6;
            ++checked;
            hyperbolic += flo;
            disagree += jac != flo;
        }
    }
    const double t = seconds_since(t0);
    v.detail << " " << checked << " configurations on 20 energies, " << hyperbolic << " hyperbolic, " << disagree
             << " disagreements, time " << t << "s";
    v.require(disagree == 0, "zero disagreements");
    v.require(hyperbolic > 0 && hyperbolic < checked, "both verdicts exercised");
    v.require(t <= 300, "runtime <= 5 min");
}

void ac5(Verdict& v) {
    const double eps = 0.04;
    Mat C = (Mat(2, 2) << eps, 0.0, 0.0, 2 * eps).finished();
    auto sp = mather::fixed_point_spectrum(Mat::Identity(2, 2), C);
    auto H = model::product_pendulum(Mat::Identity(2, 2), (Vec(2) << eps, 2 * eps).finished());
    mather::ChannelOptions o;
    o.minimal.loop.m = 32;
    o.minimal.starts = 8;
    auto t0 = Clock::now();
    // Edge class g_i: k_i = 1, k_{i+1} = 0.
    auto d = mather::channel_track(H, {1, 0}, 1e-6, 1e-2, 12, o);
    const double t = seconds_since(t0);
    const double expect = 1.0 / sp.lambda[0];
    v.detail << " slope " << d.law.slope << " vs (k_i+k_{i+1})/lambda_1 = " << expect << ", R^2 " << d.law.r2 << ", "
             << d.points.size() << " energies, time " << t << "s";
    v.require(!d.ended_early, "channel continued over the whole range");
    v.require(std::abs(d.law.slope / expect - 1) <= 0.05, "slope within 5%");
    v.require(d.law.r2 >= 0.99, "R^2 >= 0.99");
    v.require(t <= 600, "runtime <= 10 min");
}

void ac6(Verdict& v) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    long mismatches = 0, checks = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 3;
        Vec w(n);
        for (int j = 0; j < n; ++j) w[j] = u(rng);
        std::vector<double> err(1001, 0);
        for (int k = 1; k <= 1000; ++k)
            for (int j = 0; j < n; ++j) {
                double x = k * w[j];
                err[k] = std::max(err[k], std::abs(x - std::nearbyint(x)));
            }
        long best = 1;
        for (int K = 2; K <= 1000; ++K) {
            if (K > 2 && err[K - 1] < err[best]) best = K - 1;
            const double bound = std::pow(static_cast<double>(K), -1.0 / n);
            long first = 0;
            for (int k = 1; k < K && !first; ++k)
                if (err[k] <= bound) first = k;
            auto a = resonance::dirichlet_approx(w, K);
            auto b = resonance::dirichlet_approx(w, K, resonance::DirichletMode::best);
            checks += 2;
            mismatches += (a.k != first || !a.bound_met) + (b.k != best);
        }
    }
    std::uniform_int_distribution<int> ui(-1000, 1000);
    int frames = 0, bad = 0;
    while (frames < 1000) {
        const int n = 2 + frames % 3;
        IntVec k(n);
        for (auto& a : k) a = ui(rng);
        if (resonance::gcd_of(k) != 1) continue;
        auto F = resonance::unimodular_complete(k);
        const long long det = resonance::integer_det(F.I);
        auto P = resonance::int_multiply(F.I, F.I_inv);
        bool id = true;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) id &= P[i][j] == (i == j ? 1 : 0);
        bad += std::abs(det) != 1 || F.column(0) != k || !id;
        ++frames;
    }
    v.detail << " " << checks << " Dirichlet cases (K <= 1000, 100 vectors) with " << mismatches << " mismatches; "
             << frames << " unimodular frames with " << bad << " failures";
    v.require(mismatches == 0, "Dirichlet scan agreement");
    v.require(bad == 0, "unimodular determinant");
}

void ac7(Verdict& v) {
    weakkam::ActionKernel K(action::ReducedSystem{model::pendulum(0.04), 0.0});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1, 1), P(0, 0.5), C(-0.3, 0.3);
    int mono = 0, expand = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> a(K.nx()), b(K.nx());
        for (int i = 0; i < K.nx(); ++i) {
            a[i] = U(rng);
            b[i] = a[i] + P(rng);
        }
        double sup = 0;
        for (int i = 0; i < K.nx(); ++i) sup = std::max(sup, b[i] - a[i]);
        auto u = weakkam::GridFunction::line(K.nx(), kTwoPi, a), w = weakkam::GridFunction::line(K.nx(), kTwoPi, b);
        const double c = C(rng);
        const auto dir = k % 2 ? weakkam::Direction::forward : weakkam::Direction::backward;
        auto Tu = weakkam::lax_oleinik_step(u, K, dir, c), Tw = weakkam::lax_oleinik_step(w, K, dir, c);
        double lo = 0, gap = 0;
        for (int i = 0; i < K.nx(); ++i) {
            lo = std::min(lo, Tw[i] - Tu[i]);
            gap = std::max(gap, std::abs(Tw[i] - Tu[i]));
        }
        mono += lo < -1e-12;
        expand += gap > sup + 1e-12;
    }
    auto um = weakkam::solve_weak_kam(K, 0.0, weakkam::Direction::backward);
    auto up = weakkam::solve_weak_kam(K, 0.0, weakkam::Direction::forward);
    auto dom = weakkam::check_domination(K, um, 100, 3, 10.0);
    auto dom2 = weakkam::check_domination(K, up, 100, 4, 10.0);
    const double tol = um.grid_tol();
    auto bf = weakkam::barrier(um.u, up.u, 0);
    auto cls = weakkam::aubry_classes(K, um);
    double on_aubry = 0, raw_min = 0;
    for (int i = 0; i < K.nx(); ++i) {
        raw_min = std::min(raw_min, um.u[i] - up.u[i] - (um.u[0] - up.u[0]));
        if (cls.mask[i]) on_aubry = std::max(on_aubry, std::abs(bf.B[i]));
    }
    v.detail << " 1000 random pairs: " << mono << " monotonicity and " << expand
             << " expansion violations; domination max defect " << std::max(dom.max_defect, dom2.max_defect)
             << " (tol " << dom.tolerance << "); barrier min " << raw_min << ", max |B| on Aubry " << on_aubry
             << " (grid tol " << tol << ")";
    v.require(mono == 0 && expand == 0, "Lax-Oleinik properties");
    v.require(um.converged && up.converged, "weak KAM convergence");
    v.require(dom.pass && dom2.pass && dom.samples == 100, "domination");
    v.require(raw_min >= -tol, "barrier nonnegative");
    v.require(on_aubry <= tol, "barrier zero on the Aubry set");
}

void ac8(Verdict& v) {
    auto H0 = model::pendulum(0.5);
    FourierTaylorSeries V = H0->V();
    V.add_real_mode({1}, {0}, 1e-3);
    auto He = std::make_shared<model::MechanicalHamiltonian>(Mat::Identity(1, 1), V);
    auto r1 = flow::gronwall_compare(flow::VectorField::from_hamiltonian(H0), flow::VectorField::from_hamiltonian(He),
                                     (Vec(2) << 0.5, 0.3).finished(), 5.0, 50);

    auto G0 = model::product_pendulum(Mat::Identity(2, 2), (Vec(2) << 0.1, 0.2).finished());
    auto Ge = coupled_pendulum(0.1, 0.2, 1e-3);
    auto r2 = flow::gronwall_compare(flow::VectorField::from_hamiltonian(G0), flow::VectorField::from_hamiltonian(Ge),
                                     (Vec(4) << 0.4, -0.7, 0.2, 0.5).finished(), 4.0, 50);
    v.detail << " pendulum + cos forcing: " << r1.t.size() << " times, " << r1.violations
             << " violations; product pendulum + coupling: " << r2.t.size() << " times, " << r2.violations
             << " violations";
    v.require(r1.t.size() == 50 && r2.t.size() == 50, "50 sampled times");
    v.require(r1.violations == 0 && r2.violations == 0, "zero violations");
}

void ac9(Verdict& v) {
    auto H = model::pendulum_rotor(0.25, 0.5);
    Vec c = (Vec(2) << 0.0, 0.5).finished(), cp = (Vec(2) << 0.05, 0.5).finished();
    mather::ConnectGeometry g;
    g.horizon = 100;
    auto t0 = Clock::now();
    auto o = mather::connecting_orbit(H, c, cp, mather::StepMode::space_step, g);
    const double t = seconds_since(t0);
    v.detail << " endpoint distances " << o.dist_minus << ", " << o.dist_plus << " at horizon " << g.horizon
             << ", certificate margin " << o.certificate.margin << ", time " << t << "s";
    v.require(o.dist_minus <= 1e-3 && o.dist_plus <= 1e-3, "endpoint distances");
    v.require(o.certificate.margin > 0 && !o.certificate.trivial, "positive certificate margin");
    v.require(t <= 600, "runtime <= 10 min");
}

void ac10(Verdict& v) {
    const double eps = 0.25, E = 1.0;
    auto sys = action::reduce(model::product_pendulum(Mat::Identity(2, 2), (Vec(2) << eps, 0.0).finished()), E);
    auto metric = oracle::pendulum_metric(eps, E);
    action::LoopOptions lo;
    lo.m = 32;
    double worst = 0;
    for (int k = 0; k < 8; ++k) {
        const double x = -2.8 + 0.8 * k;
        auto la = action::loop_action(sys, x, lo);
        worst = std::max(worst, std::abs(la.F - oracle::dense_oracle(metric, x, x, 0, kTwoPi, 1500)));
    }

    auto rs = action::reduce(model::pendulum_rotor(eps, 0.5), E);
    const double h = 1e-4;
    double dworst = 0;
    for (auto [x, xp] : {std::pair{0.7, 0.95}, std::pair{-1.0, -0.6}, std::pair{2.0, 2.1}}) {
        auto s = action::two_point_action(rs, x, xp, 3, 16);
        auto F = [&](double a, double b) { return action::two_point_action(rs, a, b, 3, 16); };
        const double fd[5] = {(F(x + h, xp).F - F(x - h, xp).F) / (2 * h),
                              (F(x, xp + h).F - F(x, xp - h).F) / (2 * h),
                              (F(x + h, xp).dF_dx - F(x - h, xp).dF_dx) / (2 * h),
                              (F(x, xp + h).dF_dx - F(x, xp - h).dF_dx) / (2 * h),
                              (F(x, xp + h).dF_dxp - F(x, xp - h).dF_dxp) / (2 * h)};
        const double an[5] = {s.dF_dx, s.dF_dxp, s.F_xx, s.F_xxp, s.F_xpxp};
        for (int i = 0; i < 5; ++i) dworst = std::max(dworst, std::abs(fd[i] - an[i]));
    }
    v.detail << " loop action vs dense oracle max error " << worst << " on 8 points; derivative identities max error "
             << dworst;
    v.require(worst <= 1e-6, "loop action oracle");
    v.require(dworst <= 1e-6, "finite differences");
}

}  // namespace

int main() {
    set_warnings_enabled(false);
    report("AC1", "pendulum flat half-width", ac1);
    report("AC2", "alpha/beta duality", ac2);
    report("AC3", "normal form remainder", ac3);
    report("AC4", "Jacobi/Floquet agreement", ac4);
    report("AC5", "period-energy law", ac5);
    report("AC6", "Dirichlet and unimodular exactness", ac6);
    report("AC7", "weak KAM properties", ac7);
    report("AC8", "Gronwall bound", ac8);
    report("AC9", "connecting orbit", ac9);
    report("AC10", "loop action oracle", ac10);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
