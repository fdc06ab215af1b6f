#include "doctest.h"

#include "matherlab/action/action.hpp"
#include "support/jacobi_oracle.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

using namespace matherlab;
using namespace matherlab::action;
using model::FourierTaylorSeries;
using namespace matherlab::oracle;

namespace {

ReducedSystem rotor_system() {
    FourierTaylorSeries V(1, Vec::Zero(1), 2, 0);
    Mat A = Mat::Identity(1, 1);
    return {std::make_shared<model::MechanicalHamiltonian>(A, V), 0.0};
}

// 1/2 y^2 + V(x) on one degree of freedom, treated as 2π-periodic in time.
ReducedSystem one_dof(const FourierTaylorSeries& V, double E = 0) {
    return {std::make_shared<model::MechanicalHamiltonian>(Mat::Identity(1, 1), V), E};
}

LoopOptions loop_m(int m) {
    LoopOptions o;
    o.m = m;
    return o;
}

}  // namespace

TEST_CASE("rotor segment action is quadratic") {
    auto sys = rotor_system();
    for (int m : {8, 32}) {
        for (double dx : {0.0, 0.3, -1.7}) {
            auto s = two_point_action(sys, 0.4, 0.4 + dx, 2, m);
            CHECK(s.F == doctest::Approx(m * dx * dx / (4 * std::numbers::pi)).epsilon(1e-11));
            CHECK(s.y0 == doctest::Approx(m * dx / kTwoPi).epsilon(1e-11));
            CHECK(s.F_xxp == doctest::Approx(-m / kTwoPi).epsilon(1e-10));
        }
    }
}

TEST_CASE("rotor Jacobi matrix is the circulant") {
    auto sys = rotor_system();
    const int m = 16;
    auto la = loop_action(sys, 1.0, loop_m(m));
    CHECK(std::abs(la.F) < 1e-12);
    auto J = jacobi_matrix(la.config);
    for (int i = 0; i < m; ++i) {
        CHECK(J.A[i] == doctest::Approx(m / std::numbers::pi).epsilon(1e-10));
        CHECK(J.B[i] == doctest::Approx(-m / kTwoPi).epsilon(1e-10));
    }
    std::vector<double> ref;
    for (int j = 0; j < m; ++j) ref.push_back(m / std::numbers::pi * (1 - std::cos(kTwoPi * j / m)));
    std::sort(ref.begin(), ref.end());
    for (int j = 0; j < m; ++j) CHECK(std::abs(J.eigenvalues[j] - ref[j]) < 1e-9);
    CHECK(std::abs(J.eigenvalues[0]) < 1e-9);

    auto h = hyperbolicity_check(sys, la.config);
    CHECK(h.parabolic);
    CHECK_FALSE(h.hyperbolic);
    CHECK(h.consistent);
}

TEST_CASE("rotor loop action is flat in x") {
    auto sys = rotor_system();
    LoopOptions o = loop_m(12);
    o.g = 1;
    for (double x : {0.0, 1.0, 2.5}) CHECK(loop_action(sys, x, o).F == doctest::Approx(std::numbers::pi).epsilon(1e-11));
    MinimalOptions mo;
    mo.loop = loop_m(12);
    mo.starts = 8;
    auto mc = minimal_configuration(sys, mo);
    CHECK(mc.degenerate_integrable);
}

TEST_CASE("segment derivatives and the dense-grid oracle") {
    const double eps = 0.25, mu = 0.5, E = 1.0;
    auto sys = reduce(model::pendulum_rotor(eps, mu), E);
    auto metric = pendulum_rotor_metric(eps, mu, E);
    const int m = 16;
    const double x = 0.7, xp = 0.95;
    auto s = two_point_action(sys, x, xp, 3, m);
    CHECK(s.F_xxp < 0);

    const double h = 1e-4;
    auto F = [&](double a, double b) { return two_point_action(sys, a, b, 3, m).F; };
    CHECK(std::abs((F(x + h, xp) - F(x - h, xp)) / (2 * h) - s.dF_dx) < 1e-6);
    CHECK(std::abs((F(x, xp + h) - F(x, xp - h)) / (2 * h) - s.dF_dxp) < 1e-6);
    auto Fx = [&](double a, double b) { return two_point_action(sys, a, b, 3, m).dF_dx; };
    auto Fxp = [&](double a, double b) { return two_point_action(sys, a, b, 3, m).dF_dxp; };
    CHECK(std::abs((Fx(x + h, xp) - Fx(x - h, xp)) / (2 * h) - s.F_xx) < 1e-6);
    CHECK(std::abs((Fx(x, xp + h) - Fx(x, xp - h)) / (2 * h) - s.F_xxp) < 1e-6);
    CHECK(std::abs((Fxp(x, xp + h) - Fxp(x, xp - h)) / (2 * h) - s.F_xpxp) < 1e-6);

    double oracle = dense_oracle(metric, x, xp, s.t0, s.t1, 200);
    CHECK(std::abs(s.F - oracle) < 1e-7);

    SegmentOptions so;
    so.curve_samples = 5;
    auto sc = two_point_action(sys, x, xp, s.t0, s.t1, so);
    REQUIRE(sc.curve.size() == 5);
    CHECK(std::abs(sc.curve.back()[1] - xp) < 1e-10);
}

TEST_CASE("pendulum loop action against the dense-grid oracle") {
    const double eps = 0.25, E = 1.0;
    auto sys = reduce(model::product_pendulum(Mat::Identity(2, 2), (Vec(2) << eps, 0.0).finished()), E);
    auto metric = pendulum_metric(eps, E);
    for (int k = 0; k < 8; ++k) {
        double x = -2.8 + 0.8 * k;
        auto la = loop_action(sys, x, loop_m(32));
        CHECK(la.config.interior_EL_residual <= 1e-8);
        CHECK(la.config.interior_positive);
        double oracle = dense_oracle(metric, x, x, 0, kTwoPi, 1500);
        CHECK(std::abs(la.F - oracle) < 1e-6);
        // Twist identities along the accepted configuration.
        for (const auto& s : la.config.segments) CHECK(s.F_xxp < 0);
    }
    // Doubling the segment count.
    for (double x : {0.5, 2.0}) {
        double a = loop_action(sys, x, loop_m(32)).F, b = loop_action(sys, x, loop_m(64)).F;
        CHECK(std::abs(a - b) < 1e-6);
    }
}

TEST_CASE("minimal configuration and hyperbolicity") {
    const double eps = 0.25, mu = 0.5, E = 1.0;
    auto sys = reduce(model::pendulum_rotor(eps, mu), E);
    MinimalOptions mo;
    mo.starts = 16;
    auto mc = minimal_configuration(sys, mo);
    CHECK_FALSE(mc.degenerate_integrable);
    CHECK(std::abs(wrap_centered(mc.x_star)) < 1e-6);
    CHECK(mc.basins.size() == 1);
    CHECK(mc.config.full_EL_residual() < 1e-8);

    auto J = jacobi_matrix(mc.config);
    CHECK(J.eigenvalues[0] > 1e-8);
    CHECK(J.gap >= 1e-8);
    for (int i = 0; i < J.B.size(); ++i) CHECK(J.B[i] < 0);
    CHECK((J.J - J.J.transpose()).norm() == 0.0);

    auto h = hyperbolicity_check(sys, mc.config);
    CHECK(h.hyperbolic);
    CHECK(h.consistent);
    CHECK(std::abs(std::abs(h.multipliers[0] * h.multipliers[1]) - 1) < 1e-8);

    auto j = to_json(mc);
    CHECK(j["minima"].size() == mc.minima.size());
}

TEST_CASE("saddle configuration at the elliptic orbit") {
    const double eps = 0.25, E = 1.0;
    auto sys = reduce(model::product_pendulum(Mat::Identity(2, 2), (Vec(2) << eps, 0.0).finished()), E);
    std::vector<double> guess(24, std::numbers::pi);
    auto c = stationary_configuration(sys, guess, loop_m(24));
    CHECK(c.full_EL_residual() < 1e-8);
    auto J = jacobi_matrix(c);
    CHECK(J.eigenvalues[0] < 0);
    auto h = hyperbolicity_check(sys, c);
    CHECK(std::abs(h.floquet_trace) < 2);
    CHECK(h.consistent);
}

TEST_CASE("corner defect is controlled by the action excess") {
    const double eps = 0.25, E = 1.0;
    auto sys = reduce(model::product_pendulum(Mat::Identity(2, 2), (Vec(2) << eps, 0.0).finished()), E);
    const double Fmin = loop_action(sys, 0.0).F;
    std::vector<double> ratio;
    for (double x : {0.02, 0.05, 0.1, -0.1, 0.2}) {
        auto la = loop_action(sys, x);
        double excess = la.F - Fmin;
        REQUIRE(excess > 0);
        ratio.push_back(la.config.velocity_corner(sys) / std::sqrt(excess));
    }
    double theta = *std::max_element(ratio.begin(), ratio.end());
    double low = *std::min_element(ratio.begin(), ratio.end());
    CHECK(std::isfinite(theta));
    CHECK(theta < 1.2 * low);
}

TEST_CASE("continuation finds the exchange of a symmetric double well") {
    // K_E = 1/2 y^2 + d (cos 2x + (E - E0) cos x): the constant loops at 0 and π
    // exchange the minimum at E = E0.
    const double d = 0.02, E0 = 1.03;
    ReducedFamily fam = [=](double E) {
        FourierTaylorSeries V(1, Vec::Zero(1), 4, 0);
        V.add_real_mode({2}, {0}, d);
        V.add_real_mode({1}, {0}, d * (E - E0));
        return one_dof(V, E);
    };
    ContinuationOptions co;
    co.minimal.starts = 12;
    co.minimal.loop = loop_m(12);
    auto r = continue_in_energy(fam, 0.5, 1.5, 10, co);
    REQUIRE(r.bifurcations.size() == 1);
    const auto& b = r.bifurcations[0];
    CHECK(std::abs(b.E - E0) < 1e-6);
    CHECK(std::abs(b.F_a - b.F_b) <= 1e-8);
    CHECK(std::abs(b.dFdE_a - b.dFdE_b) > 0.1 * 4 * std::numbers::pi * d);
    CHECK(r.global_branch.size() == 11);

    std::ostringstream csv;
    write_branches_csv(r, csv);
    CHECK(csv.str().find("hyperbolic") != std::string::npos);

    SUBCASE("stable under step refinement") {
        ReducedFamily pert = [=](double E) {
            FourierTaylorSeries V(1, Vec::Zero(1), 4, 0);
            V.add_real_mode({2}, {0}, d);
            V.add_real_mode({1}, {0}, d * (E - E0), 0.2 * d);
            return one_dof(V, E);
        };
        co.hyperbolicity = false;
        auto r1 = continue_in_energy(pert, 0.5, 1.5, 5, co);
        auto r2 = continue_in_energy(pert, 0.5, 1.5, 10, co);
        CHECK(r1.bifurcations.size() == r2.bifurcations.size());
        CHECK(r1.bifurcations.size() >= 1);
        if (!r1.bifurcations.empty() && !r2.bifurcations.empty())
            CHECK(std::abs(r1.bifurcations[0].E - r2.bifurcations[0].E) < 1e-6);
    }
}

TEST_CASE("integrable family has one flat branch") {
    ReducedFamily fam = [](double E) {
        auto s = rotor_system();
        s.energy = E;
        return s;
    };
    ContinuationOptions co;
    co.minimal.starts = 6;
    co.minimal.loop = loop_m(8);
    auto r = continue_in_energy(fam, 1.0, 2.0, 3, co);
    REQUIRE(r.branches.size() == 1);
    CHECK(r.branches[0].flat);
    CHECK(r.bifurcations.empty());
}

TEST_CASE("Jacobi and Floquet verdicts agree along an energy sweep") {
    // Product pendulum, orbits winding in x1; reduced coordinate x2.
    Vec eps = (Vec(2) << 0.1, 0.2).finished();
    auto H = model::product_pendulum(Mat::Identity(2, 2), eps);
    int disagreements = 0, checked = 0;
    for (int k = 0; k < 5; ++k) {
        double E = 0.6 + 0.4 * k;
        auto sys = reduce(H, E, 0);
        for (double c : {0.0, std::numbers::pi}) {
            auto conf = stationary_configuration(sys, std::vector<double>(16, c), loop_m(16));
            auto h = hyperbolicity_check(sys, conf);
            ++checked;
            if (!h.consistent) ++disagreements;
        }
    }
    CHECK(checked == 10);
    CHECK(disagreements == 0);
}
