#include "doctest.h"

#include "matherlab/weakkam/weakkam.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace matherlab;
using namespace matherlab::weakkam;
using action::ReducedSystem;
using model::FourierTaylorSeries;

namespace {

constexpr double kEps = 0.04;

ReducedSystem pendulum_system(double eps = kEps) { return {model::pendulum(eps), 0.0}; }

ReducedSystem rotor_system() {
    FourierTaylorSeries V(1, Vec::Zero(1), 2, 0);
    return {std::make_shared<model::MechanicalHamiltonian>(Mat::Identity(1, 1), V), 0.0};
}

KernelOptions coarse() {
    KernelOptions o;
    o.nx = 256;
    o.dt = 1.0;
    o.max_speed = 1.0;
    return o;
}

const ActionKernel& pendulum_kernel() {
    static const ActionKernel K(pendulum_system(), coarse());
    return K;
}

const ActionKernel& rotor_kernel() {
    static const ActionKernel K(rotor_system(), coarse());
    return K;
}

double pendulum_u(double x) { return 4 * std::sqrt(kEps) * (1 - std::cos(wrap_centered(x) / 2)); }

}  // namespace

TEST_CASE("grid indexing, interpolation and binary round trip") {
    Grid g{{4, 3}, {kTwoPi, 1.0}};
    CHECK(g.size() == 12);
    for (int k = 0; k < g.size(); ++k) CHECK(g.flat(g.unflat(k)) == k);
    CHECK(g.flat({-1, 3}) == g.flat({3, 0}));

    // Bilinear data is reproduced exactly inside a cell.
    std::vector<double> v(12);
    for (int k = 0; k < 12; ++k) {
        auto idx = g.unflat(k);
        v[k] = 1 + 2 * idx[0] * g.spacing(0) + 3 * idx[1] * g.spacing(1);
    }
    GridFunction f(g, v);
    double x = 0.7 * g.spacing(0), y = 1.4 * g.spacing(1);
    CHECK(f.interpolate({x, y}) == doctest::Approx(1 + 2 * x + 3 * y).epsilon(1e-14));
    CHECK(f.grid_tolerance() > 0);

    std::stringstream ss;
    f.write_binary(ss);
    auto r = GridFunction::read_binary(ss);
    CHECK(r.grid.n == g.n);
    CHECK(r.grid.length == g.length);
    CHECK(r.values == f.values);

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(GridFunction::read_binary(bad), MalformedSeries);
    CHECK_THROWS_AS(GridFunction(g, std::vector<double>(5)), DimensionError);
}

TEST_CASE("rotor kernel is the free-particle action and alpha is c^2/2") {
    const auto& K = rotor_kernel();
    const double h = K.spacing();
    for (int j : {-7, 0, 3, 20}) CHECK(K.raw(0, 17, j) == doctest::Approx(0.5 * j * j * h * h).epsilon(1e-9));
    for (double c : {0.0, 0.3, -0.5}) {
        WeakKamOptions o;
        o.max_sweeps = 400;
        auto s = solve_weak_kam(K, c, Direction::backward, o);
        CHECK(s.alpha == doctest::Approx(0.5 * c * c).epsilon(h * h));
        CHECK(s.u.max() - s.u.min() <= 1e-9);
    }
}

TEST_CASE("kernel satisfies the triangle inequality against two-step segments") {
    const auto& K = pendulum_kernel();
    const double h = K.spacing();
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> ui(0, K.nx() - 1), uj(-15, 15);
    for (int k = 0; k < 20; ++k) {
        int i = ui(rng), j1 = uj(rng), j2 = uj(rng);
        double two = K.raw(0, i, j1) + K.raw(0, i + j1, j2);
        auto seg = action::two_point_action(K.system(), i * h, (i + j1 + j2) * h, 0.0, 2 * K.dt());
        CHECK(seg.F <= two + 1e-9);
    }
}

TEST_CASE("Lax-Oleinik step is monotone and non-expansive") {
    const auto& K = pendulum_kernel();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-1, 1), P(0, 0.5);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> a(K.nx()), b(K.nx());
        for (int i = 0; i < K.nx(); ++i) {
            a[i] = U(rng);
            b[i] = a[i] + P(rng);
        }
        auto u = GridFunction::line(K.nx(), kTwoPi, a), v = GridFunction::line(K.nx(), kTwoPi, b);
        for (auto dir : {Direction::backward, Direction::forward}) {
            auto Tu = lax_oleinik_step(u, K, dir, 0.1), Tv = lax_oleinik_step(v, K, dir, 0.1);
            double gap = 0, lo = 0;
            for (int i = 0; i < K.nx(); ++i) {
                gap = std::max(gap, std::abs(Tu[i] - Tv[i]));
                lo = std::min(lo, Tv[i] - Tu[i]);
            }
            CHECK(lo >= -1e-12);
            CHECK(gap <= 0.5 + 1e-12);
        }
    }
}

TEST_CASE("pendulum weak KAM solution at c = 0") {
    const auto& K = pendulum_kernel();
    auto um = solve_weak_kam(K, 0.0, Direction::backward);
    auto up = solve_weak_kam(K, 0.0, Direction::forward);
    REQUIRE(um.converged);
    REQUIRE(up.converged);
    CHECK(std::abs(um.alpha) < 1e-10);
    CHECK(std::abs(up.alpha) < 1e-10);
    CHECK(um.window_hits == 0);
    const double tol = um.grid_tol();
    CHECK(tol < 0.02);
    const double h = K.spacing();
    for (int i = 0; i < K.nx(); ++i) {
        CHECK(std::abs(um.u[i] - pendulum_u(i * h)) <= tol);
        CHECK(std::abs(up.u[i] + pendulum_u(i * h)) <= tol);
    }

    auto dom = check_domination(K, um, 100, 5);
    CHECK(dom.pass);
    CHECK(check_domination(K, up, 100, 6).pass);

    auto cls = aubry_classes(K, um);
    REQUIRE(cls.components.size() == 1);
    CHECK(cls.components[0] == std::vector<int>{0});

    auto bf = barrier(um.u, up.u, 0);
    CHECK(bf.anchor_in_argmin);
    CHECK(bf.min_value >= -2 * tol);
    for (int i = 0; i < K.nx(); ++i) CHECK(std::abs(bf.B[i] - 2 * pendulum_u(i * h)) <= 2 * tol);
    // Quadratic growth near the hyperbolic point: B ~ sqrt(eps) x^2.
    double x = 8 * h;
    CHECK(bf.B.interpolate(x) / (x * x) >= kEps / 3);

    auto ms = mane_section_analysis(bf, -1, 0.1);
    CHECK(ms.intervals.size() == 1);
    CHECK(ms.covered_fraction < 0.05);
    CHECK(ms.totally_disconnected);
}

TEST_CASE("alpha is flat on the channel, positive outside it and convex") {
    const auto& K = pendulum_kernel();
    const double cstar = 4 * std::sqrt(kEps) / std::numbers::pi;
    WeakKamOptions o;
    o.max_sweeps = 2000;
    std::vector<double> cs = {0.0, 0.5 * cstar, 0.9 * cstar, 1.5 * cstar, 2.1 * cstar};
    std::vector<double> al;
    {
        set_warnings_enabled(false);
        for (double c : cs) al.push_back(solve_weak_kam(K, c, Direction::backward, o).alpha);
        set_warnings_enabled(true);
    }
    CHECK(std::abs(al[1]) < 1e-9);
    CHECK(std::abs(al[2]) < 1e-9);
    CHECK(al[3] > 1e-4);
    CHECK(al[4] > al[3]);
    // Midpoint convexity on (0.9, 1.5, 2.1) c*.
    CHECK(al[3] <= 0.5 * (al[2] + al[4]) + 1e-6);
    // Far outside the channel the rotor value dominates up to the potential's mean.
    CHECK(al[4] <= 0.5 * cs[4] * cs[4] + 1e-9);
}

TEST_CASE("Aubry distance on the pendulum and a two-well potential") {
    const auto& K = pendulum_kernel();
    Mat d = aubry_distance(K, 0.0, 0.0, {0.0, std::numbers::pi}, 300);
    CHECK(std::abs(d(0, 0)) < 1e-12);
    CHECK(d(1, 1) > 0.1);
    CHECK(d(0, 1) == doctest::Approx(8 * std::sqrt(kEps)).epsilon(0.02));
    CHECK(d(0, 1) == doctest::Approx(d(1, 0)).epsilon(1e-12));

    const double delta = 0.02;
    FourierTaylorSeries V(1, Vec::Zero(1), 2, 0);
    V.add_real_mode({2}, {0}, delta);
    ActionKernel K2({std::make_shared<model::MechanicalHamiltonian>(Mat::Identity(1, 1), V), 0.0}, coarse());
    auto s = solve_weak_kam(K2, 0.0, Direction::backward);
    REQUIRE(s.converged);
    CHECK(s.alpha == doctest::Approx(delta).epsilon(1e-9));
    CHECK(aubry_classes(K2, s).components.size() == 2);
    Mat d2 = aubry_distance(K2, 0.0, s.alpha, {0.0, std::numbers::pi}, 300);
    CHECK(std::abs(d2(0, 0)) < 1e-9);
    CHECK(std::abs(d2(1, 1)) < 1e-9);
    CHECK(d2(0, 1) == doctest::Approx(8 * std::sqrt(delta)).epsilon(0.02));
}

TEST_CASE("elementary solutions and the heteroclinic barrier on the double cover") {
    const auto& K = pendulum_kernel();
    ElementaryOptions o;
    o.base.cover = 2;
    auto e0 = elementary_weak_kam(K, 0.0, -0.3, 0.3, o);
    auto e1 = elementary_weak_kam(K, 0.0, kTwoPi - 0.3, kTwoPi + 0.3, o);
    REQUIRE(e0.classes.components.size() == 2);
    CHECK(e0.selected != e1.selected);
    CHECK(e0.deltas.size() == 3);
    const double tol = e0.minus.grid_tol();
    // u_0^- is the distance-like function from 0 on the cover.
    const double h = K.spacing();
    for (int i = 0; i < 2 * K.nx(); i += 16) {
        double x = i * h, lifted = x > 2 * kTwoPi - x ? x - 2 * kTwoPi : x;
        double expect = std::abs(lifted) <= std::numbers::pi
                            ? pendulum_u(lifted)
                            : 8 * std::sqrt(kEps) - pendulum_u(lifted);
        CHECK(std::abs(e0.minus.u[i] - expect) <= 3 * tol);
    }
    auto bf = barrier(e0.minus.u, e1.plus.u, 0, 4 * tol);
    CHECK(bf.B.max() - bf.B.min() <= 4 * tol);
    auto ms = mane_section_analysis(barrier(e0.minus.u, e1.plus.u, 0, 4 * tol), -1, 0.1);
    CHECK(ms.covered_fraction == doctest::Approx(1.0));
    CHECK_FALSE(ms.totally_disconnected);

    CHECK_THROWS_AS(elementary_weak_kam(K, 0.0, -0.3, kTwoPi + 0.3, o), DomainError);
}

TEST_CASE("homology-constrained action") {
    const auto& K = pendulum_kernel();
    std::vector<int> hz;
    for (int k = 20; k <= 200; k += 20) hz.push_back(k);
    auto h1 = homology_constrained_action(K, 1, 0.0, hz);
    auto hm = homology_constrained_action(K, -1, 0.0, hz);
    CHECK(h1.estimate == doctest::Approx(8 * std::sqrt(kEps)).epsilon(0.01));
    CHECK(hm.estimate == doctest::Approx(h1.estimate).epsilon(1e-9));
    CHECK(h1.monotone_tail);
    REQUIRE(h1.loop.size() == static_cast<size_t>(h1.best_horizon) + 1);
    CHECK(h1.loop.back() - h1.loop.front() == doctest::Approx(kTwoPi));

    std::vector<int> hz2;
    for (int k = 40; k <= 400; k += 40) hz2.push_back(k);
    auto h2 = homology_constrained_action(K, 2, 0.0, hz2);
    CHECK(h2.estimate <= 2 * h1.estimate + 1e-5);

    auto r = homology_constrained_action(rotor_kernel(), 1, 0.0, {8, 16});
    CHECK(r.values[0] == doctest::Approx(kTwoPi * kTwoPi / 16).epsilon(1e-9));
    CHECK(r.estimate == doctest::Approx(kTwoPi * kTwoPi / 32).epsilon(1e-9));
    CHECK_THROWS_AS(homology_constrained_action(K, 1, 0.0, {5, 3}), DomainError);
}

TEST_CASE("time-periodic reduced system: slices, domination and the time-0 section") {
    KernelOptions ko;
    ko.nx = 128;
    ko.slices = 16;
    ko.max_speed = 0.6;
    auto sys = action::reduce(model::pendulum_rotor(kEps, 0.5), 1.0);
    ActionKernel K(sys, ko);
    CHECK(K.slices() == 16);
    CHECK(K.period() == doctest::Approx(sys.loop_time()));
    auto um = solve_weak_kam(K, 0.0, Direction::backward);
    auto up = solve_weak_kam(K, 0.0, Direction::forward);
    REQUIRE(um.converged);
    REQUIRE(up.converged);
    auto loop = action::two_point_action(sys, 0.0, 0.0, 0.0, sys.loop_time());
    CHECK(um.alpha == doctest::Approx(-loop.F / sys.loop_time()).epsilon(1e-8));
    CHECK(up.alpha == doctest::Approx(um.alpha).epsilon(1e-8));
    CHECK(um.extended.grid.n == std::vector<int>{128, 16});
    CHECK(check_domination(K, um, 100, 2).pass);

    auto cls = aubry_classes(K, um);
    REQUIRE(cls.components.size() == 1);
    CHECK(cls.mask[0]);

    auto bf = barrier(um.extended, up.extended, 0, 2 * um.grid_tol());
    CHECK(bf.min_value >= -2 * um.grid_tol());
    auto ms = mane_section_analysis(bf, 0, 0.5, &cls.mask);
    CHECK(ms.covered_fraction < 1.0);
    CHECK(ms.intervals.size() == 1);
    CHECK(ms.totally_disconnected);

    auto j = to_json(um);
    CHECK(j["converged"] == true);
    CHECK(to_json(ms).contains("intervals"));
}
