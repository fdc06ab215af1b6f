#include "doctest.h"

#include "matherlab/flow/flow.hpp"
#include "matherlab/normalform/normalform.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <random>

using namespace matherlab;
using namespace matherlab::normalform;
using model::FourierTaylorSeries;
using resonance::Rational;

namespace {

Vec v_of(std::initializer_list<double> v) {
    Vec z(static_cast<int>(v.size()));
    int i = 0;
    for (double a : v) z[i++] = a;
    return z;
}

// h = 1/2 |y|^2 about the origin.
FourierTaylorSeries kinetic(int n) {
    FourierTaylorSeries h(n, Vec::Zero(n), 8, 8);
    for (int j = 0; j < n; ++j) {
        IntVec i(n, 0);
        i[j] = 2;
        h.add_real_mode(IntVec(n, 0), i, 0.5);
    }
    return h;
}

// cos x1 + 0.5 cos x2 + 0.3 sin(x1 + x2)
FourierTaylorSeries three_mode() {
    FourierTaylorSeries P(2, Vec::Zero(2), 8, 8);
    P.add_real_mode({1, 0}, {0, 0}, 1.0);
    P.add_real_mode({0, 1}, {0, 0}, 0.5);
    P.add_real_mode({1, 1}, {0, 0}, 0.0, 0.3);
    return P;
}

model::NearIntegrableSystem system_of(FourierTaylorSeries P, double eps) {
    model::NearIntegrableSystem s;
    s.h = kinetic(2);
    s.P = std::move(P);
    s.epsilon = eps;
    s.R = 1;
    return s;
}

const RationalVec kVertical{Rational(0), Rational(1)};
// grad h = (0, 1) here.
const Vec kYv = (Vec(2) << 0.0, 1.0).finished();

double max_abs_diff(const FourierTaylorSeries& a, const FourierTaylorSeries& b, int samples = 200) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, kTwoPi), v(-0.2, 0.2);
    const int n = a.dim();
    double worst = 0;
    for (int s = 0; s < samples; ++s) {
        Vec x(n), y(n);
        for (int j = 0; j < n; ++j) {
            x[j] = u(rng);
            y[j] = a.base_point()[j] + v(rng);
        }
        worst = std::max(worst, std::abs(a.eval(x, y) - b.eval(x, y)));
    }
    return worst;
}

}  // namespace

TEST_CASE("kam step: resonant perturbation needs no transformation") {
    FourierTaylorSeries P(2, Vec::Zero(2), 4, 4);
    P.add_real_mode({1, 0}, {0, 0}, 1.0);
    P.add_real_mode({2, 0}, {1, 0}, 0.2);
    auto s0 = initial_state(kinetic(2).with_cutoffs(8, 8), 1e-3 * P.with_cutoffs(8, 8), kVertical);
    CHECK(s0.R1.empty());
    auto st = kam_step(s0, kVertical);
    CHECK(st.W.pruned(0).empty());
    CHECK(st.next.R1.pruned(0).empty());
    CHECK(st.next.R2.pruned(0).empty());
    CHECK(max_abs_diff(st.next.Z, 1e-3 * P) < 1e-15);
}

TEST_CASE("kam step: generating function matches the integral formula") {
    FourierTaylorSeries P(2, Vec::Zero(2), 4, 4);
    P.add_real_mode({1, 0}, {0, 0}, 1.0);  // resonant with (0, 1)
    P.add_real_mode({0, 1}, {0, 0}, 1.0);
    P.add_real_mode({1, 2}, {1, 0}, 0.4, -0.7);
    auto s0 = initial_state(kinetic(2).with_cutoffs(8, 8), P.with_cutoffs(8, 8), kVertical);
    auto st = kam_step(s0, kVertical);

    // cos x2 alone gives W = -sin x2.
    CHECK(std::abs(st.W.coeff({0, 1}, {0, 0}) - model::Complex(0, 0.5)) < 1e-15);

    // W0 = -(1/T) int_0^T (P - [P])(x + omega t, y) t dt with T = 2π.
    const Vec w = resonance::to_vec(kVertical);
    FourierTaylorSeries Pn = P - resonance::resonant_project(P, kVertical);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, kTwoPi), v(-0.5, 0.5);
    for (int s = 0; s < 10; ++s) {
        Vec x = v_of({u(rng), u(rng)}), y = v_of({v(rng), v(rng)});
        auto f = [&](double t) { return Pn.eval(x + w * t, y) * t; };
        double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, kTwoPi, 10, 1e-14);
        CHECK(std::abs(-I / kTwoPi - st.W.eval(x, y)) < 1e-12);
    }
    for (const auto& t : st.W.terms()) CHECK_FALSE(resonance::is_resonant(t.k, kVertical));
    // [R_{1,1}] = 0 coefficient-exactly.
    for (const auto& t : st.next.R1.terms()) CHECK_FALSE(resonance::is_resonant(t.k, kVertical));
    // Homological equation <omega, W_x> = -(P - [P]).
    CHECK(max_abs_diff(st.W.dx(1), -1.0 * Pn) < 1e-14);
}

TEST_CASE("kam step rejects resonant modes in the remainder") {
    FourierTaylorSeries R(2, Vec::Zero(2), 4, 4);
    R.add_real_mode({1, 0}, {0, 0}, 1.0);
    CHECK_THROWS_AS(solve_homological(R, kVertical), MalformedSeries);
}

TEST_CASE("normal form at eps = 0 is the identity") {
    auto sys = system_of(three_mode(), 0.0);
    auto r = normal_form(sys, kYv, kVertical);
    CHECK(r.Z.pruned(0).empty());
    CHECK(r.R_r.pruned(0).empty());
    CHECK(r.R_h.pruned(0).empty());
    Vec z = v_of({0.3, 1.2, 0.0, 1.0});
    CHECK((apply_transform(r, z) - z).norm() == 0.0);
}

TEST_CASE("normal form on a three-mode perturbation") {
    const double eps = 1e-3;
    auto sys = system_of(three_mode(), eps);
    auto r = normal_form(sys, kYv, kVertical);
    REQUIRE(r.verified);
    CHECK(r.W.size() == 5);
    for (const auto& t : r.Z.terms()) CHECK(resonance::is_resonant(t.k, kVertical));
    CHECK(r.norms.at("Z").c0 <= 2 * eps);
    CHECK(r.nonresonant_before >= 10 * r.nonresonant_after_step1);
    CHECK(r.symplectic_defect <= 1e-7);
    CHECK(r.composition_error <= 10 * r.tail + 1e-10);
    for (const auto& W : r.W)
        for (const auto& t : W.terms()) CHECK_FALSE(resonance::is_resonant(t.k, kVertical));
    // R_h carries the fifth-order polynomial factor in y - y_lambda.
    for (const auto& t : r.R_h.terms()) CHECK(t.i[0] + t.i[1] >= 5);

    auto j = to_json(r);
    CHECK(j["W"].size() == 5);
    CHECK(j["norms"].contains("R_r"));
    CHECK(model::series_from_json(j["Z"]) == r.Z);
}

TEST_CASE("normal form rejects inputs outside its domain") {
    auto sys = system_of(three_mode(), 1e-3);
    NormalFormOptions opt;
    opt.verify = false;
    CHECK_THROWS_AS(normal_form(sys, v_of({0.1, 0.0}), kVertical, opt), DomainError);
    RationalVec slow{Rational(1, 50), Rational(1, 7)};
    CHECK_THROWS_AS(normal_form(sys, v_of({1.0 / 50, 1.0 / 7}), slow, opt), DomainError);
    auto big = system_of(three_mode(), 0.5);
    CHECK_THROWS_AS(normal_form(big, kYv, kVertical, opt), DomainError);
}

TEST_CASE("remainder exponents") {
    SUBCASE("integrable perturbation") {
        FourierTaylorSeries P(2, Vec::Zero(2), 4, 4);
        P.add_real_mode({0, 0}, {2, 0}, 0.3);
        auto sweep = epsilon_sweep(system_of(P, 0), kYv, kVertical, {1e-3, 1e-4, 1e-5, 1e-6});
        auto rep = verify_remainder(sweep);
        CHECK(rep.pass);
        for (const auto& f : rep.fits) CHECK(std::isinf(f.measured));
    }
    SUBCASE("three-mode sweep") {
        std::vector<double> eps;
        for (int i = 0; i < 4; ++i) eps.push_back(std::pow(10.0, -4.0 - 2.0 * i / 3.0));
        NormalFormOptions opt;
        opt.check_samples = 100;
        opt.symplectic_samples = 10;
        auto sweep = epsilon_sweep(system_of(three_mode(), 0), kYv, kVertical, eps, opt);
        auto rep = verify_remainder(sweep);
        CHECK(rep.rescaled_exponent == doctest::Approx(1.0 / 21.0).epsilon(1e-12));
        REQUIRE(rep.fits.size() == 4);
        CHECK(rep.fits[0].piece == "R_r");
        CHECK(rep.fits[0].measured >= 4.0 / 3.0);
        CHECK(rep.pass);
    }
}

TEST_CASE("fit_exponent") {
    CHECK(fit_exponent({1e-2, 1e-3, 1e-4}, {3e-4, 3e-6, 3e-8}) == doctest::Approx(2.0));
    CHECK(std::isinf(fit_exponent({1e-2, 1e-3}, {0.0, 0.0})));
}

TEST_CASE("resonant frame rotation") {
    FourierTaylorSeries H(2, v_of({0.2, -0.1}), 6, 4);
    H.add_real_mode({1, -1}, {0, 0}, 1.0, 0.3);
    H.add_real_mode({2, -2}, {1, 0}, 0.2);
    H.add_real_mode({0, 0}, {2, 0}, 0.5);
    H.add_real_mode({0, 0}, {0, 2}, 0.5);

    resonance::ResonanceFrame id;
    id.I = {{1, 0}, {0, 1}};
    id.I_inv = id.I;
    CHECK(rotate_resonant_frame(H, id) == H);

    RationalVec w{Rational(1), Rational(1)};
    auto F = resonance_frame(w);
    REQUIRE(F.has_value());
    CHECK(F->k == IntVec{1, -1});
    CHECK(std::abs(F->det) == 1);
    auto Hr = rotate_resonant_frame(H, *F);
    for (const auto& t : Hr.terms()) CHECK(t.k[1] == 0);

    resonance::ResonanceFrame back;
    back.I = F->I_inv;
    back.I_inv = F->I;
    auto H2 = rotate_resonant_frame(Hr, back);
    CHECK(H2.raw() == H.raw());

    // Three dimensions: two resonance vectors, last angle free.
    RationalVec w3{Rational(1), Rational(2), Rational(3)};
    auto F3 = resonance_frame(w3);
    REQUIRE(F3.has_value());
    REQUIRE(F3->k_prime.has_value());
    CHECK(resonance::is_resonant(F3->k, w3));
    CHECK(resonance::is_resonant(*F3->k_prime, w3));
    CHECK(std::abs(F3->det) == 1);
    CHECK_FALSE(resonance_frame({Rational(0), Rational(0)}).has_value());
}

TEST_CASE("homogenization") {
    const double eps = 1e-4;
    FourierTaylorSeries h = kinetic(2);
    FourierTaylorSeries Z(2, Vec::Zero(2), 4, 4);
    Z.add_real_mode({1, 0}, {0, 0}, eps);
    Z.add_real_mode({0, 1}, {0, 0}, 2 * eps);
    Z.add_real_mode({1, 0}, {0, 1}, 0.1 * eps);
    FourierTaylorSeries R = FourierTaylorSeries::zero_like(Z);
    R.add_real_mode({1, 1}, {1, 0}, 1e-3 * eps);

    SUBCASE("exact double resonance") {
        auto g = homogenize(h, Z, R, Vec::Zero(2), eps);
        CHECK((g.A - Mat::Identity(2, 2)).norm() < 1e-15);
        CHECK(g.omega_j.norm() == 0.0);
        for (const auto& t : g.G_bar().terms())
            if (t.i[0] + t.i[1] == 1) CHECK(t.c == model::Complex(0, 0));
        CHECK(g.V.eval(v_of({0, 0}), Vec::Zero(2)) == doctest::Approx(3.0));
        CHECK(g.Z_eps_c0 <= 0.2 * std::sqrt(eps) + 1e-15);
    }
    SUBCASE("orbits agree after rescaling") {
        Vec yj = v_of({0.01, 0.0});
        auto g = homogenize(h, Z, R, yj, eps);
        CHECK(g.omega_j[0] == doctest::Approx(0.01));
        model::SeriesHamiltonian Y(h + Z + R);
        model::SeriesHamiltonian G(g.G_eps());
        Vec xp0 = v_of({0.4, 1.0, 0.5, -0.3});
        const double S = 2.0;
        Vec xpS = flow::flow_map(G, xp0, 0, S, 1e-13);
        Vec zT = flow::flow_map(Y, g.to_original(xp0), 0, S / g.scale, 1e-13);
        Vec back = g.from_original(zT);
        CHECK((back - xpS).norm() < 1e-6);
    }
    SUBCASE("indefinite Hessian") {
        FourierTaylorSeries bad(2, Vec::Zero(2), 4, 4);
        bad.add_real_mode({0, 0}, {2, 0}, 0.5);
        bad.add_real_mode({0, 0}, {0, 2}, -0.5);
        CHECK_THROWS_AS(homogenize(bad, Z, R, Vec::Zero(2), eps), DomainError);
    }
}

TEST_CASE("averaged potential") {
    auto avg_by_quadrature = [](const FourierTaylorSeries& V, const RationalVec& w, const Vec& x) {
        const double T = kTwoPi * resonance::period_of(w);
        const Vec wv = resonance::to_vec(w);
        auto f = [&](double t) { return V.eval(x + wv * t, Vec::Zero(2)); };
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, T, 10, 1e-14) / T;
    };
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, kTwoPi);

    FourierTaylorSeries V1(2, Vec::Zero(2), 4, 0);
    V1.add_real_mode({1, 0}, {0, 0}, 1.0);
    auto a1 = averaged_potential(V1, kVertical);
    CHECK(a1.full == V1);
    CHECK(a1.curvature == doctest::Approx(1.0));
    CHECK(a1.nondegenerate);

    FourierTaylorSeries V2(2, Vec::Zero(2), 4, 0);
    V2.add_real_mode({1, 1}, {0, 0}, 1.0);
    V2.add_real_mode({1, 0}, {0, 0}, 0.4);
    RationalVec w2{Rational(1), Rational(-1)};
    auto a2 = averaged_potential(V2, w2);
    CHECK(a2.k == IntVec{1, 1});
    for (int s = 0; s < 10; ++s) {
        Vec x = v_of({u(rng), u(rng)});
        double q = avg_by_quadrature(V2, w2, x);
        CHECK(std::abs(a2.full.eval(x, Vec::Zero(2)) - q) < 1e-12);
        CHECK(std::abs(a2.circle.eval(Vec::Constant(1, x[0] + x[1]), Vec::Zero(1)) - q) < 1e-12);
    }
    CHECK(std::abs(wrap_centered(a2.theta_max)) < 1e-10);

    RationalVec w3{Rational(1), Rational(1)};
    auto a3 = averaged_potential(V1, w3);
    CHECK(a3.full.pruned(0).empty());
    for (int s = 0; s < 5; ++s) CHECK(std::abs(avg_by_quadrature(V1, w3, v_of({u(rng), u(rng)}))) < 1e-12);
    CHECK_FALSE(a3.nondegenerate);
}
