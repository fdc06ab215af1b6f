#include "doctest.h"

#include "matherlab/resonance/resonance.hpp"

#include <random>

using namespace matherlab;
using namespace matherlab::resonance;
using model::FourierTaylorSeries;

namespace {

Vec v_of(std::initializer_list<double> v) {
    Vec z(static_cast<int>(v.size()));
    int i = 0;
    for (double a : v) z[i++] = a;
    return z;
}

// Independent scan: smallest k < K meeting the bound, and the best k.
std::pair<long, long> scan_dirichlet(const Vec& w, double K) {
    const double bound = std::pow(K, -1.0 / w.size());
    long first = 0, best = 0;
    double be = 1e300;
    for (long k = 1; k < K; ++k) {
        double e = 0;
        for (int j = 0; j < w.size(); ++j) {
            double x = k * w[j];
            e = std::max(e, std::abs(x - std::nearbyint(x)));
        }
        if (!first && e <= bound) first = k;
        if (e < be) {
            be = e;
            best = k;
        }
    }
    return {first, best};
}

bool is_identity(const IntMatrix& M) {
    for (std::size_t i = 0; i < M.size(); ++i)
        for (std::size_t j = 0; j < M.size(); ++j)
            if (M[i][j] != (i == j ? 1 : 0)) return false;
    return true;
}

}  // namespace

TEST_CASE("dirichlet approximation examples") {
    auto r = dirichlet_approx(v_of({0.5}), 3);
    CHECK(r.k == 2);
    CHECK(r.err == 0.0);

    const Vec golden = v_of({0.6180339887});
    auto first = dirichlet_approx(golden, 10);
    CHECK(first.k == scan_dirichlet(golden, 10).first);
    CHECK(first.k == 5);
    CHECK(first.err <= 0.1);
    auto best = dirichlet_approx(golden, 10, DirichletMode::best);
    CHECK(best.k == 8);

    const Vec w = v_of({1.0 / 3, 1.0 / 7});
    CHECK(dirichlet_approx(w, 22).k == 6);
    auto b2 = dirichlet_approx(w, 22, DirichletMode::best);
    CHECK(b2.k == 21);
    CHECK(b2.err < 1e-12);
}

TEST_CASE("dirichlet approximation matches an exhaustive scan") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 1 + trial % 3;
        Vec w(n);
        for (int j = 0; j < n; ++j) w[j] = u(rng);
        for (int K = 2; K <= 200; K += 7) {
            auto r = dirichlet_approx(w, K);
            auto [first, best] = scan_dirichlet(w, K);
            CHECK(r.k == first);
            CHECK(r.bound_met);
            CHECK(dirichlet_approx(w, K, DirichletMode::best).k == best);
        }
    }
}

TEST_CASE("rational period") {
    CHECK(rational_period(v_of({0, 1}), 100, 1e-12).value() == 1);
    CHECK(rational_period(v_of({0.4, 0.6}), 100, 1e-12).value() == 5);
    CHECK_FALSE(rational_period(v_of({std::sqrt(2.0), 1}), 100, 1e-9).has_value());
    auto q = snap_rational(v_of({0.4, 0.6}), 100, 1e-12).value();
    CHECK(q[0] == Rational(2, 5));
    CHECK(period_of(q) == 5);
    auto z = snap_rational(v_of({0.0, 1.0}), 10, 1e-12).value();
    CHECK(z[0].numerator() == 0);
    CHECK(period_of(z) == 1);
}

TEST_CASE("unimodular completion") {
    auto F = unimodular_complete({1, 0, 0});
    CHECK(is_identity(F.I));
    CHECK(F.det == 1);

    auto G = unimodular_complete({2, 3});
    CHECK(std::abs(G.det) == 1);
    CHECK(G.column(0) == IntVec{2, 3});

    auto H = unimodular_complete({1, 0, 2}, IntVec{0, 1, 3});
    CHECK(std::abs(integer_det(H.I)) == 1);
    CHECK(H.column(0) == IntVec{1, 0, 2});
    CHECK(H.column(1) == IntVec{0, 1, 3});
    CHECK(is_identity(int_multiply(H.I, H.I_inv)));

    CHECK_THROWS_AS(unimodular_complete({2, 4}), DomainError);
    CHECK_THROWS_AS(unimodular_complete({1, 1, 0}, IntVec{1, -1, 0}), DomainError);
}

TEST_CASE("unimodular completion on random inputs, search and constructive") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> u(-60, 60);
    int done = 0;
    while (done < 200) {
        int n = 2 + done % 3;
        IntVec k(n);
        for (auto& a : k) a = u(rng);
        if (gcd_of(k) != 1) continue;
        for (int bound : {0, 3}) {
            auto F = unimodular_complete(k, std::nullopt, bound);
            CHECK(std::abs(integer_det(F.I)) == 1);
            CHECK(F.column(0) == k);
            CHECK(is_identity(int_multiply(F.I, F.I_inv)));
            CHECK(is_identity(int_multiply(F.I_inv, F.I)));
        }
        ++done;
    }
}

TEST_CASE("integer determinant is exact") {
    IntMatrix M{{2, 1, 3}, {1, 4, 1}, {5, 2, 7}};
    // 2(28-2) - 1(7-5) + 3(2-20) = 52 - 2 - 54
    CHECK(integer_det(M) == -4);
}

TEST_CASE("resonant projection") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    FourierTaylorSeries P(2, Vec::Zero(2), 4, 1);
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
            if (a > 0 || (a == 0 && b > 0)) P.add_real_mode({a, b}, {0, 0}, g(rng), g(rng));
    P.add_real_mode({1, 2}, {1, 0}, 0.3);

    RationalVec w0{Rational(0), Rational(1)};
    auto Q = resonant_project(P, w0);
    for (const auto& t : Q.terms()) CHECK(t.k[1] == 0);
    CHECK(resonant_project(Q, w0) == Q);

    // Time average along the rational flow, 2π T periodic.
    RationalVec w{Rational(1, 2), Rational(-1, 3)};
    auto A = resonant_project(P, w);
    const double T = kTwoPi * period_of(w);
    Vec wv = to_vec(w);
    std::mt19937_64 r2(5);
    std::uniform_real_distribution<double> ux(0, kTwoPi);
    for (int s = 0; s < 10; ++s) {
        Vec x = v_of({ux(r2), ux(r2)}), y = v_of({0.2, -0.1});
        const int N = 1000;
        double avg = 0;
        for (int i = 0; i < N; ++i) avg += P.eval(x + wv * (T * i / N), y);
        avg /= N;
        CHECK(std::abs(avg - A.eval(x, y)) < 1e-8);
    }
}

TEST_CASE("resonant projection commutes with frame rotation") {
    FourierTaylorSeries P(2, Vec::Zero(2), 6, 2);
    P.add_real_mode({1, -1}, {0, 0}, 1.0, 0.5);
    P.add_real_mode({2, -2}, {1, 0}, 0.25);
    P.add_real_mode({1, 0}, {0, 1}, 0.7);
    P.add_real_mode({0, 1}, {0, 0}, -0.3, 0.2);
    RationalVec w{Rational(1), Rational(1)};
    auto F = unimodular_complete({1, -1});
    auto rot = [&](const FourierTaylorSeries& s) { return s.linear_substitution(F.I, F.I_inv); };
    // w = (1, 1) is integral, so I^T w is an integer vector.
    RationalVec wt;
    for (int r = 0; r < 2; ++r) wt.emplace_back(F.I[0][r] + F.I[1][r]);
    CHECK(rot(resonant_project(P, w)) == resonant_project(rot(P), wt));
    for (const auto& t : rot(resonant_project(P, w)).terms()) CHECK(t.k[1] == 0);
}

TEST_CASE("resonant path on the sphere") {
    auto h = ActionFunction::quadratic(Mat::Identity(3, 3));
    const double E = 0.5;
    auto on_sphere = [](double a, double b, double c) {
        Vec v = v_of({a, b, c});
        return Vec(v.normalized());
    };
    SUBCASE("single resonance is a great circle") {
        std::vector<Vec> wp{on_sphere(0, 1, 0.2), on_sphere(0, 0.3, 1)};
        auto p = build_resonant_path(h, E, wp, 0.05);
        REQUIRE(p.segments.size() == 1);
        CHECK(p.segments[0].k == IntVec{1, 0, 0});
        for (const auto& y : p.segments[0].arc) {
            CHECK(std::abs(y[0]) < 1e-8);
            CHECK(std::abs(h.value(y) - E) < 1e-8);
        }
        CHECK(p.K_delta == 1);
    }
    SUBCASE("junction of two resonances") {
        std::vector<Vec> wp{on_sphere(0, 1, 0.5), on_sphere(1, 0, 0.5)};
        auto p = build_resonant_path(h, E, wp, 0.05);
        REQUIRE(p.junctions.size() == 1);
        CHECK(p.junctions[0].residual <= 1e-8);
        CHECK(std::abs(std::abs(p.junctions[0].y[2]) - 1.0) < 1e-8);
        REQUIRE(p.segments.size() == 2);
        CHECK((p.segments[0].arc.back() - p.segments[1].arc.front()).norm() < 1e-12);
        for (const auto& s : p.segments)
            for (const auto& y : s.arc) {
                Vec k(3);
                for (int j = 0; j < 3; ++j) k[j] = s.k[j];
                CHECK(std::abs(k.dot(h.grad(y))) < 1e-8);
            }
        // Coverage: waypoints lie within delta/m of the path (m = 1 here).
        for (double d : p.waypoint_distance) CHECK(d <= 0.05);
    }
    SUBCASE("unreachable waypoint") {
        std::vector<Vec> wp{on_sphere(1, std::sqrt(2.0), std::sqrt(5.0))};
        CHECK_THROWS_AS(build_resonant_path(h, E, wp, 1e-9, 3), DomainError);
    }
}

TEST_CASE("strong/weak classification") {
    FourierTaylorSeries Z(1, Vec::Zero(1), 4, 0);
    Z.add_real_mode({1}, {0}, 1.0);
    auto w = classify_resonance(Z, {1000, 0}, 1.0, 8);
    CHECK(w.weak);
    CHECK(w.lambda == doctest::Approx(1.0));
    CHECK(w.x_max == doctest::Approx(0.0).epsilon(1e-12));
    auto s = classify_resonance(Z, {1, 0}, 2.0, 8);
    CHECK_FALSE(s.weak);

    ClassifierConfig cfg;
    cfg.d1 = 0.25;
    auto b = classify_resonance(Z, {2, 0}, 16.0, 8, cfg);
    CHECK(b.margin == 1.0);
    CHECK_FALSE(b.weak);

    FourierTaylorSeries D(1, Vec::Zero(1), 4, 0);
    D.add_real_mode({1}, {0}, 1.0);
    D.add_real_mode({2}, {0}, -0.25);
    CHECK_THROWS_AS(classify_resonance(D, {5, 0}, 1.0, 8), DomainError);
}

TEST_CASE("covering a path") {
    auto h = ActionFunction::quadratic(Mat::Identity(3, 3));
    ResonantPath p;
    PathSegment seg;
    seg.k = {1, 0, 0};
    for (int i = 0; i <= 100; ++i) seg.arc.push_back(v_of({0, 0.01 * i, 1}));
    p.segments.push_back(seg);
    const double eps = 0.01;
    auto c = cover_path(p, h, eps, 1.0 / 7.0);
    CHECK(std::abs(static_cast<int>(c.balls.size()) - 5) <= 1);
    CHECK(c.covers_path);
    CHECK(c.min_pair_distance >= 0.1);
    // Every point within 0.1 of the segment lies in some ball.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1), o(-0.0577, 0.0577);
    for (int s = 0; s < 500; ++s) {
        Vec q = v_of({o(rng), u(rng), 1 + o(rng)});
        double dmin = 1e9;
        for (const auto& b : c.balls) dmin = std::min(dmin, (q - b.center).norm() - b.radius);
        CHECK(dmin <= 0);
    }
    for (const auto& b : c.balls) CHECK(b.period >= 1);

    ResonantPath single;
    single.segments.push_back({IntVec{1, 0, 0}, {v_of({0, 0, 1})}});
    CHECK(cover_path(single, h, eps, 0.1).balls.size() == 1);
    CHECK_THROWS_AS(cover_path(p, h, eps, 0.2), DomainError);
}
