#include "matherlab/mather/mather.hpp"

#include <Eigen/Sparse>

#include <iomanip>

namespace matherlab::mather {

namespace {

using Sparse = Eigen::SparseMatrix<double>;

struct Step {
    double v = 0, d1 = 0, d2 = 0;
};

// Quintic smoothstep from 0 at lo to 1 at lo + width.
Step smoothstep(double s, double lo, double width) {
    double u = (s - lo) / width;
    if (u <= 0) return {0, 0, 0};
    if (u >= 1) return {1, 0, 0};
    return {u * u * u * (10 - 15 * u + 6 * u * u), 30 * u * u * (1 - u) * (1 - u) / width,
            60 * u * (1 - u) * (1 - 2 * u) / (width * width)};
}

// Periodic (1 - r^2)^3 bump with unit mean.
Step bump(double x, double centre, double R) {
    double r = wrap_centered(x - centre) / R;
    if (std::abs(r) >= 1) return {0, 0, 0};
    const double K = kTwoPi * 35.0 / (32.0 * R);
    double q = 1 - r * r;
    return {K * q * q * q, -6 * K * r * q * q / R, -6 * K * q * (1 - 5 * r * r) / (R * R)};
}

class Problem {
public:
    Problem(const model::MechanicalHamiltonian& H, const Vec& c, double dc, StepMode mode, const ConnectGeometry& geo,
            double alpha, int N)
        : H_(H), n_(H.dof()), c_(c), dc_(dc), mode_(mode), geo_(geo), alpha_(alpha), N_(N),
          h_(geo.horizon / (N - 1)), G_(H.A().inverse()) {}

    int n() const { return n_; }
    int nodes() const { return N_; }
    double h() const { return h_; }
    double time(int i) const { return -0.5 * geo_.horizon + i * h_; }

    double action(const Vec& X) const {
        double S = 0;
        for (int i = 0; i + 1 < N_; ++i) S += segment(X, i, nullptr, nullptr);
        return S;
    }

    // Segment i contributes h * L(m, d, t_mid); returns the value and
    // optionally its gradient (2n) and Hessian (2n x 2n) in (x_i, x_{i+1}).
    double segment(const Vec& X, int i, Vec* g, Mat* Hs) const {
        const int n = n_, k = geo_.cover;
        Vec a = X.segment(n * i, n), b = X.segment(n * (i + 1), n);
        Vec m = 0.5 * (a + b), d = (b - a) / h_;
        const double tm = time(i) + 0.5 * h_;
        Step rho = mode_ == StepMode::space_step
                       ? smoothstep(m[k], geo_.transition - geo_.transition_width, 2 * geo_.transition_width)
                       : smoothstep(tm, geo_.transition - geo_.transition_width, 2 * geo_.transition_width);
        Step bb = bump(m[k], geo_.bump_center, geo_.bump_radius);
        // phi = rho * b as a function of m_k (rho constant in m_k in time mode).
        double phi = rho.v * bb.v, phi1 = rho.v * bb.d1, phi2 = rho.v * bb.d2;
        if (mode_ == StepMode::space_step) {
            phi1 += rho.d1 * bb.v;
            phi2 += rho.d2 * bb.v + 2 * rho.d1 * bb.d1;
        }
        Vec Gd = G_ * d;
        double L = 0.5 * d.dot(Gd) - H_.potential(m) - c_.dot(d) - dc_ * phi * d[k] + alpha_;
        if (!g) return h_ * L;
        Vec lm = -H_.potential_gradient(m);
        lm[k] -= dc_ * phi1 * d[k];
        Vec ld = Gd - c_;
        ld[k] -= dc_ * phi;
        Mat lmm = -H_.potential_hessian(m);
        lmm(k, k) -= dc_ * phi2 * d[k];
        Mat P = Mat::Zero(n, n);
        P(k, k) = -dc_ * phi1;
        const Mat& ldd = G_;
        g->resize(2 * n);
        g->head(n) = 0.5 * h_ * lm - ld;
        g->tail(n) = 0.5 * h_ * lm + ld;
        Hs->resize(2 * n, 2 * n);
        Mat sym = 0.5 * (P + P.transpose());
        Hs->topLeftCorner(n, n) = 0.25 * h_ * lmm - sym + ldd / h_;
        Hs->bottomRightCorner(n, n) = 0.25 * h_ * lmm + sym + ldd / h_;
        Mat ab = 0.25 * h_ * lmm + 0.5 * P - 0.5 * P.transpose() - ldd / h_;
        Hs->topRightCorner(n, n) = ab;
        Hs->bottomLeftCorner(n, n) = ab.transpose();
        return h_ * L;
    }

    struct Result {
        Vec X;
        double S = 0;
        int iterations = 0;
        double gradient_norm = 0;
    };

    // Newton with a Levenberg shift; `fixed` lists variable indices held at
    // their values in X.
    Result minimize(Vec X, const std::vector<int>& fixed) const {
        const int dim = static_cast<int>(X.size());
        std::vector<char> is_fixed(dim, 0);
        for (int f : fixed) is_fixed[f] = 1;
        Sparse I(dim, dim);
        I.setIdentity();
        Result r;
        double S = action(X), mu = 1e-10;
        for (int it = 0; it < 200; ++it) {
            Vec grad = Vec::Zero(dim);
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(static_cast<size_t>(N_) * 4 * n_ * n_);
            Vec g;
            Mat Hs;
            for (int i = 0; i + 1 < N_; ++i) {
                segment(X, i, &g, &Hs);
                const int base = n_ * i;
                for (int r1 = 0; r1 < 2 * n_; ++r1) {
                    if (is_fixed[base + r1]) continue;
                    grad[base + r1] += g[r1];
                    for (int c1 = 0; c1 < 2 * n_; ++c1)
                        if (!is_fixed[base + c1]) trip.emplace_back(base + r1, base + c1, Hs(r1, c1));
                }
            }
            for (int f : fixed) trip.emplace_back(f, f, 1.0);
            Sparse Hm(dim, dim);
            Hm.setFromTriplets(trip.begin(), trip.end());
            r.gradient_norm = grad.lpNorm<Eigen::Infinity>();
            r.iterations = it;
            if (r.gradient_norm < 1e-10) break;
            bool moved = false;
            for (int tries = 0; tries < 40 && !moved; ++tries) {
                Sparse M = Hm + mu * I;
                Eigen::SimplicialLDLT<Sparse> ldlt(M);
                if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any()) {
                    mu = std::max(10 * mu, 1e-10);
                    continue;
                }
                Vec step = ldlt.solve(-grad);
                Vec Xn = X + step;
                double Sn = action(Xn);
                if (Sn <= S + 1e-14 * std::max(1.0, std::abs(S))) {
                    X = Xn;
                    S = Sn;
                    mu = std::max(mu / 10, 1e-14);
                    moved = true;
                } else {
                    mu = std::max(10 * mu, 1e-10);
                }
            }
            if (!moved) break;
        }
        r.X = std::move(X);
        r.S = S;
        return r;
    }

private:
    const model::MechanicalHamiltonian& H_;
    int n_;
    Vec c_;
    double dc_;
    StepMode mode_;
    ConnectGeometry geo_;
    double alpha_;
    int N_;
    double h_;
    Mat G_;
};

double torus_alpha(const model::MechanicalHamiltonian& H, int k, double a, const Vec& y) {
    const int n = H.dof();
    Vec z(2 * n);
    z.tail(n) = y;
    double first = 0;
    for (int s = 0; s < 16; ++s) {
        z.head(n).setConstant(kTwoPi * s / 16 + 0.1 * s * s);
        z[k] = a;
        double v = H.value(z, 0.0);
        Vec gx = H.gradient(z, 0.0).head(n);
        if (gx.norm() > 1e-9) throw DomainError("connecting_orbit: end torus is not invariant");
        if (s == 0) first = v;
        if (std::abs(v - first) > 1e-9) throw DomainError("connecting_orbit: energy varies along the end torus");
    }
    return first;
}

}  // namespace

ConnectingOrbit connecting_orbit(const std::shared_ptr<const model::MechanicalHamiltonian>& H, const Vec& c,
                                 const Vec& c_prime, StepMode mode, const ConnectGeometry& geo) {
    if (!H) throw DomainError("connecting_orbit: null Hamiltonian");
    const int n = H->dof(), k = geo.cover;
    if (c.size() != n || c_prime.size() != n) throw DimensionError("connecting_orbit: class dimension");
    if (k < 0 || k >= n) throw DomainError("connecting_orbit: cover index out of range");
    if (H->b().size() && H->b().norm() > 0) throw DomainError("connecting_orbit: linear momentum term not supported");
    if (!(geo.horizon > 0) || geo.nodes < 16) throw DomainError("connecting_orbit: horizon and nodes must be positive");
    if (!(geo.bump_radius > 0 && geo.bump_radius <= std::numbers::pi))
        throw DomainError("connecting_orbit: bump radius must lie in (0, pi]");
    if (!(geo.transition_width > 0)) throw DomainError("connecting_orbit: transition width must be positive");
    Vec dcv = c_prime - c;
    for (int i = 0; i < n; ++i)
        if (i != k && std::abs(dcv[i]) > 1e-12)
            throw DomainError("connecting_orbit: classes may differ only along the cover direction");
    const double dc = dcv[k];
    if (mode == StepMode::space_step) {
        double lo = geo.transition - geo.transition_width, hi = geo.transition + geo.transition_width;
        double near = geo.bump_center + kTwoPi * std::round((0.5 * (lo + hi) - geo.bump_center) / kTwoPi);
        for (double cen : {near - kTwoPi, near, near + kTwoPi})
            if (cen + geo.bump_radius > lo && cen - geo.bump_radius < hi)
                throw DomainError("connecting_orbit: increment form overlaps the transition strip");
    }

    Vec y0 = c, y1 = c_prime;
    y0[k] = 0;
    y1[k] = 0;
    const double alpha = torus_alpha(*H, k, geo.a_minus, y0);
    const double alpha1 = torus_alpha(*H, k, geo.a_plus, y1);
    if (std::abs(alpha - alpha1) > 1e-6) throw DomainError("connecting_orbit: alpha(c) and alpha(c') differ");
    const Vec v0 = H->A() * y0, v1 = H->A() * y1;

    ConnectingOrbit out;
    out.alpha = alpha;
    const int N = geo.nodes % 2 == 1 ? geo.nodes : geo.nodes + 1;
    Problem P(*H, c, dc, mode, geo, alpha, N);
    for (int i = 0; i < N; ++i) out.t.push_back(P.time(i));

    if (dc == 0 && geo.a_minus == geo.a_plus) {
        for (int i = 0; i < N; ++i) {
            Vec x = v0 * out.t[i];
            x[k] = geo.a_minus;
            out.x.push_back(x);
        }
        Vec X(n * N);
        for (int i = 0; i < N; ++i) X.segment(n * i, n) = out.x[i];
        out.action = P.action(X);
        out.certificate.trivial = true;
        out.certificate.passed = true;
        return out;
    }

    Vec X(n * N);
    const double span = geo.a_plus - geo.a_minus;
    for (int i = 0; i < N; ++i) {
        double t = out.t[i];
        Vec x = v0 * t;
        x[k] = geo.a_minus + span * (2 / std::numbers::pi) * std::atan(std::exp(geo.rate * t));
        X.segment(n * i, n) = x;
    }
    const int mid = (N - 1) / 2;
    std::vector<int> ends = {k, n * (N - 1) + k};
    X[k] = geo.a_minus;
    X[n * (N - 1) + k] = geo.a_plus;
    X[n * mid + k] = mode == StepMode::space_step ? geo.transition : geo.a_minus + 0.5 * span;
    std::vector<int> fixed = ends;
    fixed.push_back(n * mid + k);
    auto res = P.minimize(X, fixed);
    out.iterations = res.iterations;
    out.gradient_norm = res.gradient_norm;
    for (int i = 0; i < N; ++i) out.x.push_back(res.X.segment(n * i, n));
    const double h = P.h();
    // Velocity from the end segment, oriented forward in time.
    auto dist = [&](int i0, int i1, double a, const Vec& vt) {
        Vec v = (out.x[std::max(i0, i1)] - out.x[std::min(i0, i1)]) / h - vt;
        double dx = out.x[i0][k] - a;
        return std::sqrt(dx * dx + v.squaredNorm());
    };
    Vec vt0 = v0, vt1 = v1;
    vt0[k] = 0;
    vt1[k] = 0;
    if (mode == StepMode::time_step && dc != 0) {
        double overlap = 0;
        for (int i = 0; i < N; ++i) {
            double r = smoothstep(out.t[i], geo.transition - geo.transition_width, 2 * geo.transition_width).d1;
            overlap = std::max(overlap, r * bump(out.x[i][k], geo.bump_center, geo.bump_radius).v);
        }
        if (overlap > 0) warn("connecting_orbit: the orbit meets the increment form while the time switch acts");
    }
    out.dist_minus = dist(0, 1, geo.a_minus, vt0);
    out.dist_plus = dist(N - 1, N - 2, geo.a_plus, vt1);

    // Certificate: action with all coordinates pinned at t = -tau/2 and tau/2.
    auto node_at = [&](double t) { return static_cast<int>(std::lround((t + 0.5 * geo.horizon) / h)); };
    auto pinned = [&](int i0, const Vec& m0, int i1, const Vec& m1) {
        if (i0 <= 0 || i1 >= N - 1 || i0 >= i1) throw DomainError("connecting_orbit: certificate window outside the horizon");
        Vec Y = res.X;
        std::vector<int> fx = ends;
        for (int d = 0; d < n; ++d) {
            Y[n * i0 + d] = m0[d];
            Y[n * i1 + d] = m1[d];
            fx.push_back(n * i0 + d);
            fx.push_back(n * i1 + d);
        }
        return P.minimize(Y, fx).S;
    };
    const int im = node_at(-geo.section_time), ip = node_at(geo.section_time);
    const Vec mm = out.x[im], mp = out.x[ip];
    const double ref = pinned(im, mm, ip, mp);
    out.action = ref;
    const int shift = static_cast<int>(std::lround(0.5 * geo.window / h));
    std::vector<double> excess;
    for (int d = 0; d < n; ++d) {
        if (d == k) continue;
        for (double s : {-geo.disk_radius, geo.disk_radius}) {
            Vec a = mm, b = mp;
            a[d] += s;
            excess.push_back(pinned(im, a, ip, mp) - ref);
            b[d] += s;
            excess.push_back(pinned(im, mm, ip, b) - ref);
        }
    }
    excess.push_back(pinned(im + shift, mm, ip - shift, mp) - ref);
    excess.push_back(pinned(im - shift, mm, ip + shift, mp) - ref);
    out.certificate.excess = excess;
    out.certificate.margin = *std::min_element(excess.begin(), excess.end());
    out.certificate.passed = out.certificate.margin > 1e-8;
    return out;
}

void write_orbit_csv(const ConnectingOrbit& o, std::ostream& os) {
    os << "t";
    const int n = o.x.empty() ? 0 : static_cast<int>(o.x[0].size());
    for (int d = 0; d < n; ++d) os << ",x" << d + 1;
    os << '\n' << std::setprecision(17);
    for (size_t i = 0; i < o.t.size(); ++i) {
        os << o.t[i];
        for (int d = 0; d < n; ++d) os << ',' << o.x[i][d];
        os << '\n';
    }
}

nlohmann::json to_json(const ConnectingOrbit& o) {
    return {{"action", o.action},
            {"alpha", o.alpha},
            {"dist_minus", o.dist_minus},
            {"dist_plus", o.dist_plus},
            {"iterations", o.iterations},
            {"gradient_norm", o.gradient_norm},
            {"certificate",
             {{"margin", o.certificate.margin},
              {"excess", o.certificate.excess},
              {"passed", o.certificate.passed},
              {"trivial", o.certificate.trivial}}}};
}

}  // namespace matherlab::mather
