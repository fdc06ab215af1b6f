#include "matherlab/normalform/normalform.hpp"

#include "matherlab/flow/flow.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace matherlab::normalform {

using model::Complex;
using model::SeriesHamiltonian;
using resonance::is_resonant;
using resonance::ResonanceFrame;

namespace {

int degree(const IntVec& i) { return std::accumulate(i.begin(), i.end(), 0); }

int norm_inf(const IntVec& k) {
    int m = 0;
    for (int v : k) m = std::max(m, std::abs(v));
    return m;
}

double frequency(const IntVec& k, const Vec& w) {
    double s = 0;
    for (std::size_t j = 0; j < k.size(); ++j) s += k[j] * w[static_cast<int>(j)];
    return s;
}

FourierTaylorSeries constant_like(const FourierTaylorSeries& s, double c) {
    FourierTaylorSeries r = FourierTaylorSeries::zero_like(s);
    if (c != 0.0) r.add(IntVec(s.dim(), 0), IntVec(s.dim(), 0), Complex(c, 0));
    return r;
}

struct Truncator {
    int K, d;
    double radius;
    double prune;
    double tail = 0;
    FourierTaylorSeries operator()(const FourierTaylorSeries& s) {
        auto t = model::truncate_with_tail(s, K, d, 0, radius);
        tail += t.tail;
        return prune > 0 ? t.kept.pruned(prune) : t.kept.pruned(0.0);
    }
};

}  // namespace

KamState initial_state(const FourierTaylorSeries& h, const FourierTaylorSeries& eps_P, const RationalVec& omega) {
    KamState s;
    s.h = h;
    s.Z = resonance::resonant_project(eps_P, omega);
    s.R1 = eps_P.filtered([&](const IntVec& k, const IntVec&) { return !is_resonant(k, omega); });
    s.R2 = FourierTaylorSeries::zero_like(eps_P);
    return s;
}

FourierTaylorSeries solve_homological(const FourierTaylorSeries& R1, const RationalVec& omega) {
    if (static_cast<int>(omega.size()) != R1.dim()) throw DimensionError("frequency dimension mismatch");
    const Vec w = resonance::to_vec(omega);
    FourierTaylorSeries W = FourierTaylorSeries::zero_like(R1);
    for (const auto& t : R1.terms()) {
        if (t.c == Complex(0, 0)) continue;
        if (is_resonant(t.k, omega)) throw MalformedSeries("resonant mode in the non-resonant remainder");
        W.add(t.k, t.i, Complex(0, 1) * t.c / frequency(t.k, w));
    }
    return W;
}

KamStepResult kam_step(const KamState& H, const RationalVec& omega, const KamOptions& opt) {
    const int n = H.h.dim();
    const Vec w = resonance::to_vec(omega);
    Truncator cut{opt.K_cut, opt.d_cut, opt.radius, opt.prune_tol};

    KamStepResult out;
    out.W = solve_homological(H.R1, omega);
    const FourierTaylorSeries& W = out.W;

    // <h_y - omega, W_x>
    FourierTaylorSeries R1n = FourierTaylorSeries::zero_like(H.R1);
    for (int j = 0; j < n; ++j) {
        FourierTaylorSeries g = H.h.dy(j) - constant_like(H.h, w[j]);
        R1n += g.product(W.dx(j));
    }
    R1n = cut(R1n);

    FourierTaylorSeries Q = H.Z + H.R1 + H.R2;
    FourierTaylorSeries B = cut(model::poisson_bracket(W, Q));
    // {W, H} with {W, h} = R1n - R1 by the homological equation.
    FourierTaylorSeries L = R1n - H.R1 + B;
    FourierTaylorSeries R2n = H.R2 + B;
    for (int m = 2; m <= opt.lie_order; ++m) {
        L = cut(model::poisson_bracket(W, L));
        L *= 1.0 / m;
        R2n += L;
    }
    FourierTaylorSeries next = model::poisson_bracket(W, L);
    next *= 1.0 / (opt.lie_order + 1);
    out.lie_tail = model::cnorm(next, 0, opt.radius);
    out.trunc_tail = cut.tail;

    out.next.h = H.h;
    out.next.Z = H.Z;
    out.next.R1 = R1n;
    out.next.R2 = opt.prune_tol > 0 ? R2n.pruned(opt.prune_tol) : R2n.pruned(0.0);
    return out;
}

double nonresonant_content(const FourierTaylorSeries& s, const RationalVec& omega) {
    double sum = 0;
    for (const auto& t : s.terms())
        if (degree(t.i) == 0 && !is_resonant(t.k, omega)) sum += std::abs(t.c);
    return sum;
}

std::optional<ResonanceFrame> resonance_frame(const RationalVec& omega) {
    const int n = static_cast<int>(omega.size());
    const long long T = resonance::period_of(omega);
    IntVec a(n);
    bool zero = true;
    for (int j = 0; j < n; ++j) {
        a[j] = static_cast<int>(omega[j].numerator() * (T / omega[j].denominator()));
        zero = zero && a[j] == 0;
    }
    if (zero) return std::nullopt;
    const int g = resonance::gcd_of(a);
    for (int& v : a) v /= g;
    if (n == 1) throw DomainError("a nonzero frequency in one dimension has no resonances");

    auto F = resonance::unimodular_complete(a);
    // Rows 1.. of I^{-1} are orthogonal to a and span the resonant lattice.
    std::vector<IntVec> cols;
    for (int r = 1; r < n; ++r) {
        IntVec v = F.I_inv[r];
        auto first = std::find_if(v.begin(), v.end(), [](int c) { return c != 0; });
        if (first != v.end() && *first < 0)
            for (int& c : v) c = -c;
        cols.push_back(v);
    }
    cols.push_back(F.I_inv[0]);

    ResonanceFrame fr;
    fr.k = cols[0];
    if (n >= 3) fr.k_prime = cols[1];
    fr.I.assign(n, IntVec(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) fr.I[r][c] = cols[c][r];
    fr.I_inv = resonance::unimodular_inverse(fr.I);
    fr.det = static_cast<int>(resonance::integer_det(fr.I));
    return fr;
}

namespace {

struct Shape {
    int K = 0;
    int d = 0;
};

Shape shape_of(const FourierTaylorSeries& s) {
    Shape sh;
    for (const auto& t : s.terms()) {
        sh.K = std::max(sh.K, norm_inf(t.k));
        sh.d = std::max(sh.d, degree(t.i));
    }
    return sh;
}

PieceNorms piece_norms(const FourierTaylorSeries& s, double radius) {
    return {model::cnorm(s, 0, radius), model::cnorm(s, 1, radius), model::cnorm(s, 2, radius)};
}

Vec sample_point(std::mt19937_64& rng, const Vec& center, double radius) {
    const int n = static_cast<int>(center.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g;
    Vec z(2 * n);
    for (int j = 0; j < n; ++j) z[j] = kTwoPi * u(rng);
    Vec dir(n);
    for (int j = 0; j < n; ++j) dir[j] = g(rng);
    const double nrm = dir.norm();
    const double r = radius * std::pow(u(rng), 1.0 / n);
    z.tail(n) = center + (nrm > 0 ? Vec(dir * (r / nrm)) : Vec(Vec::Zero(n)));
    return z;
}

std::vector<std::shared_ptr<SeriesHamiltonian>> generators(const NormalFormResult& r) {
    std::vector<std::shared_ptr<SeriesHamiltonian>> g;
    for (const auto& W : r.W) g.push_back(std::make_shared<SeriesHamiltonian>(-1.0 * W));
    return g;
}

}  // namespace

NormalFormResult normal_form(const model::NearIntegrableSystem& sys, const Vec& y_lambda, const RationalVec& omega,
                             const NormalFormOptions& opt) {
    sys.validate();
    const int n = sys.h.dim();
    if (static_cast<int>(omega.size()) != n || y_lambda.size() != n)
        throw DimensionError("normal_form: dimension mismatch");
    if (!(opt.sigma > 0 && opt.sigma < 1.0 / 3.0)) throw DomainError("normal_form: sigma must lie in (0, 1/3)");
    if (opt.steps < 1) throw DomainError("normal_form: at least one step is required");
    const double eps = sys.epsilon;
    if (eps > opt.eps0) throw DomainError("normal_form: epsilon exceeds eps0");

    NormalFormResult res;
    res.y_lambda = y_lambda;
    res.omega = omega;
    res.T = resonance::period_of(omega);
    res.epsilon = eps;
    res.sigma = opt.sigma;
    res.rho = (1.0 - 3.0 * opt.sigma) / 3.0;
    if (eps > 0 && static_cast<double>(res.T) > opt.K0 * std::pow(eps, -res.rho))
        throw DomainError("normal_form: period T exceeds K0 eps^{-rho}");
    res.window = eps > 0 ? std::pow(eps, opt.sigma) / static_cast<double>(res.T) : 0.0;

    const FourierTaylorSeries h0 = sys.h.rebased(y_lambda);
    {
        Vec g = h0.jet(Vec::Zero(n), y_lambda, 1).grad.tail(n);
        const Vec w = resonance::to_vec(omega);
        if ((g - w).lpNorm<Eigen::Infinity>() > 1e-9 * std::max(1.0, w.lpNorm<Eigen::Infinity>()))
            throw DomainError("normal_form: grad h(y_lambda) differs from omega");
    }
    const Shape sh_h = shape_of(sys.h), sh_p = shape_of(sys.P);
    const int K_cut = opt.K_cut.value_or(std::max(1, 2 * sh_p.K));
    const int deg_h = std::max(2, sh_h.d);
    const int d_cut = opt.d_cut.value_or(std::min(12, std::max(deg_h, sh_p.d + opt.steps * (deg_h - 1))));
    const int Kw = 2 * K_cut, dw = 2 * d_cut;

    std::vector<double> delta(opt.steps + 1);
    for (int j = 0; j <= opt.steps; ++j) delta[j] = (2.0 - (j + 1.0) / opt.steps) * res.window;

    FourierTaylorSeries hw = h0.with_cutoffs(Kw, dw);
    FourierTaylorSeries Pw = (eps * sys.P).rebased(y_lambda).with_cutoffs(Kw, dw);
    KamState state = initial_state(hw, Pw, omega);
    res.nonresonant_before = nonresonant_content(Pw, omega);

    KamOptions ko;
    ko.K_cut = K_cut;
    ko.d_cut = d_cut;
    ko.lie_order = opt.lie_order;
    ko.radius = delta[0];
    ko.prune_tol = 1e-14 * eps * eps;
    for (int j = 0; j < opt.steps; ++j) {
        auto step = kam_step(state, omega, ko);
        res.W.push_back(step.W);
        res.step_tails.push_back(step.lie_tail + step.trunc_tail);
        state = std::move(step.next);
        if (j == 0) res.nonresonant_after_step1 = nonresonant_content(state.R1 + state.R2, omega);
    }
    res.tail = std::accumulate(res.step_tails.begin(), res.step_tails.end(), 0.0);
    if (eps > 0 && res.tail > opt.tail_budget * eps) throw NoConvergence("normal_form: Lie series tail exceeds budget", res.tail);

    res.h = state.h;
    res.Z = state.Z;
    res.R_h = state.R1;
    res.R_r = state.R2;
    res.frame = resonance_frame(omega);

    const double r = res.window, rs = std::sqrt(eps);
    res.norms["Z"] = piece_norms(res.Z, r);
    res.norms["R_r"] = piece_norms(res.R_r, r);
    res.norms["R_h"] = piece_norms(res.R_h, r);
    res.norms["R_r/sqrt_eps"] = piece_norms(res.R_r, rs);
    res.norms["R_h/sqrt_eps"] = piece_norms(res.R_h, rs);
    for (std::size_t j = 0; j < res.W.size(); ++j) res.norms["W" + std::to_string(j)] = piece_norms(res.W[j], r);

    if (!opt.verify) return res;

    const auto gens = generators(res);
    const FourierTaylorSeries H = sys.total();
    const FourierTaylorSeries N = res.total();
    std::mt19937_64 rng(opt.seed);
    double worst = 0, scale = 0;
    for (int s = 0; s < opt.check_samples; ++s) {
        Vec z = sample_point(rng, y_lambda, delta[opt.steps]);
        Vec u = z;
        for (int j = opt.steps - 1; j >= 0; --j) {
            u = flow::flow_map(*gens[j], u, 0.0, 1.0, opt.ode_tol);
            if ((u.tail(n) - y_lambda).norm() > delta[j] * (1 + 1e-12) + 1e-15)
                throw DomainError("normal_form: transform leaves its domain");
        }
        const double hv = H.eval(u.head(n), u.tail(n));
        worst = std::max(worst, std::abs(hv - N.eval(z.head(n), z.tail(n))));
        scale = std::max(scale, std::abs(hv));
    }
    res.composition_error = worst;
    const double allowed = 10.0 * res.tail + 100.0 * opt.ode_tol * (1.0 + scale);
    if (worst > allowed) throw NoConvergence("normal_form: composition check failed", worst);

    double defect = 0;
    for (int s = 0; s < opt.symplectic_samples; ++s) {
        Vec u = sample_point(rng, y_lambda, delta[opt.steps]);
        Mat M = Mat::Identity(2 * n, 2 * n);
        for (int j = opt.steps - 1; j >= 0; --j) {
            auto tf = flow::tangent_flow(*gens[j], u, 0.0, 1.0, opt.ode_tol);
            M = tf.M * M;
            u = tf.z;
        }
        defect = std::max(defect, matherlab::symplectic_defect(M));
    }
    res.symplectic_defect = defect;
    res.verified = true;
    return res;
}

Vec apply_transform(const NormalFormResult& r, const Vec& z, double tol) {
    const auto gens = generators(r);
    Vec u = z;
    for (int j = static_cast<int>(gens.size()) - 1; j >= 0; --j) u = flow::flow_map(*gens[j], u, 0.0, 1.0, tol);
    return u;
}

double fit_exponent(const std::vector<double>& eps, const std::vector<double>& norms) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < eps.size(); ++i)
        if (norms[i] > 0 && eps[i] > 0) {
            lx.push_back(std::log(eps[i]));
            ly.push_back(std::log(norms[i]));
        }
    if (lx.empty()) return std::numeric_limits<double>::infinity();
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / sxx;
}

RemainderReport verify_remainder(const std::vector<NormalFormResult>& sweep, double slack) {
    RemainderReport rep;
    if (sweep.empty()) return rep;
    if (sweep.size() < 4) warn("verify_remainder: fewer than four epsilon values in the sweep");
    const double s = sweep.front().sigma;
    const double rho = (1.0 - 3.0 * s) / 3.0;
    rep.sigma = s;
    rep.rescaled_exponent = 3 * s - 2 * rho;
    for (const auto& r : sweep) rep.epsilons.push_back(r.epsilon);

    struct Item {
        const char* piece;
        const char* key;
        const char* window;
        int order;
        double reference;
    };
    const Item items[] = {
        {"R_r", "R_r", "wide", 2, 4.0 / 3.0 + 2 * s},
        {"R_h", "R_h", "wide", 2, 1.0 / 3.0 + 5 * s},
        {"R_h", "R_h/sqrt_eps", "sqrt_eps", 1, 4.0 / 3.0 + 5 * s},
        {"R_h", "R_h/sqrt_eps", "sqrt_eps", 2, 5.0 / 6.0 + 5 * s},
    };
    rep.pass = true;
    for (const auto& it : items) {
        std::vector<double> v;
        for (const auto& r : sweep) {
            const PieceNorms& pn = r.norms.at(it.key);
            v.push_back(it.order == 0 ? pn.c0 : it.order == 1 ? pn.c1 : pn.c2);
        }
        ExponentFit f;
        f.piece = it.piece;
        f.window = it.window;
        f.order = it.order;
        f.reference = it.reference;
        f.measured = fit_exponent(rep.epsilons, v);
        f.pass = f.measured >= f.reference - slack;
        rep.pass = rep.pass && f.pass;
        rep.fits.push_back(f);
    }
    return rep;
}

std::vector<NormalFormResult> epsilon_sweep(const model::NearIntegrableSystem& sys, const Vec& y_lambda,
                                            const RationalVec& omega, const std::vector<double>& epsilons,
                                            const NormalFormOptions& opt) {
    std::vector<NormalFormResult> out;
    for (double e : epsilons) {
        model::NearIntegrableSystem s = sys;
        s.epsilon = e;
        out.push_back(normal_form(s, y_lambda, omega, opt));
    }
    return out;
}

FourierTaylorSeries rotate_resonant_frame(const FourierTaylorSeries& H, const ResonanceFrame& frame) {
    return H.linear_substitution(frame.I, frame.I_inv);
}

// ---------------------------------------------------------------------------

FourierTaylorSeries HomogenizedHamiltonian::G_bar() const {
    const int n = static_cast<int>(A.rows());
    FourierTaylorSeries G = FourierTaylorSeries::zero_like(V);
    for (int q = 0; q < n; ++q) {
        IntVec e(n, 0);
        e[q] = 1;
        G.add(IntVec(n, 0), e, Complex(omega_j[q] / scale, 0));
        for (int r = q; r < n; ++r) {
            IntVec i(n, 0);
            ++i[q];
            ++i[r];
            G.add(IntVec(n, 0), i, Complex(q == r ? 0.5 * A(q, q) : A(q, r), 0));
        }
    }
    return G + V;
}

FourierTaylorSeries HomogenizedHamiltonian::G_eps() const { return G_bar() + Z_eps + R_eps; }

Vec HomogenizedHamiltonian::to_original(const Vec& xp) const {
    const int n = static_cast<int>(y_j.size());
    Vec z = xp;
    z.tail(n) = y_j + scale * xp.tail(n);
    return z;
}

Vec HomogenizedHamiltonian::from_original(const Vec& xy) const {
    const int n = static_cast<int>(y_j.size());
    Vec z = xy;
    z.tail(n) = (xy.tail(n) - y_j) / scale;
    return z;
}

HomogenizedHamiltonian homogenize(const FourierTaylorSeries& h, const FourierTaylorSeries& Z,
                                  const FourierTaylorSeries& R, const Vec& y_j, double epsilon, double p_radius) {
    if (!(epsilon > 0)) throw DomainError("homogenize: epsilon must be positive");
    const int n = h.dim();
    if (y_j.size() != n || Z.dim() != n || R.dim() != n) throw DimensionError("homogenize: dimension mismatch");
    HomogenizedHamiltonian g;
    g.epsilon = epsilon;
    g.scale = std::sqrt(epsilon);
    g.y_j = y_j;
    g.p_radius = p_radius;

    FourierTaylorSeries hj = h.rebased(y_j);
    auto jet = hj.jet(Vec::Zero(n), y_j, 2);
    g.omega_j = jet.grad.tail(n);
    g.A = jet.hess.bottomRightCorner(n, n);
    Eigen::LLT<Mat> llt(g.A);
    if (llt.info() != Eigen::Success) throw DomainError("homogenize: Hessian of h is not positive definite");

    const double inv = 1.0 / epsilon;
    auto deg_at_least = [](int m) { return [m](const IntVec&, const IntVec& i) { return degree(i) >= m; }; };
    FourierTaylorSeries hs = hj.scaled_actions(g.scale);
    FourierTaylorSeries Zs = Z.rebased(y_j).scaled_actions(g.scale);
    g.V = inv * Zs.filtered([](const IntVec&, const IntVec& i) { return degree(i) == 0; });
    g.Z_eps = inv * (hs.filtered(deg_at_least(3)) + Zs.filtered(deg_at_least(1)));
    g.R_eps = inv * R.rebased(y_j).scaled_actions(g.scale);
    g.Z_eps_c0 = model::cnorm(g.Z_eps, 0, p_radius);
    g.R_eps_c2 = model::cnorm(g.R_eps, 2, p_radius);
    return g;
}

HomogenizedHamiltonian homogenize(const NormalFormResult& nf, const Vec& y_j, double p_radius) {
    return homogenize(nf.h, nf.Z, nf.R_r + nf.R_h, y_j, nf.epsilon, p_radius);
}

// ---------------------------------------------------------------------------

AveragedPotential averaged_potential(const FourierTaylorSeries& V, const RationalVec& omega, double Lambda) {
    if (V.dim() != 2 || omega.size() != 2) throw DimensionError("averaged_potential: expects a potential on T^2");
    auto frame = resonance_frame(omega);
    if (!frame) throw DomainError("averaged_potential: omega must be nonzero");

    AveragedPotential out;
    out.k = frame->k;
    FourierTaylorSeries V0 = V.filtered([](const IntVec&, const IntVec& i) { return degree(i) == 0; });
    out.full = resonance::resonant_project(V0, omega);

    const int q = out.k[0] != 0 ? 0 : 1;
    int K = 1;
    for (const auto& t : out.full.terms()) K = std::max(K, std::abs(t.k[q] / out.k[q]));
    out.circle = FourierTaylorSeries(1, Vec::Zero(1), K, 0);
    for (const auto& t : out.full.terms()) out.circle.add({t.k[q] / out.k[q]}, {0}, t.c);

    const Vec y0 = Vec::Zero(1);
    auto f = [&](double th) { return out.circle.eval(Vec::Constant(1, th), y0); };
    const int N = 4096;
    double best = -std::numeric_limits<double>::infinity(), th = 0;
    for (int i = 0; i < N; ++i) {
        double t = kTwoPi * i / N;
        double v = f(t);
        if (v > best) {
            best = v;
            th = t;
        }
    }
    for (int it = 0; it < 50; ++it) {
        auto jt = out.circle.jet(Vec::Constant(1, th), y0, 2);
        const double d1 = jt.grad[0], d2 = jt.hess(0, 0);
        if (d2 >= 0) break;
        const double step = d1 / d2;
        th -= step;
        if (std::abs(step) < 1e-15) break;
    }
    out.theta_max = wrap_angle(th);
    out.value_max = f(out.theta_max);
    out.curvature = -out.circle.jet(Vec::Constant(1, out.theta_max), y0, 2).hess(0, 0);
    out.nondegenerate = out.curvature > Lambda;
    if (!out.nondegenerate) warn("averaged_potential: degenerate maximum");
    return out;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& m) {
    nlohmann::json j = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) j.push_back(vec_json(m.row(r).transpose()));
    return j;
}

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

nlohmann::json to_json(const NormalFormResult& r) {
    nlohmann::json j;
    j["epsilon"] = r.epsilon;
    j["sigma"] = r.sigma;
    j["rho"] = r.rho;
    j["T"] = r.T;
    j["window"] = r.window;
    j["y_lambda"] = vec_json(r.y_lambda);
    j["omega"] = resonance::to_json(r.omega);
    j["h"] = model::to_json(r.h);
    j["Z"] = model::to_json(r.Z);
    j["R_r"] = model::to_json(r.R_r);
    j["R_h"] = model::to_json(r.R_h);
    j["W"] = nlohmann::json::array();
    for (const auto& W : r.W) j["W"].push_back(model::to_json(W));
    if (r.frame) {
        j["frame"] = {{"k", r.frame->k}, {"I", r.frame->I}, {"det", r.frame->det}};
        if (r.frame->k_prime) j["frame"]["k_prime"] = *r.frame->k_prime;
    }
    nlohmann::json norms;
    for (const auto& [name, pn] : r.norms) norms[name] = {{"C0", pn.c0}, {"C1", pn.c1}, {"C2", pn.c2}};
    j["norms"] = norms;
    j["nonresonant_before"] = r.nonresonant_before;
    j["nonresonant_after_step1"] = r.nonresonant_after_step1;
    j["step_tails"] = r.step_tails;
    j["tail"] = r.tail;
    j["composition_error"] = r.composition_error;
    j["symplectic_defect"] = r.symplectic_defect;
    j["verified"] = r.verified;
    return j;
}

nlohmann::json to_json(const RemainderReport& r) {
    nlohmann::json j;
    j["epsilons"] = r.epsilons;
    j["sigma"] = r.sigma;
    j["rescaled_exponent"] = r.rescaled_exponent;
    j["pass"] = r.pass;
    j["fits"] = nlohmann::json::array();
    for (const auto& f : r.fits)
        j["fits"].push_back({{"piece", f.piece},
                             {"window", f.window},
                             {"order", f.order},
                             {"measured", number(f.measured)},
                             {"reference", f.reference},
                             {"pass", f.pass}});
    return j;
}

nlohmann::json to_json(const HomogenizedHamiltonian& g) {
    return {{"A", mat_json(g.A)},           {"V", model::to_json(g.V)},         {"Z_eps", model::to_json(g.Z_eps)},
            {"R_eps", model::to_json(g.R_eps)}, {"omega_j", vec_json(g.omega_j)}, {"y_j", vec_json(g.y_j)},
            {"epsilon", g.epsilon},         {"scale", g.scale},                 {"Z_eps_C0", g.Z_eps_c0},
            {"R_eps_C2", g.R_eps_c2}};
}

nlohmann::json to_json(const AveragedPotential& a) {
    return {{"k", a.k},
            {"circle", model::to_json(a.circle)},
            {"theta_max", a.theta_max},
            {"value_max", a.value_max},
            {"curvature", a.curvature},
            {"nondegenerate", a.nondegenerate}};
}

}  // namespace matherlab::normalform
