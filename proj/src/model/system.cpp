#include "matherlab/model/system.hpp"

#include <random>

namespace matherlab::model {

Vec Hamiltonian::field(const Vec& z, double t) const {
    const int n = dof();
    Vec g = gradient(z, t);
    Vec f(2 * n);
    f.head(n) = g.tail(n);
    f.tail(n) = -g.head(n);
    return f;
}

Mat Hamiltonian::field_jacobian(const Vec& z, double t) const {
    return symplectic_form(dof()) * hessian(z, t);
}

// ---------------------------------------------------------------------------

SeriesHamiltonian::SeriesHamiltonian(FourierTaylorSeries H) : H_(std::move(H)) { H_.check_reality(); }

double SeriesHamiltonian::value(const Vec& z, double) const {
    const int n = dof();
    return H_.eval(z.head(n), z.tail(n));
}

Vec SeriesHamiltonian::gradient(const Vec& z, double) const {
    const int n = dof();
    return H_.jet(z.head(n), z.tail(n), 1).grad;
}

Mat SeriesHamiltonian::hessian(const Vec& z, double) const {
    const int n = dof();
    return H_.jet(z.head(n), z.tail(n), 2).hess;
}

// ---------------------------------------------------------------------------

MechanicalHamiltonian::MechanicalHamiltonian(Mat A, FourierTaylorSeries V, Vec b)
    : A_(std::move(A)), b_(std::move(b)), V_(std::move(V)) {
    const int n = static_cast<int>(A_.rows());
    if (A_.cols() != n || V_.dim() != n) throw DimensionError("MechanicalHamiltonian: dimension mismatch");
    if (b_.size() == 0) b_ = Vec::Zero(n);
    if ((A_ - A_.transpose()).cwiseAbs().maxCoeff() > 1e-14) throw DomainError("kinetic matrix must be symmetric");
    V_.check_reality();
    for (const auto& t : V_.terms()) {
        for (int v : t.i)
            if (v != 0) throw DomainError("potential must not depend on actions");
        int first = 0;
        while (first < n && t.k[first] == 0) ++first;
        if (first == n) {
            v0_ += t.c.real();
            continue;
        }
        if (t.k[first] < 0) continue;  // partner handled with the positive representative
        Mode m;
        m.k = Vec(n);
        for (int j = 0; j < n; ++j) m.k[j] = t.k[j];
        m.a = 2.0 * t.c.real();
        m.b = -2.0 * t.c.imag();
        modes_.push_back(m);
    }
}

double MechanicalHamiltonian::potential(const Vec& x) const {
    double v = v0_;
    for (const auto& m : modes_) {
        double ph = m.k.dot(x);
        v += m.a * std::cos(ph) + m.b * std::sin(ph);
    }
    return v;
}

Vec MechanicalHamiltonian::potential_gradient(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    for (const auto& m : modes_) {
        double ph = m.k.dot(x);
        g += (-m.a * std::sin(ph) + m.b * std::cos(ph)) * m.k;
    }
    return g;
}

Mat MechanicalHamiltonian::potential_hessian(const Vec& x) const {
    Mat h = Mat::Zero(x.size(), x.size());
    for (const auto& m : modes_) {
        double ph = m.k.dot(x);
        h += (-m.a * std::cos(ph) - m.b * std::sin(ph)) * (m.k * m.k.transpose());
    }
    return h;
}

double MechanicalHamiltonian::value(const Vec& z, double) const {
    const int n = dof();
    Vec y = z.tail(n);
    return 0.5 * y.dot(A_ * y) + b_.dot(y) + potential(z.head(n));
}

Vec MechanicalHamiltonian::gradient(const Vec& z, double) const {
    const int n = dof();
    Vec g(2 * n);
    g.head(n) = potential_gradient(z.head(n));
    g.tail(n) = A_ * z.tail(n) + b_;
    return g;
}

Mat MechanicalHamiltonian::hessian(const Vec& z, double) const {
    const int n = dof();
    Mat h = Mat::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n) = potential_hessian(z.head(n));
    h.bottomRightCorner(n, n) = A_;
    return h;
}

// ---------------------------------------------------------------------------

FunctionHamiltonian::FunctionHamiltonian(int n, ValueFn v, GradFn g, HessFn h, bool autonomous, double period)
    : n_(n), v_(std::move(v)), g_(std::move(g)), h_(std::move(h)), autonomous_(autonomous), period_(period) {}

ShiftedHamiltonian::ShiftedHamiltonian(HamiltonianPtr H, Vec c) : H_(std::move(H)), c_(std::move(c)) {
    if (c_.size() != H_->dof()) throw DimensionError("cohomology class dimension mismatch");
}

Vec ShiftedHamiltonian::shift(const Vec& z) const {
    Vec s = z;
    s.tail(c_.size()) += c_;
    return s;
}

double ShiftedHamiltonian::value(const Vec& z, double t) const { return H_->value(shift(z), t); }
Vec ShiftedHamiltonian::gradient(const Vec& z, double t) const { return H_->gradient(shift(z), t); }
Mat ShiftedHamiltonian::hessian(const Vec& z, double t) const { return H_->hessian(shift(z), t); }

// ---------------------------------------------------------------------------

void NearIntegrableSystem::validate() const {
    if (h.dim() != P.dim()) throw DimensionError("h and P dimensions differ");
    if (epsilon < 0) throw DomainError("epsilon must be nonnegative");
    if (smoothness_r < 8) throw DomainError("smoothness_r must be at least 8");
    if (!(m > 0 && m <= M)) throw DomainError("convexity bounds require 0 < m <= M");
    for (const auto& t : h.terms())
        for (int v : t.k)
            if (v != 0) throw DomainError("h must not depend on angles");
    h.check_reality();
    P.check_reality();
}

FourierTaylorSeries NearIntegrableSystem::total() const {
    FourierTaylorSeries out = h;
    FourierTaylorSeries p = P.rebased(h.base_point());
    p *= epsilon;
    out += p;
    return out;
}

double NearIntegrableSystem::convexity_violation(int samples, unsigned seed) const {
    const int n = h.dim();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    Vec x = Vec::Zero(n);
    for (int s = 0; s < samples; ++s) {
        Vec dir(n), v(n);
        for (int j = 0; j < n; ++j) dir[j] = g(rng), v[j] = g(rng);
        Vec y = h.base_point() + dir.normalized() * R * std::pow(u(rng), 1.0 / n);
        v.normalize();
        Mat Hs = h.jet(x, y, 2).hess.bottomRightCorner(n, n);
        double q = v.dot(Hs * v);
        worst = std::max({worst, m - q, q - M});
    }
    return worst;
}

// ---------------------------------------------------------------------------

LegendreResult legendre_dual(const Hamiltonian& H, const Vec& x, const Vec& v, double t, std::optional<Vec> seed) {
    const int n = H.dof();
    if (x.size() != n || v.size() != n) throw DimensionError("legendre_dual: dimension mismatch");
    Vec y = seed ? *seed : v;
    Vec z(2 * n);
    z.head(n) = x;
    auto residual = [&](const Vec& yy) {
        z.tail(n) = yy;
        return Vec(v - H.gradient(z, t).tail(n));
    };
    Vec r = residual(y);
    LegendreResult out;
    for (int it = 0; it < 50; ++it) {
        double rn = r.norm();
        if (rn <= 1e-12 * (1.0 + v.norm())) {
            out.iterations = it;
            break;
        }
        z.tail(n) = y;
        Mat Hyy = H.hessian(z, t).bottomRightCorner(n, n);
        Vec step = Hyy.ldlt().solve(r);
        double lam = 1.0;
        Vec yn = y + step, rnew = residual(yn);
        while (rnew.norm() > (1.0 - 1e-4 * lam) * rn && lam > 1e-8) {
            lam *= 0.5;
            yn = y + lam * step;
            rnew = residual(yn);
        }
        y = yn;
        r = rnew;
        out.iterations = it + 1;
    }
    out.residual = r.norm();
    if (out.residual > 1e-10 * (1.0 + v.norm()))
        throw NoConvergence("legendre_dual: Newton did not converge in 50 steps", out.residual);
    z.tail(n) = y;
    out.y = y;
    out.L = v.dot(y) - H.value(z, t);
    return out;
}

double LegendreLagrangian::value(const Vec& x, const Vec& v, double t) const {
    return legendre_dual(*H_, x, v, t).L;
}

LagrangianJet LegendreLagrangian::jet(const Vec& x, const Vec& v, double t) const {
    const int n = H_->dof();
    auto ld = legendre_dual(*H_, x, v, t);
    Vec z(2 * n);
    z << x, ld.y;
    Vec g = H_->gradient(z, t);
    Mat h = H_->hessian(z, t);
    Mat Hxx = h.topLeftCorner(n, n), Hxy = h.topRightCorner(n, n), Hyy = h.bottomRightCorner(n, n);
    Mat Hyy_inv = Hyy.inverse();
    LagrangianJet j;
    j.L = ld.L;
    j.Lv = ld.y;
    j.Lx = -g.head(n);
    j.Lvv = Hyy_inv;
    j.Lxv = -Hxy * Hyy_inv;
    j.Lxx = -Hxx + Hxy * Hyy_inv * Hxy.transpose();
    return j;
}

MechanicalLagrangian::MechanicalLagrangian(std::shared_ptr<const MechanicalHamiltonian> H) : H_(std::move(H)) {
    if (H_->b().cwiseAbs().maxCoeff() != 0.0) throw DomainError("MechanicalLagrangian requires b = 0");
    Minv_ = H_->A().inverse();
}

double MechanicalLagrangian::value(const Vec& x, const Vec& v, double) const {
    return 0.5 * v.dot(Minv_ * v) - H_->potential(x);
}

LagrangianJet MechanicalLagrangian::jet(const Vec& x, const Vec& v, double) const {
    const int n = H_->dof();
    LagrangianJet j;
    Vec Mv = Minv_ * v;
    j.L = 0.5 * v.dot(Mv) - H_->potential(x);
    j.Lv = Mv;
    j.Lx = -H_->potential_gradient(x);
    j.Lvv = Minv_;
    j.Lxv = Mat::Zero(n, n);
    j.Lxx = -H_->potential_hessian(x);
    return j;
}

double ShiftedLagrangian::value(const Vec& x, const Vec& v, double t) const {
    return L_->value(x, v, t) - c_.dot(v) + alpha_;
}

LagrangianJet ShiftedLagrangian::jet(const Vec& x, const Vec& v, double t) const {
    LagrangianJet j = L_->jet(x, v, t);
    j.L += -c_.dot(v) + alpha_;
    j.Lv -= c_;
    return j;
}

// ---------------------------------------------------------------------------

std::shared_ptr<MechanicalHamiltonian> pendulum(double eps) {
    FourierTaylorSeries V(1, Vec::Zero(1), 4, 0);
    V.add_real_mode({0}, {0}, -eps);
    V.add_real_mode({1}, {0}, eps);
    return std::make_shared<MechanicalHamiltonian>(Mat::Identity(1, 1), V);
}

std::shared_ptr<MechanicalHamiltonian> product_pendulum(const Mat& A, const Vec& eps_j) {
    const int n = static_cast<int>(eps_j.size());
    FourierTaylorSeries V(n, Vec::Zero(n), 4, 0);
    for (int j = 0; j < n; ++j) {
        IntVec k(n, 0);
        V.add_real_mode(IntVec(n, 0), IntVec(n, 0), -eps_j[j]);
        k[j] = 1;
        V.add_real_mode(k, IntVec(n, 0), eps_j[j]);
    }
    return std::make_shared<MechanicalHamiltonian>(A, V);
}

std::shared_ptr<MechanicalHamiltonian> pendulum_rotor(double eps, double mu) {
    // -eps [(1+mu) - mu cos x2 - (1+mu) cos x1 + mu/2 (cos(x1+x2) + cos(x1-x2))]
    FourierTaylorSeries V(2, Vec::Zero(2), 4, 0);
    V.add_real_mode({0, 0}, {0, 0}, -eps * (1 + mu));
    V.add_real_mode({0, 1}, {0, 0}, eps * mu);
    V.add_real_mode({1, 0}, {0, 0}, eps * (1 + mu));
    V.add_real_mode({1, 1}, {0, 0}, -0.5 * eps * mu);
    V.add_real_mode({1, -1}, {0, 0}, -0.5 * eps * mu);
    return std::make_shared<MechanicalHamiltonian>(Mat::Identity(2, 2), V);
}

}  // namespace matherlab::model
