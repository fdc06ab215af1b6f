#include "matherlab/flow/flow.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <iomanip>

namespace matherlab::flow {

namespace {

State to_state(const Vec& v) { return State(v.data(), v.data() + v.size()); }

Vec to_vec(const State& s, int off, int len) { return Eigen::Map<const Vec>(s.data() + off, len); }

OdeOptions make_opts(double tol) {
    OdeOptions o;
    o.tol = tol;
    return o;
}

Vec winding_shift(const IntVec& w, int n) {
    Vec s = Vec::Zero(2 * n);
    for (int j = 0; j < static_cast<int>(w.size()) && j < n; ++j) s[j] = kTwoPi * w[j];
    return s;
}

}  // namespace

PhaseState PhaseState::from_lifted(const Vec& z, double t) {
    const int n = static_cast<int>(z.size()) / 2;
    PhaseState s;
    s.x.resize(n);
    s.y = z.tail(n);
    s.t = t;
    s.winding.resize(n);
    for (int j = 0; j < n; ++j) {
        double w = std::floor(z[j] / kTwoPi);
        s.winding[j] = static_cast<int>(w);
        s.x[j] = z[j] - kTwoPi * w;
        if (s.x[j] >= kTwoPi) {
            s.x[j] -= kTwoPi;
            ++s.winding[j];
        }
    }
    return s;
}

Vec PhaseState::lifted() const {
    const int n = static_cast<int>(x.size());
    Vec z(2 * n);
    for (int j = 0; j < n; ++j) z[j] = x[j] + kTwoPi * (winding.empty() ? 0 : winding[j]);
    z.tail(n) = y;
    return z;
}

// ---------------------------------------------------------------------------

namespace {

Rhs hamiltonian_rhs(const Hamiltonian& H) {
    return [&H](const State& z, State& dz, double t) {
        Vec zv = Eigen::Map<const Vec>(z.data(), z.size());
        Vec f = H.field(zv, t);
        dz.assign(f.data(), f.data() + f.size());
    };
}

}  // namespace

Vec Trajectory::at(double t) const {
    if (t_.empty()) throw Error("empty trajectory");
    const bool fwd = t_.back() >= t_.front();
    auto lo = std::min(t_.front(), t_.back()), hi = std::max(t_.front(), t_.back());
    if (t < lo - 1e-12 || t > hi + 1e-12) throw DomainError("trajectory query outside its time span");
    std::size_t i = 0;
    if (fwd) {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        i = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    } else {
        auto it = std::upper_bound(t_.begin(), t_.end(), t, std::greater<double>());
        i = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    }
    State s = to_state(z_[i]);
    integrate_ode(hamiltonian_rhs(*H_), s, t_[i], t, opt_);
    return to_vec(s, 0, static_cast<int>(s.size()));
}

void Trajectory::write_csv(std::ostream& os) const {
    if (t_.empty()) return;
    const int n = static_cast<int>(z_.front().size()) / 2;
    os << "t";
    for (int j = 0; j < n; ++j) os << ",x" << j + 1;
    for (int j = 0; j < n; ++j) os << ",y" << j + 1;
    for (int j = 0; j < n; ++j) os << ",winding" << j + 1;
    os << ",E\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t_.size(); ++i) {
        PhaseState s = state(i);
        os << t_[i];
        for (int j = 0; j < n; ++j) os << ',' << s.x[j];
        for (int j = 0; j < n; ++j) os << ',' << s.y[j];
        for (int j = 0; j < n; ++j) os << ',' << s.winding[j];
        os << ',' << energy(i) << '\n';
    }
}

Trajectory integrate(const HamiltonianPtr& H, const PhaseState& s0, double t_end, double tol) {
    OdeOptions opt = make_opts(tol);
    Trajectory tr(H, opt);
    Vec z0 = s0.lifted();
    if (z0.size() != 2 * H->dof()) throw DimensionError("integrate: state dimension mismatch");
    tr.push(s0.t, z0);
    State s = to_state(z0);
    integrate_ode(hamiltonian_rhs(*H), s, s0.t, t_end, opt, [&tr](double t, const State& z) {
        tr.push(t, Eigen::Map<const Vec>(z.data(), z.size()));
        return false;
    });
    return tr;
}

Vec flow_map(const Hamiltonian& H, const Vec& z0, double t0, double T, double tol) {
    State s = to_state(z0);
    integrate_ode(hamiltonian_rhs(H), s, t0, t0 + T, make_opts(tol));
    return to_vec(s, 0, static_cast<int>(s.size()));
}

// ---------------------------------------------------------------------------

namespace {

// Joint state: z (d), M (d*d column-major), optional action.
struct Variational {
    int d;
    std::function<Vec(const Vec&, double)> f;
    std::function<Mat(const Vec&, double)> jac;
    std::function<double(const Vec&, double)> lagr;  // empty when not needed

    Rhs rhs() const {
        return [this](const State& s, State& ds, double t) {
            Vec z = Eigen::Map<const Vec>(s.data(), d);
            Eigen::Map<const Mat> M(s.data() + d, d, d);
            ds.resize(s.size());
            Vec fz = f(z, t);
            Mat J = jac(z, t);
            Eigen::Map<Vec>(ds.data(), d) = fz;
            Eigen::Map<Mat>(ds.data() + d, d, d) = J * M;
            if (lagr) ds[d + d * d] = lagr(z, t);
        };
    }
};

TangentResult run_variational(const Variational& v, const Vec& z0, double t0, double T, double tol) {
    const int d = v.d;
    State s(d + d * d + (v.lagr ? 1 : 0), 0.0);
    std::copy(z0.data(), z0.data() + d, s.begin());
    for (int i = 0; i < d; ++i) s[d + i * d + i] = 1.0;
    integrate_ode(v.rhs(), s, t0, t0 + T, make_opts(tol));
    TangentResult r;
    r.z = to_vec(s, 0, d);
    r.M = Eigen::Map<const Mat>(s.data() + d, d, d);
    if (v.lagr) r.action = s[d + d * d];
    return r;
}

}  // namespace

TangentResult tangent_flow(const Hamiltonian& H, const Vec& z0, double t0, double T, double tol, bool with_action) {
    const int n = H.dof();
    if (z0.size() != 2 * n) throw DimensionError("tangent_flow: state dimension mismatch");
    Variational v;
    v.d = 2 * n;
    v.f = [&H](const Vec& z, double t) { return H.field(z, t); };
    v.jac = [&H](const Vec& z, double t) { return H.field_jacobian(z, t); };
    if (with_action)
        v.lagr = [&H, n](const Vec& z, double t) {
            Vec g = H.gradient(z, t);
            return z.tail(n).dot(g.tail(n)) - H.value(z, t);
        };
    return run_variational(v, z0, t0, T, tol);
}

// ---------------------------------------------------------------------------

PoincareResult poincare_map(const Hamiltonian& H, const Section& sec, const Vec& z0, double t0, double max_time,
                            double tol) {
    const int d = 2 * H.dof();
    if (sec.coord < 0 || sec.coord >= d) throw DimensionError("poincare_map: section coordinate out of range");
    const int c = sec.coord;
    auto level_index = [&](double v) {
        return sec.angle ? std::floor((v - sec.value) / kTwoPi) : (v >= sec.value ? 0.0 : -1.0);
    };

    State s = to_state(z0);
    State prev = s;
    double tprev = t0;
    bool found = false;
    double level = 0;
    auto obs = [&](double t, const State& z) {
        double a = level_index(prev[c]), b = level_index(z[c]);
        bool hit = false;
        if (b > a && sec.direction >= 0) {
            level = sec.value + (sec.angle ? kTwoPi * (a + 1) : 0.0);
            hit = true;
        } else if (b < a && sec.direction <= 0) {
            level = sec.value + (sec.angle ? kTwoPi * a : 0.0);
            hit = true;
        }
        // A start exactly on the section does not count as a return.
        if (hit && tprev == t0 && std::abs(z0[c] - level) < 1e-13) hit = false;
        if (hit) {
            found = true;
            return true;
        }
        prev = z;
        tprev = t;
        return false;
    };
    integrate_ode(hamiltonian_rhs(H), s, t0, t0 + max_time, make_opts(tol), obs);
    if (!found) throw NoConvergence("poincare_map: no section crossing within the time budget", max_time);

    // Newton in time from the step start.
    Vec zs = to_vec(prev, 0, d);
    double dt = 0;
    {
        double speed = H.field(zs, tprev)[c];
        if (std::abs(speed) > 0) dt = -(zs[c] - level) / speed;
    }
    Vec zh = zs;
    for (int it = 0; it < 30; ++it) {
        zh = flow_map(H, zs, tprev, dt, tol);
        double g = zh[c] - level;
        double speed = H.field(zh, tprev + dt)[c];
        if (std::abs(speed) < 1e-6) throw DomainError("poincare_map: tangential crossing");
        double step = -g / speed;
        dt += step;
        if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(dt))) {
            zh = flow_map(H, zs, tprev, dt, tol);
            break;
        }
    }
    PoincareResult r;
    r.hit = zh;
    r.time = tprev + dt - t0;
    auto tf = tangent_flow(H, z0, t0, r.time, tol);
    r.monodromy = tf.M;
    Vec F = H.field(zh, t0 + r.time);
    if (std::abs(F[c]) < 1e-6) throw DomainError("poincare_map: tangential crossing");
    Mat P = Mat::Identity(d, d) - F * Eigen::RowVectorXd::Unit(d, c) / F[c];
    Mat full = P * tf.M;
    Mat D(d - 1, d - 1);
    for (int i = 0, ii = 0; i < d; ++i) {
        if (i == c) continue;
        for (int j = 0, jj = 0; j < d; ++j) {
            if (j == c) continue;
            D(ii, jj++) = full(i, j);
        }
        ++ii;
    }
    r.differential = D;
    return r;
}

// ---------------------------------------------------------------------------

void floquet_analysis(PeriodicOrbit& orb, const Vec& flow_dir, const Vec& energy_grad, bool autonomous) {
    const Mat& M = orb.monodromy;
    const int d = static_cast<int>(M.rows());
    orb.floquet.clear();
    orb.nontrivial.clear();
    Mat red;
    if (autonomous && flow_dir.norm() > 0 && energy_grad.norm() > 0) {
        Mat B(d, 2);
        B.col(0) = flow_dir.normalized();
        B.col(1) = energy_grad.normalized();
        Eigen::HouseholderQR<Mat> qr(B);
        Mat Qfull = qr.householderQ() * Mat::Identity(d, d);
        Mat Q = Qfull.rightCols(d - 2);
        red = Q.transpose() * M * Q;
        orb.floquet.emplace_back(1.0, 0.0);
        orb.floquet.emplace_back(1.0, 0.0);
    } else {
        red = M;
    }
    orb.trace_nontrivial = red.trace();
    if (red.rows() == 2) {
        // Reciprocal pair from the trace keeps λ·(1/λ) = 1 exactly.
        double tr = red.trace();
        std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0, 0.0));
        std::complex<double> l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
        if (std::abs(l1) < std::abs(l2)) std::swap(l1, l2);
        orb.nontrivial = {l1, l2};
    } else if (red.rows() > 0) {
        Eigen::EigenSolver<Mat> es(red);
        for (int i = 0; i < red.rows(); ++i) orb.nontrivial.push_back(es.eigenvalues()[i]);
        std::sort(orb.nontrivial.begin(), orb.nontrivial.end(),
                  [](auto a, auto b) { return std::abs(a) > std::abs(b); });
    }
    orb.floquet.insert(orb.floquet.end(), orb.nontrivial.begin(), orb.nontrivial.end());
}

PeriodicOrbit periodic_orbit_refine(const Hamiltonian& H, const Vec& z_guess, double T_guess,
                                    const RefineOptions& opt) {
    const int n = H.dof();
    const int d = 2 * n;
    if (z_guess.size() != d) throw DimensionError("periodic_orbit_refine: state dimension mismatch");
    const bool aut = H.autonomous();
    std::optional<double> Tfix = opt.period;
    if (!aut && !Tfix) Tfix = T_guess;
    const bool freeT = !Tfix;
    const int Mseg = std::max(1, opt.segments);
    const Vec shift = winding_shift(opt.winding, n);
    const double t0 = 0.0;

    double T = Tfix ? *Tfix : T_guess;
    if (!(T > 0)) throw DomainError("periodic_orbit_refine: period must be positive");
    std::vector<Vec> z(Mseg);
    z[0] = z_guess;
    for (int j = 1; j < Mseg; ++j) z[j] = flow_map(H, z[j - 1], t0 + (j - 1) * T / Mseg, T / Mseg, opt.ode_tol);
    const Vec zref = z_guess;
    const Vec Fref = H.field(zref, t0);

    const int nunk = Mseg * d + (freeT ? 1 : 0);
    const int neq = Mseg * d + (aut ? 1 : 0) + (opt.energy ? 1 : 0);

    std::vector<TangentResult> seg(Mseg);
    auto residual = [&](const std::vector<Vec>& zz, double TT, bool with_jac, Vec& r, Mat* Jp) {
        r.setZero(neq);
        if (Jp) Jp->setZero(neq, nunk);
        for (int j = 0; j < Mseg; ++j) {
            double tj = t0 + j * TT / Mseg;
            if (with_jac) {
                seg[j] = tangent_flow(H, zz[j], tj, TT / Mseg, opt.ode_tol);
            } else {
                seg[j].z = flow_map(H, zz[j], tj, TT / Mseg, opt.ode_tol);
            }
            const Vec target = j + 1 < Mseg ? zz[j + 1] : Vec(zz[0] + shift);
            r.segment(j * d, d) = seg[j].z - target;
            if (Jp) {
                Mat& J = *Jp;
                J.block(j * d, j * d, d, d) = seg[j].M;
                int nxt = (j + 1) % Mseg;
                J.block(j * d, nxt * d, d, d) -= Mat::Identity(d, d);
                if (freeT) J.block(j * d, Mseg * d, d, 1) = H.field(seg[j].z, tj + TT / Mseg) / Mseg;
            }
        }
        int row = Mseg * d;
        if (aut) {
            r[row] = Fref.dot(zz[0] - zref);
            if (Jp) Jp->block(row, 0, 1, d) = Fref.transpose();
            ++row;
        }
        if (opt.energy) {
            r[row] = H.value(zz[0], t0) - *opt.energy;
            if (Jp) Jp->block(row, 0, 1, d) = H.gradient(zz[0], t0).transpose();
        }
    };

    Vec r;
    Mat J;
    double res = 0;
    bool ok = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        residual(z, T, true, r, &J);
        res = r.lpNorm<Eigen::Infinity>();
        if (res <= opt.tol) {
            ok = true;
            break;
        }
        Vec dx = J.completeOrthogonalDecomposition().solve(-r);
        double lam = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 12; ++ls) {
            std::vector<Vec> zt = z;
            for (int j = 0; j < Mseg; ++j) zt[j] += lam * dx.segment(j * d, d);
            double Tt = freeT ? T + lam * dx[Mseg * d] : T;
            if (!(Tt > 0)) {
                lam *= 0.5;
                continue;
            }
            Vec rt;
            try {
                residual(zt, Tt, false, rt, nullptr);
            } catch (const StepUnderflow&) {
                lam *= 0.5;
                continue;
            }
            if (rt.lpNorm<Eigen::Infinity>() < (1 - 1e-4 * lam) * res || ls == 11) {
                z = zt;
                T = Tt;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted) break;
    }
    if (!ok) {
        residual(z, T, true, r, &J);
        res = r.lpNorm<Eigen::Infinity>();
        ok = res <= opt.tol;
    }
    if (!ok) throw NoConvergence("periodic_orbit_refine: Newton did not converge", res);

    PeriodicOrbit orb;
    orb.z0 = z[0];
    orb.anchor = PhaseState::from_lifted(z[0], t0);
    orb.period = T;
    orb.energy = H.value(z[0], t0);
    orb.winding = opt.winding;
    orb.winding.resize(n, 0);
    orb.residual = res;
    Mat Mon = Mat::Identity(d, d);
    for (int j = 0; j < Mseg; ++j) Mon = seg[j].M * Mon;
    orb.monodromy = Mon;
    floquet_analysis(orb, H.field(z[0], t0), H.gradient(z[0], t0), aut);
    return orb;
}

// ---------------------------------------------------------------------------

TimePeriodicHamiltonian::TimePeriodicHamiltonian(HamiltonianPtr parent, double E, int eliminate,
                                                 ReductionConvention conv, double sign_hint)
    : parent_(std::move(parent)), E_(E), idx_(eliminate), conv_(conv) {
    if (!parent_->autonomous()) throw DomainError("reduce_isoenergetic: parent must be autonomous");
    if (idx_ < 0 || idx_ >= parent_->dof() || parent_->dof() < 2)
        throw DimensionError("reduce_isoenergetic: invalid eliminated index");
    s_ = sign_hint >= 0 ? 1.0 : -1.0;
    if (conv_ == ReductionConvention::tonelli) {
        tau_sign_ = s_;
        Y_sign_ = -s_;
    } else {
        tau_sign_ = -1.0;
        Y_sign_ = 1.0;
    }
    seed_ = sign_hint;
}

Vec TimePeriodicHamiltonian::parent_point(const Vec& w, double tau, double yn) const {
    const int n = parent_->dof();
    const int r = n - 1;
    Vec z(2 * n);
    for (int j = 0, jj = 0; j < n; ++j) {
        if (j == idx_) {
            z[j] = tau_sign_ * tau;
            z[n + j] = yn;
        } else {
            z[j] = w[jj];
            z[n + j] = w[r + jj];
            ++jj;
        }
    }
    return z;
}

double TimePeriodicHamiltonian::solve_yn(const Vec& w, double tau) const {
    const int n = parent_->dof();
    if (auto mech = dynamic_cast<const model::MechanicalHamiltonian*>(parent_.get())) {
        Vec z = parent_point(w, tau, 0.0);
        const Mat& A = mech->A();
        const Vec& b = mech->b();
        Vec y = z.tail(n);
        double Ann = A(idx_, idx_);
        double B = b[idx_];
        for (int j = 0; j < n; ++j)
            if (j != idx_) B += A(idx_, j) * y[j];
        // With y_n = 0 the full energy is the constant term.
        double C = mech->value(z, 0.0) - E_;
        if (Ann == 0.0) {
            if (s_ * B < 1e-6) throw DomainError("reduce_isoenergetic: dH/dy_n has the wrong sign");
            return -C / B;
        }
        double disc = B * B - 2.0 * Ann * C;
        if (disc < 1e-12) throw DomainError("reduce_isoenergetic: dH/dy_n vanishes on the level");
        return (-B + s_ * std::sqrt(disc)) / Ann;
    }
    double yn = seed_;
    for (int it = 0; it < 60; ++it) {
        Vec z = parent_point(w, tau, yn);
        double g = parent_->value(z, 0.0) - E_;
        double gy = parent_->gradient(z, 0.0)[n + idx_];
        if (s_ * gy < 1e-6) throw DomainError("reduce_isoenergetic: dH/dy_n changes sign on the window");
        double step = g / gy;
        yn -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(yn))) return yn;
    }
    Vec z = parent_point(w, tau, yn);
    double g = parent_->value(z, 0.0) - E_;
    if (std::abs(g) > 1e-12) throw NoConvergence("reduce_isoenergetic: energy solve failed", std::abs(g));
    return yn;
}

double TimePeriodicHamiltonian::value(const Vec& w, double tau) const { return Y_sign_ * solve_yn(w, tau); }

Vec TimePeriodicHamiltonian::gradient(const Vec& w, double tau) const {
    const int n = parent_->dof();
    const int r = n - 1;
    double yn = solve_yn(w, tau);
    Vec G = parent_->gradient(parent_point(w, tau, yn), 0.0);
    double Gy = G[n + idx_];
    if (s_ * Gy < 1e-6) throw DomainError("reduce_isoenergetic: dH/dy_n changes sign on the window");
    Vec out(2 * r);
    for (int j = 0, jj = 0; j < n; ++j) {
        if (j == idx_) continue;
        out[jj] = -G[j] / Gy;
        out[r + jj] = -G[n + j] / Gy;
        ++jj;
    }
    return Y_sign_ * out;
}

Mat TimePeriodicHamiltonian::hessian(const Vec& w, double tau) const {
    const int n = parent_->dof();
    const int r = n - 1;
    double yn = solve_yn(w, tau);
    Vec z = parent_point(w, tau, yn);
    Vec G = parent_->gradient(z, 0.0);
    Mat HH = parent_->hessian(z, 0.0);
    const int iy = n + idx_;
    double Gy = G[iy];
    if (s_ * Gy < 1e-6) throw DomainError("reduce_isoenergetic: dH/dy_n changes sign on the window");
    std::vector<int> map(2 * r);
    for (int j = 0, jj = 0; j < n; ++j) {
        if (j == idx_) continue;
        map[jj] = j;
        map[r + jj] = n + j;
        ++jj;
    }
    Vec Gw(2 * r), Gwy(2 * r);
    Mat Gww(2 * r, 2 * r);
    for (int a = 0; a < 2 * r; ++a) {
        Gw[a] = G[map[a]];
        Gwy[a] = HH(map[a], iy);
        for (int b = 0; b < 2 * r; ++b) Gww(a, b) = HH(map[a], map[b]);
    }
    double Gyy = HH(iy, iy);
    Vec phi = -Gw / Gy;
    Mat out = -(Gww + Gwy * phi.transpose() + phi * Gwy.transpose() + Gyy * phi * phi.transpose()) / Gy;
    return Y_sign_ * out;
}

Vec TimePeriodicHamiltonian::lift(const Vec& w, double tau) const { return parent_point(w, tau, solve_yn(w, tau)); }

std::pair<Vec, double> TimePeriodicHamiltonian::project(const Vec& z) const {
    const int n = parent_->dof();
    const int r = n - 1;
    Vec w(2 * r);
    for (int j = 0, jj = 0; j < n; ++j) {
        if (j == idx_) continue;
        w[jj] = z[j];
        w[r + jj] = z[n + j];
        ++jj;
    }
    return {w, tau_sign_ * z[idx_]};
}

std::shared_ptr<TimePeriodicHamiltonian> reduce_isoenergetic(const HamiltonianPtr& H, double E, int eliminate,
                                                              ReductionConvention conv, double sign_hint) {
    return std::make_shared<TimePeriodicHamiltonian>(H, E, eliminate, conv, sign_hint);
}

// ---------------------------------------------------------------------------

VectorField VectorField::from_hamiltonian(HamiltonianPtr H) {
    VectorField F;
    F.dim = 2 * H->dof();
    F.f = [H](const Vec& z, double t) { return H->field(z, t); };
    F.jac = [H](const Vec& z, double t) { return H->field_jacobian(z, t); };
    return F;
}

namespace {

// Frobenius norm of the derivative of the Jacobian, by central differences.
double second_derivative_norm(const VectorField& F, const Vec& z, double t) {
    const int d = F.dim;
    double s = 0;
    for (int k = 0; k < d; ++k) {
        double h = 1e-5 * std::max(1.0, std::abs(z[k]));
        Vec zp = z, zm = z;
        zp[k] += h;
        zm[k] -= h;
        Mat D = (F.jac(zp, t) - F.jac(zm, t)) / (2 * h);
        s += D.squaredNorm();
    }
    return std::sqrt(s);
}

double c2_norm_at(const VectorField& F, const Vec& z, double t) {
    return std::max({F.f(z, t).norm(), F.jac(z, t).norm(), second_derivative_norm(F, z, t)});
}

double c1_diff_at(const VectorField& F0, const VectorField& Fe, const Vec& z, double t) {
    return std::max((Fe.f(z, t) - F0.f(z, t)).norm(), (Fe.jac(z, t) - F0.jac(z, t)).norm());
}

}  // namespace

GronwallReport gronwall_compare(const VectorField& F0, const VectorField& Fe, const Vec& z0, double T, int samples,
                                double probe_radius, std::optional<double> A, std::optional<double> B) {
    const int d = F0.dim;
    if (Fe.dim != d || z0.size() != d) throw DimensionError("gronwall_compare: dimension mismatch");
    std::vector<Vec> probes{z0};
    for (int k = 0; k < d && probe_radius > 0; ++k) {
        Vec e = Vec::Unit(d, k) * probe_radius;
        probes.push_back(z0 + e);
        probes.push_back(z0 - e);
    }
    auto make = [d](const VectorField& F) {
        Variational v;
        v.d = d;
        v.f = F.f;
        v.jac = F.jac;
        return v;
    };
    Variational v0 = make(F0), ve = make(Fe);

    GronwallReport rep;
    rep.t.resize(samples);
    rep.measured.assign(samples, 0.0);
    double Aest = 0, Best = 0;
    const double tol = 1e-12;
    for (const Vec& p : probes) {
        Vec za = p, zb = p;
        Mat Ma = Mat::Identity(d, d), Mb = Mat::Identity(d, d);
        Aest = std::max({Aest, c2_norm_at(F0, p, 0), c2_norm_at(Fe, p, 0)});
        Best = std::max(Best, c1_diff_at(F0, Fe, p, 0));
        double tprev = 0;
        for (int i = 0; i < samples; ++i) {
            double t = T * (i + 1) / samples;
            rep.t[i] = t;
            // Sub-sample each interval for the norm estimates.
            const int sub = 4;
            for (int s = 1; s <= sub; ++s) {
                double ta = tprev + (t - tprev) * (s - 1) / sub, tb = tprev + (t - tprev) * s / sub;
                auto ra = run_variational(v0, za, ta, tb - ta, tol);
                auto rb = run_variational(ve, zb, ta, tb - ta, tol);
                za = ra.z;
                zb = rb.z;
                Ma = ra.M * Ma;
                Mb = rb.M * Mb;
                for (const Vec* q : {&za, &zb}) {
                    Aest = std::max({Aest, c2_norm_at(F0, *q, tb), c2_norm_at(Fe, *q, tb)});
                    Best = std::max(Best, c1_diff_at(F0, Fe, *q, tb));
                }
            }
            tprev = t;
            Eigen::JacobiSVD<Mat> svd(Mb - Ma);
            double dz = (zb - za).norm();
            double dD = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
            rep.measured[i] = std::max({rep.measured[i], dz, dD});
        }
    }
    rep.A = A ? *A : Aest;
    rep.B = B ? *B : Best;
    rep.bound.resize(samples);
    for (int i = 0; i < samples; ++i) {
        double t = rep.t[i];
        rep.bound[i] = rep.A > 0 ? rep.B / rep.A * (1 - std::exp(-rep.A * t)) * std::exp(2 * rep.A * t) : 0.0;
        if (rep.measured[i] > rep.bound[i] * (1 + 1e-9) + 1e-13) ++rep.violations;
    }
    return rep;
}

}  // namespace matherlab::flow
