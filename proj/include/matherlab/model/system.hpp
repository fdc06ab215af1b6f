#pragma once

#include "matherlab/model/series.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace matherlab::model {

// Smooth (possibly time-dependent) Hamiltonian on T^n x R^n, state z = (x, y).
class Hamiltonian {
public:
    virtual ~Hamiltonian() = default;
    virtual int dof() const = 0;
    virtual double value(const Vec& z, double t) const = 0;
    virtual Vec gradient(const Vec& z, double t) const = 0;
    virtual Mat hessian(const Vec& z, double t) const = 0;
    virtual bool autonomous() const { return true; }
    // Time period of a non-autonomous Hamiltonian.
    virtual double period() const { return kTwoPi; }

    // Hamiltonian vector field (dH/dy, -dH/dx).
    Vec field(const Vec& z, double t) const;
    Mat field_jacobian(const Vec& z, double t) const;
};

using HamiltonianPtr = std::shared_ptr<const Hamiltonian>;

// H = sum of Fourier-Taylor series (all sharing dimension and base point).
class SeriesHamiltonian final : public Hamiltonian {
public:
    explicit SeriesHamiltonian(FourierTaylorSeries H);
    int dof() const override { return H_.dim(); }
    double value(const Vec& z, double t) const override;
    Vec gradient(const Vec& z, double t) const override;
    Mat hessian(const Vec& z, double t) const override;
    const FourierTaylorSeries& series() const { return H_; }

private:
    FourierTaylorSeries H_;
};

// H = 1/2 <A y, y> + <b, y> + V(x), V a trigonometric polynomial in x.
class MechanicalHamiltonian final : public Hamiltonian {
public:
    MechanicalHamiltonian(Mat A, FourierTaylorSeries V, Vec b = Vec());
    int dof() const override { return static_cast<int>(A_.rows()); }
    double value(const Vec& z, double t) const override;
    Vec gradient(const Vec& z, double t) const override;
    Mat hessian(const Vec& z, double t) const override;
    const Mat& A() const { return A_; }
    const Vec& b() const { return b_; }
    const FourierTaylorSeries& V() const { return V_; }
    double potential(const Vec& x) const;
    Vec potential_gradient(const Vec& x) const;
    Mat potential_hessian(const Vec& x) const;

private:
    struct Mode {
        Eigen::VectorXd k;
        double a, b;  // a cos<k,x> + b sin<k,x>
    };
    Mat A_;
    Vec b_;
    FourierTaylorSeries V_;
    std::vector<Mode> modes_;
    double v0_ = 0;
};

// Callback-defined Hamiltonian.
class FunctionHamiltonian final : public Hamiltonian {
public:
    using ValueFn = std::function<double(const Vec&, double)>;
    using GradFn = std::function<Vec(const Vec&, double)>;
    using HessFn = std::function<Mat(const Vec&, double)>;
    FunctionHamiltonian(int n, ValueFn v, GradFn g, HessFn h, bool autonomous = true, double period = kTwoPi);
    int dof() const override { return n_; }
    double value(const Vec& z, double t) const override { return v_(z, t); }
    Vec gradient(const Vec& z, double t) const override { return g_(z, t); }
    Mat hessian(const Vec& z, double t) const override { return h_(z, t); }
    bool autonomous() const override { return autonomous_; }
    double period() const override { return period_; }

private:
    int n_;
    ValueFn v_;
    GradFn g_;
    HessFn h_;
    bool autonomous_;
    double period_;
};

// H_c(x, y, t) = H(x, y + c, t): the Hamiltonian of L - <c, v>.
class ShiftedHamiltonian final : public Hamiltonian {
public:
    ShiftedHamiltonian(HamiltonianPtr H, Vec c);
    int dof() const override { return H_->dof(); }
    double value(const Vec& z, double t) const override;
    Vec gradient(const Vec& z, double t) const override;
    Mat hessian(const Vec& z, double t) const override;
    bool autonomous() const override { return H_->autonomous(); }
    double period() const override { return H_->period(); }

private:
    Vec shift(const Vec& z) const;
    HamiltonianPtr H_;
    Vec c_;
};

// Nearly integrable system H = h(y) + eps P(x, y); P is stored unscaled.
struct NearIntegrableSystem {
    FourierTaylorSeries h;  // k = 0 modes only
    FourierTaylorSeries P;
    double epsilon = 0;
    int smoothness_r = 8;
    double m = 1, M = 1;  // convexity bounds on B_R
    double R = 1;

    void validate() const;
    FourierTaylorSeries total() const;
    // Samples the Hessian of h on B_R; returns the worst violation of the
    // bounds m|v|^2 <= <h''v, v> <= M|v|^2 (0 if all hold).
    double convexity_violation(int samples, unsigned seed) const;
};

struct LegendreResult {
    Vec y;
    double L = 0;
    double residual = 0;
    int iterations = 0;
};

// Solves v = dH/dy(x, y, t) for y by damped Newton from seed (default v).
LegendreResult legendre_dual(const Hamiltonian& H, const Vec& x, const Vec& v, double t = 0.0,
                             std::optional<Vec> seed = std::nullopt);

// Lagrangian jets: L, L_x, L_v, L_xx, L_xv, L_vv.
struct LagrangianJet {
    double L = 0;
    Vec Lx, Lv;
    Mat Lxx, Lxv, Lvv;
};

class Lagrangian {
public:
    virtual ~Lagrangian() = default;
    virtual int dim() const = 0;
    virtual double value(const Vec& x, const Vec& v, double t) const = 0;
    virtual LagrangianJet jet(const Vec& x, const Vec& v, double t) const = 0;
    virtual bool autonomous() const { return true; }
};

using LagrangianPtr = std::shared_ptr<const Lagrangian>;

// Lagrangian of a Hamiltonian via the numeric Legendre transform.
class LegendreLagrangian final : public Lagrangian {
public:
    explicit LegendreLagrangian(HamiltonianPtr H) : H_(std::move(H)) {}
    int dim() const override { return H_->dof(); }
    double value(const Vec& x, const Vec& v, double t) const override;
    LagrangianJet jet(const Vec& x, const Vec& v, double t) const override;
    bool autonomous() const override { return H_->autonomous(); }
    const Hamiltonian& hamiltonian() const { return *H_; }

private:
    HamiltonianPtr H_;
};

// L = 1/2 <M v, v> - V(x), M = A^{-1}, for mechanical Hamiltonians (b = 0).
class MechanicalLagrangian final : public Lagrangian {
public:
    explicit MechanicalLagrangian(std::shared_ptr<const MechanicalHamiltonian> H);
    int dim() const override { return H_->dof(); }
    double value(const Vec& x, const Vec& v, double t) const override;
    LagrangianJet jet(const Vec& x, const Vec& v, double t) const override;

private:
    std::shared_ptr<const MechanicalHamiltonian> H_;
    Mat Minv_;
};

// L - <c, v> + alpha.
class ShiftedLagrangian final : public Lagrangian {
public:
    ShiftedLagrangian(LagrangianPtr L, Vec c, double alpha = 0.0)
        : L_(std::move(L)), c_(std::move(c)), alpha_(alpha) {}
    int dim() const override { return L_->dim(); }
    double value(const Vec& x, const Vec& v, double t) const override;
    LagrangianJet jet(const Vec& x, const Vec& v, double t) const override;
    bool autonomous() const override { return L_->autonomous(); }

private:
    LagrangianPtr L_;
    Vec c_;
    double alpha_;
};

// Helpers for common test systems.
// Pendulum H = 1/2 y^2 - eps (1 - cos x).
std::shared_ptr<MechanicalHamiltonian> pendulum(double eps);
// H = 1/2 <A y, y> + V(x) with V = sum_j eps_j (cos x_j - 1).
std::shared_ptr<MechanicalHamiltonian> product_pendulum(const Mat& A, const Vec& eps_j);
// 1/2 |y|^2 - eps (1 - cos x1)(1 + mu (1 - cos x2)).
std::shared_ptr<MechanicalHamiltonian> pendulum_rotor(double eps, double mu);

}  // namespace matherlab::model
