#pragma once

#include "matherlab/flow/ode.hpp"
#include "matherlab/model/system.hpp"

#include <complex>
#include <optional>
#include <ostream>

namespace matherlab::flow {

using model::Hamiltonian;
using model::HamiltonianPtr;

// Angles in [0, 2π) plus the integer winding that restores the lift.
struct PhaseState {
    Vec x;
    Vec y;
    double t = 0;
    IntVec winding;

    static PhaseState from_lifted(const Vec& z, double t);
    Vec lifted() const;
};

class Trajectory {
public:
    Trajectory(HamiltonianPtr H, OdeOptions opt) : H_(std::move(H)), opt_(opt) {}
    void push(double t, Vec z) {
        t_.push_back(t);
        z_.push_back(std::move(z));
    }
    std::size_t size() const { return t_.size(); }
    double time(std::size_t i) const { return t_[i]; }
    const Vec& lifted(std::size_t i) const { return z_[i]; }
    PhaseState state(std::size_t i) const { return PhaseState::from_lifted(z_[i], t_[i]); }
    // Lifted state at any t in range, re-integrated from the nearest node.
    Vec at(double t) const;
    double energy(std::size_t i) const { return H_->value(z_[i], t_[i]); }
    void write_csv(std::ostream& os) const;

private:
    HamiltonianPtr H_;
    OdeOptions opt_;
    std::vector<double> t_;
    std::vector<Vec> z_;
};

Trajectory integrate(const HamiltonianPtr& H, const PhaseState& s0, double t_end, double tol = 1e-12);

// Lifted endpoint of the flow from (z0, t0) over time T.
Vec flow_map(const Hamiltonian& H, const Vec& z0, double t0, double T, double tol = 1e-12);

struct TangentResult {
    Vec z;       // endpoint
    Mat M;       // dPhi/dz0
    double action = 0;  // integral of <y, H_y> - H when requested
};

TangentResult tangent_flow(const Hamiltonian& H, const Vec& z0, double t0, double T, double tol = 1e-12,
                           bool with_action = false);

struct Section {
    int coord = 0;       // index into z = (x, y)
    double value = 0;
    int direction = 0;   // +1, -1 or 0 for either
    bool angle = true;   // crossing of value + 2πm for any m
};

struct PoincareResult {
    Vec hit;        // lifted state at the crossing
    double time = 0;  // return time
    Mat differential;  // projected along the flow onto the section
    Mat monodromy;     // dPhi^{time}/dz0 at fixed time
};

PoincareResult poincare_map(const Hamiltonian& H, const Section& sec, const Vec& z0, double t0, double max_time,
                            double tol = 1e-12);

struct PeriodicOrbit {
    PhaseState anchor;
    Vec z0;  // lifted anchor
    double period = 0;
    double energy = 0;
    IntVec winding;
    Mat monodromy;
    std::vector<std::complex<double>> floquet;      // with trivial pair reinstated
    std::vector<std::complex<double>> nontrivial;   // after deflation
    double residual = 0;
    double trace_nontrivial = 0;  // trace of the deflated block
};

struct RefineOptions {
    std::optional<double> energy;   // fixes the level (autonomous)
    std::optional<double> period;   // fixes the period
    IntVec winding;                 // z(T) = z(0) + 2π (winding, 0)
    int segments = 1;               // multiple-shooting segments
    double tol = 1e-10;
    int max_iter = 40;
    double ode_tol = 1e-12;
};

PeriodicOrbit periodic_orbit_refine(const Hamiltonian& H, const Vec& z_guess, double T_guess,
                                    const RefineOptions& opt);

// Floquet data of a symplectic monodromy; deflates the trivial pair when
// the flow direction and energy gradient are supplied.
void floquet_analysis(PeriodicOrbit& orb, const Vec& flow_dir, const Vec& energy_grad, bool autonomous);

enum class ReductionConvention {
    tonelli,  // tau = s x_n, Y = -s y_n with s = sign(dH/dy_n): convex Y
    reversed_time  // tau = -x_n, Y = y_n
};

// Time-periodic Hamiltonian on the reduced phase space obtained by solving
// H = E for y_n and using x_n as time.
class TimePeriodicHamiltonian final : public Hamiltonian {
public:
    TimePeriodicHamiltonian(HamiltonianPtr parent, double E, int eliminate, ReductionConvention conv,
                            double sign_hint);
    int dof() const override { return parent_->dof() - 1; }
    double value(const Vec& w, double tau) const override;
    Vec gradient(const Vec& w, double tau) const override;
    Mat hessian(const Vec& w, double tau) const override;
    bool autonomous() const override { return false; }
    double period() const override { return kTwoPi; }

    double energy() const { return E_; }
    int eliminated() const { return idx_; }
    double time_sign() const { return tau_sign_; }
    // Parent lifted state from reduced state (w, tau).
    Vec lift(const Vec& w, double tau) const;
    // Reduced state and tau from a parent state on H = E.
    std::pair<Vec, double> project(const Vec& z) const;
    // Solves H = E for y_n; throws DomainError when dH/dy_n flips sign.
    double solve_yn(const Vec& w, double tau) const;
    const Hamiltonian& parent() const { return *parent_; }

private:
    Vec parent_point(const Vec& w, double tau, double yn) const;
    HamiltonianPtr parent_;
    double E_;
    int idx_;
    ReductionConvention conv_;
    double s_;         // sign of dH/dy_n on the level
    double tau_sign_;  // x_n = tau_sign * tau
    double Y_sign_;    // Y = Y_sign * y_n
    double seed_;      // Newton seed for y_n (non-mechanical parents)
};

std::shared_ptr<TimePeriodicHamiltonian> reduce_isoenergetic(const HamiltonianPtr& H, double E, int eliminate,
                                                              ReductionConvention conv = ReductionConvention::tonelli,
                                                              double sign_hint = 1.0);

// Generic vector field with Jacobian, used by the flow comparison.
struct VectorField {
    int dim = 0;
    std::function<Vec(const Vec&, double)> f;
    std::function<Mat(const Vec&, double)> jac;
    static VectorField from_hamiltonian(HamiltonianPtr H);
};

struct GronwallReport {
    std::vector<double> t;
    std::vector<double> measured;
    std::vector<double> bound;
    double A = 0, B = 0;
    int violations = 0;
};

GronwallReport gronwall_compare(const VectorField& F0, const VectorField& Fe, const Vec& z0, double T,
                                int samples = 50, double probe_radius = 0.05, std::optional<double> A = std::nullopt,
                                std::optional<double> B = std::nullopt);

}  // namespace matherlab::flow
