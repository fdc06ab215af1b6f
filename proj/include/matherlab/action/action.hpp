#pragma once

#include "matherlab/model/system.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>

namespace matherlab::action {

using model::HamiltonianPtr;

// One degree of freedom, time-periodic, convex in y.  The reduced Lagrangian
// is its Legendre dual; actions are computed along Hamiltonian orbits.
struct ReducedSystem {
    HamiltonianPtr K;
    double energy = 0;

    // Length of one loop in reduced time: the Hamiltonian's period, or 2π
    // when it does not depend on time.
    double loop_time() const;
    model::LagrangianPtr lagrangian() const;
};

// Isoenergetic reduction of a 2-dof Hamiltonian on H = E, using the angle
// `eliminate` as time (Tonelli convention: the reduced Hamiltonian is convex).
ReducedSystem reduce(const HamiltonianPtr& H, double E, int eliminate = 1);

using ReducedFamily = std::function<ReducedSystem(double E)>;

// Solves v = dK/dy(x, y, t) for y.
double momentum_for_velocity(const model::Hamiltonian& K, double x, double v, double t);

struct SegmentOptions {
    double tol = 1e-12;      // endpoint mismatch accepted by the shooting
    double ode_tol = 1e-12;
    int max_iter = 40;
    int curve_samples = 0;   // points of the minimizer returned in `curve`
};

// Minimizer of the action between (x, t0) and (xp, t1).
struct Segment {
    double t0 = 0, t1 = 0;
    double x = 0, xp = 0;
    double F = 0;
    double y0 = 0, y1 = 0;       // momenta at both ends
    double dF_dx = 0, dF_dxp = 0;
    double F_xx = 0, F_xxp = 0, F_xpxp = 0;
    Mat M;                       // tangent map of the orbit, 2x2
    int iterations = 0;
    std::vector<std::array<double, 3>> curve;  // (t, x, y)
};

Segment two_point_action(const ReducedSystem& sys, double x, double xp, double t0, double t1,
                         const SegmentOptions& opt = {}, std::optional<double> y_guess = std::nullopt);
// Segment i of m over one loop.
Segment two_point_action(const ReducedSystem& sys, double x, double xp, int i, int m,
                         const SegmentOptions& opt = {});

struct BrokenConfiguration {
    std::vector<double> points;  // lifted x_0, ..., x_{m-1}; x_m = x_0 + 2π g
    std::vector<double> times;   // T_0, ..., T_m
    double energy = 0;
    int g = 0;
    double total_action = 0;
    double interior_EL_residual = 0;
    std::vector<Segment> segments;
    bool interior_positive = false;  // interior block of the Jacobi matrix

    int m() const { return static_cast<int>(points.size()); }
    // dF/dx at x_0 with the other points held: y_m^- - y_0^+.
    double momentum_jump() const;
    // |dx/dt(0+) - dx/dt(T-)|
    double velocity_corner(const ReducedSystem& sys) const;
    // Every point including x_0 is stationary.
    double full_EL_residual() const;
};

struct LoopOptions {
    int m = 32;
    int g = 0;
    double tol = 1e-10;
    int max_iter = 60;
    SegmentOptions segment;
    // Partition 0 = T_0 < ... < T_m = loop time; uniform when empty.
    std::vector<double> times;
};

struct LoopAction {
    double F = 0;
    BrokenConfiguration config;
};

// F(x, E): minimum over loops based at x with m - 1 free interior points.
// `guess` supplies interior points x_1..x_{m-1} (lifted).
LoopAction loop_action(const ReducedSystem& sys, double x, const LoopOptions& opt = {},
                       const std::vector<double>* guess = nullptr);

// Newton on all m points; converges to saddles as well as minima.
BrokenConfiguration stationary_configuration(const ReducedSystem& sys, const std::vector<double>& guess,
                                             const LoopOptions& opt = {});

struct JacobiMatrix {
    Mat J;
    Vec A, B;           // B_i couples i and i + 1 (B_{m-1} is the corner)
    Vec eigenvalues;    // ascending
    double gap = 0;     // lambda_1 - lambda_0
};

JacobiMatrix jacobi_matrix(const BrokenConfiguration& config);

// d^2 F(x, E)/dx^2 at x_0 from the Schur complement of the Jacobi matrix.
double loop_second_derivative(const JacobiMatrix& J);

struct HyperbolicityReport {
    double lambda0 = 0;
    bool jacobi_positive = false;
    double floquet_trace = 0;
    std::array<std::complex<double>, 2> multipliers{};
    bool hyperbolic = false;
    bool parabolic = false;
    bool consistent = false;
    double closure_residual = 0;
};

HyperbolicityReport hyperbolicity_check(const ReducedSystem& sys, const BrokenConfiguration& config,
                                        double ode_tol = 1e-12);

struct LocalMinimum {
    double x = 0;
    double F = 0;
    double F_xx = 0;
    BrokenConfiguration config;
};

struct MinimalOptions {
    LoopOptions loop;
    int starts = 64;
    double basin_tol = 1e-6;
    double flat_tol = 1e-9;
};

struct MinimalConfiguration {
    double x_star = 0;
    double F = 0;
    BrokenConfiguration config;
    std::vector<LocalMinimum> minima;   // every refined local minimum, by action
    std::vector<LocalMinimum> basins;   // minima within basin_tol of the best
    double gap = std::numeric_limits<double>::infinity();  // to the second-best minimum
    bool degenerate_integrable = false; // F(., E) flat on the samples
    std::vector<double> sample_x, sample_F;
};

MinimalConfiguration minimal_configuration(const ReducedSystem& sys, const MinimalOptions& opt = {});

// Local minimum of F(., E) near x0 by safeguarded Newton on dF/dx.
LocalMinimum refine_minimum(const ReducedSystem& sys, double x0, const LoopOptions& opt,
                            const BrokenConfiguration* warm = nullptr, double bracket = 1.0);

struct BranchPoint {
    double E = 0, x = 0, F = 0, F_xx = 0;
    double lambda0 = 0, trace = 0;
    bool hyperbolic = false;
};

struct Branch {
    int id = 0;
    std::vector<BranchPoint> points;
    bool fold = false;
    bool flat = false;
};

struct Bifurcation {
    double E = 0;
    int branch_a = 0, branch_b = 0;
    double F_a = 0, F_b = 0;
    double dFdE_a = 0, dFdE_b = 0;
};

struct ContinuationOptions {
    MinimalOptions minimal;
    double match_tol = 1e-3;   // new minima closer than this join a branch
    double bisect_tol = 1e-8;  // action difference at a reported E_j
    bool hyperbolicity = true;
};

struct ContinuationResult {
    std::vector<Branch> branches;
    std::vector<Bifurcation> bifurcations;
    std::vector<int> global_branch;  // index of the minimizing branch per grid energy
    std::vector<double> energies;
};

ContinuationResult continue_in_energy(const ReducedFamily& family, double E_lo, double E_hi, int steps,
                                      const ContinuationOptions& opt = {});

nlohmann::json to_json(const BrokenConfiguration& c);
nlohmann::json to_json(const JacobiMatrix& J);
nlohmann::json to_json(const HyperbolicityReport& h);
nlohmann::json to_json(const MinimalConfiguration& r);
nlohmann::json to_json(const ContinuationResult& r);
// Columns: branch, E, x, F, lambda0, trace, verdict.
void write_branches_csv(const ContinuationResult& r, std::ostream& os);

}  // namespace matherlab::action
