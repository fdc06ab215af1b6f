#pragma once

#include "matherlab/action/action.hpp"
#include "matherlab/weakkam/weakkam.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>

namespace matherlab::mather {

// ---------------------------------------------------------------------------
// Hyperbolic fixed point at a maximum of the potential.

struct FixedPointSpectrum {
    Vec lambda;            // ascending, positive
    double gap = 0;        // smallest difference between consecutive values
    bool distinct = true;  // false when two values agree within the tolerance
};

// Roots of det(lambda^2 A - C) = 0, where A is the kinetic Hessian of the
// Lagrangian (the inverse of the Hamiltonian's) and C = -Hess V at the maximum.
FixedPointSpectrum fixed_point_spectrum(const Mat& A, const Mat& C, double distinct_tol = 1e-8);

// ---------------------------------------------------------------------------
// Alpha and beta functions of one-degree-of-freedom systems.

enum class AlphaMethod { weak_kam, periodic_orbit };
const char* to_string(AlphaMethod m);

struct AlphaBetaOptions {
    weakkam::KernelOptions kernel;
    weakkam::WeakKamOptions weak_kam;
    int max_denominator = 6;     // Farey order for time-periodic systems
    double omega_min = -1.5;     // rotation range searched for time-periodic alpha
    double omega_max = 1.5;
    action::MinimalOptions loop{action::LoopOptions{8, 0, 1e-10, 60, {}, {}}, 12};  // loop.m per period
    double ode_tol = 1e-11;
    double agreement_factor = 5;  // methods must agree within this many grid tolerances
};

struct AlphaValue {
    double alpha = 0;
    double omega = 0;  // a rotation number dual to c
    AlphaMethod method = AlphaMethod::periodic_orbit;
    bool flat = false; // c lies in the flat of the fixed points (autonomous)
};

// Rotational orbit of an autonomous system at energy E.
struct RotationOrbit {
    double energy = 0;
    int direction = 1;
    double period = 0;
    double omega = 0;            // 2π direction / period
    double mean_action = 0;      // time average of L
    double action_variable = 0;  // (1/2π) ∮ y dx
};

class AlphaBeta {
public:
    explicit AlphaBeta(action::ReducedSystem sys, AlphaBetaOptions opt = {});

    AlphaValue alpha(double c, AlphaMethod m = AlphaMethod::periodic_orbit) const;
    double beta(double omega) const;

    struct Agreement {
        double periodic = 0, weak_kam = 0, tolerance = 0;
        bool agree = false;
    };
    Agreement compare_methods(double c) const;

    // max_x min_y K(x, y): the energy of the fixed points (autonomous only).
    double critical_energy() const;
    RotationOrbit rotation_orbit(double E, int direction) const;
    // Minimal average action over loops of rotation p/q (time-periodic only).
    double beta_rational(int p, int q) const;

    const action::ReducedSystem& system() const { return sys_; }
    const AlphaBetaOptions& options() const { return opt_; }
    const weakkam::ActionKernel& kernel() const;

private:
    double energy_for_period(double T, int dir) const;
    double energy_for_action(double I, int dir) const;
    double y_on_level(double x, double E, int dir) const;

    action::ReducedSystem sys_;
    AlphaBetaOptions opt_;
    bool autonomous_;
    mutable std::mutex mu_;
    mutable std::optional<double> e_crit_;
    mutable double x_crit_ = 0;
    mutable std::map<std::pair<int, int>, double> beta_cache_;
    mutable std::shared_ptr<weakkam::ActionKernel> kernel_;
};

struct DualPair {
    double c = 0, omega = 0, residual = 0;
};

struct AlphaBetaData {
    std::vector<double> c, alpha, omega, beta;
    AlphaMethod alpha_method = AlphaMethod::periodic_orbit;
    Mat residual;  // alpha_i + beta_j - c_i omega_j
    double min_residual = 0;
    std::vector<DualPair> dual_pairs;
    double max_dual_residual = 0;
    bool alpha_convex = true, beta_convex = true;  // midpoint test on sorted samples
};

AlphaBetaData alpha_beta_tables(const AlphaBeta& ab, const std::vector<double>& cs, const std::vector<double>& omegas,
                                AlphaMethod method = AlphaMethod::periodic_orbit);

// {c in [c_lo, c_hi]: alpha(c) + beta(omega) - c omega <= tol} as closed
// intervals; endpoints refined by bisection.
std::vector<std::pair<double, double>> fenchel_legendre(const AlphaBeta& ab, double omega, double c_lo, double c_hi,
                                                        int samples = 64, double tol = 1e-5,
                                                        AlphaMethod method = AlphaMethod::periodic_orbit);

void write_alpha_csv(const AlphaBetaData& d, std::ostream& os);
void write_beta_csv(const AlphaBetaData& d, std::ostream& os);
void write_duality_csv(const AlphaBetaData& d, std::ostream& os);

// ---------------------------------------------------------------------------
// Flat of the fixed point from minimal homoclinic actions.

struct HomoclinicAction {
    IntVec g;
    double A = 0;
    bool concatenated = false;  // realized by a chain of shorter classes
};

struct FlatEdge {
    IntVec g;
    Vec from, to;
    double length = 0;
};

struct FlatOptions {
    int g_max = 5;        // |g_i| <= g_max, two degrees of freedom
    int nodes = 256;      // geodesic discretization
    weakkam::KernelOptions kernel{512, 1.0, 16, 0.6, {1e-11, 1e-10, 40, 0}};
    std::vector<int> horizons = {100, 150, 200, 250, 300};
    double edge_tol = 1e-9;
};

struct FlatPolygon {
    int dim = 0;
    Vec fixed_point;
    double alpha0 = 0;  // alpha on the flat: max V
    FixedPointSpectrum spectrum;
    std::vector<HomoclinicAction> actions;
    std::vector<Vec> vertices;                 // counter-clockwise (2-D) or {lo, hi} (1-D)
    std::vector<std::array<int, 2>> vertex_edges;  // indices into edges meeting at each vertex
    std::vector<FlatEdge> edges;
    double half_width_minus = 0, half_width_plus = 0;  // 1-D only
};

// Mechanical systems H = 1/2 <A y, y> + V(x) with one or two degrees of freedom.
FlatPolygon flat_polygon(const std::shared_ptr<const model::MechanicalHamiltonian>& H, const FlatOptions& opt = {});

nlohmann::json to_json(const FlatPolygon& f);

// ---------------------------------------------------------------------------
// Channel of minimal periodic orbits of one homology class.

struct ChannelPoint {
    double E = 0;
    double x = 0;       // minimizing point on the reduced section
    double period = 0;
    double action = 0;  // reduced loop action
    double lambda0 = 0;
    double trace = 0;
    bool hyperbolic = false;
    double closure = 0; // |z(T) - z(0) - 2π g| of the lifted orbit
};

struct PeriodLaw {
    double slope = 0, intercept = 0, r2 = 0;
    int points = 0;
};

struct ChannelOptions {
    action::MinimalOptions minimal{action::LoopOptions{16, 0, 1e-10, 60, {}, {}}, 16};
    bool log_spacing = true;
    bool graded = true;          // loop partition follows the real time spent per step
    double tail_fraction = 0.5;  // lowest fraction of the energies used in the fit
    bool global_check = false;   // multistart search at every energy besides continuation
    double jump_tol = 1e-3;      // a global minimizer this far from the continued one marks a bifurcation
    double ode_tol = 1e-11;
};

struct ChannelData {
    IntVec g;
    double E0 = 0, E1 = 0;
    int eliminate = 0;
    std::vector<ChannelPoint> points;
    PeriodLaw law;
    std::vector<double> bifurcations;
    bool ended_early = false;
};

// T(E) = -slope ln E + intercept by least squares.
PeriodLaw fit_period_law(const std::vector<double>& E, const std::vector<double>& T);

// Two degrees of freedom; g needs a component equal to +-1, whose angle is
// used as time in the reduction.
ChannelData channel_track(const model::HamiltonianPtr& H, const IntVec& g, double E0, double E1, int steps,
                          const ChannelOptions& opt = {});

void write_channel_csv(const ChannelData& d, std::ostream& os);
nlohmann::json to_json(const ChannelData& d);

// ---------------------------------------------------------------------------
// Transition chains.

struct ChainClass {
    double c = 0;
    double alpha = 0;
    weakkam::BarrierField barrier;
    int section = -1;
    std::vector<bool> aubry;                              // mask on the section
    std::vector<std::pair<double, double>> support;      // where the increment form lives
    double delta_prime = 0.1;
};

struct ChainVerdict {
    double c = 0;
    weakkam::ManeSection section;
    bool h1 = false;  // section argmin totally disconnected
    bool h2 = false;  // section argmin avoids the increment support
    bool passes() const { return h1 || h2; }
};

struct TransitionChainReport {
    std::vector<ChainVerdict> classes;
    std::vector<int> chain;   // leading run of classes with at least one verdict
    bool complete = false;
    double alpha_spread = 0;
};

// Weak KAM data for one class on the kernel's (cover) grid.
ChainClass chain_class(const weakkam::ActionKernel& K, double c, std::vector<std::pair<double, double>> support,
                       double delta_prime = 0.1, int cover = 1);

TransitionChainReport chain_assemble(const std::vector<ChainClass>& path, double alpha_tol = 1e-6);

nlohmann::json to_json(const TransitionChainReport& r);

// ---------------------------------------------------------------------------
// Connecting orbits of modified Lagrangians.

enum class StepMode { time_step, space_step };

// The Aubry sets at both ends are invariant tori {x_cover = a, y = (0, c_perp)}
// in the lift of the cover coordinate.
struct ConnectGeometry {
    int cover = 0;
    double a_minus = 0, a_plus = kTwoPi;
    double transition = std::numbers::pi;  // strip centre (space) or switch time (time)
    double transition_width = 0.5;
    double bump_center = 0, bump_radius = 1.0;  // support of the increment form along the cover angle
    double horizon = 100;
    int nodes = 4000;
    double rate = 0.5;            // initial guess for the approach rate
    double section_time = 20;     // disks V-, V+ at t = -+section_time
    double disk_radius = 0.2;
    double window = 2.0;          // half-width of the time window
};

struct Certificate {
    double margin = 0;
    std::vector<double> excess;  // action above the orbit at each boundary sample
    bool passed = false;
    bool trivial = false;
};

struct ConnectingOrbit {
    std::vector<double> t;
    std::vector<Vec> x;
    double action = 0;
    double alpha = 0;
    double dist_minus = 0, dist_plus = 0;
    Certificate certificate;
    int iterations = 0;
    double gradient_norm = 0;
};

ConnectingOrbit connecting_orbit(const std::shared_ptr<const model::MechanicalHamiltonian>& H, const Vec& c,
                                 const Vec& c_prime, StepMode mode, const ConnectGeometry& geo = {});

void write_orbit_csv(const ConnectingOrbit& o, std::ostream& os);
nlohmann::json to_json(const ConnectingOrbit& o);

}  // namespace matherlab::mather
