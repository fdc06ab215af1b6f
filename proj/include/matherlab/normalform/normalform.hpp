#pragma once

#include "matherlab/model/system.hpp"
#include "matherlab/resonance/resonance.hpp"

#include <map>
#include <optional>
#include <string>

namespace matherlab::normalform {

using model::FourierTaylorSeries;
using resonance::RationalVec;

// H_j = h + Z + R1 + R2, all series sharing one base point.
struct KamState {
    FourierTaylorSeries h, Z, R1, R2;
};

struct KamOptions {
    int K_cut = 4;          // Fourier cutoff kept after every bracket
    int d_cut = 7;          // Taylor cutoff kept after every bracket
    int lie_order = 2;      // terms of exp(ad_W) kept in R2
    double radius = 1.0;    // sup-norm action radius used for tail norms
    double prune_tol = 0.0; // drop coefficients with |c| <= prune_tol
};

struct KamStepResult {
    FourierTaylorSeries W;
    KamState next;
    double lie_tail = 0;    // C^0 majorant of the first neglected Lie term
    double trunc_tail = 0;  // C^0 majorant of coefficients dropped by the cutoffs
};

// Splits eps P into Z = [eps P] and the non-resonant rest R1.
KamState initial_state(const FourierTaylorSeries& h, const FourierTaylorSeries& eps_P, const RationalVec& omega);

// Solves <omega, dW/dx> = -R1 mode by mode; throws MalformedSeries if R1 has
// a resonant mode.
FourierTaylorSeries solve_homological(const FourierTaylorSeries& R1, const RationalVec& omega);

KamStepResult kam_step(const KamState& H, const RationalVec& omega, const KamOptions& opt = {});

// Sum of |c| over non-resonant modes of degree zero in (y - y0).
double nonresonant_content(const FourierTaylorSeries& s, const RationalVec& omega);

struct PieceNorms {
    double c0 = 0, c1 = 0, c2 = 0;
};

struct NormalFormOptions {
    int steps = 5;
    double sigma = 1.0 / 7.0;
    double K0 = 1.0;              // T <= K0 eps^{-rho}
    double eps0 = 0.1;
    std::optional<int> K_cut;     // default 2 * cutoff of P
    std::optional<int> d_cut;     // default deg P + steps * (deg h - 1)
    int lie_order = 2;
    double tail_budget = 1.0;     // relative to eps
    int check_samples = 1000;
    int symplectic_samples = 100;
    double ode_tol = 1e-13;
    unsigned seed = 1;
    bool verify = true;
};

struct NormalFormResult {
    FourierTaylorSeries h, Z, R_r, R_h;
    std::vector<FourierTaylorSeries> W;
    std::optional<resonance::ResonanceFrame> frame;
    Vec y_lambda;
    RationalVec omega;
    long long T = 1;
    double epsilon = 0, sigma = 0, rho = 0;
    double window = 0;   // T^{-1} eps^sigma
    std::map<std::string, PieceNorms> norms;
    double nonresonant_before = 0, nonresonant_after_step1 = 0;
    std::vector<double> step_tails;
    double tail = 0;
    double composition_error = 0;
    double symplectic_defect = 0;
    bool verified = false;

    FourierTaylorSeries total() const { return h + Z + R_r + R_h; }
};

// Unimodular frame whose leading columns span the resonant lattice of omega
// (n - 1 vectors); nullopt when omega = 0.
std::optional<resonance::ResonanceFrame> resonance_frame(const RationalVec& omega);

NormalFormResult normal_form(const model::NearIntegrableSystem& sys, const Vec& y_lambda, const RationalVec& omega,
                             const NormalFormOptions& opt = {});

// Applies the composed transformation F_0 o F_1 o ... o F_{m-1} to z.
Vec apply_transform(const NormalFormResult& r, const Vec& z, double tol = 1e-13);

struct ExponentFit {
    std::string piece;
    std::string window;
    int order = 0;
    double measured = 0;
    double reference = 0;
    bool pass = false;
};

struct RemainderReport {
    std::vector<double> epsilons;
    std::vector<ExponentFit> fits;
    double sigma = 0;
    double rescaled_exponent = 0;  // 3 sigma - 2 rho
    bool pass = false;
};

// Least-squares slope of log norm against log eps; +inf when every norm is 0.
double fit_exponent(const std::vector<double>& eps, const std::vector<double>& norms);

RemainderReport verify_remainder(const std::vector<NormalFormResult>& sweep, double slack = 0.15);

std::vector<NormalFormResult> epsilon_sweep(const model::NearIntegrableSystem& sys, const Vec& y_lambda,
                                            const RationalVec& omega, const std::vector<double>& epsilons,
                                            const NormalFormOptions& opt = {});

FourierTaylorSeries rotate_resonant_frame(const FourierTaylorSeries& H, const resonance::ResonanceFrame& frame);

struct HomogenizedHamiltonian {
    Mat A;
    FourierTaylorSeries V;      // x only
    FourierTaylorSeries Z_eps;  // series in p, base 0
    FourierTaylorSeries R_eps;
    Vec omega_j;
    Vec y_j;
    double epsilon = 0;
    double scale = 0;           // sqrt(eps)
    double p_radius = 1;
    double Z_eps_c0 = 0;
    double R_eps_c2 = 0;

    // G_eps = <omega_j, p>/scale + 1/2 <A p, p> + V + Z_eps + R_eps.
    FourierTaylorSeries G_eps() const;
    // 1/2 <A p, p> + <omega_j, p>/scale + V.
    FourierTaylorSeries G_bar() const;
    // (x, p) at time s to (x, y) at time tau = s / scale.
    Vec to_original(const Vec& xp) const;
    Vec from_original(const Vec& xy) const;
};

// Rescales h + Z + R about y_j with y - y_j = sqrt(eps) p.
HomogenizedHamiltonian homogenize(const FourierTaylorSeries& h, const FourierTaylorSeries& Z,
                                  const FourierTaylorSeries& R, const Vec& y_j, double epsilon,
                                  double p_radius = 1.0);
HomogenizedHamiltonian homogenize(const NormalFormResult& nf, const Vec& y_j, double p_radius = 1.0);

struct AveragedPotential {
    IntVec k;                    // primitive resonant mode, theta = <k, x>
    FourierTaylorSeries full;    // [V] on T^2
    FourierTaylorSeries circle;  // f(theta) with [V](x) = f(<k, x>)
    double theta_max = 0;
    double value_max = 0;
    double curvature = 0;        // -f''(theta_max)
    bool nondegenerate = false;
};

AveragedPotential averaged_potential(const FourierTaylorSeries& V, const RationalVec& omega, double Lambda = 0.0);

nlohmann::json to_json(const NormalFormResult& r);
nlohmann::json to_json(const RemainderReport& r);
nlohmann::json to_json(const HomogenizedHamiltonian& g);
nlohmann::json to_json(const AveragedPotential& a);

}  // namespace matherlab::normalform
