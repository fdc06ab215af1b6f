#pragma once

#include "matherlab/model/series.hpp"

#include <boost/rational.hpp>
#include <nlohmann/json.hpp>

#include <functional>
#include <optional>

namespace matherlab::resonance {

using Rational = boost::rational<long long>;
using RationalVec = std::vector<Rational>;
using IntMatrix = std::vector<IntVec>;  // row-major

// ---- Diophantine approximation -------------------------------------------

// max_j dist(v_j, Z)
double dist_to_lattice(const Vec& v);

enum class DirichletMode {
    first,  // smallest k meeting the Dirichlet bound
    best    // k < K with the smallest error (smallest k on ties)
};

struct DirichletResult {
    long k = 0;
    double err = 0;
    bool bound_met = false;  // err <= K^{-1/n}
};

DirichletResult dirichlet_approx(const Vec& omega, double K, DirichletMode mode = DirichletMode::first);

// Smallest integer T <= K_max with dist(T omega, Z^n) <= tol.
std::optional<long> rational_period(const Vec& omega, long K_max, double tol);

// Exact rational vector p/T nearest to omega, T from rational_period.
std::optional<RationalVec> snap_rational(const Vec& omega, long K_max, double tol);

// Least common multiple of the denominators.
long long period_of(const RationalVec& omega);
Vec to_vec(const RationalVec& omega);

// ---- Unimodular frames ----------------------------------------------------

// Exact determinant (fraction-free elimination over big integers).
long long integer_det(const IntMatrix& M);
// Exact inverse of a unimodular matrix; throws DomainError otherwise.
IntMatrix unimodular_inverse(const IntMatrix& M);
IntMatrix int_multiply(const IntMatrix& A, const IntMatrix& B);
IntMatrix int_transpose(const IntMatrix& A);
int gcd_of(const IntVec& v);

struct ResonanceFrame {
    IntVec k;
    std::optional<IntVec> k_prime;
    IntMatrix I;      // columns: k, [k'], completion
    IntMatrix I_inv;
    int det = 0;
    IntVec column(int j) const;
};

// Unimodular I whose leading columns are k (and k'). Completion columns are
// searched in increasing sup norm up to search_bound, then built
// constructively if the search fails.
ResonanceFrame unimodular_complete(const IntVec& k, const std::optional<IntVec>& k_prime = std::nullopt,
                                   int search_bound = 4);

// ---- Resonant averaging ---------------------------------------------------

bool is_resonant(const IntVec& k, const RationalVec& omega);

// Modes with <k, omega> = 0 (exact rational test).
model::FourierTaylorSeries resonant_project(const model::FourierTaylorSeries& P, const RationalVec& omega);

// ---- Resonant paths -------------------------------------------------------

// Integrable part h(y) with derivatives.
struct ActionFunction {
    int n = 0;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
    static ActionFunction from_series(const model::FourierTaylorSeries& h);
    static ActionFunction quadratic(const Mat& A);
};

struct PathSegment {
    IntVec k;
    std::vector<Vec> arc;  // points on Gamma_k ∩ h^{-1}(E)
};

struct Junction {
    IntVec k, k_prime;
    Vec y;
    double residual = 0;
};

struct ResonantPath {
    std::vector<PathSegment> segments;
    std::vector<Junction> junctions;
    double delta = 0;
    int K_delta = 0;
    double energy = 0;
    std::vector<double> waypoint_distance;  // action distance of each waypoint to the path
};

// Newton projection of y0 onto {h = E, <k_j, grad h> = 0 for all j}.
Vec project_to_resonance(const ActionFunction& h, double E, const std::vector<IntVec>& ks, const Vec& y0,
                         double tol = 1e-12);

// Three degrees of freedom: arcs are curves on the energy sphere.
ResonantPath build_resonant_path(const ActionFunction& h, double E, const std::vector<Vec>& waypoints, double delta,
                                 int K_max = 12);

// Smallest-norm k (sup norm <= K) minimising the frequency distance
// |<k, omega>| / |k| of omega to the resonance plane.
std::pair<IntVec, double> nearest_resonance(const Vec& omega, int K);

// ---- Strong/weak classifier -----------------------------------------------

struct ClassifierConfig {
    double d = 1.0;
    std::optional<double> d1;   // default lambda / 4
    double min_curvature = 1e-8;
};

struct Classification {
    bool weak = false;
    double margin = 0;  // |k'|^{r-2} / ((d/d1) |P|)
    double x_max = 0;
    double lambda = 0;  // -Z''(x_max)
};

// Z_k is a function of one angle (dimension-1 series, actions at the base).
Classification classify_resonance(const model::FourierTaylorSeries& Z_k, const IntVec& k_prime, double P_norm,
                                   int r, const ClassifierConfig& cfg = {});

// ---- Covering -------------------------------------------------------------

struct CoverBall {
    Vec center;
    double radius = 0;
    Vec omega;
    long period = 0;         // Dirichlet denominator
    double approx_err = 0;
};

struct Cover {
    std::vector<CoverBall> balls;
    double separation = 0;   // K sqrt(eps)
    double min_pair_distance = 0;
    bool covers_path = false;
};

Cover cover_path(const ResonantPath& path, const ActionFunction& h, double epsilon, double sigma, double K = 1.0,
                 double m = 1.0);

// Polyline of all segments in order.
std::vector<Vec> path_points(const ResonantPath& path);

nlohmann::json to_json(const ResonantPath& p);
nlohmann::json to_json(const Cover& c);
nlohmann::json to_json(const RationalVec& r);

}  // namespace matherlab::resonance
