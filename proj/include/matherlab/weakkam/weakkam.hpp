#pragma once

#include "matherlab/action/action.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <utility>

namespace matherlab::weakkam {

// Regular periodic grid; point i along dimension d sits at i * length[d] / n[d].
struct Grid {
    std::vector<int> n;
    std::vector<double> length;

    int dims() const { return static_cast<int>(n.size()); }
    int size() const;
    double spacing(int d) const { return length[d] / n[d]; }
    // Row-major: the last index varies fastest.
    int flat(const std::vector<int>& idx) const;
    std::vector<int> unflat(int k) const;
};

class GridFunction {
public:
    Grid grid;
    std::vector<double> values;
    std::vector<int> anchor;

    GridFunction() = default;
    GridFunction(Grid g, std::vector<double> v = {});
    static GridFunction line(int n, double length, std::vector<double> v = {});

    int size() const { return static_cast<int>(values.size()); }
    double operator[](int k) const { return values[k]; }
    double min() const;
    double max() const;
    // Largest difference between neighbouring grid values.
    double grid_tolerance() const;
    double lipschitz() const;
    // Multilinear periodic interpolation.
    double interpolate(const std::vector<double>& x) const;
    double interpolate(double x) const { return interpolate(std::vector<double>{x}); }
    // Subtracts the value at the anchor (default: first point).
    void normalize();

    // Grid coordinates followed by the value, one point per row.
    void write_csv(std::ostream& os) const;
    // "MLGF", uint32 version, uint32 dims, uint32 n[dims], double length[dims],
    // then size() doubles in row-major order; little-endian host layout.
    void write_binary(std::ostream& os) const;
    static GridFunction read_binary(std::istream& is);
};

enum class Direction { backward, forward };

struct KernelOptions {
    int nx = 512;
    double dt = 1.0;         // step for time-independent systems
    int slices = 16;         // steps per period for time-periodic systems
    double max_speed = 1.5;  // displacement window = max_speed * dt
    action::SegmentOptions segment{1e-11, 1e-10, 40, 0};
};

// Minimal actions h^dt(x_i, x_i + j h) of the reduced Lagrangian between grid
// points, for |j| <= window and each time slice.  Entries that cannot be
// reached without a conjugate point are +inf.
class ActionKernel {
public:
    ActionKernel(action::ReducedSystem sys, const KernelOptions& opt = {});

    int nx() const { return nx_; }
    int slices() const { return slices_; }
    int window() const { return W_; }
    double dt() const { return dt_; }
    double spacing() const { return kTwoPi / nx_; }
    // Time covered by `slices()` steps.
    double period() const { return dt_ * slices_; }
    const action::ReducedSystem& system() const { return sys_; }
    const KernelOptions& options() const { return opt_; }

    double raw(int s, int i, int j) const { return table_[(static_cast<size_t>(s) * nx_ + mod(i)) * (2 * W_ + 1) + (j + W_)]; }
    // Action of L - c v along the same segment.
    double cost(int s, int i, int j, double c) const { return raw(s, i, j) - c * j * spacing(); }

private:
    int mod(int i) const { return ((i % nx_) + nx_) % nx_; }
    action::ReducedSystem sys_;
    KernelOptions opt_;
    int nx_, slices_, W_;
    double dt_;
    std::vector<double> table_;
};

// Node penalty added to the Lagrangian: an edge i -> i' pays
// dt * scale * (p[i] + p[i']) / 2.
struct Penalty {
    std::vector<double> p;
    double scale = 0;
};

// One sweep of the Lax-Oleinik operator on a grid of size cover * nx.
// Backward: (T u)(x') = min_x u(x) + h_c(x, x'); forward: max_x' u(x') - h_c(x, x').
GridFunction lax_oleinik_step(const GridFunction& u, const ActionKernel& K, Direction dir, double c = 0.0,
                              int slice = 0, const Penalty* pen = nullptr, int* window_hits = nullptr);

struct WeakKamOptions {
    double tol = 1e-10;
    int max_sweeps = 20000;  // in periods
    int cover = 1;
    std::optional<Penalty> penalty;
    std::optional<GridFunction> init;
};

struct WeakKamSolution {
    GridFunction u;                  // at time 0
    std::vector<GridFunction> slice; // u at the start of each slice
    GridFunction extended;           // (x, tau) on an nx * slices grid
    Direction direction = Direction::backward;
    double c = 0;
    double alpha = 0;
    bool converged = false;
    int sweeps = 0;
    double residual = 0;
    double cesaro_alpha = 0;
    int window_hits = 0;
    int cover = 1;
    double grid_tol() const { return u.grid_tolerance(); }
};

WeakKamSolution solve_weak_kam(const ActionKernel& K, double c, Direction dir, const WeakKamOptions& opt = {});

struct DominationReport {
    int samples = 0;
    double max_defect = 0;  // max of u(x') - u(x) - A_c - alpha t
    double tolerance = 0;
    bool pass = false;
};

// Samples extremal segments of one step and checks u(x') - u(x) <= A_c + alpha dt.
DominationReport check_domination(const ActionKernel& K, const WeakKamSolution& sol, int samples = 100,
                                  unsigned seed = 1, double tol_factor = 10.0);

// Discrete Aubry classes: strongly connected parts of the graph of tight edges
// that carry a cycle.  Node indices refer to the time-0 slice.
struct AubryClasses {
    std::vector<std::vector<int>> components;
    std::vector<bool> mask;
};

AubryClasses aubry_classes(const ActionKernel& K, const WeakKamSolution& sol, double tight_tol = 1e-8);

struct ElementaryOptions {
    WeakKamOptions base;
    double delta0 = 0.2;       // largest penalization strength
    double bump_radius = 0.5;
    double tight_tol = 1e-8;
};

struct ElementarySolution {
    WeakKamSolution minus, plus;  // extrapolated values, zero on the selected class
    AubryClasses classes;
    int selected = -1;
    std::vector<double> deltas;
    double halving_change = 0;    // sup |u_{delta/4} - u_{delta/2}| over both directions
};

// Selects the class whose nodes fall in [lo, hi] (grid coordinates on the
// cover); throws DomainError unless exactly one class meets the region.
ElementarySolution elementary_weak_kam(const ActionKernel& K, double c, double lo, double hi,
                                       const ElementaryOptions& opt = {});

struct BarrierField {
    GridFunction B;
    int label_i = 0, label_j = 0;
    std::vector<bool> argmin;
    double tol = 0;
    double min_value = 0;        // before clipping, after normalization
    bool anchor_in_argmin = true;
};

BarrierField barrier(const GridFunction& u_minus, const GridFunction& u_plus, int anchor, double tol = 1e-8,
                     int label_i = 0, int label_j = 0);

struct ManeSection {
    std::vector<std::pair<double, double>> intervals;
    double covered_fraction = 0;
    double max_length = 0;
    bool totally_disconnected = false;
};

// Section tau = tau_index * period / slices of a 2-D barrier, or the whole
// 1-D barrier when section < 0.  Intervals meeting `aubry` are ignored in the
// disconnection verdict.
ManeSection mane_section_analysis(const BarrierField& bf, int section, double delta_prime,
                                  const std::vector<bool>* aubry = nullptr);

// d_c(x, x') = h^inf(x, x') + h^inf(x', x) on the time-0 grid, h^inf taken
// as the minimum of h^{k T} + alpha k T over the second half of `periods`.
Mat aubry_distance(const ActionKernel& K, double c, double alpha, const std::vector<double>& points,
                   int periods = 400, int cover = 1);

struct HomologyAction {
    int g = 0;
    double x = 0;
    std::vector<int> horizons;    // in periods
    std::vector<double> values;   // h_g^k(x, x)
    double estimate = 0;          // min over the horizons
    int best_horizon = 0;
    bool monotone_tail = false;   // last quarter non-increasing
    std::vector<double> loop;     // lifted positions at every step of the best horizon
};

HomologyAction homology_constrained_action(const ActionKernel& K, int g, double x, const std::vector<int>& horizons,
                                           double c = 0.0, double alpha = 0.0);

nlohmann::json to_json(const WeakKamSolution& s);
nlohmann::json to_json(const BarrierField& b);
nlohmann::json to_json(const ManeSection& m);
nlohmann::json to_json(const HomologyAction& h);

}  // namespace matherlab::weakkam
