#include "matherlab/weakkam/weakkam.hpp"

#include "matherlab/flow/flow.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

namespace matherlab::weakkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int pmod(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

// ---------------------------------------------------------------------------

int Grid::size() const {
    int s = 1;
    for (int k : n) s *= k;
    return s;
}

int Grid::flat(const std::vector<int>& idx) const {
    int k = 0;
    for (int d = 0; d < dims(); ++d) k = k * n[d] + pmod(idx[d], n[d]);
    return k;
}

std::vector<int> Grid::unflat(int k) const {
    std::vector<int> idx(dims());
    for (int d = dims() - 1; d >= 0; --d) {
        idx[d] = k % n[d];
        k /= n[d];
    }
    return idx;
}

GridFunction::GridFunction(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (grid.n.size() != grid.length.size()) throw DimensionError("GridFunction: resolution and length differ");
    for (int k : grid.n)
        if (k < 1) throw DimensionError("GridFunction: resolution must be positive");
    if (values.empty()) values.assign(grid.size(), 0.0);
    if (static_cast<int>(values.size()) != grid.size()) throw DimensionError("GridFunction: value count mismatch");
    anchor.assign(grid.dims(), 0);
}

GridFunction GridFunction::line(int n, double length, std::vector<double> v) {
    return GridFunction(Grid{{n}, {length}}, std::move(v));
}

double GridFunction::min() const { return *std::min_element(values.begin(), values.end()); }
double GridFunction::max() const { return *std::max_element(values.begin(), values.end()); }

double GridFunction::grid_tolerance() const {
    double worst = 0;
    for (int k = 0; k < size(); ++k) {
        auto idx = grid.unflat(k);
        for (int d = 0; d < grid.dims(); ++d) {
            auto nb = idx;
            ++nb[d];
            double a = values[k], b = values[grid.flat(nb)];
            if (std::isfinite(a) && std::isfinite(b)) worst = std::max(worst, std::abs(a - b));
        }
    }
    return worst;
}

double GridFunction::lipschitz() const {
    double worst = 0;
    for (int k = 0; k < size(); ++k) {
        auto idx = grid.unflat(k);
        for (int d = 0; d < grid.dims(); ++d) {
            auto nb = idx;
            ++nb[d];
            double a = values[k], b = values[grid.flat(nb)];
            if (std::isfinite(a) && std::isfinite(b)) worst = std::max(worst, std::abs(a - b) / grid.spacing(d));
        }
    }
    return worst;
}

double GridFunction::interpolate(const std::vector<double>& x) const {
    const int D = grid.dims();
    if (static_cast<int>(x.size()) != D) throw DimensionError("GridFunction::interpolate: dimension mismatch");
    std::vector<int> base(D);
    std::vector<double> frac(D);
    for (int d = 0; d < D; ++d) {
        double s = x[d] / grid.spacing(d);
        double f = std::floor(s);
        base[d] = static_cast<int>(f);
        frac[d] = s - f;
    }
    double out = 0;
    for (int corner = 0; corner < (1 << D); ++corner) {
        double w = 1;
        std::vector<int> idx = base;
        for (int d = 0; d < D; ++d) {
            if (corner >> d & 1) {
                ++idx[d];
                w *= frac[d];
            } else {
                w *= 1 - frac[d];
            }
        }
        if (w != 0) out += w * values[grid.flat(idx)];
    }
    return out;
}

void GridFunction::normalize() {
    double a = values[grid.flat(anchor)];
    for (auto& v : values) v -= a;
}

void GridFunction::write_csv(std::ostream& os) const {
    for (int d = 0; d < grid.dims(); ++d) os << 'x' << d << ',';
    os << "value\n" << std::setprecision(17);
    for (int k = 0; k < size(); ++k) {
        auto idx = grid.unflat(k);
        for (int d = 0; d < grid.dims(); ++d) os << idx[d] * grid.spacing(d) << ',';
        os << values[k] << '\n';
    }
}

void GridFunction::write_binary(std::ostream& os) const {
    auto put32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    os.write("MLGF", 4);
    put32(1);
    put32(static_cast<std::uint32_t>(grid.dims()));
    for (int k : grid.n) put32(static_cast<std::uint32_t>(k));
    os.write(reinterpret_cast<const char*>(grid.length.data()), sizeof(double) * grid.length.size());
    os.write(reinterpret_cast<const char*>(values.data()), sizeof(double) * values.size());
}

GridFunction GridFunction::read_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MLGF", 4) != 0) throw MalformedSeries("GridFunction: bad binary header");
    auto get32 = [&] {
        std::uint32_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    if (get32() != 1) throw MalformedSeries("GridFunction: unsupported binary version");
    std::uint32_t D = get32();
    if (D == 0 || D > 8) throw MalformedSeries("GridFunction: bad dimension count");
    Grid g;
    for (std::uint32_t d = 0; d < D; ++d) g.n.push_back(static_cast<int>(get32()));
    g.length.resize(D);
    is.read(reinterpret_cast<char*>(g.length.data()), sizeof(double) * D);
    std::vector<double> v(g.size());
    is.read(reinterpret_cast<char*>(v.data()), sizeof(double) * v.size());
    if (!is) throw MalformedSeries("GridFunction: truncated binary data");
    return GridFunction(std::move(g), std::move(v));
}

// ---------------------------------------------------------------------------

ActionKernel::ActionKernel(action::ReducedSystem sys, const KernelOptions& opt) : sys_(std::move(sys)), opt_(opt) {
    if (sys_.K->dof() != 1) throw DimensionError("ActionKernel: one degree of freedom expected");
    if (opt.nx < 8) throw DomainError("ActionKernel: grid too coarse");
    nx_ = opt.nx;
    if (sys_.K->autonomous()) {
        slices_ = 1;
        dt_ = opt.dt;
    } else {
        slices_ = std::max(1, opt.slices);
        dt_ = sys_.loop_time() / slices_;
    }
    if (!(dt_ > 0)) throw DomainError("ActionKernel: time step must be positive");
    W_ = std::max(1, static_cast<int>(std::ceil(opt.max_speed * dt_ / spacing())));
    if (2 * W_ >= nx_) throw DomainError("ActionKernel: displacement window wraps the circle");
    table_.assign(static_cast<size_t>(slices_) * nx_ * (2 * W_ + 1), kInf);
    const double h = spacing();
    parallel_for(slices_ * nx_, [&](int task) {
        const int s = task / nx_, i = task % nx_;
        const double t0 = s * dt_, t1 = t0 + dt_, x = i * h;
        double* row = &table_[(static_cast<size_t>(s) * nx_ + i) * (2 * W_ + 1)];
        action::Segment centre;
        try {
            centre = action::two_point_action(sys_, x, x, t0, t1, opt_.segment);
        } catch (const Error&) {
            return;
        }
        row[W_] = centre.F;
        for (int dir : {1, -1}) {
            action::Segment prev = centre;
            for (int j = 1; j <= W_; ++j) {
                double guess = prev.y0 + dir * h / prev.M(0, 1);
                try {
                    prev = action::two_point_action(sys_, x, x + dir * j * h, t0, t1, opt_.segment, guess);
                } catch (const Error&) {
                    break;
                }
                row[W_ + dir * j] = prev.F;
            }
        }
    });
}

// ---------------------------------------------------------------------------

namespace {

void sweep(const ActionKernel& K, Direction dir, double c, int s, const std::vector<double>& u, std::vector<double>& out,
           const Penalty* pen, int* hits, std::vector<int>* arg = nullptr) {
    const int n = static_cast<int>(u.size());
    const int W = K.window();
    const double pscale = pen ? K.dt() * pen->scale * 0.5 : 0.0;
    out.assign(n, dir == Direction::backward ? kInf : -kInf);
    if (arg) arg->assign(n, 0);
    std::vector<int> edge_hits(n, 0);
    const int chunk = 64;
    const int tasks = (n + chunk - 1) / chunk;
    parallel_for(tasks, [&](int t) {
        for (int q = t * chunk; q < std::min(n, (t + 1) * chunk); ++q) {
            double best = dir == Direction::backward ? kInf : -kInf;
            int bj = 0;
            for (int j = -W; j <= W; ++j) {
                if (dir == Direction::backward) {
                    int src = pmod(q - j, n);
                    double v = u[src] + K.cost(s, src, j, c);
                    if (pen) v += pscale * (pen->p[src] + pen->p[q]);
                    if (v < best) {
                        best = v;
                        bj = j;
                    }
                } else {
                    int dst = pmod(q + j, n);
                    double v = u[dst] - K.cost(s, q, j, c);
                    if (pen) v -= pscale * (pen->p[q] + pen->p[dst]);
                    if (v > best) {
                        best = v;
                        bj = j;
                    }
                }
            }
            out[q] = best;
            if (arg) (*arg)[q] = bj;
            if (std::abs(bj) == W && std::isfinite(best)) edge_hits[q] = 1;
        }
    });
    if (hits) {
        int h = 0;
        for (int e : edge_hits) h += e;
        *hits += h;
    }
}

std::vector<double> one_period(const ActionKernel& K, Direction dir, double c, std::vector<double> u,
                               const Penalty* pen, int* hits) {
    std::vector<double> w;
    const int S = K.slices();
    for (int k = 0; k < S; ++k) {
        int s = dir == Direction::backward ? k : S - 1 - k;
        sweep(K, dir, c, s, u, w, pen, hits);
        u.swap(w);
    }
    return u;
}

}  // namespace

GridFunction lax_oleinik_step(const GridFunction& u, const ActionKernel& K, Direction dir, double c, int slice,
                              const Penalty* pen, int* window_hits) {
    if (u.grid.dims() != 1 || u.size() % K.nx() != 0)
        throw DimensionError("lax_oleinik_step: grid must be a cover of the kernel grid");
    if (slice < 0 || slice >= K.slices()) throw DomainError("lax_oleinik_step: slice out of range");
    if (pen && static_cast<int>(pen->p.size()) != u.size()) throw DimensionError("lax_oleinik_step: penalty size");
    GridFunction out = u;
    sweep(K, dir, c, slice, u.values, out.values, pen, window_hits);
    return out;
}

WeakKamSolution solve_weak_kam(const ActionKernel& K, double c, Direction dir, const WeakKamOptions& opt) {
    const int cover = std::max(1, opt.cover);
    const int n = cover * K.nx();
    const double len = kTwoPi * cover;
    const Penalty* pen = opt.penalty ? &*opt.penalty : nullptr;
    if (pen && static_cast<int>(pen->p.size()) != n) throw DimensionError("solve_weak_kam: penalty size");
    std::vector<double> u(n, 0.0);
    if (opt.init) {
        if (opt.init->size() != n) throw DimensionError("solve_weak_kam: initial data size");
        u = opt.init->values;
    }
    auto normalize = [&](std::vector<double>& v) {
        double ref = dir == Direction::backward ? *std::min_element(v.begin(), v.end())
                                                : *std::max_element(v.begin(), v.end());
        for (auto& a : v) a -= ref;
        return ref;
    };
    normalize(u);

    WeakKamSolution sol;
    sol.direction = dir;
    sol.c = c;
    sol.cover = cover;
    const double T = K.period();
    std::vector<double> shifts;
    int hits = 0;
    for (int it = 0; it < opt.max_sweeps; ++it) {
        hits = 0;
        std::vector<double> w = one_period(K, dir, c, u, pen, &hits);
        double shift = normalize(w);
        shifts.push_back(shift);
        double res = 0;
        for (int i = 0; i < n; ++i) res = std::max(res, std::abs(w[i] - u[i]));
        u.swap(w);
        sol.sweeps = it + 1;
        sol.residual = res;
        sol.alpha = dir == Direction::backward ? -shift / T : shift / T;
        if (res <= opt.tol) {
            sol.converged = true;
            break;
        }
    }
    {
        size_t from = shifts.size() / 2;
        double sum = 0;
        for (size_t k = from; k < shifts.size(); ++k) sum += shifts[k];
        double mean = sum / static_cast<double>(shifts.size() - from);
        sol.cesaro_alpha = dir == Direction::backward ? -mean / T : mean / T;
    }
    if (!sol.converged) {
        warn("solve_weak_kam: no convergence after " + std::to_string(opt.max_sweeps) +
             " periods; alpha from the Cesaro mean of the shifts");
        sol.alpha = sol.cesaro_alpha;
    }
    sol.window_hits = hits;
    if (hits > 0) warn("solve_weak_kam: minimizers reach the edge of the displacement window");

    sol.u = GridFunction::line(n, len, u);
    // Slice values consistent with u_{s+1} = T_s u_s + alpha dt.
    const int S = K.slices();
    sol.slice.assign(S, sol.u);
    if (dir == Direction::backward) {
        std::vector<double> v = u, w;
        for (int s = 0; s + 1 < S; ++s) {
            sweep(K, dir, c, s, v, w, pen, nullptr);
            for (auto& a : w) a += sol.alpha * K.dt();
            v.swap(w);
            sol.slice[s + 1].values = v;
        }
    } else {
        std::vector<double> v = u, w;
        for (int s = S - 1; s >= 1; --s) {
            sweep(K, dir, c, s, v, w, pen, nullptr);
            for (auto& a : w) a -= sol.alpha * K.dt();
            v.swap(w);
            sol.slice[s].values = v;
        }
    }
    sol.extended = GridFunction(Grid{{n, S}, {len, T}});
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < S; ++s) sol.extended.values[i * S + s] = sol.slice[s].values[i];
    return sol;
}

// ---------------------------------------------------------------------------

DominationReport check_domination(const ActionKernel& K, const WeakKamSolution& sol, int samples, unsigned seed,
                                  double tol_factor) {
    const model::Hamiltonian& H = *K.system().K;
    const int S = K.slices();
    const double len = kTwoPi * sol.cover;
    const double vmax = 0.8 * K.options().max_speed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0, len), uv(-vmax, vmax);
    std::uniform_int_distribution<int> us(0, S - 1);
    DominationReport r;
    r.tolerance = tol_factor * sol.grid_tol();
    r.max_defect = -kInf;
    for (int k = 0; k < samples; ++k) {
        int s = us(rng);
        double x = ux(rng), v = uv(rng);
        double t0 = s * K.dt();
        double y = action::momentum_for_velocity(H, x, v, t0);
        auto tf = flow::tangent_flow(H, (Vec(2) << x, y).finished(), t0, K.dt(), 1e-11, true);
        double xp = tf.z[0];
        double A = tf.action - sol.c * (xp - x) + sol.alpha * K.dt();
        double lhs = sol.slice[(s + 1) % S].interpolate(wrap_angle(xp / sol.cover) * sol.cover) -
                     sol.slice[s].interpolate(x);
        r.max_defect = std::max(r.max_defect, lhs - A);
        ++r.samples;
    }
    r.pass = r.max_defect <= r.tolerance;
    return r;
}

// ---------------------------------------------------------------------------

AubryClasses aubry_classes(const ActionKernel& K, const WeakKamSolution& sol, double tight_tol) {
    const int n = sol.u.size();
    const int S = K.slices();
    const int W = K.window();
    const int N = n * S;
    // Node (s, i) -> s * n + i; edges go to slice s + 1.
    std::vector<std::vector<int>> adj(N);
    for (int s = 0; s < S; ++s) {
        const auto& a = sol.slice[s].values;
        const auto& b = sol.slice[(s + 1) % S].values;
        for (int i = 0; i < n; ++i)
            for (int j = -W; j <= W; ++j) {
                int ip = pmod(i + j, n);
                double gap = a[i] + K.cost(s, i, j, sol.c) + sol.alpha * K.dt() - b[ip];
                if (std::abs(gap) <= tight_tol) adj[s * n + i].push_back(((s + 1) % S) * n + ip);
            }
    }
    // Iterative Tarjan.
    std::vector<int> index(N, -1), low(N, 0), comp(N, -1);
    std::vector<bool> on(N, false);
    std::vector<int> stack, order;
    int counter = 0, ncomp = 0;
    for (int root = 0; root < N; ++root) {
        if (index[root] >= 0) continue;
        std::vector<std::pair<int, size_t>> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on[root] = true;
        while (!call.empty()) {
            auto& [v, e] = call.back();
            if (e < adj[v].size()) {
                int w = adj[v][e++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on[w] = true;
                    call.push_back({w, 0});
                } else if (on[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            } else {
                int vv = v;
                call.pop_back();
                if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[vv]);
                if (low[vv] == index[vv]) {
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on[w] = false;
                        comp[w] = ncomp;
                    } while (w != vv);
                    ++ncomp;
                }
            }
        }
    }
    std::vector<int> csize(ncomp, 0);
    std::vector<bool> cyclic(ncomp, false);
    for (int v = 0; v < N; ++v) ++csize[comp[v]];
    for (int v = 0; v < N; ++v)
        for (int w : adj[v])
            if (w == v) cyclic[comp[v]] = true;
    for (int k = 0; k < ncomp; ++k)
        if (csize[k] > 1) cyclic[k] = true;

    AubryClasses out;
    out.mask.assign(n, false);
    std::vector<int> remap(ncomp, -1);
    for (int i = 0; i < n; ++i) {
        int k = comp[i];  // slice 0
        if (!cyclic[k]) continue;
        if (remap[k] < 0) {
            remap[k] = static_cast<int>(out.components.size());
            out.components.emplace_back();
        }
        out.components[remap[k]].push_back(i);
        out.mask[i] = true;
    }
    return out;
}

// ---------------------------------------------------------------------------

ElementarySolution elementary_weak_kam(const ActionKernel& K, double c, double lo, double hi,
                                       const ElementaryOptions& opt) {
    const int cover = std::max(1, opt.base.cover);
    const int n = cover * K.nx();
    const double len = kTwoPi * cover;
    const double h = K.spacing();
    WeakKamOptions base = opt.base;
    base.penalty.reset();
    auto sol0 = solve_weak_kam(K, c, Direction::backward, base);

    ElementarySolution out;
    out.classes = aubry_classes(K, sol0, opt.tight_tol);
    auto inside = [&](int i) {
        double x = i * h;
        for (int k = -1; k <= 1; ++k)
            if (x + k * len >= lo && x + k * len <= hi) return true;
        return false;
    };
    for (int k = 0; k < static_cast<int>(out.classes.components.size()); ++k) {
        bool meets = std::any_of(out.classes.components[k].begin(), out.classes.components[k].end(), inside);
        if (!meets) continue;
        if (out.selected >= 0) throw DomainError("elementary_weak_kam: selector region meets several Aubry classes");
        out.selected = k;
    }
    if (out.selected < 0) throw DomainError("elementary_weak_kam: selector region meets no Aubry class");
    const auto& sel = out.classes.components[out.selected];
    const int anchor = sel.front();

    auto normalized = [&](WeakKamSolution s) {
        double a = s.u.values[anchor];
        for (auto& v : s.u.values) v -= a;
        for (auto& sl : s.slice)
            for (auto& v : sl.values) v -= a;
        for (auto& v : s.extended.values) v -= a;
        s.u.anchor = {anchor};
        return s;
    };

    if (out.classes.components.size() == 1) {
        out.minus = normalized(sol0);
        out.plus = normalized(solve_weak_kam(K, c, Direction::forward, base));
        return out;
    }

    auto dist = [&](int a, int b) {
        double d = std::abs(a - b) * h;
        return std::min(d, len - d);
    };
    double sep = kInf;
    for (int a : sel)
        for (int k = 0; k < static_cast<int>(out.classes.components.size()); ++k)
            if (k != out.selected)
                for (int b : out.classes.components[k]) sep = std::min(sep, dist(a, b));
    const double R = std::min(opt.bump_radius, 0.5 * sep);
    Penalty pen;
    pen.p.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < static_cast<int>(out.classes.components.size()); ++k) {
            if (k == out.selected) continue;
            for (int b : out.classes.components[k]) {
                double r = dist(i, b) / R;
                if (r < 1) pen.p[i] = std::max(pen.p[i], (1 - r * r) * (1 - r * r));
            }
        }

    std::vector<WeakKamSolution> mins, pluses;
    WeakKamOptions wo = base;
    for (int q = 0; q < 3; ++q) {
        double delta = opt.delta0 / (1 << q);
        out.deltas.push_back(delta);
        pen.scale = delta;
        wo.penalty = pen;
        wo.init = mins.empty() ? std::nullopt : std::optional<GridFunction>(mins.back().u);
        mins.push_back(normalized(solve_weak_kam(K, c, Direction::backward, wo)));
        wo.init = pluses.empty() ? std::nullopt : std::optional<GridFunction>(pluses.back().u);
        pluses.push_back(normalized(solve_weak_kam(K, c, Direction::forward, wo)));
    }
    // Near a penalized class the values move like sqrt(delta), elsewhere like
    // delta: quadratic extrapolation to zero in s = sqrt(delta).
    double wt[3];
    for (int k = 0; k < 3; ++k) {
        wt[k] = 1;
        for (int m = 0; m < 3; ++m)
            if (m != k) wt[k] *= std::sqrt(out.deltas[m]) / (std::sqrt(out.deltas[m]) - std::sqrt(out.deltas[k]));
    }
    const double w0 = wt[0], w1 = wt[1], w2 = wt[2];
    auto extrapolate = [&](const std::vector<WeakKamSolution>& v) {
        WeakKamSolution s = v[2];
        auto mix = [&](std::vector<double>& dst, const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<double>& cc) {
            for (size_t i = 0; i < dst.size(); ++i) dst[i] = w0 * a[i] + w1 * b[i] + w2 * cc[i];
        };
        mix(s.u.values, v[0].u.values, v[1].u.values, v[2].u.values);
        for (size_t k = 0; k < s.slice.size(); ++k)
            mix(s.slice[k].values, v[0].slice[k].values, v[1].slice[k].values, v[2].slice[k].values);
        mix(s.extended.values, v[0].extended.values, v[1].extended.values, v[2].extended.values);
        s.alpha = sol0.alpha;
        return s;
    };
    out.minus = extrapolate(mins);
    out.plus = extrapolate(pluses);
    for (int i = 0; i < n; ++i) {
        out.halving_change = std::max(out.halving_change, std::abs(mins[2].u.values[i] - mins[1].u.values[i]));
        out.halving_change = std::max(out.halving_change, std::abs(pluses[2].u.values[i] - pluses[1].u.values[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------

BarrierField barrier(const GridFunction& u_minus, const GridFunction& u_plus, int anchor, double tol, int label_i,
                     int label_j) {
    if (u_minus.grid.n != u_plus.grid.n) throw DimensionError("barrier: grids differ");
    if (anchor < 0 || anchor >= u_minus.size()) throw DomainError("barrier: anchor out of range");
    BarrierField bf;
    bf.label_i = label_i;
    bf.label_j = label_j;
    bf.tol = tol;
    bf.B = u_minus;
    for (int k = 0; k < bf.B.size(); ++k) bf.B.values[k] = u_minus.values[k] - u_plus.values[k];
    double a = bf.B.values[anchor];
    for (auto& v : bf.B.values) v -= a;
    bf.B.anchor = bf.B.grid.unflat(anchor);
    bf.min_value = bf.B.min();
    bf.argmin.resize(bf.B.size());
    for (int k = 0; k < bf.B.size(); ++k) bf.argmin[k] = bf.B.values[k] - bf.min_value <= tol;
    bf.anchor_in_argmin = -bf.min_value <= tol;
    if (!bf.anchor_in_argmin) warn("barrier: normalization point is not in the argmin set");
    return bf;
}

ManeSection mane_section_analysis(const BarrierField& bf, int section, double delta_prime,
                                  const std::vector<bool>* aubry) {
    const Grid& g = bf.B.grid;
    const int n = g.n[0];
    const double h = g.spacing(0);
    std::vector<bool> mask(n);
    if (g.dims() == 1 || section < 0) {
        if (g.dims() != 1) throw DimensionError("mane_section_analysis: section index required");
        for (int i = 0; i < n; ++i) mask[i] = bf.argmin[i];
    } else {
        if (section >= g.n[1]) throw DomainError("mane_section_analysis: section out of range");
        for (int i = 0; i < n; ++i) mask[i] = bf.argmin[g.flat({i, section})];
    }
    if (aubry && static_cast<int>(aubry->size()) != n) throw DimensionError("mane_section_analysis: Aubry mask size");
    ManeSection out;
    int count = static_cast<int>(std::count(mask.begin(), mask.end(), true));
    out.covered_fraction = static_cast<double>(count) / n;
    if (count == n) {
        out.intervals.push_back({0.0, g.length[0]});
        out.max_length = g.length[0];
        out.totally_disconnected = false;
        return out;
    }
    // Start scanning just after a gap so runs do not straddle the origin.
    int start = 0;
    while (mask[start]) ++start;
    double worst = 0;
    for (int k = 1; k <= n; ++k) {
        int i = (start + k) % n;
        if (!mask[i]) continue;
        int first = start + k, last = first;
        bool touches_aubry = false;
        while (mask[last % n] && last < start + n) {
            if (aubry && (*aubry)[last % n]) touches_aubry = true;
            ++last;
        }
        --last;
        double a = (first % n) * h;
        double b = a + (last - first) * h;
        out.intervals.push_back({a, b});
        out.max_length = std::max(out.max_length, b - a);
        if (!touches_aubry) worst = std::max(worst, b - a);
        k = last - start;
    }
    std::sort(out.intervals.begin(), out.intervals.end());
    out.totally_disconnected = worst <= delta_prime;
    return out;
}

// ---------------------------------------------------------------------------

Mat aubry_distance(const ActionKernel& K, double c, double alpha, const std::vector<double>& points, int periods,
                   int cover) {
    const int n = std::max(1, cover) * K.nx();
    const int P = static_cast<int>(points.size());
    const double h = K.spacing();
    std::vector<int> node(P);
    for (int a = 0; a < P; ++a) node[a] = pmod(static_cast<int>(std::lround(points[a] / h)), n);
    Mat hinf = Mat::Constant(P, P, kInf);
    for (int a = 0; a < P; ++a) {
        std::vector<double> u(n, kInf), w;
        u[node[a]] = 0;
        for (int k = 1; k <= periods; ++k) {
            for (int s = 0; s < K.slices(); ++s) {
                sweep(K, Direction::backward, c, s, u, w, nullptr, nullptr);
                u.swap(w);
            }
            for (auto& v : u) v += alpha * K.period();
            if (2 * k >= periods)
                for (int b = 0; b < P; ++b) hinf(a, b) = std::min(hinf(a, b), u[node[b]]);
        }
    }
    return hinf + hinf.transpose();
}

HomologyAction homology_constrained_action(const ActionKernel& K, int g, double x, const std::vector<int>& horizons,
                                           double c, double alpha) {
    if (horizons.empty()) throw DomainError("homology_constrained_action: no horizons");
    if (!std::is_sorted(horizons.begin(), horizons.end()) || horizons.front() < 1)
        throw DomainError("homology_constrained_action: horizons must be positive and ascending");
    const int N = K.nx(), S = K.slices(), W = K.window();
    const double h = K.spacing();
    const int i0 = static_cast<int>(std::lround(x / h));
    const int margin = N / 2;
    const int lo = std::min(0, g * N) - margin + i0, hi = std::max(0, g * N) + margin + i0;
    const int L = hi - lo + 1;
    const int target = i0 + g * N - lo;
    const int steps = horizons.back() * S;

    std::vector<double> u(L, kInf), w(L);
    u[i0 - lo] = 0;
    std::vector<std::vector<std::int16_t>> pred(steps, std::vector<std::int16_t>(L, 0));
    HomologyAction out;
    out.g = g;
    out.x = i0 * h;
    out.horizons = horizons;
    size_t next = 0;
    for (int st = 0; st < steps; ++st) {
        const int s = st % S;
        for (int q = 0; q < L; ++q) {
            double best = kInf;
            int bj = 0;
            for (int j = -W; j <= W; ++j) {
                int src = q - j;
                if (src < 0 || src >= L || !std::isfinite(u[src])) continue;
                double v = u[src] + K.cost(s, lo + src, j, c);
                if (v < best) {
                    best = v;
                    bj = j;
                }
            }
            w[q] = best;
            pred[st][q] = static_cast<std::int16_t>(bj);
        }
        u.swap(w);
        while (next < horizons.size() && horizons[next] * S == st + 1) {
            out.values.push_back(u[target] + alpha * horizons[next] * K.period());
            ++next;
        }
    }
    auto it = std::min_element(out.values.begin(), out.values.end());
    out.estimate = *it;
    size_t kbest = static_cast<size_t>(it - out.values.begin());
    out.best_horizon = horizons[kbest];
    size_t q0 = out.values.size() - std::max<size_t>(2, out.values.size() / 4);
    out.monotone_tail = true;
    for (size_t k = q0 + 1; k < out.values.size(); ++k)
        if (out.values[k] > out.values[k - 1] + 1e-12) out.monotone_tail = false;

    int q = target;
    const int best_steps = out.best_horizon * S;
    out.loop.assign(best_steps + 1, 0.0);
    out.loop[best_steps] = (lo + q) * h;
    for (int st = best_steps - 1; st >= 0; --st) {
        q -= pred[st][q];
        out.loop[st] = (lo + q) * h;
    }
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const WeakKamSolution& s) {
    nlohmann::json j;
    j["direction"] = s.direction == Direction::backward ? "backward" : "forward";
    j["c"] = s.c;
    j["alpha"] = s.alpha;
    j["converged"] = s.converged;
    j["sweeps"] = s.sweeps;
    j["residual"] = s.residual;
    j["cesaro_alpha"] = s.cesaro_alpha;
    j["window_hits"] = s.window_hits;
    j["grid_tol"] = s.grid_tol();
    j["lipschitz"] = s.u.lipschitz();
    j["cover"] = s.cover;
    j["u"] = s.u.values;
    return j;
}

nlohmann::json to_json(const BarrierField& b) {
    nlohmann::json j;
    j["labels"] = {b.label_i, b.label_j};
    j["tol"] = b.tol;
    j["min_value"] = b.min_value;
    j["anchor_in_argmin"] = b.anchor_in_argmin;
    j["argmin_count"] = std::count(b.argmin.begin(), b.argmin.end(), true);
    j["B"] = b.B.values;
    j["resolution"] = b.B.grid.n;
    return j;
}

nlohmann::json to_json(const ManeSection& m) {
    nlohmann::json j;
    j["intervals"] = nlohmann::json::array();
    for (const auto& [a, b] : m.intervals) j["intervals"].push_back({a, b});
    j["covered_fraction"] = m.covered_fraction;
    j["max_length"] = m.max_length;
    j["totally_disconnected"] = m.totally_disconnected;
    return j;
}

nlohmann::json to_json(const HomologyAction& h) {
    nlohmann::json j;
    j["g"] = h.g;
    j["x"] = h.x;
    j["horizons"] = h.horizons;
    j["values"] = h.values;
    j["estimate"] = h.estimate;
    j["best_horizon"] = h.best_horizon;
    j["monotone_tail"] = h.monotone_tail;
    return j;
}

}  // namespace matherlab::weakkam
