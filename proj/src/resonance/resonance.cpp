#include "matherlab/resonance/resonance.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <numeric>

namespace matherlab::resonance {

using boost::multiprecision::cpp_int;

double dist_to_lattice(const Vec& v) {
    double m = 0;
    for (int j = 0; j < v.size(); ++j) m = std::max(m, std::abs(v[j] - std::round(v[j])));
    return m;
}

DirichletResult dirichlet_approx(const Vec& omega, double K, DirichletMode mode) {
    if (!(K > 1)) throw DomainError("dirichlet_approx: K must exceed 1");
    const int n = static_cast<int>(omega.size());
    if (n == 0) throw DimensionError("dirichlet_approx: empty frequency");
    const double bound = std::pow(K, -1.0 / n);
    DirichletResult best;
    best.err = std::numeric_limits<double>::infinity();
    for (long k = 1; static_cast<double>(k) < K; ++k) {
        double e = dist_to_lattice(static_cast<double>(k) * omega);
        if (mode == DirichletMode::first && e <= bound) return {k, e, true};
        if (e < best.err) {
            best.k = k;
            best.err = e;
        }
    }
    best.bound_met = best.err <= bound;
    return best;
}

std::optional<long> rational_period(const Vec& omega, long K_max, double tol) {
    for (long T = 1; T <= K_max; ++T)
        if (dist_to_lattice(static_cast<double>(T) * omega) <= tol) return T;
    return std::nullopt;
}

std::optional<RationalVec> snap_rational(const Vec& omega, long K_max, double tol) {
    auto T = rational_period(omega, K_max, tol);
    if (!T) return std::nullopt;
    RationalVec r;
    for (int j = 0; j < omega.size(); ++j)
        r.emplace_back(static_cast<long long>(std::llround(*T * omega[j])), static_cast<long long>(*T));
    return r;
}

long long period_of(const RationalVec& omega) {
    long long T = 1;
    for (const auto& q : omega) T = std::lcm(T, q.denominator());
    return T;
}

Vec to_vec(const RationalVec& omega) {
    Vec v(static_cast<int>(omega.size()));
    for (std::size_t j = 0; j < omega.size(); ++j)
        v[static_cast<int>(j)] = boost::rational_cast<double>(omega[j]);
    return v;
}

// ---------------------------------------------------------------------------

namespace {

cpp_int det_big(std::vector<std::vector<cpp_int>> a) {
    const int n = static_cast<int>(a.size());
    if (n == 0) return 1;
    int sign = 1;
    cpp_int prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (a[k][k] == 0) {
            int p = k + 1;
            while (p < n && a[p][k] == 0) ++p;
            if (p == n) return 0;
            std::swap(a[k], a[p]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return sign * a[n - 1][n - 1];
}

std::vector<std::vector<cpp_int>> to_big(const IntMatrix& M) {
    std::vector<std::vector<cpp_int>> a(M.size());
    for (std::size_t i = 0; i < M.size(); ++i)
        for (int v : M[i]) a[i].emplace_back(v);
    return a;
}

int checked_int(const cpp_int& v) {
    if (v > std::numeric_limits<int>::max() || v < std::numeric_limits<int>::min())
        throw DomainError("integer frame entry overflows");
    return static_cast<int>(v);
}

int norm_inf(const IntVec& v) {
    int m = 0;
    for (int a : v) m = std::max(m, std::abs(a));
    return m;
}

// Columns -> row-major matrix.
IntMatrix from_columns(const std::vector<IntVec>& cols) {
    const int n = static_cast<int>(cols.front().size());
    IntMatrix M(n, IntVec(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (int r = 0; r < n; ++r) M[r][c] = cols[c][r];
    return M;
}

// gcd of all maximal minors of the n x j matrix with the given columns.
long long minor_gcd(const std::vector<IntVec>& cols) {
    const int n = static_cast<int>(cols.front().size());
    const int j = static_cast<int>(cols.size());
    std::vector<int> sel(j);
    std::iota(sel.begin(), sel.end(), 0);
    cpp_int g = 0;
    while (true) {
        std::vector<std::vector<cpp_int>> a(j, std::vector<cpp_int>(j));
        for (int r = 0; r < j; ++r)
            for (int c = 0; c < j; ++c) a[r][c] = cols[c][sel[r]];
        cpp_int d = det_big(a);
        g = boost::multiprecision::gcd(g, boost::multiprecision::abs(d));
        if (g == 1) return 1;
        int p = j - 1;
        while (p >= 0 && sel[p] == n - j + p) --p;
        if (p < 0) break;
        ++sel[p];
        for (int q = p + 1; q < j; ++q) sel[q] = sel[q - 1] + 1;
    }
    return static_cast<long long>(g);
}

// Unimodular U (row operations) with U v = e_first on rows first..n-1.
void reduce_to_unit(IntVec v, int first, std::vector<std::vector<cpp_int>>& U) {
    const int n = static_cast<int>(v.size());
    std::vector<cpp_int> w(v.begin(), v.end());
    for (int i = n - 1; i > first; --i) {
        if (w[i] == 0) continue;
        // Extended gcd on (w_first, w_i).
        cpp_int a0 = w[first], b0 = w[i];
        cpp_int old_r = a0, r = b0, old_s = 1, s = 0, old_t = 0, t = 1;
        while (r != 0) {
            cpp_int q = old_r / r;
            cpp_int tmp = old_r - q * r;
            old_r = r;
            r = tmp;
            tmp = old_s - q * s;
            old_s = s;
            s = tmp;
            tmp = old_t - q * t;
            old_t = t;
            t = tmp;
        }
        cpp_int g = old_r;
        if (g < 0) {
            g = -g;
            old_s = -old_s;
            old_t = -old_t;
        }
        // Rows (first, i) <- [[s, t], [-b/g, a/g]] rows.
        const cpp_int p = -b0 / g, q = a0 / g;
        for (int c = 0; c < n; ++c) {
            cpp_int rf = old_s * U[first][c] + old_t * U[i][c];
            cpp_int ri = p * U[first][c] + q * U[i][c];
            U[first][c] = rf;
            U[i][c] = ri;
        }
        w[first] = g;
        w[i] = 0;
    }
    if (w[first] == -1) {
        for (int c = 0; c < n; ++c) U[first][c] = -U[first][c];
        w[first] = 1;
    }
    if (w[first] != 1) throw DomainError("unimodular_complete: input is not extendable");
}

IntMatrix constructive_frame(const IntVec& k, const std::optional<IntVec>& kp) {
    const int n = static_cast<int>(k.size());
    std::vector<std::vector<cpp_int>> U(n, std::vector<cpp_int>(n, 0));
    for (int i = 0; i < n; ++i) U[i][i] = 1;
    reduce_to_unit(k, 0, U);
    if (kp) {
        IntVec w(n, 0);
        std::vector<cpp_int> wb(n, 0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) wb[r] += U[r][c] * (*kp)[c];
        for (int r = 0; r < n; ++r) w[r] = checked_int(wb[r]);
        reduce_to_unit(w, 1, U);
    }
    IntMatrix Ui(n, IntVec(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) Ui[r][c] = checked_int(U[r][c]);
    IntMatrix I = unimodular_inverse(Ui);
    if (kp)
        for (int r = 0; r < n; ++r) I[r][1] = (*kp)[r];
    return I;
}

}  // namespace

long long integer_det(const IntMatrix& M) {
    if (M.empty()) return 1;
    for (const auto& r : M)
        if (r.size() != M.size()) throw DimensionError("integer_det: matrix must be square");
    return static_cast<long long>(det_big(to_big(M)));
}

IntMatrix unimodular_inverse(const IntMatrix& M) {
    const int n = static_cast<int>(M.size());
    auto a = to_big(M);
    cpp_int d = det_big(a);
    if (d != 1 && d != -1) throw DomainError("matrix is not unimodular");
    IntMatrix inv(n, IntVec(n));
    if (n == 1) {
        inv[0][0] = checked_int(d);
        return inv;
    }
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            std::vector<std::vector<cpp_int>> minor;
            for (int i = 0; i < n; ++i) {
                if (i == c) continue;
                std::vector<cpp_int> row;
                for (int j = 0; j < n; ++j)
                    if (j != r) row.push_back(a[i][j]);
                minor.push_back(row);
            }
            cpp_int cof = det_big(minor) * (((r + c) % 2) ? -1 : 1);
            inv[r][c] = checked_int(cof * d);
        }
    return inv;
}

IntMatrix int_multiply(const IntMatrix& A, const IntMatrix& B) {
    const std::size_t n = A.size(), m = B.front().size(), l = B.size();
    IntMatrix C(n, IntVec(m, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            long long s = 0;
            for (std::size_t q = 0; q < l; ++q) s += static_cast<long long>(A[i][q]) * B[q][j];
            C[i][j] = static_cast<int>(s);
        }
    return C;
}

IntMatrix int_transpose(const IntMatrix& A) {
    IntMatrix T(A.front().size(), IntVec(A.size()));
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < A[i].size(); ++j) T[j][i] = A[i][j];
    return T;
}

int gcd_of(const IntVec& v) {
    int g = 0;
    for (int a : v) g = std::gcd(g, std::abs(a));
    return g;
}

IntVec ResonanceFrame::column(int j) const {
    IntVec c(I.size());
    for (std::size_t r = 0; r < I.size(); ++r) c[r] = I[r][j];
    return c;
}

ResonanceFrame unimodular_complete(const IntVec& k, const std::optional<IntVec>& k_prime, int search_bound) {
    const int n = static_cast<int>(k.size());
    if (n == 0 || n > 8) throw DimensionError("unimodular_complete: unsupported dimension");
    if (gcd_of(k) != 1) throw DomainError("unimodular_complete: k is divisible");
    std::vector<IntVec> cols{k};
    if (k_prime) {
        if (static_cast<int>(k_prime->size()) != n) throw DimensionError("unimodular_complete: size mismatch");
        if (n < 2) throw DimensionError("unimodular_complete: second vector needs n >= 2");
        cols.push_back(*k_prime);
        if (minor_gcd(cols) != 1) throw DomainError("unimodular_complete: (k, k') is not extendable");
    }

    // Bounded search, sup norm first, then l1 norm, then lexicographically largest.
    std::vector<IntVec> cand;
    if (search_bound > 0 && std::pow(2.0 * search_bound + 1, n) <= 2e5) {
        IntVec v(n, -search_bound);
        while (true) {
            if (norm_inf(v) > 0) cand.push_back(v);
            int p = n - 1;
            while (p >= 0 && v[p] == search_bound) v[p--] = -search_bound;
            if (p < 0) break;
            ++v[p];
        }
        std::sort(cand.begin(), cand.end(), [](const IntVec& a, const IntVec& b) {
            int na = norm_inf(a), nb = norm_inf(b);
            if (na != nb) return na < nb;
            int la = 0, lb = 0;
            for (int x : a) la += std::abs(x);
            for (int x : b) lb += std::abs(x);
            if (la != lb) return la < lb;
            return a > b;
        });
    }
    bool ok = true;
    while (static_cast<int>(cols.size()) < n && ok) {
        ok = false;
        for (const auto& c : cand) {
            cols.push_back(c);
            if (minor_gcd(cols) == 1) {
                ok = true;
                break;
            }
            cols.pop_back();
        }
    }
    ResonanceFrame F;
    F.k = k;
    F.k_prime = k_prime;
    F.I = ok ? from_columns(cols) : constructive_frame(k, k_prime);
    F.I_inv = unimodular_inverse(F.I);
    F.det = static_cast<int>(integer_det(F.I));
    return F;
}

// ---------------------------------------------------------------------------

bool is_resonant(const IntVec& k, const RationalVec& omega) {
    if (k.size() != omega.size()) throw DimensionError("is_resonant: size mismatch");
    // Exact test on the common denominator; boost::rational arithmetic is avoided
    // because its binary gcd miscompiles with a zero operand on this toolchain.
    const long long T = period_of(omega);
    __int128 s = 0;
    for (std::size_t j = 0; j < k.size(); ++j)
        s += static_cast<__int128>(k[j]) * omega[j].numerator() * (T / omega[j].denominator());
    return s == 0;
}

model::FourierTaylorSeries resonant_project(const model::FourierTaylorSeries& P, const RationalVec& omega) {
    if (static_cast<int>(omega.size()) != P.dim()) throw DimensionError("resonant_project: size mismatch");
    return P.filtered([&](const IntVec& k, const IntVec&) { return is_resonant(k, omega); });
}

// ---------------------------------------------------------------------------

ActionFunction ActionFunction::from_series(const model::FourierTaylorSeries& h) {
    for (const auto& t : h.terms())
        for (int a : t.k)
            if (a != 0) throw DomainError("integrable part must not depend on angles");
    ActionFunction f;
    f.n = h.dim();
    const int n = f.n;
    f.value = [h, n](const Vec& y) { return h.eval(Vec::Zero(n), y); };
    f.grad = [h, n](const Vec& y) { return Vec(h.jet(Vec::Zero(n), y, 1).grad.tail(n)); };
    f.hess = [h, n](const Vec& y) { return Mat(h.jet(Vec::Zero(n), y, 2).hess.bottomRightCorner(n, n)); };
    return f;
}

ActionFunction ActionFunction::quadratic(const Mat& A) {
    ActionFunction f;
    f.n = static_cast<int>(A.rows());
    f.value = [A](const Vec& y) { return 0.5 * y.dot(A * y); };
    f.grad = [A](const Vec& y) { return Vec(A * y); };
    f.hess = [A](const Vec&) { return A; };
    return f;
}

namespace {

Vec kvec(const IntVec& k) {
    Vec v(static_cast<int>(k.size()));
    for (std::size_t j = 0; j < k.size(); ++j) v[static_cast<int>(j)] = k[j];
    return v;
}

bool parallel(const IntVec& a, const IntVec& b) {
    Vec u = kvec(a), v = kvec(b);
    return std::abs(std::abs(u.dot(v)) - u.norm() * v.norm()) < 1e-12 * u.norm() * v.norm();
}

Vec constraint(const ActionFunction& h, double E, const std::vector<IntVec>& ks, const Vec& y) {
    Vec r(1 + static_cast<int>(ks.size()));
    Vec g = h.grad(y);
    r[0] = h.value(y) - E;
    for (std::size_t j = 0; j < ks.size(); ++j) r[1 + static_cast<int>(j)] = kvec(ks[j]).dot(g);
    return r;
}

Mat constraint_jac(const ActionFunction& h, const std::vector<IntVec>& ks, const Vec& y) {
    Mat J(1 + static_cast<int>(ks.size()), h.n);
    J.row(0) = h.grad(y).transpose();
    Mat Hs = h.hess(y);
    for (std::size_t j = 0; j < ks.size(); ++j) J.row(1 + static_cast<int>(j)) = (Hs * kvec(ks[j])).transpose();
    return J;
}

// Unit tangent of the resonance curve {h = E, <k, grad h> = 0} in R^3.
Vec curve_tangent(const ActionFunction& h, const IntVec& k, const Vec& y) {
    Mat J = constraint_jac(h, {k}, y);
    Eigen::Vector3d a = J.row(0).transpose(), b = J.row(1).transpose();
    Vec t = a.cross(b);
    double nt = t.norm();
    if (nt < 1e-14) throw DomainError("resonant curve is singular here");
    return t / nt;
}

// Arc from A to B along the curve, or empty when B is not reached.
std::vector<Vec> trace_arc(const ActionFunction& h, double E, const IntVec& k, const Vec& A, const Vec& B,
                           double step, double sign) {
    std::vector<Vec> arc{A};
    Vec y = A;
    Vec tprev = sign * curve_tangent(h, k, A);
    const int max_steps = static_cast<int>(40.0 / step) + 100;
    for (int s = 0; s < max_steps; ++s) {
        if ((y - B).norm() <= step * 1.01) {
            arc.push_back(B);
            return arc;
        }
        Vec t = curve_tangent(h, k, y);
        if (t.dot(tprev) < 0) t = -t;
        Vec yn = project_to_resonance(h, E, {k}, y + step * t);
        tprev = t;
        y = yn;
        arc.push_back(y);
    }
    return {};
}

}  // namespace

Vec project_to_resonance(const ActionFunction& h, double E, const std::vector<IntVec>& ks, const Vec& y0, double tol) {
    Vec y = y0;
    for (int it = 0; it < 60; ++it) {
        Vec r = constraint(h, E, ks, y);
        if (r.lpNorm<Eigen::Infinity>() <= tol) return y;
        Mat J = constraint_jac(h, ks, y);
        Vec dy = J.completeOrthogonalDecomposition().solve(-r);
        y += dy;
        if (dy.norm() < 1e-16 * std::max(1.0, y.norm())) break;
    }
    Vec r = constraint(h, E, ks, y);
    if (r.lpNorm<Eigen::Infinity>() > 1e-10)
        throw NoConvergence("project_to_resonance: Newton failed", r.lpNorm<Eigen::Infinity>());
    return y;
}

std::pair<IntVec, double> nearest_resonance(const Vec& omega, int K) {
    const int n = static_cast<int>(omega.size());
    IntVec v(n, -K), best;
    double bd = std::numeric_limits<double>::infinity(), bn = 0;
    while (true) {
        if (norm_inf(v) > 0 && gcd_of(v) == 1) {
            int first = 0;
            while (v[first] == 0) ++first;
            if (v[first] > 0) {
                Vec kv = kvec(v);
                double d = std::abs(kv.dot(omega)) / kv.norm();
                if (d < bd - 1e-15 || (std::abs(d - bd) <= 1e-15 && kv.norm() < bn)) {
                    bd = d;
                    bn = kv.norm();
                    best = v;
                }
            }
        }
        int p = n - 1;
        while (p >= 0 && v[p] == K) v[p--] = -K;
        if (p < 0) break;
        ++v[p];
    }
    return {best, bd};
}

namespace {

// Smallest |k| with frequency distance <= delta, or empty.
std::optional<IntVec> resonance_within(const Vec& omega, int K, double delta) {
    const int n = static_cast<int>(omega.size());
    IntVec v(n, -K);
    std::optional<IntVec> best;
    double bn = std::numeric_limits<double>::infinity(), bd = 0;
    while (true) {
        if (norm_inf(v) > 0 && gcd_of(v) == 1) {
            int first = 0;
            while (v[first] == 0) ++first;
            if (v[first] > 0) {
                Vec kv = kvec(v);
                double d = std::abs(kv.dot(omega)) / kv.norm();
                if (d <= delta && (kv.norm() < bn - 1e-12 || (std::abs(kv.norm() - bn) <= 1e-12 && d < bd))) {
                    bn = kv.norm();
                    bd = d;
                    best = v;
                }
            }
        }
        int p = n - 1;
        while (p >= 0 && v[p] == K) v[p--] = -K;
        if (p < 0) break;
        ++v[p];
    }
    return best;
}

}  // namespace

ResonantPath build_resonant_path(const ActionFunction& h, double E, const std::vector<Vec>& waypoints, double delta,
                                 int K_max) {
    if (h.n != 3) throw DimensionError("build_resonant_path: resonance curves need three degrees of freedom");
    if (waypoints.empty()) throw DomainError("build_resonant_path: no waypoints");
    if (!(delta > 0)) throw DomainError("build_resonant_path: delta must be positive");
    for (const auto& w : waypoints)
        if (std::abs(h.value(w) - E) > 1e-8) throw DomainError("build_resonant_path: waypoint off the energy level");

    ResonantPath path;
    path.delta = delta;
    path.energy = E;
    std::vector<IntVec> ks;
    for (int K = 1; K <= K_max && ks.empty(); ++K) {
        std::vector<IntVec> trial;
        for (const auto& w : waypoints) {
            auto k = resonance_within(h.grad(w), K, delta);
            if (!k) break;
            trial.push_back(*k);
        }
        if (trial.size() == waypoints.size()) {
            ks = trial;
            path.K_delta = K;
        }
    }
    if (ks.empty())
        throw DomainError("build_resonant_path: waypoint unreachable with |k| <= " + std::to_string(K_max) +
                          "; increase K_max");

    std::vector<Vec> proj;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        proj.push_back(project_to_resonance(h, E, {ks[i]}, waypoints[i]));
        path.waypoint_distance.push_back((proj.back() - waypoints[i]).norm());
    }

    const double step = delta / (4.0 * std::max(1.0, h.hess(proj.front()).norm()));
    auto arc_between = [&](const IntVec& k, const Vec& A, const Vec& B) {
        auto fwd = trace_arc(h, E, k, A, B, step, 1.0);
        auto bwd = trace_arc(h, E, k, A, B, step, -1.0);
        if (fwd.empty() && bwd.empty()) throw DomainError("build_resonant_path: could not trace resonance arc");
        if (fwd.empty()) return bwd;
        if (bwd.empty()) return fwd;
        return fwd.size() <= bwd.size() ? fwd : bwd;
    };
    auto append = [&](const IntVec& k, std::vector<Vec> arc) {
        if (!path.segments.empty() && parallel(path.segments.back().k, k)) {
            auto& a = path.segments.back().arc;
            a.insert(a.end(), arc.begin() + 1, arc.end());
        } else {
            path.segments.push_back({k, std::move(arc)});
        }
    };

    if (waypoints.size() == 1) path.segments.push_back({ks[0], {proj[0]}});
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        if (parallel(ks[i], ks[i + 1])) {
            append(ks[i], arc_between(ks[i], proj[i], proj[i + 1]));
            continue;
        }
        Vec J = project_to_resonance(h, E, {ks[i], ks[i + 1]}, 0.5 * (proj[i] + proj[i + 1]));
        Junction jn;
        jn.k = ks[i];
        jn.k_prime = ks[i + 1];
        jn.y = J;
        jn.residual = constraint(h, E, {ks[i], ks[i + 1]}, J).lpNorm<Eigen::Infinity>();
        path.junctions.push_back(jn);
        append(ks[i], arc_between(ks[i], proj[i], J));
        append(ks[i + 1], arc_between(ks[i + 1], J, proj[i + 1]));
    }
    return path;
}

std::vector<Vec> path_points(const ResonantPath& path) {
    std::vector<Vec> pts;
    for (const auto& s : path.segments)
        for (const auto& p : s.arc)
            if (pts.empty() || (pts.back() - p).norm() > 1e-14) pts.push_back(p);
    return pts;
}

// ---------------------------------------------------------------------------

Classification classify_resonance(const model::FourierTaylorSeries& Z_k, const IntVec& k_prime, double P_norm, int r,
                                   const ClassifierConfig& cfg) {
    if (Z_k.dim() != 1) throw DimensionError("classify_resonance: Z_k must be a one-angle series");
    const Vec y0 = Z_k.base_point();
    auto value = [&](double x) { return Z_k.eval(Vec::Constant(1, x), y0); };
    const int N = 2048;
    double xb = 0, vb = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
        double x = kTwoPi * i / N, v = value(x);
        if (v > vb) {
            vb = v;
            xb = x;
        }
    }
    double x = xb;
    for (int it = 0; it < 50; ++it) {
        auto jt = Z_k.jet(Vec::Constant(1, x), y0, 2);
        double g = jt.grad[0], H = jt.hess(0, 0);
        if (H >= 0) break;
        double step = -g / H;
        x += step;
        if (std::abs(step) < 1e-15) break;
    }
    auto jt = Z_k.jet(Vec::Constant(1, x), y0, 2);
    Classification c;
    c.x_max = wrap_angle(x);
    c.lambda = -jt.hess(0, 0);
    if (!(c.lambda > cfg.min_curvature))
        throw DomainError("classify_resonance: degenerate maximum of Z_k (curvature " + std::to_string(c.lambda) + ")");
    const double d1 = cfg.d1 ? *cfg.d1 : c.lambda / 4.0;
    const double lhs = std::pow(kvec(k_prime).norm(), r - 2);
    const double rhs = cfg.d / d1 * P_norm;
    c.margin = lhs / rhs;
    c.weak = c.margin > 1.0;
    return c;
}

// ---------------------------------------------------------------------------

Cover cover_path(const ResonantPath& path, const ActionFunction& h, double epsilon, double sigma, double K, double m) {
    if (!(sigma < 1.0 / 6.0)) throw DomainError("cover_path: sigma must be below 1/6");
    if (!(epsilon > 0) || !(K > 0)) throw DomainError("cover_path: epsilon and K must be positive");
    const double r = K * std::sqrt(epsilon);
    Cover cov;
    cov.separation = r;
    auto raw = path_points(path);
    if (raw.empty()) return cov;

    // Densify so consecutive samples are at most r/50 apart.
    std::vector<Vec> pts{raw.front()};
    for (std::size_t i = 1; i < raw.size(); ++i) {
        double L = (raw[i] - raw[i - 1]).norm();
        int sub = std::max(1, static_cast<int>(std::ceil(L / (r / 50))));
        for (int s = 1; s <= sub; ++s) pts.push_back(raw[i - 1] + (raw[i] - raw[i - 1]) * (double(s) / sub));
    }

    std::vector<Vec> centers{pts.front()};
    std::size_t ci = 0;
    while (true) {
        const Vec& c = centers.back();
        std::size_t best = ci;
        for (std::size_t j = ci + 1; j < pts.size(); ++j) {
            if ((pts[j] - c).norm() > 2.0 * r) break;
            bool ok = true;
            for (std::size_t q = ci; q <= j && ok; ++q)
                ok = std::min((pts[q] - c).norm(), (pts[q] - pts[j]).norm()) <= r;
            if (ok) best = j;
        }
        if (best == ci) {
            if (ci + 1 >= pts.size()) break;
            best = ci + 1;
        }
        bool covered_rest = true;
        for (std::size_t q = ci; q < pts.size() && covered_rest; ++q) covered_rest = (pts[q] - c).norm() <= r;
        if (covered_rest) break;
        centers.push_back(pts[best]);
        ci = best;
        if (ci + 1 >= pts.size()) break;
    }

    cov.covers_path = true;
    for (const auto& p : pts) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) dmin = std::min(dmin, (p - c).norm());
        if (dmin > r * (1 + 1e-12)) cov.covers_path = false;
    }
    cov.min_pair_distance = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < centers.size(); ++a)
        for (std::size_t b = a + 1; b < centers.size(); ++b)
            cov.min_pair_distance = std::min(cov.min_pair_distance, (centers[a] - centers[b]).norm());

    const int n = h.n;
    const double Kdir = std::min(1e6, std::pow(std::sqrt(double(n)) / m * std::pow(epsilon, -sigma), n));
    for (const auto& c : centers) {
        CoverBall b;
        b.center = c;
        b.radius = 2.0 * r;
        b.omega = h.grad(c);
        if (Kdir > 1) {
            auto d = dirichlet_approx(b.omega, Kdir);
            b.period = d.k;
            b.approx_err = d.err;
        }
        cov.balls.push_back(b);
    }
    return cov;
}

// ---------------------------------------------------------------------------

namespace {
nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
}  // namespace

nlohmann::json to_json(const RationalVec& r) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& q : r) j.push_back({{"num", q.numerator()}, {"den", q.denominator()}});
    return j;
}

nlohmann::json to_json(const ResonantPath& p) {
    nlohmann::json j;
    j["delta"] = p.delta;
    j["K_delta"] = p.K_delta;
    j["energy"] = p.energy;
    j["segments"] = nlohmann::json::array();
    for (const auto& s : p.segments) {
        nlohmann::json arc = nlohmann::json::array();
        for (const auto& y : s.arc) arc.push_back(vec_json(y));
        j["segments"].push_back({{"k", s.k}, {"arc", arc}});
    }
    j["junctions"] = nlohmann::json::array();
    for (const auto& jn : p.junctions)
        j["junctions"].push_back({{"k", jn.k}, {"k_prime", jn.k_prime}, {"y", vec_json(jn.y)}, {"residual", jn.residual}});
    j["waypoint_distance"] = p.waypoint_distance;
    return j;
}

nlohmann::json to_json(const Cover& c) {
    nlohmann::json j;
    j["separation"] = c.separation;
    j["min_pair_distance"] = c.min_pair_distance;
    j["covers_path"] = c.covers_path;
    j["balls"] = nlohmann::json::array();
    for (const auto& b : c.balls)
        j["balls"].push_back({{"center", vec_json(b.center)},
                              {"radius", b.radius},
                              {"omega", vec_json(b.omega)},
                              {"period", b.period},
                              {"approx_err", b.approx_err}});
    return j;
}

}  // namespace matherlab::resonance
