#include "matherlab/mather/mather.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <numeric>

namespace matherlab::mather {

FixedPointSpectrum fixed_point_spectrum(const Mat& A, const Mat& C, double distinct_tol) {
    if (A.rows() != A.cols() || C.rows() != C.cols() || A.rows() != C.rows())
        throw DimensionError("fixed_point_spectrum: square matrices of equal size expected");
    Eigen::LLT<Mat> la(A), lc(C);
    if (la.info() != Eigen::Success) throw DomainError("fixed_point_spectrum: kinetic matrix is not positive definite");
    if (lc.info() != Eigen::Success) throw DomainError("fixed_point_spectrum: the point is not a nondegenerate maximum");
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(C, A);
    FixedPointSpectrum out;
    out.lambda = es.eigenvalues().cwiseSqrt();
    out.gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i < out.lambda.size(); ++i) out.gap = std::min(out.gap, out.lambda[i] - out.lambda[i - 1]);
    out.distinct = out.gap >= distinct_tol;
    return out;
}

namespace {

using Sparse = Eigen::SparseMatrix<double>;

// Maximum of V by sampling and Newton on the gradient.
Vec potential_maximum(const model::MechanicalHamiltonian& H) {
    const int n = H.dof();
    const int per = n == 1 ? 1024 : 128;
    int total = 1;
    for (int d = 0; d < n; ++d) total *= per;
    Vec best(n), x(n);
    double vb = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < total; ++k) {
        int r = k;
        for (int d = n - 1; d >= 0; --d) {
            x[d] = kTwoPi * (r % per) / per;
            r /= per;
        }
        double v = H.potential(x);
        if (v > vb) {
            vb = v;
            best = x;
        }
    }
    for (int it = 0; it < 50; ++it) {
        Vec g = H.potential_gradient(best);
        if (g.norm() < 1e-14) break;
        Mat Hs = H.potential_hessian(best);
        Vec step = Hs.ldlt().solve(-g);
        if (!step.allFinite() || step.norm() > 0.1) step = 0.01 * g;
        best += step;
    }
    for (int d = 0; d < n; ++d) best[d] = wrap_angle(best[d]);
    return best;
}

// Jacobi length of the shortest curve from x* to x* + 2πg: the square root
// of the minimal discrete energy sum W_k |dx_k|^2_G / ds with G = A^{-1} and
// W_k the three-point Gauss average of w = 2 (E - V) over segment k.
double jacobi_action(const model::MechanicalHamiltonian& H, const Vec& xs, double E, const IntVec& g, int N) {
    static constexpr double xi[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    static constexpr double wq[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
    const int n = H.dof();
    const Mat G = H.A().inverse();
    const double ds = 1.0 / N;
    Vec shift(n);
    for (int d = 0; d < n; ++d) shift[d] = kTwoPi * g[d];
    const int free = (N - 1) * n;
    Vec X(free);
    for (int k = 1; k < N; ++k) X.segment(n * (k - 1), n) = xs + shift * (static_cast<double>(k) / N);
    auto node = [&](const Vec& Y, int k) -> Vec {
        if (k == 0) return xs;
        if (k == N) return xs + shift;
        return Y.segment(n * (k - 1), n);
    };
    auto energy = [&](const Vec& Y) {
        double s = 0;
        for (int k = 0; k < N; ++k) {
            Vec a = node(Y, k), b = node(Y, k + 1), d = b - a;
            double W = 0;
            for (int q = 0; q < 3; ++q) W += wq[q] * 2 * (E - H.potential((1 - xi[q]) * a + xi[q] * b));
            s += W * d.dot(G * d) / ds;
        }
        return s;
    };
    auto assemble = [&](const Vec& Y, Vec& grad, Sparse& Hs) {
        grad = Vec::Zero(free);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(N) * 4 * n * n);
        for (int k = 0; k < N; ++k) {
            Vec a = node(Y, k), b = node(Y, k + 1), d = b - a;
            double W = 0;
            Vec Wa = Vec::Zero(n), Wb = Vec::Zero(n);
            Mat Waa = Mat::Zero(n, n), Wab = Mat::Zero(n, n), Wbb = Mat::Zero(n, n);
            for (int q = 0; q < 3; ++q) {
                Vec x = (1 - xi[q]) * a + xi[q] * b;
                W += wq[q] * 2 * (E - H.potential(x));
                Vec gw = -2 * wq[q] * H.potential_gradient(x);
                Mat hw = -2 * wq[q] * H.potential_hessian(x);
                Wa += (1 - xi[q]) * gw;
                Wb += xi[q] * gw;
                Waa += (1 - xi[q]) * (1 - xi[q]) * hw;
                Wab += xi[q] * (1 - xi[q]) * hw;
                Wbb += xi[q] * xi[q] * hw;
            }
            Vec Gd = G * d;
            double Q = d.dot(Gd) / ds;
            Vec Qb = 2 * Gd / ds, Qa = -Qb;
            Mat Qbb = 2 * G / ds;
            Vec ga = Wa * Q + W * Qa, gb = Wb * Q + W * Qb;
            Mat Haa = Waa * Q + Wa * Qa.transpose() + Qa * Wa.transpose() + W * Qbb;
            Mat Hbb = Wbb * Q + Wb * Qb.transpose() + Qb * Wb.transpose() + W * Qbb;
            Mat Hab = Wab * Q + Wa * Qb.transpose() + Qa * Wb.transpose() - W * Qbb;
            const int ia = k - 1, ib = k;  // free-variable block indices
            const bool fa = k > 0, fb = k + 1 < N;
            if (fa) grad.segment(n * ia, n) += ga;
            if (fb) grad.segment(n * ib, n) += gb;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    if (fa) trip.emplace_back(n * ia + r, n * ia + c, Haa(r, c));
                    if (fb) trip.emplace_back(n * ib + r, n * ib + c, Hbb(r, c));
                    if (fa && fb) {
                        trip.emplace_back(n * ia + r, n * ib + c, Hab(r, c));
                        trip.emplace_back(n * ib + c, n * ia + r, Hab(r, c));
                    }
                }
        }
        Hs.resize(free, free);
        Hs.setFromTriplets(trip.begin(), trip.end());
    };
    double f = energy(X), mu = 1e-8;
    Sparse Hs, I(free, free);
    I.setIdentity();
    Vec grad;
    for (int it = 0; it < 300; ++it) {
        assemble(X, grad, Hs);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-11 * std::max(1.0, f)) break;
        bool moved = false;
        for (int tries = 0; tries < 40 && !moved; ++tries) {
            Sparse M = Hs + mu * I;
            Eigen::SimplicialLDLT<Sparse> ldlt(M);
            if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any()) {
                mu = std::max(mu * 10, 1e-8);
                continue;
            }
            Vec step = ldlt.solve(-grad);
            Vec Xn = X + step;
            double fn = energy(Xn);
            if (fn <= f) {
                X = Xn;
                f = fn;
                mu = std::max(mu / 10, 1e-12);
                moved = true;
            } else {
                mu = std::max(mu * 10, 1e-8);
            }
        }
        if (!moved) break;
    }
    return std::sqrt(std::max(0.0, f));
}

struct HalfPlane {
    Vec n;  // c . n <= r
    double r;
    int label;
};

// Sutherland-Hodgman clip of a convex polygon; label[i] tags edge i -> i+1.
void clip(std::vector<Vec>& poly, std::vector<int>& label, const HalfPlane& h) {
    std::vector<Vec> out;
    std::vector<int> lab;
    const size_t m = poly.size();
    for (size_t i = 0; i < m; ++i) {
        const Vec& P = poly[i];
        const Vec& Q = poly[(i + 1) % m];
        double dp = P.dot(h.n) - h.r, dq = Q.dot(h.n) - h.r;
        if (dp <= 0) {
            out.push_back(P);
            if (dq <= 0) {
                lab.push_back(label[i]);
            } else {
                lab.push_back(label[i]);
                out.push_back(P + (Q - P) * (dp / (dp - dq)));
                lab.push_back(h.label);
            }
        } else if (dq <= 0) {
            out.push_back(P + (Q - P) * (dp / (dp - dq)));
            lab.push_back(label[i]);
        }
    }
    poly.swap(out);
    label.swap(lab);
}

}  // namespace

FlatPolygon flat_polygon(const std::shared_ptr<const model::MechanicalHamiltonian>& H, const FlatOptions& opt) {
    if (!H) throw DomainError("flat_polygon: null Hamiltonian");
    const int n = H->dof();
    if (n != 1 && n != 2) throw DimensionError("flat_polygon: one or two degrees of freedom expected");
    if (H->b().size() && H->b().norm() > 0) throw DomainError("flat_polygon: linear momentum term not supported");
    FlatPolygon out;
    out.dim = n;
    out.fixed_point = potential_maximum(*H);
    out.alpha0 = H->potential(out.fixed_point);
    out.spectrum = fixed_point_spectrum(H->A().inverse(), -H->potential_hessian(out.fixed_point));

    if (n == 1) {
        weakkam::ActionKernel K(action::ReducedSystem{H, 0.0}, opt.kernel);
        for (int g : {-1, 1}) {
            auto h = weakkam::homology_constrained_action(K, g, out.fixed_point[0], opt.horizons, 0.0, out.alpha0);
            out.actions.push_back({IntVec{g}, h.estimate, false});
        }
        out.half_width_minus = out.actions[0].A / kTwoPi;
        out.half_width_plus = out.actions[1].A / kTwoPi;
        out.vertices = {Vec::Constant(1, -out.half_width_minus), Vec::Constant(1, out.half_width_plus)};
        return out;
    }

    std::vector<IntVec> classes;
    for (int a = -opt.g_max; a <= opt.g_max; ++a)
        for (int b = -opt.g_max; b <= opt.g_max; ++b)
            if (std::gcd(std::abs(a), std::abs(b)) == 1) classes.push_back({a, b});
    std::vector<double> A(classes.size());
    parallel_for(static_cast<int>(classes.size()),
                 [&](int i) { A[i] = jacobi_action(*H, out.fixed_point, out.alpha0, classes[i], opt.nodes); });
    std::vector<bool> concat(classes.size(), false);
    auto index_of = [&](int a, int b) -> int {
        for (size_t i = 0; i < classes.size(); ++i)
            if (classes[i][0] == a && classes[i][1] == b) return static_cast<int>(i);
        return -1;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (size_t i = 0; i < classes.size(); ++i)
            for (size_t j = 0; j < classes.size(); ++j) {
                int k = index_of(classes[i][0] + classes[j][0], classes[i][1] + classes[j][1]);
                if (k < 0) continue;
                double s = A[i] + A[j];
                if (s < A[k] * (1 - 1e-12)) {
                    A[k] = s;
                    concat[k] = true;
                    changed = true;
                }
            }
    }
    for (size_t i = 0; i < classes.size(); ++i) out.actions.push_back({classes[i], A[i], concat[i]});

    double big = 10;
    for (double a : A) big = std::max(big, 10 * a);
    std::vector<Vec> poly = {Vec(2), Vec(2), Vec(2), Vec(2)};
    poly[0] << -big, -big;
    poly[1] << big, -big;
    poly[2] << big, big;
    poly[3] << -big, big;
    std::vector<int> label(4, -1);
    for (size_t i = 0; i < classes.size(); ++i) {
        Vec nrm(2);
        nrm << classes[i][0], classes[i][1];
        clip(poly, label, {kTwoPi * nrm, A[i], static_cast<int>(i)});
    }
    // Merge vertices joined by edges shorter than edge_tol.
    for (bool changed = true; changed && poly.size() > 3;) {
        changed = false;
        for (size_t i = 0; i < poly.size(); ++i) {
            size_t j = (i + 1) % poly.size();
            if ((poly[j] - poly[i]).norm() < opt.edge_tol) {
                poly.erase(poly.begin() + static_cast<long>(j));
                label.erase(label.begin() + static_cast<long>(i));
                changed = true;
                break;
            }
        }
    }
    out.vertices = poly;
    const int m = static_cast<int>(poly.size());
    for (int i = 0; i < m; ++i) {
        FlatEdge e;
        e.g = label[i] >= 0 ? classes[label[i]] : IntVec{0, 0};
        e.from = poly[i];
        e.to = poly[(i + 1) % m];
        e.length = (e.to - e.from).norm();
        out.edges.push_back(e);
        out.vertex_edges.push_back({(i + m - 1) % m, i});
    }
    return out;
}

nlohmann::json to_json(const FlatPolygon& f) {
    nlohmann::json j;
    j["dim"] = f.dim;
    j["fixed_point"] = std::vector<double>(f.fixed_point.data(), f.fixed_point.data() + f.fixed_point.size());
    j["alpha0"] = f.alpha0;
    j["lambda"] = std::vector<double>(f.spectrum.lambda.data(), f.spectrum.lambda.data() + f.spectrum.lambda.size());
    j["lambda_distinct"] = f.spectrum.distinct;
    for (const auto& a : f.actions) j["actions"].push_back({{"g", a.g}, {"A", a.A}, {"concatenated", a.concatenated}});
    for (const auto& v : f.vertices) j["vertices"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
    for (size_t i = 0; i < f.edges.size(); ++i) {
        const auto& e = f.edges[i];
        j["edges"].push_back({{"g", e.g}, {"length", e.length}});
    }
    for (const auto& ve : f.vertex_edges) j["vertex_edges"].push_back({ve[0], ve[1]});
    if (f.dim == 1) {
        j["half_width_minus"] = f.half_width_minus;
        j["half_width_plus"] = f.half_width_plus;
    }
    return j;
}

}  // namespace matherlab::mather
