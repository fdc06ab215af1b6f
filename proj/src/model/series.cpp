#include "matherlab/model/series.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>

namespace matherlab {

namespace {
bool g_warnings = true;
std::mutex g_sink_mu;
std::function<void(const std::string&)> g_sink;
}  // namespace

void warn(const std::string& msg) {
    {
        std::lock_guard lk(g_sink_mu);
        if (g_sink) g_sink(msg);
    }
    if (g_warnings) std::cerr << "matherlab: warning: " << msg << '\n';
}

void set_warnings_enabled(bool on) { g_warnings = on; }

void set_warning_sink(std::function<void(const std::string&)> sink) {
    std::lock_guard lk(g_sink_mu);
    g_sink = std::move(sink);
}

}  // namespace matherlab

namespace matherlab::model {

namespace {

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return std::round(r);
}

double falling(int n, int k) {
    double r = 1.0;
    for (int j = 0; j < k; ++j) r *= (n - j);
    return r;
}

int norm_inf(const IntVec& k) {
    int m = 0;
    for (int v : k) m = std::max(m, std::abs(v));
    return m;
}

int degree(const IntVec& i) {
    int s = 0;
    for (int v : i) s += v;
    return s;
}

IntVec negated(const IntVec& k) {
    IntVec r(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) r[j] = -k[j];
    return r;
}

// Polynomial in p: multi-index -> coefficient.
using Poly = std::map<IntVec, double>;

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ia, ca] : a)
        for (const auto& [ib, cb] : b) {
            IntVec s(ia.size());
            for (std::size_t j = 0; j < ia.size(); ++j) s[j] = ia[j] + ib[j];
            r[s] += ca * cb;
        }
    return r;
}

}  // namespace

FourierTaylorSeries::FourierTaylorSeries(int n, Vec base_point, int cutoff_K, int cutoff_d)
    : n_(n), base_(std::move(base_point)), K_(cutoff_K), d_(cutoff_d) {
    if (n < 1 || n > kMaxDim) throw DimensionError("series dimension must be in [1, 4]");
    if (base_.size() != n) throw DimensionError("base point dimension mismatch");
    if (K_ < 0 || K_ > 127 || d_ < 0 || d_ > 255) throw DomainError("series cutoffs out of range");
}

FourierTaylorSeries FourierTaylorSeries::zero_like(const FourierTaylorSeries& s) {
    FourierTaylorSeries r(s.n_, s.base_, s.K_, s.d_);
    r.validity_radius_ = s.validity_radius_;
    return r;
}

FourierTaylorSeries FourierTaylorSeries::constant(int n, const Vec& base, double c, int K, int d) {
    FourierTaylorSeries s(n, base, K, d);
    if (c != 0.0) s.add(IntVec(n, 0), IntVec(n, 0), c);
    return s;
}

FourierTaylorSeries::Key FourierTaylorSeries::pack(const IntVec& k, const IntVec& i) {
    Key key = 0;
    for (std::size_t j = 0; j < k.size(); ++j) {
        key |= static_cast<Key>(static_cast<std::uint8_t>(k[j] + 128)) << (8 * j);
        key |= static_cast<Key>(static_cast<std::uint8_t>(i[j])) << (32 + 8 * j);
    }
    return key;
}

void FourierTaylorSeries::unpack(Key key, IntVec& k, IntVec& i) const {
    k.assign(n_, 0);
    i.assign(n_, 0);
    for (int j = 0; j < n_; ++j) {
        k[j] = static_cast<int>((key >> (8 * j)) & 0xFF) - 128;
        i[j] = static_cast<int>((key >> (32 + 8 * j)) & 0xFF);
    }
}

bool FourierTaylorSeries::admissible(const IntVec& k, const IntVec& i) const {
    return norm_inf(k) <= K_ && degree(i) <= d_;
}

void FourierTaylorSeries::accumulate(Key key, Complex c) {
    auto [it, inserted] = coeffs_.try_emplace(key, c);
    if (!inserted) it->second += c;
}

void FourierTaylorSeries::add(const IntVec& k, const IntVec& i, Complex c) {
    if (static_cast<int>(k.size()) != n_ || static_cast<int>(i.size()) != n_)
        throw DimensionError("term dimension mismatch");
    for (int v : i)
        if (v < 0) throw MalformedSeries("negative Taylor exponent");
    if (!admissible(k, i)) return;
    accumulate(pack(k, i), c);
}

void FourierTaylorSeries::add_real_mode(const IntVec& k, const IntVec& i, double a, double b) {
    // a cos + b sin = (a - i b)/2 e^{ikx} + (a + i b)/2 e^{-ikx}
    bool zero = std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
    if (zero) {
        add(k, i, Complex(a, 0.0));
        return;
    }
    add(k, i, Complex(0.5 * a, -0.5 * b));
    add(negated(k), i, Complex(0.5 * a, 0.5 * b));
}

Complex FourierTaylorSeries::coeff(const IntVec& k, const IntVec& i) const {
    auto it = coeffs_.find(pack(k, i));
    return it == coeffs_.end() ? Complex(0, 0) : it->second;
}

std::vector<FourierTaylorSeries::Term> FourierTaylorSeries::terms() const {
    std::vector<Term> out;
    out.reserve(coeffs_.size());
    for (const auto& [key, c] : coeffs_) {
        Term t;
        unpack(key, t.k, t.i);
        t.c = c;
        out.push_back(std::move(t));
    }
    return out;
}

double FourierTaylorSeries::reality_defect() const {
    double worst = 0.0;
    for (const auto& [key, c] : coeffs_) {
        IntVec k, i;
        unpack(key, k, i);
        Complex partner = coeff(negated(k), i);
        worst = std::max(worst, std::abs(c - std::conj(partner)));
    }
    return worst;
}

void FourierTaylorSeries::check_reality(double tol) const {
    double scale = 1.0;
    for (const auto& [key, c] : coeffs_) scale = std::max(scale, std::abs(c));
    if (reality_defect() > tol * scale) throw MalformedSeries("series violates Hermitian symmetry");
}

void FourierTaylorSeries::hermitize() {
    std::map<Key, Complex> out;
    for (const auto& [key, c] : coeffs_) {
        IntVec k, i;
        unpack(key, k, i);
        Key partner = pack(negated(k), i);
        auto it = coeffs_.find(partner);
        Complex p = it == coeffs_.end() ? Complex(0, 0) : it->second;
        Complex sym = 0.5 * (c + std::conj(p));
        if (sym != Complex(0, 0)) out[key] = sym;
        if (it == coeffs_.end() && std::conj(sym) != Complex(0, 0)) out[partner] = std::conj(sym);
    }
    coeffs_ = std::move(out);
}

FourierTaylorSeries::Jet FourierTaylorSeries::jet(const Vec& x, const Vec& y, int order) const {
    if (x.size() != n_ || y.size() != n_) throw DimensionError("evaluation point dimension mismatch");
    const int n = n_;
    Vec dy = y - base_;
    if (std::isfinite(validity_radius_) && dy.lpNorm<Eigen::Infinity>() > validity_radius_)
        warn("series evaluated outside its validity radius");

    // e^{i m x_j} for m in [-K, K]; powers of dy_j up to d.
    std::vector<std::vector<Complex>> ph(n, std::vector<Complex>(2 * K_ + 1));
    std::vector<std::vector<double>> pw(n, std::vector<double>(d_ + 1));
    for (int j = 0; j < n; ++j) {
        Complex e(std::cos(x[j]), std::sin(x[j]));
        ph[j][K_] = 1.0;
        for (int m = 1; m <= K_; ++m) {
            ph[j][K_ + m] = ph[j][K_ + m - 1] * e;
            ph[j][K_ - m] = std::conj(ph[j][K_ + m]);
        }
        pw[j][0] = 1.0;
        for (int p = 1; p <= d_; ++p) pw[j][p] = pw[j][p - 1] * dy[j];
    }
    auto power = [&](int j, int p) { return p < 0 ? 0.0 : pw[j][p]; };

    Complex val(0, 0);
    double mag = 0.0;
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(2 * n);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    IntVec k, i;
    const Complex I(0, 1);
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        Complex e = c;
        for (int j = 0; j < n; ++j) e *= ph[j][K_ + k[j]];
        double m = 1.0;
        for (int j = 0; j < n; ++j) m *= pw[j][i[j]];
        val += e * m;
        mag += std::abs(c) * std::abs(m);
        if (order < 1) continue;
        // first derivatives of the monomial
        double dm[kMaxDim];
        for (int j = 0; j < n; ++j) {
            if (i[j] == 0) {
                dm[j] = 0.0;
                continue;
            }
            double t = i[j] * power(j, i[j] - 1);
            for (int l = 0; l < n; ++l)
                if (l != j) t *= pw[l][i[l]];
            dm[j] = t;
        }
        for (int j = 0; j < n; ++j) {
            g[j] += I * double(k[j]) * e * m;
            g[n + j] += e * dm[j];
        }
        if (order < 2) continue;
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) {
                h(j, l) += -double(k[j] * k[l]) * e * m;
                h(j, n + l) += I * double(k[j]) * e * dm[l];
                // second derivative of the monomial
                double d2;
                if (j == l) {
                    d2 = i[j] < 2 ? 0.0 : i[j] * (i[j] - 1) * power(j, i[j] - 2);
                    if (d2 != 0.0)
                        for (int q = 0; q < n; ++q)
                            if (q != j) d2 *= pw[q][i[q]];
                } else {
                    d2 = (i[j] < 1 || i[l] < 1) ? 0.0 : i[j] * power(j, i[j] - 1) * i[l] * power(l, i[l] - 1);
                    if (d2 != 0.0)
                        for (int q = 0; q < n; ++q)
                            if (q != j && q != l) d2 *= pw[q][i[q]];
                }
                h(n + j, n + l) += e * d2;
            }
        }
    }
    if (std::abs(val.imag()) > 1e-12 * (1.0 + mag))
        throw MalformedSeries("series evaluation is not real");
    Jet out;
    out.value = val.real();
    if (order >= 1) out.grad = g.real();
    if (order >= 2) {
        Mat hr = h.real();
        hr.bottomLeftCorner(n, n) = hr.topRightCorner(n, n).transpose();
        out.hess = hr;
    }
    return out;
}

double FourierTaylorSeries::eval(const Vec& x, const Vec& y) const { return jet(x, y, 0).value; }

FourierTaylorSeries FourierTaylorSeries::dx(int j) const {
    FourierTaylorSeries r = zero_like(*this);
    IntVec k, i;
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        if (k[j] != 0) r.coeffs_.emplace(key, Complex(0, k[j]) * c);
    }
    return r;
}

FourierTaylorSeries FourierTaylorSeries::dy(int j) const {
    FourierTaylorSeries r = zero_like(*this);
    IntVec k, i;
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        if (i[j] == 0) continue;
        double f = i[j];
        --i[j];
        r.accumulate(pack(k, i), f * c);
    }
    return r;
}

FourierTaylorSeries& FourierTaylorSeries::operator+=(const FourierTaylorSeries& o) {
    if (o.n_ != n_) throw DimensionError("series dimension mismatch");
    if ((o.base_ - base_).lpNorm<Eigen::Infinity>() != 0.0) throw DimensionError("series base point mismatch");
    K_ = std::max(K_, o.K_);
    d_ = std::max(d_, o.d_);
    for (const auto& [key, c] : o.coeffs_) accumulate(key, c);
    return *this;
}

FourierTaylorSeries& FourierTaylorSeries::operator-=(const FourierTaylorSeries& o) {
    FourierTaylorSeries neg = o;
    neg *= -1.0;
    return *this += neg;
}

FourierTaylorSeries& FourierTaylorSeries::operator*=(double s) {
    for (auto& [key, c] : coeffs_) c *= s;
    return *this;
}

FourierTaylorSeries FourierTaylorSeries::product(const FourierTaylorSeries& o) const {
    if (o.n_ != n_) throw DimensionError("series dimension mismatch");
    FourierTaylorSeries r(n_, base_, std::max(K_, o.K_), std::max(d_, o.d_));
    IntVec k1, i1, k2, i2, k(n_), i(n_);
    for (const auto& [a, ca] : coeffs_) {
        unpack(a, k1, i1);
        for (const auto& [b, cb] : o.coeffs_) {
            o.unpack(b, k2, i2);
            for (int j = 0; j < n_; ++j) {
                k[j] = k1[j] + k2[j];
                i[j] = i1[j] + i2[j];
            }
            if (r.admissible(k, i)) r.accumulate(pack(k, i), ca * cb);
        }
    }
    r.hermitize();
    return r;
}

FourierTaylorSeries FourierTaylorSeries::pruned(double tol) const {
    FourierTaylorSeries r = zero_like(*this);
    for (const auto& [key, c] : coeffs_)
        if (std::abs(c) > tol) r.coeffs_.emplace(key, c);
    return r;
}

FourierTaylorSeries FourierTaylorSeries::rebased(const Vec& new_base) const {
    if (new_base.size() != n_) throw DimensionError("base point dimension mismatch");
    FourierTaylorSeries r(n_, new_base, K_, d_);
    r.validity_radius_ = validity_radius_;
    Vec delta = new_base - base_;
    IntVec k, i;
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        // prod_j sum_{a_j <= i_j} C(i_j, a_j) delta_j^{i_j - a_j} (y - y1)_j^{a_j}
        IntVec a(n_, 0);
        while (true) {
            double f = 1.0;
            for (int j = 0; j < n_; ++j) f *= binom(i[j], a[j]) * std::pow(delta[j], i[j] - a[j]);
            if (f != 0.0) r.accumulate(pack(k, a), c * f);
            int j = 0;
            while (j < n_ && a[j] == i[j]) a[j++] = 0;
            if (j == n_) break;
            ++a[j];
        }
    }
    return r;
}

FourierTaylorSeries FourierTaylorSeries::scaled_actions(double s) const {
    FourierTaylorSeries r(n_, Vec::Zero(n_), K_, d_);
    IntVec k, i;
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        r.coeffs_.emplace(key, c * std::pow(s, degree(i)));
    }
    return r;
}

FourierTaylorSeries FourierTaylorSeries::linear_substitution(const std::vector<IntVec>& I_rows,
                                                             const std::vector<IntVec>& I_inv_rows) const {
    if (static_cast<int>(I_rows.size()) != n_ || static_cast<int>(I_inv_rows.size()) != n_)
        throw DimensionError("frame dimension mismatch");
    Vec new_base = Vec::Zero(n_);
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c) new_base[r] += I_inv_rows[r][c] * base_[c];

    // Linear forms (y - y0)_j = sum_l I[j][l] (p - p0)_l as polynomials.
    std::vector<Poly> lin(n_);
    for (int j = 0; j < n_; ++j)
        for (int l = 0; l < n_; ++l)
            if (I_rows[j][l] != 0) {
                IntVec e(n_, 0);
                e[l] = 1;
                lin[j][e] = I_rows[j][l];
            }
    std::map<IntVec, Poly> cache;
    auto expand = [&](const IntVec& i) -> const Poly& {
        auto it = cache.find(i);
        if (it != cache.end()) return it->second;
        Poly p;
        p[IntVec(n_, 0)] = 1.0;
        for (int j = 0; j < n_; ++j)
            for (int t = 0; t < i[j]; ++t) p = poly_mul(p, lin[j]);
        return cache.emplace(i, std::move(p)).first->second;
    };

    int newK = K_;
    IntVec k, i;
    std::vector<std::pair<Key, Complex>> staged;
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        IntVec kn(n_, 0);
        for (int r = 0; r < n_; ++r)
            for (int q = 0; q < n_; ++q) kn[r] += I_inv_rows[r][q] * k[q];
        newK = std::max(newK, norm_inf(kn));
        if (newK > 127) throw DomainError("rotated mode exceeds representable range");
        for (const auto& [mi, f] : expand(i))
            if (f != 0.0) staged.emplace_back(pack(kn, mi), c * f);
    }
    FourierTaylorSeries r(n_, new_base, newK, d_);
    r.validity_radius_ = validity_radius_;
    for (const auto& [key, c] : staged) r.accumulate(key, c);
    // Remove exact cancellations.
    for (auto it = r.coeffs_.begin(); it != r.coeffs_.end();)
        it = it->second == Complex(0, 0) ? r.coeffs_.erase(it) : std::next(it);
    return r;
}

FourierTaylorSeries FourierTaylorSeries::with_cutoffs(int K, int d) const {
    FourierTaylorSeries r(n_, base_, K, d);
    r.validity_radius_ = validity_radius_;
    IntVec k, i;
    for (const auto& [key, c] : coeffs_) {
        unpack(key, k, i);
        if (r.admissible(k, i)) r.coeffs_.emplace(key, c);
    }
    return r;
}

bool FourierTaylorSeries::operator==(const FourierTaylorSeries& o) const {
    return n_ == o.n_ && K_ == o.K_ && d_ == o.d_ && base_ == o.base_ && coeffs_ == o.coeffs_;
}

FourierTaylorSeries raw_bracket(const FourierTaylorSeries& F, const FourierTaylorSeries& G) {
    const int n = F.n_;
    FourierTaylorSeries r(n, F.base_, std::max(F.K_, G.K_), std::max(F.d_, G.d_));
    IntVec k, i, l, m, kk(n), ii(n);
    const Complex I(0, 1);
    for (const auto& [a, ca] : F.coeffs_) {
        F.unpack(a, k, i);
        for (const auto& [b, cb] : G.coeffs_) {
            G.unpack(b, l, m);
            bool inK = true;
            for (int j = 0; j < n; ++j) {
                kk[j] = k[j] + l[j];
                if (std::abs(kk[j]) > r.K_) inK = false;
            }
            if (!inK) continue;
            Complex ab = I * ca * cb;
            for (int j = 0; j < n; ++j) {
                double w = double(k[j]) * m[j] - double(l[j]) * i[j];
                if (w == 0.0) continue;
                int deg = 0;
                for (int q = 0; q < n; ++q) {
                    ii[q] = i[q] + m[q] - (q == j ? 1 : 0);
                    deg += ii[q];
                }
                if (deg > r.d_) continue;
                r.accumulate(FourierTaylorSeries::pack(kk, ii), w * ab);
            }
        }
    }
    return r;
}

FourierTaylorSeries poisson_bracket(const FourierTaylorSeries& F, const FourierTaylorSeries& G) {
    if (F.n_ != G.n_) throw DimensionError("poisson_bracket: dimension mismatch");
    if (F.base_ != G.base_) throw DimensionError("poisson_bracket: base point mismatch");
    // Antisymmetrize explicitly so that {F,G} = -{G,F} holds bit-exactly.
    FourierTaylorSeries fg = raw_bracket(F, G);
    FourierTaylorSeries gf = raw_bracket(G, F);
    FourierTaylorSeries r(F.n_, F.base_, fg.K_, fg.d_);
    r.validity_radius_ = std::min(F.validity_radius_, G.validity_radius_);
    auto keys = fg.coeffs_;
    for (const auto& [key, c] : gf.coeffs_) keys.try_emplace(key, Complex(0, 0));
    for (const auto& [key, unused] : keys) {
        auto a = fg.coeffs_.find(key);
        auto b = gf.coeffs_.find(key);
        Complex ca = a == fg.coeffs_.end() ? Complex(0, 0) : a->second;
        Complex cb = b == gf.coeffs_.end() ? Complex(0, 0) : b->second;
        Complex v = 0.5 * (ca - cb);
        if (v != Complex(0, 0)) r.coeffs_.emplace(key, v);
    }
    r.hermitize();
    return r;
}

double cnorm(const FourierTaylorSeries& s, int j, double radius) {
    const int n = s.dim();
    // acc[a][b] = sum |c| |k|_inf^a D_b(i, r)
    std::vector<std::vector<double>> acc(j + 1, std::vector<double>(j + 1, 0.0));
    for (const auto& t : s.terms()) {
        double kn = norm_inf(t.k);
        double ac = std::abs(t.c);
        for (int b = 0; b <= j; ++b) {
            // max over beta with |beta| = b, beta <= i of prod falling(i_q, beta_q) r^{i_q - beta_q}
            double best = 0.0;
            IntVec beta(n, 0);
            while (true) {
                int sum = 0;
                bool ok = true;
                for (int q = 0; q < n; ++q) {
                    sum += beta[q];
                    if (beta[q] > t.i[q]) ok = false;
                }
                if (ok && sum == b) {
                    double f = 1.0;
                    for (int q = 0; q < n; ++q) f *= falling(t.i[q], beta[q]) * std::pow(radius, t.i[q] - beta[q]);
                    best = std::max(best, f);
                }
                int q = 0;
                while (q < n && beta[q] == b) beta[q++] = 0;
                if (q == n) break;
                ++beta[q];
            }
            if (best == 0.0) continue;
            for (int a = 0; a + b <= j; ++a) acc[a][b] += ac * std::pow(kn, a) * best;
        }
    }
    double total = 0.0;
    for (int order = 0; order <= j; ++order) {
        double m = 0.0;
        for (int a = 0; a <= order; ++a) m = std::max(m, acc[a][order - a]);
        total += m;
    }
    return total;
}

FourierTaylorSeries truncate(const FourierTaylorSeries& s, int Kx, int dy) {
    return s.filtered([&](const IntVec& k, const IntVec& i) { return norm_inf(k) <= Kx && degree(i) <= dy; });
}

TruncationResult truncate_with_tail(const FourierTaylorSeries& s, int Kx, int dy, int j, double radius) {
    TruncationResult r;
    r.kept = truncate(s, Kx, dy);
    r.dropped = s.filtered([&](const IntVec& k, const IntVec& i) { return !(norm_inf(k) <= Kx && degree(i) <= dy); });
    r.tail = cnorm(r.dropped, j, radius);
    return r;
}

nlohmann::json to_json(const FourierTaylorSeries& s) {
    nlohmann::json j;
    j["dim"] = s.dim();
    j["base_point"] = std::vector<double>(s.base_point().data(), s.base_point().data() + s.dim());
    j["cutoffs"] = {{"K", s.cutoff_K()}, {"d", s.cutoff_d()}};
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& t : s.terms()) entries.push_back({{"k", t.k}, {"i", t.i}, {"re", t.c.real()}, {"im", t.c.imag()}});
    j["entries"] = entries;
    return j;
}

FourierTaylorSeries series_from_json(const nlohmann::json& j) {
    try {
        int n = j.at("dim").get<int>();
        auto b = j.at("base_point").get<std::vector<double>>();
        if (static_cast<int>(b.size()) != n) throw MalformedSeries("base_point length differs from dim");
        Vec base = Eigen::Map<Vec>(b.data(), n);
        FourierTaylorSeries s(n, base, j.at("cutoffs").at("K").get<int>(), j.at("cutoffs").at("d").get<int>());
        for (const auto& e : j.at("entries")) {
            auto k = e.at("k").get<IntVec>();
            auto i = e.at("i").get<IntVec>();
            s.add(k, i, Complex(e.at("re").get<double>(), e.at("im").get<double>()));
        }
        s.check_reality();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedSeries(std::string("series JSON: ") + e.what());
    }
}

}  // namespace matherlab::model
