#pragma once

#include "matherlab/common.hpp"

#include <nlohmann/json.hpp>

#include <complex>
#include <cstdint>
#include <limits>
#include <map>

namespace matherlab::model {

using Complex = std::complex<double>;

// Truncated trigonometric polynomial in the angles times a polynomial in
// (y - y0).  Dimension is limited to 4 so that (k, i) packs into 64 bits.
class FourierTaylorSeries {
public:
    static constexpr int kMaxDim = 4;

    struct Term {
        IntVec k;
        IntVec i;
        Complex c;
    };

    FourierTaylorSeries() = default;
    FourierTaylorSeries(int n, Vec base_point, int cutoff_K, int cutoff_d);

    static FourierTaylorSeries zero_like(const FourierTaylorSeries& s);
    static FourierTaylorSeries constant(int n, const Vec& base, double c, int K = 8, int d = 8);
    // a*cos(<k,x>) + b*sin(<k,x>) times (y-y0)^i; adds both k and -k.
    void add_real_mode(const IntVec& k, const IntVec& i, double a, double b = 0.0);
    // Raw insertion; the caller keeps Hermitian symmetry.
    void add(const IntVec& k, const IntVec& i, Complex c);

    int dim() const { return n_; }
    const Vec& base_point() const { return base_; }
    int cutoff_K() const { return K_; }
    int cutoff_d() const { return d_; }
    std::size_t size() const { return coeffs_.size(); }
    bool empty() const { return coeffs_.empty(); }

    Complex coeff(const IntVec& k, const IntVec& i) const;
    std::vector<Term> terms() const;

    // Hermitian defect max |c(k,i) - conj c(-k,i)|.
    double reality_defect() const;
    void check_reality(double tol = 1e-12) const;

    double eval(const Vec& x, const Vec& y) const;
    // Value, gradient (d/dx then d/dy) and Hessian in z = (x, y).
    struct Jet {
        double value = 0;
        Vec grad;
        Mat hess;
    };
    Jet jet(const Vec& x, const Vec& y, int order) const;

    FourierTaylorSeries dx(int j) const;
    FourierTaylorSeries dy(int j) const;

    FourierTaylorSeries& operator+=(const FourierTaylorSeries& o);
    FourierTaylorSeries& operator-=(const FourierTaylorSeries& o);
    FourierTaylorSeries& operator*=(double s);
    friend FourierTaylorSeries operator+(FourierTaylorSeries a, const FourierTaylorSeries& b) { return a += b; }
    friend FourierTaylorSeries operator-(FourierTaylorSeries a, const FourierTaylorSeries& b) { return a -= b; }
    friend FourierTaylorSeries operator*(double s, FourierTaylorSeries a) { return a *= s; }

    FourierTaylorSeries product(const FourierTaylorSeries& o) const;

    // Drop coefficients with |c| <= tol.
    FourierTaylorSeries pruned(double tol) const;
    // Keep only terms satisfying pred(k, i).
    template <class Pred>
    FourierTaylorSeries filtered(Pred pred) const {
        FourierTaylorSeries out = zero_like(*this);
        for (const auto& [key, c] : coeffs_) {
            IntVec k, i;
            unpack(key, k, i);
            if (pred(k, i)) out.coeffs_.emplace(key, c);
        }
        return out;
    }

    // Re-expand the polynomial part about a new base point.
    FourierTaylorSeries rebased(const Vec& new_base) const;
    // Substitute y - y0 = s * p, returning a series in p with base point 0.
    FourierTaylorSeries scaled_actions(double s) const;
    // Symplectic frame change q = I^T x, p = I^{-1} y for unimodular I given
    // by rows: mode k becomes I^{-1} k and y - y0 = I (p - p0).
    FourierTaylorSeries linear_substitution(const std::vector<IntVec>& I_rows,
                                            const std::vector<IntVec>& I_inv_rows) const;
    FourierTaylorSeries with_cutoffs(int K, int d) const;

    bool operator==(const FourierTaylorSeries& o) const;

    // Radius of |y - y0| beyond which eval() warns.
    void set_validity_radius(double r) { validity_radius_ = r; }
    double validity_radius() const { return validity_radius_; }

    using Key = std::uint64_t;
    static Key pack(const IntVec& k, const IntVec& i);
    void unpack(Key key, IntVec& k, IntVec& i) const;
    const std::map<Key, Complex>& raw() const { return coeffs_; }

private:
    void accumulate(Key key, Complex c);
    void hermitize();
    friend FourierTaylorSeries raw_bracket(const FourierTaylorSeries&, const FourierTaylorSeries&);
    friend FourierTaylorSeries poisson_bracket(const FourierTaylorSeries&, const FourierTaylorSeries&);
    bool admissible(const IntVec& k, const IntVec& i) const;

    int n_ = 0;
    Vec base_;
    int K_ = 0;
    int d_ = 0;
    std::map<Key, Complex> coeffs_;
    double validity_radius_ = std::numeric_limits<double>::infinity();
};

FourierTaylorSeries poisson_bracket(const FourierTaylorSeries& F, const FourierTaylorSeries& G);

// Upper estimate of sum_{s<=j} max_{|a|+|b|=s} sup |d_x^a d_y^b f| over
// T^n x {|y - y0|_inf <= radius}.
double cnorm(const FourierTaylorSeries& s, int j, double radius);

struct TruncationResult {
    FourierTaylorSeries kept;
    FourierTaylorSeries dropped;
    double tail = 0;  // cnorm(dropped, j, radius)
};

FourierTaylorSeries truncate(const FourierTaylorSeries& s, int Kx, int dy);
TruncationResult truncate_with_tail(const FourierTaylorSeries& s, int Kx, int dy, int j, double radius);

nlohmann::json to_json(const FourierTaylorSeries& s);
FourierTaylorSeries series_from_json(const nlohmann::json& j);

}  // namespace matherlab::model
