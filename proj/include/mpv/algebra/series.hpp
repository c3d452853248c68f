#pragma once
// Truncated matrix Puiseux series  sum_e A_e z^e  with exact rational exponents.

#include "mpv/algebra/matrix.hpp"

#include <boost/rational.hpp>

#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

namespace mpv::algebra {

using Rat = boost::rational<long long>;

inline std::string to_string(const Rat& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline double to_double(const Rat& r) { return boost::rational_cast<double>(r); }

class Series {
public:
    Series() = default;
    // Terms at or beyond the truncation order are discarded.
    Series(int dim, Rat trunc) : n_(dim), trunc_(trunc) {}
    Series(int dim, const std::map<Rat, Mat>& terms, Rat trunc) : n_(dim), trunc_(trunc) {
        for (const auto& [e, m] : terms) add_term(e, m);
    }

    static Series identity(int dim, Rat trunc) {
        Series s(dim, trunc);
        s.add_term(0, Mat::Identity(dim, dim));
        return s;
    }

    int dim() const { return n_; }
    Rat trunc() const { return trunc_; }
    const std::map<Rat, Mat>& terms() const { return t_; }

    void add_term(const Rat& e, const Mat& m) {
        if (e >= trunc_) return;
        auto it = t_.find(e);
        if (it == t_.end())
            t_.emplace(e, m);
        else
            it->second += m;
    }

    Mat coeff(const Rat& e) const {
        auto it = t_.find(e);
        return it == t_.end() ? Mat::Zero(n_, n_) : it->second;
    }

    double scale() const {
        double s = 1.0;
        for (const auto& [e, m] : t_) s = std::max(s, max_abs(m));
        return s;
    }

    // Smallest exponent whose coefficient exceeds tol (default relative 1e-9).
    std::optional<Rat> valuation(double tol = -1.0) const {
        if (tol < 0) tol = 1e-9 * scale();
        for (const auto& [e, m] : t_)
            if (max_abs(m) > tol) return e;
        return std::nullopt;
    }

    Series cleaned(double tol) const {
        Series s(n_, trunc_);
        for (const auto& [e, m] : t_)
            if (max_abs(m) > tol) s.t_.emplace(e, m);
        return s;
    }

    // Common denominator of all exponents.
    long long ramification() const {
        long long d = 1;
        for (const auto& [e, m] : t_) d = std::lcm(d, e.denominator());
        return d;
    }

    Series operator+(const Series& o) const {
        Series s(n_, std::min(trunc_, o.trunc_));
        for (const auto& [e, m] : t_) s.add_term(e, m);
        for (const auto& [e, m] : o.t_) s.add_term(e, m);
        return s;
    }

    Series operator*(cplx c) const {
        Series s(n_, trunc_);
        for (const auto& [e, m] : t_) s.t_.emplace(e, c * m);
        return s;
    }

    Series operator-(const Series& o) const { return *this + o * cplx(-1.0); }

    // Truncation is propagated pessimistically: the product is only known up to
    // min(trunc_a + val_b, trunc_b + val_a).
    Series operator*(const Series& o) const {
        Rat tr = trunc_;
        if (!t_.empty() && !o.t_.empty())
            tr = std::min(trunc_ + o.t_.begin()->first, o.trunc_ + t_.begin()->first);
        else if (t_.empty() && !o.t_.empty())
            tr = trunc_ + o.t_.begin()->first;
        else if (!t_.empty())
            tr = o.trunc_ + t_.begin()->first;
        Series s(n_, tr);
        for (const auto& [e1, m1] : t_)
            for (const auto& [e2, m2] : o.t_) {
                Rat e = e1 + e2;
                if (e < tr) s.add_term(e, m1 * m2);
            }
        return s;
    }

    Series derivative() const {
        Series s(n_, trunc_ - 1);
        for (const auto& [e, m] : t_)
            if (e != Rat(0)) s.add_term(e - 1, to_double(e) * m);
        return s;
    }

    // C^{-1} A C termwise.
    Series conjugated(const Mat& c) const {
        Eigen::PartialPivLU<Mat> lu(c);
        Series s(n_, trunc_);
        for (const auto& [e, m] : t_) s.t_.emplace(e, lu.solve(m * c));
        return s;
    }

    Series block(int r0, int size) const {
        Series s(size, trunc_);
        for (const auto& [e, m] : t_) s.t_.emplace(e, m.block(r0, r0, size, size));
        return s;
    }

    std::string describe() const {
        std::ostringstream os;
        os << "Series(dim=" << n_ << ", trunc=" << to_string(trunc_) << ", exps=[";
        bool first = true;
        for (const auto& [e, m] : t_) {
            os << (first ? "" : ",") << to_string(e);
            first = false;
        }
        os << "])";
        return os.str();
    }

private:
    int n_ = 0;
    Rat trunc_{0};
    std::map<Rat, Mat> t_;
};

namespace detail {
inline Series inverse_regular(const Series& p, const Rat& order) {
    auto v = p.valuation(0.0);
    if (!v) throw std::domain_error("series_inverse: zero series");
    const int n = p.dim();
    Eigen::FullPivLU<Mat> lu(p.coeff(*v));
    if (!lu.isInvertible()) throw std::domain_error("series_inverse: leading term not invertible");
    Mat p0i = lu.inverse();
    Rat avail = std::min(order, p.trunc() - *v);
    // p = z^v p0 (I + R)
    Series r(n, avail);
    for (const auto& [e, m] : p.terms())
        if (e > *v) r.add_term(e - *v, p0i * m);
    Series sum = Series::identity(n, avail);
    Series power = Series::identity(n, avail);
    Series neg_r = r * cplx(-1.0);
    for (int k = 0; k < 4096; ++k) {
        power = power * neg_r;
        if (power.terms().empty()) break;
        sum = sum + power;
    }
    Series out(n, avail - *v);
    for (const auto& [e, m] : sum.terms()) out.add_term(e - *v, m * p0i);
    return out;
}
}  // namespace detail

// Inverse valid to `order` past the valuation. A singular leading coefficient
// is handled when the singularity comes from unequal column valuations
// (p = p' diag(z^{c_j}) with p' regular), which covers diagonal shears.
inline Series series_inverse(const Series& p, const Rat& order) {
    const int n = p.dim();
    try {
        return detail::inverse_regular(p, order);
    } catch (const std::domain_error&) {
    }
    std::vector<Rat> c(n, p.trunc());
    for (const auto& [e, m] : p.terms())
        for (int j = 0; j < n; ++j)
            if (m.col(j).cwiseAbs().maxCoeff() > 0.0) c[j] = std::min(c[j], e);
    Rat spread = *std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end());
    Series q(n, p.trunc() - spread);
    for (const auto& [e, m] : p.terms())
        for (int j = 0; j < n; ++j) {
            Mat u = Mat::Zero(n, n);
            u.col(j) = m.col(j);
            q.add_term(e - c[j], u);
        }
    Series qi = detail::inverse_regular(q, order);
    Series out(n, qi.trunc() - spread);
    for (const auto& [e, m] : qi.terms())
        for (int i = 0; i < n; ++i) {
            Mat u = Mat::Zero(n, n);
            u.row(i) = m.row(i);
            out.add_term(e - c[i], u);
        }
    return out;
}

// A^P = P^{-1} A P - P^{-1} dP/dz
inline Series gauge_transform(const Series& a, const Series& p) {
    auto va = a.valuation(0.0);
    Rat span = a.trunc() - (va ? *va : Rat(0));
    Series pinv = series_inverse(p, span + 1);
    return pinv * a * p - pinv * p.derivative();
}

// Diagonal gauge diag(z^{e_i}): entry (i,j) picks up z^{e_j - e_i}, and the
// residue loses diag(e).
inline Series shear(const Series& a, const std::vector<Rat>& ex) {
    const int n = a.dim();
    if (static_cast<int>(ex.size()) != n) throw std::invalid_argument("shear: exponent count mismatch");
    Rat lo = *std::min_element(ex.begin(), ex.end());
    Rat hi = *std::max_element(ex.begin(), ex.end());
    Series s(n, a.trunc() - (hi - lo));
    for (const auto& [e, m] : a.terms()) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (m(i, j) == cplx(0)) continue;
                Mat u = Mat::Zero(n, n);
                u(i, j) = m(i, j);
                s.add_term(e + ex[j] - ex[i], u);
            }
    }
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = -to_double(ex[i]);
    s.add_term(-1, d);
    return s;
}

// Gauge by I + X z^s (s > 0) using the geometric series for the inverse.
inline Series unipotent_gauge(const Series& a, const Mat& x, const Rat& s) {
    const int n = a.dim();
    auto va = a.valuation(0.0);
    Rat lim = a.trunc() - (va ? *va : Rat(0));
    Series p(n, a.trunc() + 64);
    p.add_term(0, Mat::Identity(n, n));
    p.add_term(s, x);
    Series pinv(n, lim + 1);
    Mat pw = Mat::Identity(n, n);
    for (long long k = 0; Rat(k) * s < lim + 1; ++k) {
        pinv.add_term(Rat(k) * s, pw);
        pw = pw * (-x);
        if (k > 400) break;
    }
    return pinv * a * p - pinv * p.derivative();
}

}  // namespace mpv::algebra
