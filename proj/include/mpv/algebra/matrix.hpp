#pragma once
// Dense complex matrices (Eigen) plus a fixed 2x2 type that is generic in the
// scalar so the same formulas run in double and in __float128.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpv::algebra {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

#if defined(__SIZEOF_FLOAT128__)
using quad = __float128;
using cquad = std::complex<__float128>;
#endif

inline Mat commutator(const Mat& a, const Mat& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw std::invalid_argument("commutator: square matrices of equal size required");
    return a * b - b * a;
}

inline Mat K2() {
    Mat k = Mat::Zero(2, 2);
    k(0, 0) = 1.0;
    k(1, 1) = -1.0;
    return k;
}

inline double max_abs(const Mat& m) {
    double r = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) r = std::max(r, std::abs(m.data()[i]));
    return r;
}

inline bool all_finite(const Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
    return true;
}

// Assemble a 4x4 from 2x2 blocks.
inline Mat blocks(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
    Mat m(a.rows() + c.rows(), a.cols() + b.cols());
    m << a, b, c, d;
    return m;
}

inline Mat vstack(const Mat& a, const Mat& b) {
    Mat m(a.rows() + b.rows(), a.cols());
    m << a, b;
    return m;
}

inline Mat hstack(const Mat& a, const Mat& b) {
    Mat m(a.rows(), a.cols() + b.cols());
    m << a, b;
    return m;
}

inline int numerical_rank(const Mat& m, double rel_tol = 1e-9) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * std::max(1.0, s(0))) ++r;
    return r;
}

// ---------------------------------------------------------------------------
// Scalar helpers that work for complex<double> and complex<__float128>.

template <class C>
using real_of = typename C::value_type;

template <class C>
inline C lift(double re, double im = 0.0) {
    return C(real_of<C>(re), real_of<C>(im));
}

template <class C>
inline C lift(cplx z) {
    return lift<C>(z.real(), z.imag());
}

template <class C>
inline cplx lower(const C& z) {
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

template <class C>
inline double mag(const C& z) {
    return std::abs(lower(z));
}

// Fixed 2x2 matrix, row-major.
template <class C>
struct M2 {
    std::array<C, 4> e{};

    M2() = default;
    M2(C a, C b, C c, C d) : e{a, b, c, d} {}

    static M2 I() { return {C(1), C(0), C(0), C(1)}; }
    static M2 zero() { return {}; }
    static M2 K() { return {C(1), C(0), C(0), C(-1)}; }
    static M2 diag(C a, C d) { return {a, C(0), C(0), d}; }

    C& operator()(int i, int j) { return e[2 * i + j]; }
    const C& operator()(int i, int j) const { return e[2 * i + j]; }

    M2 operator+(const M2& o) const { return {e[0] + o.e[0], e[1] + o.e[1], e[2] + o.e[2], e[3] + o.e[3]}; }
    M2 operator-(const M2& o) const { return {e[0] - o.e[0], e[1] - o.e[1], e[2] - o.e[2], e[3] - o.e[3]}; }
    M2 operator-() const { return {-e[0], -e[1], -e[2], -e[3]}; }
    M2 operator*(const M2& o) const {
        return {e[0] * o.e[0] + e[1] * o.e[2], e[0] * o.e[1] + e[1] * o.e[3],
                e[2] * o.e[0] + e[3] * o.e[2], e[2] * o.e[1] + e[3] * o.e[3]};
    }
    M2 operator*(const C& s) const { return {e[0] * s, e[1] * s, e[2] * s, e[3] * s}; }
    M2 operator/(const C& s) const { return {e[0] / s, e[1] / s, e[2] / s, e[3] / s}; }
    friend M2 operator*(const C& s, const M2& m) { return m * s; }
    M2 operator+(const C& s) const { return {e[0] + s, e[1], e[2], e[3] + s}; }
    M2 operator-(const C& s) const { return {e[0] - s, e[1], e[2], e[3] - s}; }
    friend M2 operator+(const C& s, const M2& m) { return m + s; }
    friend M2 operator-(const C& s, const M2& m) { return (-m) + s; }
    M2& operator+=(const M2& o) { return *this = *this + o; }
    M2& operator-=(const M2& o) { return *this = *this - o; }

    C det() const { return e[0] * e[3] - e[1] * e[2]; }
    C trace() const { return e[0] + e[3]; }

    M2 inverse() const {
        C d = det();
        if (mag(d) < 1e-300) throw std::domain_error("M2::inverse: singular matrix");
        return {e[3] / d, -e[1] / d, -e[2] / d, e[0] / d};
    }

    double norm_inf() const {
        double r = 0;
        for (const auto& x : e) r = std::max(r, mag(x));
        return r;
    }

    Mat to_mat() const {
        Mat m(2, 2);
        m << lower(e[0]), lower(e[1]), lower(e[2]), lower(e[3]);
        return m;
    }

    static M2 from_mat(const Mat& m) {
        return {lift<C>(m(0, 0)), lift<C>(m(0, 1)), lift<C>(m(1, 0)), lift<C>(m(1, 1))};
    }

    template <class D>
    M2<D> cast() const {
        auto f = [](const C& z) { return D(typename D::value_type(z.real()), typename D::value_type(z.imag())); };
        return {f(e[0]), f(e[1]), f(e[2]), f(e[3])};
    }
};

template <class C>
inline M2<C> comm(const M2<C>& a, const M2<C>& b) {
    return a * b - b * a;
}

template <class C>
inline C tr(const M2<C>& a) {
    return a.trace();
}

// Dense solve with partial pivoting for generic complex scalars (used where
// Eigen has no numeric traits, i.e. the quad type).
template <class C>
std::vector<C> lu_solve(std::vector<std::vector<C>> a, std::vector<C> b) {
    const size_t n = b.size();
    for (size_t k = 0; k < n; ++k) {
        size_t piv = k;
        double best = mag(a[k][k]);
        for (size_t i = k + 1; i < n; ++i)
            if (mag(a[i][k]) > best) best = mag(a[i][k]), piv = i;
        if (best == 0.0) throw std::domain_error("lu_solve: singular matrix");
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (size_t i = k + 1; i < n; ++i) {
            C f = a[i][k] / a[k][k];
            if (f == C(0)) continue;
            for (size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<C> x(n);
    for (size_t ii = n; ii-- > 0;) {
        C s = b[ii];
        for (size_t j = ii + 1; j < n; ++j) s -= a[ii][j] * x[j];
        x[ii] = s / a[ii][ii];
    }
    return x;
}

}  // namespace mpv::algebra
