#pragma once
// dY/dx = A(x) Y with A(x) = sum_u sum_k A_{u,k}/(x-u)^{k+1} + sum_k P_k x^k.

#include "mpv/algebra/series.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mpv::algebra {

struct Pole {
    cplx loc;
    std::vector<Mat> coeffs;  // coeffs[k] multiplies (x-loc)^{-(k+1)}
    int order() const { return static_cast<int>(coeffs.size()); }
};

struct LinearSystem {
    int dim = 0;
    std::vector<Pole> poles;
    std::vector<Mat> poly;  // poly[k] multiplies x^k

    static constexpr double pole_tol = 1e-12;

    // Adds into an existing pole at the same location when present.
    void add_pole_term(cplx u, int k, const Mat& m) {
        for (auto& p : poles)
            if (std::abs(p.loc - u) <= pole_tol * std::max(1.0, std::abs(u))) {
                while (p.order() <= k) p.coeffs.push_back(Mat::Zero(dim, dim));
                p.coeffs[k] += m;
                return;
            }
        Pole p{u, {}};
        for (int i = 0; i <= k; ++i) p.coeffs.push_back(Mat::Zero(dim, dim));
        p.coeffs[k] = m;
        poles.push_back(std::move(p));
    }

    void add_poly_term(int k, const Mat& m) {
        while (static_cast<int>(poly.size()) <= k) poly.push_back(Mat::Zero(dim, dim));
        poly[k] += m;
    }

    const Pole* pole_at(cplx u) const {
        for (const auto& p : poles)
            if (std::abs(p.loc - u) <= pole_tol * std::max(1.0, std::abs(u))) return &p;
        return nullptr;
    }
};

inline void check_not_pole(const LinearSystem& s, cplx x) {
    for (const auto& p : s.poles)
        if (std::abs(x - p.loc) < 1e-14 * std::max(1.0, std::abs(p.loc)))
            throw std::domain_error("evaluation at a pole");
}

inline Mat rational_matrix_eval(const LinearSystem& s, cplx x) {
    check_not_pole(s, x);
    Mat a = Mat::Zero(s.dim, s.dim);
    for (const auto& p : s.poles) {
        cplx inv = 1.0 / (x - p.loc), w = inv;
        for (const auto& c : p.coeffs) {
            a += w * c;
            w *= inv;
        }
    }
    cplx xp = 1.0;
    for (const auto& c : s.poly) {
        a += xp * c;
        xp *= x;
    }
    if (!all_finite(a)) throw std::domain_error("non-finite value in rational_matrix_eval");
    return a;
}

// Exact x-derivative of the rational form.
inline Mat rational_matrix_dx(const LinearSystem& s, cplx x) {
    check_not_pole(s, x);
    Mat a = Mat::Zero(s.dim, s.dim);
    for (const auto& p : s.poles) {
        cplx inv = 1.0 / (x - p.loc);
        cplx w = inv * inv;
        for (size_t k = 0; k < p.coeffs.size(); ++k) {
            a -= double(k + 1) * w * p.coeffs[k];
            w *= inv;
        }
    }
    cplx xp = 1.0;
    for (size_t k = 1; k < s.poly.size(); ++k) {
        a += double(k) * xp * s.poly[k];
        xp *= x;
    }
    return a;
}

namespace detail {
inline double gbinom(double a, int j) {
    double r = 1.0;
    for (int i = 0; i < j; ++i) r *= (a - i) / (i + 1);
    return r;
}

inline cplx ipow(cplx b, int e) {
    if (e < 0) return 1.0 / ipow(b, -e);
    cplx r = 1.0;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}
}  // namespace detail

// Local Laurent expansion in z = x - x0, truncated after `terms_past_residue`
// orders beyond z^{-1}.
inline Series expand_at(const LinearSystem& s, cplx x0, int terms_past_residue = 8) {
    const Rat trunc(-1 + terms_past_residue);
    Series out(s.dim, trunc);
    for (const auto& p : s.poles) {
        bool here = std::abs(p.loc - x0) <= LinearSystem::pole_tol * std::max(1.0, std::abs(x0));
        for (int k = 0; k < p.order(); ++k) {
            if (here) {
                out.add_term(Rat(-k - 1), p.coeffs[k]);
                continue;
            }
            cplx c = x0 - p.loc;
            for (int j = 0; Rat(j) < trunc; ++j)
                out.add_term(Rat(j), detail::gbinom(-k - 1, j) * detail::ipow(c, -k - 1 - j) * p.coeffs[k]);
        }
    }
    for (size_t k = 0; k < s.poly.size(); ++k)
        for (size_t j = 0; j <= k; ++j)
            out.add_term(Rat(static_cast<long long>(j)),
                         detail::gbinom(double(k), int(j)) * detail::ipow(x0, int(k - j)) * s.poly[k]);
    return out;
}

// Expansion at infinity in z = 1/x:  dY/dz = -z^{-2} A(1/z) Y.
inline Series expand_at_infinity(const LinearSystem& s, int terms_past_residue = 8) {
    const Rat trunc(-1 + terms_past_residue);
    Series out(s.dim, trunc);
    for (const auto& p : s.poles)
        for (int k = 0; k < p.order(); ++k)
            for (int j = 0;; ++j) {
                Rat e(k + 1 + j - 2);
                if (e >= trunc) break;
                out.add_term(e, -detail::gbinom(double(k + j), j) * detail::ipow(p.loc, j) * p.coeffs[k]);
            }
    for (size_t k = 0; k < s.poly.size(); ++k) out.add_term(Rat(-static_cast<long long>(k) - 2), -s.poly[k]);
    return out;
}

// ---------------------------------------------------------------------------
// JSON: complex numbers as [re, im]; matrices as row-major arrays of those.

inline nlohmann::json to_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline nlohmann::json to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(to_json(m(i, j)));
        rows.push_back(r);
    }
    return rows;
}

inline cplx cplx_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline Mat mat_from_json(const nlohmann::json& j) {
    const auto r = static_cast<Eigen::Index>(j.size());
    const auto c = r ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = cplx_from_json(j.at(i).at(k));
    return m;
}

inline nlohmann::json to_json(const LinearSystem& s) {
    nlohmann::json poles = nlohmann::json::array();
    for (const auto& p : s.poles) {
        nlohmann::json cs = nlohmann::json::array();
        for (const auto& c : p.coeffs) cs.push_back(to_json(c));
        poles.push_back({{"location", to_json(p.loc)}, {"order", p.order()}, {"coeffs", cs}});
    }
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& c : s.poly) poly.push_back(to_json(c));
    return {{"dim", s.dim}, {"poles", poles}, {"poly_part", poly}};
}

inline LinearSystem linear_system_from_json(const nlohmann::json& j) {
    LinearSystem s;
    s.dim = j.at("dim").get<int>();
    for (const auto& p : j.at("poles")) {
        Pole q{cplx_from_json(p.at("location")), {}};
        for (const auto& c : p.at("coeffs")) q.coeffs.push_back(mat_from_json(c));
        if (q.order() != p.at("order").get<int>()) throw std::invalid_argument("pole order mismatch");
        s.poles.push_back(std::move(q));
    }
    for (const auto& c : j.at("poly_part")) s.poly.push_back(mat_from_json(c));
    return s;
}

}  // namespace mpv::algebra
