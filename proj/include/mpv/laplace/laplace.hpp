#pragma once
// Laplace duality (x, d/dx) -> (-d/dxi, xi) for systems
//   dY/dx = [B (x I_l - T)^{-1} C + S] Y,
// realization of Lax-pair systems in that form, and the elimination used
// for the polynomial (mpII) systems.

#include "mpv/htl/htl.hpp"
#include "mpv/lax/lax.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace mpv::laplace {

using algebra::cplx;
using algebra::LinearSystem;
using algebra::Mat;
using core::Theta;
using core::Variant;

struct StructuredSystem {
    Mat B, C, T, S;  // m x l, l x m, l x l, m x m
    int m() const { return static_cast<int>(S.rows()); }
    int l() const { return static_cast<int>(T.rows()); }
};

inline void validate(const StructuredSystem& s) {
    const auto m = s.S.rows(), l = s.T.rows();
    if (s.S.cols() != m || s.T.cols() != l || s.B.rows() != m || s.B.cols() != l || s.C.rows() != l || s.C.cols() != m)
        throw std::invalid_argument("inconsistent structured system dimensions");
}

inline StructuredSystem laplace_dual(const StructuredSystem& s) {
    validate(s);
    return {-s.C, s.B, s.S, -s.T};
}

inline Mat evaluate(const StructuredSystem& s, cplx x) {
    const Mat R = x * Mat::Identity(s.l(), s.l()) - s.T;
    return s.B * R.fullPivLu().solve(s.C) + s.S;
}

namespace detail {

// Pivot-normalised basis of the column space complement pair: columns of the
// kernel of m, scaled so that a square submatrix is the identity.
inline Mat normalized_kernel(const Mat& m, double tol = 1e-10) {
    Eigen::FullPivLU<Mat> lu(m);
    lu.setThreshold(tol);
    Mat k = lu.kernel();
    if (lu.rank() == m.cols()) return Mat::Zero(m.cols(), 0);
    // Choose pivot rows of k greedily.
    Eigen::FullPivLU<Mat> lk(k.transpose());
    Eigen::VectorXi piv = lk.permutationQ().indices();
    Mat sub(k.cols(), k.cols());
    for (Eigen::Index j = 0; j < k.cols(); ++j) sub.row(j) = k.row(piv(j));
    Mat out = k * sub.inverse();
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            if (std::abs(out(i, j)) < 1e-14) out(i, j) = 0.0;
    return out;
}

// Unit columns completing the pivot rows of a normalised basis.
inline Mat unit_complement(const Mat& k) {
    const auto n = k.rows();
    std::vector<bool> used(n, false);
    for (Eigen::Index j = 0; j < k.cols(); ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            bool unit = std::abs(k(i, j) - 1.0) < 1e-12;
            for (Eigen::Index jj = 0; jj < k.cols() && unit; ++jj)
                if (jj != j && std::abs(k(i, jj)) > 1e-12) unit = false;
            if (unit) { used[i] = true; break; }
        }
    Mat out = Mat::Zero(n, n - k.cols());
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < n && c < out.cols(); ++i)
        if (!used[i]) out(i, c++) = 1.0;
    return out;
}

// R = B C with B of full column rank; B is a set of pivot columns of R.
inline std::pair<Mat, Mat> rank_factor(const Mat& r, double tol = 1e-9) {
    Eigen::ColPivHouseholderQR<Mat> qr(r);
    qr.setThreshold(tol);
    const auto k = qr.rank();
    Mat b(r.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) b.col(j) = r.col(qr.colsPermutation().indices()(j));
    Mat c = b.completeOrthogonalDecomposition().solve(r);
    return {b, c};
}

inline Mat block_diag(const std::vector<Mat>& ms) {
    Eigen::Index n = 0;
    for (const auto& m : ms) n += m.rows();
    Mat out = Mat::Zero(n, n);
    Eigen::Index o = 0;
    for (const auto& m : ms) {
        out.block(o, o, m.rows(), m.cols()) = m;
        o += m.rows();
    }
    return out;
}

}  // namespace detail

// Principal parts at the eigenvalues of T.
inline LinearSystem to_linear_system(const StructuredSystem& s) {
    validate(s);
    LinearSystem out;
    out.dim = s.m();
    const int l = s.l();
    if (l > 0) {
        Eigen::ComplexEigenSolver<Mat> es(s.T, false);
        std::vector<cplx> vals(es.eigenvalues().data(), es.eigenvalues().data() + l);
        const double scale = 1.0 + s.T.cwiseAbs().maxCoeff();
        for (const auto& cl : htl::cluster_eigenvalues(vals, scale)) {
            const cplx u = cl.center;
            const int k = cl.multiplicity();
            const Mat Tu = s.T - u * Mat::Identity(l, l);
            Mat M = Mat::Identity(l, l);
            for (int i = 0; i < k; ++i) M = M * Tu;
            // Spectral projector onto the generalized eigenspace of u.
            Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Mat W(l, l);
            W << svd.matrixV().rightCols(k), svd.matrixU().leftCols(l - k);
            Mat Wi = W.inverse();
            Mat Pr = W.leftCols(k) * Wi.topRows(k);
            Mat Nn = Tu * Pr, Nk = Pr;
            for (int i = 0; i < k; ++i) {
                Mat c = s.B * Nk * s.C;
                if (c.cwiseAbs().maxCoeff() > 1e-13 * scale || i == 0) out.add_pole_term(u, i, c);
                Nk = Nn * Nk;
            }
        }
    }
    out.add_poly_term(0, s.S);
    return out;
}

// Size of the realization block for one pole.
inline int realization_rank(const algebra::Pole& p, double tol = 1e-8) {
    if (p.order() == 1) return algebra::numerical_rank(p.coeffs[0], tol);
    const auto n = p.coeffs[0].rows();
    const Mat Z = Mat::Zero(n, n);
    return algebra::numerical_rank(algebra::blocks(p.coeffs[0], p.coeffs[1], p.coeffs[1], Z), tol);
}

// Shift each residue by the scalar that minimises the realization size.
// Candidates are the eigenvalues of the residue and, for double poles, of its
// compression to ker(M2) x coker(M2).
inline LinearSystem twist(const LinearSystem& sys) {
    LinearSystem out = sys;
    for (auto& p : out.poles) {
        const Mat R = p.coeffs[0];
        const auto n = R.rows();
        std::vector<cplx> cands;
        Eigen::ComplexEigenSolver<Mat> es(R, false);
        for (Eigen::Index i = 0; i < n; ++i) cands.push_back(es.eigenvalues()(i));
        if (p.order() == 2) {
            const Mat K = detail::normalized_kernel(p.coeffs[1]);
            const Mat L = detail::normalized_kernel(p.coeffs[1].transpose()).transpose();
            if (K.cols() > 0 && K.cols() == L.rows()) {
                Eigen::FullPivLU<Mat> lk(L * K);
                if (lk.isInvertible()) {
                    Eigen::ComplexEigenSolver<Mat> ec(lk.solve(L * R * K), false);
                    for (Eigen::Index i = 0; i < ec.eigenvalues().size(); ++i) cands.push_back(ec.eigenvalues()(i));
                }
            }
        }
        int best = realization_rank(p);
        cplx shift = 0.0;
        for (cplx c : cands) {
            algebra::Pole q = p;
            q.coeffs[0] = R - c * Mat::Identity(n, n);
            const int r = realization_rank(q);
            if (r < best) best = r, shift = c;
        }
        p.coeffs[0] = R - shift * Mat::Identity(n, n);
    }
    return out;
}

// Realizes a system with simple and double poles and constant polynomial part.
// Double poles use a Ho-Kalman factorisation of the block Hankel matrix.
inline StructuredSystem realize(const LinearSystem& sys, double tol = 1e-9) {
    if (sys.poly.size() > 1) throw std::invalid_argument("realization needs a constant polynomial part");
    const int n = sys.dim;
    std::vector<Mat> Bs, Cs, Ts;
    for (const auto& p : sys.poles) {
        if (p.order() == 1) {
            auto [b, c] = detail::rank_factor(p.coeffs[0], tol);
            Bs.push_back(b);
            Cs.push_back(c);
            Ts.push_back(p.loc * Mat::Identity(b.cols(), b.cols()));
        } else if (p.order() == 2) {
            const Mat& M1 = p.coeffs[0];
            const Mat& M2 = p.coeffs[1];
            const Mat Z = Mat::Zero(n, n);
            Mat H0 = algebra::blocks(M1, M2, M2, Z), H1 = algebra::blocks(M2, Z, Z, Z);
            Eigen::JacobiSVD<Mat> svd(H0, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            int r = 0;
            for (Eigen::Index i = 0; i < sv.size(); ++i)
                if (sv(i) > tol * sv(0)) ++r;
            Mat sq = sv.head(r).cwiseSqrt().cast<cplx>().asDiagonal();
            Mat isq = sv.head(r).cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
            Mat O = svd.matrixU().leftCols(r) * sq;
            Mat Ct = sq * svd.matrixV().leftCols(r).adjoint();
            Mat Tn = isq * svd.matrixU().leftCols(r).adjoint() * H1 * svd.matrixV().leftCols(r) * isq;
            Bs.push_back(O.topRows(n));
            Cs.push_back(Ct.leftCols(n));
            Ts.push_back(p.loc * Mat::Identity(r, r) + Tn);
        } else {
            throw std::invalid_argument("realization supports pole order <= 2");
        }
    }
    Eigen::Index l = 0;
    for (const auto& b : Bs) l += b.cols();
    StructuredSystem s;
    s.B = Mat::Zero(n, l);
    s.C = Mat::Zero(l, n);
    Eigen::Index o = 0;
    for (size_t i = 0; i < Bs.size(); ++i) {
        s.B.middleCols(o, Bs[i].cols()) = Bs[i];
        s.C.middleRows(o, Cs[i].rows()) = Cs[i];
        o += Bs[i].cols();
    }
    s.T = detail::block_diag(Ts);
    s.S = sys.poly.empty() ? Mat::Zero(n, n) : sys.poly[0];
    return s;
}

// x = u - 1/w moves x = u to w = infinity and infinity to w = 0; needs
// simple poles away from u, order <= 2 at u, and a constant polynomial part.
inline LinearSystem chart_to_infinity(const LinearSystem& sys, cplx u) {
    for (size_t k = 1; k < sys.poly.size(); ++k)
        if (sys.poly[k].cwiseAbs().maxCoeff() > 0) throw std::invalid_argument("chart needs a constant polynomial part");
    LinearSystem out;
    out.dim = sys.dim;
    if (!sys.poly.empty() && sys.poly[0].cwiseAbs().maxCoeff() > 0) out.add_pole_term(0.0, 1, sys.poly[0]);
    for (const auto& p : sys.poles) {
        if (std::abs(p.loc - u) < 1e-14) {
            if (p.order() > 2) throw std::invalid_argument("pole order too high for chart");
            out.add_pole_term(0.0, 0, -p.coeffs[0]);
            if (p.order() == 2) out.add_poly_term(0, p.coeffs[1]);
        } else {
            if (p.order() != 1) throw std::invalid_argument("chart needs simple poles away from u");
            out.add_pole_term(0.0, 0, -p.coeffs[0]);
            out.add_pole_term(1.0 / (u - p.loc), 0, p.coeffs[0]);
        }
    }
    return out;
}

// w = 1/x together with Y -> w^{-shift} Y: a system regular-singular at
// infinity with poles only at 0 becomes a polynomial system in w plus a
// residue at w = 0.
inline LinearSystem invert_chart(const LinearSystem& sys, cplx shift) {
    if (!sys.poly.empty() || sys.poles.size() != 1 || std::abs(sys.poles[0].loc) > 0)
        throw std::invalid_argument("invert_chart expects poles at 0 only");
    const auto& cs = sys.poles[0].coeffs;
    LinearSystem out;
    out.dim = sys.dim;
    out.add_pole_term(0.0, 0, -cs[0] - shift * Mat::Identity(sys.dim, sys.dim));
    for (size_t k = 1; k < cs.size(); ++k) out.add_poly_term(static_cast<int>(k) - 1, -cs[k]);
    return out;
}

// Polynomial-in-xi system sum_k xi^k M_k.
struct PolynomialSystem {
    std::vector<Mat> coeffs;
    LinearSystem as_linear() const {
        LinearSystem s;
        s.dim = static_cast<int>(coeffs.at(0).rows());
        for (size_t k = 0; k < coeffs.size(); ++k) s.add_poly_term(static_cast<int>(k), coeffs[k]);
        return s;
    }
};

// dY/dx = (B C / x + A1 + A0 x) Y. After the transform,
//   A0 Yh' = -(xi - A1) Yh + B Zh,  Zh' = -C Yh.
// The kernel part Y1 of A0 is solved from the algebraic rows, leaving a
// system for (Y2, Zh) quadratic in xi.
inline PolynomialSystem eliminate_polynomial(const Mat& B, const Mat& C, const Mat& A1, const Mat& A0) {
    const Mat F1 = detail::normalized_kernel(A0);
    const Mat F2 = detail::unit_complement(F1);
    const Mat E2 = detail::normalized_kernel(A0.transpose()).transpose();
    const Mat E1 = detail::unit_complement(E2.transpose()).transpose();
    if (F1.cols() == 0) throw std::invalid_argument("leading coefficient is invertible; nothing to eliminate");
    if ((E2 * F1).cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument("elimination needs the kernel of A0 inside its left-kernel annihilator");
    const Mat M = E2 * A1 * F1;
    Eigen::FullPivLU<Mat> lm(M);
    if (!lm.isInvertible()) throw std::invalid_argument("algebraic block not invertible");
    const Mat Mi = lm.inverse();
    const Mat Gi = (E1 * A0 * F2).inverse();
    const Eigen::Index q = F2.cols(), l = B.cols();
    // Y1 = a1 xi Y2 + a0 Y2 + b Zh
    const Mat a1 = Mi * E2 * F2, a0 = -Mi * E2 * A1 * F2, b = -Mi * E2 * B;
    // Y2' = Gi E1 [ -(xi - A1)(F1 Y1 + F2 Y2) + B Zh ]
    // Zh' = -C (F1 Y1 + F2 Y2)
    const Mat X1 = F1 * a1, X0 = F1 * a0 + F2, Xz = F1 * b;  // Yh = xi X1 Y2 + X0 Y2 + Xz Zh
    std::vector<Mat> out(3, Mat::Zero(q + l, q + l));
    auto put = [&](int k, const Mat& top_y, const Mat& top_z, const Mat& bot_y, const Mat& bot_z) {
        out[k].topLeftCorner(q, q) += top_y;
        out[k].topRightCorner(q, l) += top_z;
        out[k].bottomLeftCorner(l, q) += bot_y;
        out[k].bottomRightCorner(l, l) += bot_z;
    };
    const Mat GE = Gi * E1;
    put(2, -GE * X1, Mat::Zero(q, l), Mat::Zero(l, q), Mat::Zero(l, l));
    put(1, GE * (A1 * X1 - X0), -GE * Xz, -C * X1, Mat::Zero(l, l));
    put(0, GE * A1 * X0, GE * (A1 * Xz + B), -C * X0, -C * Xz);
    return {out};
}

// The (((11)))_2,22 presentation: residue B C / x with B = (-Q; I),
// C = (-P, -PQ + theta0), followed by the elimination above.
inline LinearSystem mpII_correspondence(const Theta<cplx>& th, const Mat& Q, const Mat& P, cplx t) {
    auto lp = lax::build_lax(Variant::II_r11_22, th, Q, P, t);
    const Mat I = Mat::Identity(2, 2);
    const Mat B = algebra::vstack(-Q, I), C = algebra::hstack(-P, -P * Q + th.z0 * I);
    return eliminate_polynomial(B, C, lp.aux.at("A1"), lp.aux.at("A0")).as_linear();
}

// Second route: the (((2)))_2,211 pair after w = 1/x, Y -> w^{-theta_inf1} Y.
inline LinearSystem mpII_second_route(const Theta<cplx>& th, const Mat& Q, const Mat& P, cplx t) {
    auto lp = lax::build_lax(Variant::II_r2_211, th, Q, P, t);
    LinearSystem w = invert_chart(lp.A, th.i1);
    auto [B, C] = detail::rank_factor(w.poles.at(0).coeffs[0]);
    return eliminate_polynomial(B, C, w.poly.at(0), w.poly.at(1)).as_linear();
}

// ---------------------------------------------------------------------------

struct TableEntry {
    std::string family;   // Hamiltonian label
    std::string source;   // catalog presentation
    std::string partner;  // expected dual spectral type, as listed
    std::string observed;
    bool pass = false;
};

// Point types compared as multisets; the listing order is not canonical.
inline bool same_points(const std::string& a, const std::string& b) {
    auto split = [](const std::string& s) {
        std::vector<std::string> v;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') v.push_back(cur), cur.clear();
            else if (ch != ' ') cur += ch;
        }
        v.push_back(cur);
        std::sort(v.begin(), v.end());
        return v;
    };
    return split(a) == split(b);
}

inline LinearSystem dual_of_presentation(Variant v, const Theta<cplx>& th, const Mat& Q, const Mat& P, cplx t) {
    auto lp = lax::build_lax(v, th, Q, P, t);
    LinearSystem base = lp.A;
    // The ramified point must sit at infinity before the transform.
    if (v == Variant::D6_r2_22_211) base = chart_to_infinity(base, 1.0);
    if (v == Variant::D7_r2_2_11) base = chart_to_infinity(base, 0.0);
    return to_linear_system(laplace_dual(realize(twist(base))));
}

struct TableReport {
    std::vector<TableEntry> entries;
    bool pass = true;
};

inline TableReport correspondence_table_check(unsigned long long seed = 42, int n_draws = 3) {
    struct Row { std::string family; Variant v; std::string partner; };
    const std::vector<Row> rows = {
        {"III(D6)", Variant::D6_r2_22_211, "(2)(2),(2)(11)"},
        {"III(D6)", Variant::D6_r11_22_22, "(2)(11),(2)(2)"},
        {"III(D7)", Variant::D7_r11_2_2, "(2)_2,(2)(11)"},
        {"III(D7)", Variant::D7_r2_2_11, "(11)_2,(2)(2)"},
    };
    util::Rng rng(seed);
    TableReport rep;
    for (const auto& r : rows) {
        TableEntry e{r.family, core::variant_name(r.v), r.partner, "", true};
        for (int d = 0; d < n_draws; ++d) {
            auto th = core::fuchs_fill(r.v, Theta<cplx>{rng.cplx(1.0), rng.cplx(1.0), rng.cplx(1.0), rng.cplx(1.0),
                                                        rng.cplx(1.0), rng.cplx(1.0)});
            core::CanonicalState<cplx> st{rng.cplx(0.7), rng.cplx(0.7), rng.cplx(0.7), rng.cplx(0.7),
                                          1.5 + rng.cplx(0.3), 2.0 + rng.cplx(0.5)};
            auto mp = core::build_matrix_pair(r.v, th, st);
            auto c = htl::classify_system(dual_of_presentation(r.v, th, mp.Q.to_mat(), mp.P.to_mat(), st.t));
            e.observed = c.type;
            e.pass = e.pass && same_points(c.type, r.partner);
        }
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(e);
    }
    // II: both presentations land on the same polynomial type.
    for (Variant v : {Variant::II_r11_22, Variant::II_r2_211}) {
        TableEntry e{"II", core::variant_name(v), "(((2)))(((11)))", "", true};
        for (int d = 0; d < n_draws; ++d) {
            auto th = core::fuchs_fill(v, Theta<cplx>{rng.cplx(1.0), rng.cplx(1.0), rng.cplx(1.0), rng.cplx(1.0),
                                                      rng.cplx(1.0), rng.cplx(1.0)});
            core::CanonicalState<cplx> st{rng.cplx(0.7), rng.cplx(0.7), rng.cplx(0.7), rng.cplx(0.7),
                                          1.5 + rng.cplx(0.3), 2.0 + rng.cplx(0.5)};
            auto mp = core::build_matrix_pair(v, th, st);
            const Mat Q = mp.Q.to_mat(), P = mp.P.to_mat();
            LinearSystem ls = v == Variant::II_r11_22 ? mpII_correspondence(th, Q, P, st.t)
                                                      : mpII_second_route(th, Q, P, st.t);
            e.observed = htl::classify_system(ls).type;
            e.pass = e.pass && same_points(e.observed, e.partner);
        }
        rep.pass = rep.pass && e.pass;
        rep.entries.push_back(e);
    }
    return rep;
}

inline nlohmann::json to_json(const TableReport& r) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : r.entries)
        a.push_back({{"family", e.family}, {"source", e.source}, {"expected", e.partner}, {"observed", e.observed},
                     {"pass", e.pass}});
    return {{"entries", a}, {"pass", r.pass}};
}

}  // namespace mpv::laplace
