#pragma once
// Lax pairs for the nine catalog presentations, the isomonodromy residual,
// Riemann schemes and the gauge U bookkeeping.

#include "mpv/algebra/linear_system.hpp"
#include "mpv/core/painleve.hpp"
#include "mpv/util/random.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace mpv::lax {

using algebra::blocks;
using algebra::cplx;
using algebra::hstack;
using algebra::LinearSystem;
using algebra::Mat;
using algebra::vstack;
using core::Theta;
using core::Variant;

struct LaxPair {
    LinearSystem A;  // x-equation
    LinearSystem B;  // t-equation
    Mat gauge_U;
    std::map<std::string, Mat> aux;
};

namespace detail {
inline Mat I2() { return Mat::Identity(2, 2); }
inline Mat O2() { return Mat::Zero(2, 2); }
inline Mat N4() { return blocks(O2(), I2(), O2(), O2()); }
inline Mat inv(const Mat& m) {
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) throw std::domain_error("singular auxiliary matrix");
    return lu.inverse();
}
}  // namespace detail

inline bool has_lax(Variant v) { return core::info(v).has_lax; }

// State (Q, P, t) enters through the canonical chart; U is the 2x2 gauge.
inline LaxPair build_lax(Variant v, const Theta<cplx>& th, const Mat& Q, const Mat& P, cplx t,
                         const Mat& U = Mat::Identity(2, 2)) {
    using namespace detail;
    if (!has_lax(v)) throw std::invalid_argument("no Lax pair for " + core::variant_name(v));
    const Mat I = I2(), O = O2(), N = N4();
    const Mat Th = (Mat(2, 2) << th.i2, 0.0, 0.0, th.i3).finished();
    const Mat G = blocks(U, O, O, I);
    const Mat Gi = inv(G);
    auto cj = [&](const Mat& m) -> Mat { return Gi * m * G; };

    LaxPair lp;
    lp.gauge_U = U;
    lp.A.dim = lp.B.dim = 4;
    auto& A = lp.A;
    auto& B = lp.B;

    switch (v) {
        case Variant::VI_Fuchs: {
            cplx T = th.z0 + th.z1 + th.zt;
            Mat QPm = Q * P + (T + th.i1) * I;
            Mat Z = inv(th.i1 * I - Th) * (-th.z1 * QPm + QPm * QPm - t * (P * Q + th.zt * I) * P);
            Mat X = blocks(I, O, Z, I), Xi = inv(X);
            Mat A0h = vstack(I, O) * hstack(th.z0 * I, Q / t - I);
            Mat A1h = vstack(I, P * Q - Th) * hstack(th.z1 * I - P * Q + Th, I);
            Mat Ath = vstack(I, t * P) * hstack(th.zt * I + Q * P, -Q / t);
            Mat A0 = cj(Xi * A0h * X), A1 = cj(Xi * A1h * X), At = cj(Xi * Ath * X);
            A.add_pole_term(0.0, 0, A0);
            A.add_pole_term(1.0, 0, A1);
            A.add_pole_term(t, 0, At);
            B.add_pole_term(t, 0, -At);
            lp.aux = {{"Z", Z}, {"A0", A0}, {"A1", A1}, {"At", At}, {"A0_hat", A0h}, {"A1_hat", A1h}, {"At_hat", Ath}};
            break;
        }
        case Variant::D6_r2_22_211: {
            Mat Z = inv(th.i1 * I - Th) * (-Q * P * Q - th.z0 * Q - t * I);
            Mat G1 = blocks(I, O, -Z / t, I), G1i = inv(G1);
            Mat A11 = cj(vstack(I, -Z / t) * hstack(-Z, -t * I));
            Mat A10 = cj(G1 * blocks(P * Q - th.i1 * I, t * P, I, -P * Q + th.i1 * I) * G1i);
            Mat A00 = cj(vstack(P, -(Z * P + Q * P + th.z0 * I) / t) * hstack(-Z - Q, -t * I));
            A.add_pole_term(0.0, 0, A00);
            A.add_pole_term(1.0, 0, A10);
            A.add_pole_term(1.0, 1, A11);
            B.add_pole_term(1.0, 0, -A11 / t);
            lp.aux = {{"Z", Z}, {"G1", G1}, {"A00", A00}, {"A10", A10}, {"A11", A11}};
            break;
        }
        case Variant::D6_r11_22_22: {
            Mat A0 = vstack(O, I) * hstack(I - P, th.z0 * I);
            Mat A1 = vstack(Q * P + th.z1 * I, P) * hstack(I, -Q);
            Mat B1 = blocks(P * Q - th.z0 * I, O, I, -Q * P - th.z1 * I) / t;
            A.add_pole_term(0.0, 0, A0);
            A.add_pole_term(1.0, 0, A1);
            A.add_poly_term(0, t * N);
            B.add_poly_term(0, B1);
            B.add_poly_term(1, N);
            lp.aux = {{"A0", A0}, {"A1", A1}, {"B1", B1}};
            break;
        }
        case Variant::II_r2_211: {
            Mat Z = inv(th.i1 * I - Th) * (P - Q * Q - t * I);
            Mat G0 = blocks(I, O, Z, I), G0i = inv(G0);
            Mat A2 = cj(G0 * N * G0i);
            Mat A1 = cj(G0 * blocks(Q, -P, I, -Q) * G0i);
            Mat A0 = cj(-blocks(th.i1 * I, O, O, Th));
            A.add_pole_term(0.0, 0, A0);
            A.add_pole_term(0.0, 1, A1);
            A.add_pole_term(0.0, 2, A2);
            B.add_pole_term(0.0, 0, A2);
            lp.aux = {{"Z", Z}, {"G0", G0}, {"A0", A0}, {"A1", A1}, {"A2", A2}};
            break;
        }
        case Variant::II_r11_22: {
            Mat A1 = blocks(O, P - t * I, I, O);
            Mat A2 = vstack(-Q, I) * hstack(-P, -P * Q + th.z0 * I);
            Mat B1 = blocks(O, -2.0 * P + t * I, -I, O);
            A.add_pole_term(0.0, 0, A2);
            A.add_poly_term(0, A1);
            A.add_poly_term(1, N);
            B.add_poly_term(0, B1);
            B.add_poly_term(1, -N);
            lp.aux = {{"A0", N}, {"A1", A1}, {"A2", A2}, {"B1", B1}};
            break;
        }
        case Variant::D7_r2_2_11: {
            Mat Z = (Q * P + 2.0 * th.i1 * I) * P + I;
            Mat A0 = cj(t * vstack(I, P) * hstack(-P, I));
            Mat A1 = cj(blocks(-th.i1 * I, -Q, -Z, -Th));
            Mat A2 = cj(blocks(O, O, O, I));
            A.add_pole_term(0.0, 0, A1);
            A.add_pole_term(0.0, 1, A0);
            A.add_poly_term(0, A2);
            B.add_pole_term(0.0, 0, -A0 / t);
            lp.aux = {{"Z", Z}, {"A0", A0}, {"A1", A1}, {"A2", A2}};
            break;
        }
        case Variant::D7_r11_2_2: {
            Mat A0 = t * vstack(O, I) * hstack(P, I);
            Mat A1 = blocks(Q * P, Q, I, -P * Q + th.z0 * I);
            Mat B0 = -blocks(O, Q, O, O) / t;
            Mat B1 = -vstack(O, I) * hstack(P, I);
            A.add_pole_term(0.0, 0, A1);
            A.add_pole_term(0.0, 1, A0);
            A.add_poly_term(0, N);
            B.add_pole_term(0.0, 0, B1);
            B.add_poly_term(0, B0);
            lp.aux = {{"A0", A0}, {"A1", A1}, {"A2", N}, {"B0", B0}, {"B1", B1}};
            break;
        }
        case Variant::I_r11: {
            Mat A1 = blocks(O, Q, I, O);
            Mat A2 = blocks(-P, Q * Q + t * I, -Q, P);
            Mat B1 = blocks(O, 2.0 * Q, I, O);
            A.add_poly_term(0, A2);
            A.add_poly_term(1, A1);
            A.add_poly_term(2, N);
            B.add_poly_term(0, B1);
            B.add_poly_term(1, N);
            lp.aux = {{"A0", N}, {"A1", A1}, {"A2", A2}, {"B1", B1}};
            break;
        }
        case Variant::D8_r2_r11: {
            Mat Qi = inv(Q);
            Mat A0 = blocks(O, O, -t * Qi, O);
            Mat A1 = blocks(Q * P, -Q, I, -P * Q - I);
            Mat B0 = blocks(O, Q, O, O) / t;
            Mat B1 = blocks(O, O, Qi, O);
            A.add_pole_term(0.0, 0, A1);
            A.add_pole_term(0.0, 1, A0);
            A.add_poly_term(0, N);
            B.add_pole_term(0.0, 0, B1);
            B.add_poly_term(0, B0);
            lp.aux = {{"A0", A0}, {"A1", A1}, {"A2", N}, {"B0", B0}, {"B1", B1}};
            break;
        }
        default: break;
    }
    return lp;
}

inline LaxPair build_lax(Variant v, const Theta<cplx>& th, const core::CanonicalState<cplx>& s,
                         const Mat& U = Mat::Identity(2, 2)) {
    auto mp = core::build_matrix_pair(v, th, s);
    return build_lax(v, th, mp.Q.to_mat(), mp.P.to_mat(), s.t, U);
}

// dU/dt for the presentations whose A carries the U + I_2 conjugation.
inline Mat u_matrix_rhs(Variant v, const Theta<cplx>& th, const Mat& Q, const Mat& P, cplx t, const Mat& U) {
    const Mat I = Mat::Identity(2, 2);
    switch (v) {
        case Variant::VI_Fuchs: {
            cplx T = th.z0 + th.z1 + th.zt;
            return (-th.z1 * Q + (Q - t * I) * (P * Q + Q * P) + 2.0 * (T + th.i1) * Q - th.zt * t * I) * U /
                   (t * (t - 1.0));
        }
        case Variant::D6_r2_22_211: return (-2.0 * P * Q + 2.0 * th.i1 * I) * U / t;
        case Variant::II_r2_211: return 2.0 * Q * U;
        case Variant::D7_r2_2_11: return 2.0 * (Q * P + th.i1 * I) * U / t;
        default: return Mat::Zero(2, 2);
    }
}

// Canonical state plus U, advanced together.
struct GaugedState {
    core::CanonicalState<cplx> s;
    Mat U = Mat::Identity(2, 2);
};

inline GaugedState rk4_gauged(Variant v, const Theta<cplx>& th, const GaugedState& y, cplx h) {
    auto f = [&](const GaugedState& g) {
        auto tan = core::hamiltonian_rhs(v, th, g.s);
        auto mp = core::build_matrix_pair(v, th, g.s);
        Mat dU = u_matrix_rhs(v, th, mp.Q.to_mat(), mp.P.to_mat(), g.s.t, g.U);
        return std::make_pair(tan, dU);
    };
    auto step = [](const GaugedState& g, const std::pair<core::Tangent, Mat>& k, cplx a) {
        GaugedState o = g;
        o.s.q1 += a * k.first.d[0];
        o.s.p1 += a * k.first.d[1];
        o.s.q2 += a * k.first.d[2];
        o.s.p2 += a * k.first.d[3];
        o.s.u += a * k.first.d[4];
        o.s.t += a;
        o.U += a * k.second;
        return o;
    };
    auto k1 = f(y);
    auto k2 = f(step(y, k1, h / 2.0));
    auto k3 = f(step(y, k2, h / 2.0));
    auto k4 = f(step(y, k3, h));
    GaugedState o = y;
    o = step(o, k1, h / 6.0);
    o = step(o, k2, h / 3.0);
    o = step(o, k3, h / 3.0);
    o = step(o, k4, h / 6.0);
    o.s.t = y.s.t + h;
    return o;
}

inline std::vector<GaugedState> integrate_gauged(Variant v, const Theta<cplx>& th, const GaugedState& y0, cplx t1,
                                                 int n_steps) {
    std::vector<GaugedState> path{y0};
    const cplx h = n_steps > 0 ? (t1 - y0.s.t) / double(n_steps) : 0.0;
    for (int i = 0; i < n_steps; ++i) path.push_back(rk4_gauged(v, th, path.back(), h));
    return path;
}

// Poles of both halves of the pair; residual samples must avoid them.
inline std::vector<cplx> pole_locations(const LaxPair& lp) {
    std::vector<cplx> out;
    for (const auto& p : lp.A.poles) out.push_back(p.loc);
    for (const auto& p : lp.B.poles) out.push_back(p.loc);
    return out;
}

struct ResidualReport {
    double residual = 0.0;  // max_x || dA/dt - dB/dx + [A,B] ||_inf
    double a_norm = 0.0;    // max_x || A(x) ||_inf
    double relative() const { return residual / (1.0 + a_norm); }
};

// Compatibility residual. dA/dt is a central difference over one RK4 step of
// size +-h along the flow; dB/dx is exact. frozen=true suppresses the motion
// (negative control).
inline ResidualReport compatibility_residual(Variant v, const Theta<cplx>& th, const GaugedState& y,
                                             const std::vector<cplx>& xs, double h = 1e-5, bool frozen = false) {
    GaugedState yp = y, ym = y;
    if (frozen) {
        yp.s.t = y.s.t + h;
        ym.s.t = y.s.t - h;
    } else {
        yp = rk4_gauged(v, th, y, h);
        ym = rk4_gauged(v, th, y, -h);
    }
    LaxPair Lp = build_lax(v, th, yp.s, yp.U);
    LaxPair Lm = build_lax(v, th, ym.s, ym.U);
    LaxPair L = build_lax(v, th, y.s, y.U);
    ResidualReport r;
    for (cplx x : xs) {
        Mat a = rational_matrix_eval(L.A, x), b = rational_matrix_eval(L.B, x);
        Mat dA = (rational_matrix_eval(Lp.A, x) - rational_matrix_eval(Lm.A, x)) / (2.0 * h);
        Mat R = dA - rational_matrix_dx(L.B, x) + a * b - b * a;
        r.residual = std::max(r.residual, algebra::max_abs(R));
        r.a_norm = std::max(r.a_norm, algebra::max_abs(a));
    }
    return r;
}

// Halton samples that keep a distance from every pole of the pair.
inline std::vector<cplx> sample_points(const LaxPair& lp, int n, double min_dist = 0.1) {
    std::vector<cplx> out;
    auto poles = pole_locations(lp);
    for (unsigned i = 1; static_cast<int>(out.size()) < n && i < 10000; ++i) {
        cplx x = util::halton_points(1, 2.5, 0.0, i).front();
        bool ok = true;
        for (cplx p : poles) ok = ok && std::abs(x - p) >= min_dist;
        if (ok) out.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Riemann schemes as printed tables (principal branch for square roots).

struct SchemeColumn {
    std::string location;
    int ramification = 1;
    std::vector<std::vector<cplx>> rows;  // each row ends with the residue exponent
};

struct RiemannScheme {
    std::vector<SchemeColumn> columns;

    cplx fuchs_hukuhara_sum() const {
        cplx s = 0.0;
        for (const auto& c : columns)
            for (const auto& r : c.rows) s += r.back();
        return s;
    }
};

inline RiemannScheme riemann_scheme_of(Variant v, const Theta<cplx>& th, cplx t) {
    if (!has_lax(v)) throw std::invalid_argument("no Riemann scheme for " + core::variant_name(v));
    using Rows = std::vector<std::vector<cplx>>;
    auto regular = [](cplx a) { return Rows{{0.0}, {0.0}, {a}, {a}}; };
    auto inf211 = [&] { return Rows{{th.i1}, {th.i1}, {th.i2}, {th.i3}}; };
    auto half_pair = [](cplx lead, cplx a, cplx b, std::vector<cplx> mid = {}) {
        Rows r;
        for (int sgn : {1, -1})
            for (cplx e : {a, b}) {
                std::vector<cplx> row{double(sgn) * lead};
                for (cplx m : mid) row.push_back(double(sgn) * m);
                row.push_back(e);
                r.push_back(row);
            }
        return r;
    };
    const cplx h2 = th.i2 / 2.0, h3 = th.i3 / 2.0;
    RiemannScheme rs;
    switch (v) {
        case Variant::VI_Fuchs:
            rs.columns = {{"0", 1, regular(th.z0)}, {"1", 1, regular(th.z1)}, {"t", 1, regular(th.zt)}, {"inf", 1, inf211()}};
            break;
        case Variant::D6_r2_22_211:
            rs.columns = {{"0", 1, regular(th.z0)}, {"1", 2, half_pair(std::sqrt(t), 0.0, 0.0)}, {"inf", 1, inf211()}};
            break;
        case Variant::D6_r11_22_22:
            rs.columns = {{"0", 1, regular(th.z0)}, {"1", 1, regular(th.z1)}, {"inf", 2, half_pair(std::sqrt(t), h2, h3)}};
            break;
        case Variant::II_r2_211:
            rs.columns = {{"0", 2, half_pair(1.0, 0.0, 0.0, {0.0, -t / 2.0})}, {"inf", 1, inf211()}};
            break;
        case Variant::II_r11_22:
            rs.columns = {{"0", 1, regular(th.z0)}, {"inf", 2, half_pair(1.0, h2, h3, {0.0, -t / 2.0})}};
            break;
        case Variant::D7_r2_2_11:
            rs.columns = {{"0", 2, half_pair(std::sqrt(-t), 0.0, 0.0)},
                          {"inf", 1, Rows{{0.0, th.i1}, {0.0, th.i1}, {-1.0, th.i2}, {-1.0, th.i3}}}};
            break;
        case Variant::D7_r11_2_2:
            rs.columns = {{"0", 1, Rows{{0.0, 0.0}, {0.0, 0.0}, {t, th.z0}, {t, th.z0}}},
                          {"inf", 2, half_pair(1.0, h2, h3)}};
            break;
        case Variant::I_r11: rs.columns = {{"inf", 2, half_pair(1.0, h2, h3, {0.0, 0.0, 0.0, t / 2.0})}}; break;
        case Variant::D8_r2_r11:
            rs.columns = {{"0", 2, half_pair(std::sqrt(t), 0.0, 0.0)}, {"inf", 2, half_pair(1.0, h2, h3)}};
            break;
        default: break;
    }
    return rs;
}

inline nlohmann::json to_json(const RiemannScheme& rs) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : rs.columns) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : c.rows) {
            nlohmann::json row = nlohmann::json::array();
            for (cplx z : r) row.push_back(algebra::to_json(z));
            rows.push_back(row);
        }
        cols.push_back({{"location", c.location}, {"ramification", c.ramification}, {"rows", rows}});
    }
    return {{"columns", cols}};
}

// ---------------------------------------------------------------------------
// Joint integration of the scalar u-equation (inside the canonical flow) and
// the matrix U-equation; consistency means the pair rebuilt from both stays
// isomonodromic along the whole trajectory.
inline double u_gauge_check(Variant v, const Theta<cplx>& th, const std::vector<GaugedState>& trajectory,
                            int n_x = 4) {
    double worst = 0.0;
    for (const auto& g : trajectory) {
        LaxPair lp = build_lax(v, th, g.s, g.U);
        auto xs = sample_points(lp, n_x);
        worst = std::max(worst, compatibility_residual(v, th, g, xs).relative());
        if (std::abs(Eigen::FullPivLU<Mat>(g.U).determinant()) < 1e-12) throw std::domain_error("U became singular");
    }
    return worst;
}

}  // namespace mpv::lax
