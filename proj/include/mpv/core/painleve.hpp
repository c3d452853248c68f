#pragma once
// Matrix Painleve Hamiltonians, their non-abelian vector fields, the bridge
// between canonical scalars and matrix pairs, and RK4 integration.

#include "mpv/algebra/matrix.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mpv::core {

using algebra::cplx;
using algebra::lift;
using algebra::M2;
using algebra::mag;

enum class SystemId { VI, V, IV, D6, D7, D8, II, I };

inline constexpr std::array<SystemId, 8> all_systems{SystemId::VI, SystemId::V,  SystemId::IV, SystemId::D6,
                                                      SystemId::D7, SystemId::D8, SystemId::II, SystemId::I};

inline std::string system_name(SystemId s) {
    switch (s) {
        case SystemId::VI: return "MatVI";
        case SystemId::V: return "MatV";
        case SystemId::IV: return "MatIV";
        case SystemId::D6: return "MatIII_D6";
        case SystemId::D7: return "MatIII_D7";
        case SystemId::D8: return "MatIII_D8";
        case SystemId::II: return "MatII";
        case SystemId::I: return "MatI";
    }
    return "?";
}

// Spectral-type presentations. The first nine carry Lax pairs here; the rest
// only appear as degeneration sources.
enum class Variant {
    VI_Fuchs,        // 22,22,22,211
    D6_r2_22_211,    // (2)_2,22,211
    D6_r11_22_22,    // (11)_2,22,22
    II_r2_211,       // (((2)))_2,211
    II_r11_22,       // (((11)))_2,22
    D7_r2_2_11,      // (2)_2,(2)(11)
    D7_r11_2_2,      // (11)_2,(2)(2)
    I_r11,           // (((((11)))))_2
    D8_r2_r11,       // (2)_2,(11)_2
    V_2_2_22_211,    // (2)(2),22,211
    V_2_11_22_22,    // (2)(11),22,22
    IV_2_2_211,      // ((2))((2)),211
    IV_2_11_22,      // ((2))((11)),22
    D6_2_2_2_11,     // (2)(2),(2)(11)
    II_2_11,         // (((2)))(((11)))
};

struct VariantInfo {
    Variant v;
    const char* name;
    SystemId sid;
    bool has_lax;
    const char* pattern;
};

inline constexpr std::array<VariantInfo, 15> variant_table{{
    {Variant::VI_Fuchs, "22,22,22,211", SystemId::VI, true, "1+1+1+1"},
    {Variant::D6_r2_22_211, "(2)_2,22,211", SystemId::D6, true, "3/2+1+1"},
    {Variant::D6_r11_22_22, "(11)_2,22,22", SystemId::D6, true, "3/2+1+1"},
    {Variant::II_r2_211, "(((2)))_2,211", SystemId::II, true, "5/2+1"},
    {Variant::II_r11_22, "(((11)))_2,22", SystemId::II, true, "5/2+1"},
    {Variant::D7_r2_2_11, "(2)_2,(2)(11)", SystemId::D7, true, "3/2+2"},
    {Variant::D7_r11_2_2, "(11)_2,(2)(2)", SystemId::D7, true, "3/2+2"},
    {Variant::I_r11, "(((((11)))))_2", SystemId::I, true, "7/2"},
    {Variant::D8_r2_r11, "(2)_2,(11)_2", SystemId::D8, true, "3/2+3/2"},
    {Variant::V_2_2_22_211, "(2)(2),22,211", SystemId::V, false, "2+1+1"},
    {Variant::V_2_11_22_22, "(2)(11),22,22", SystemId::V, false, "2+1+1"},
    {Variant::IV_2_2_211, "((2))((2)),211", SystemId::IV, false, "3+1"},
    {Variant::IV_2_11_22, "((2))((11)),22", SystemId::IV, false, "3+1"},
    {Variant::D6_2_2_2_11, "(2)(2),(2)(11)", SystemId::D6, false, "2+2"},
    {Variant::II_2_11, "(((2)))(((11)))", SystemId::II, false, "4"},
}};

inline const VariantInfo& info(Variant v) { return variant_table[static_cast<size_t>(v)]; }
inline std::string variant_name(Variant v) { return info(v).name; }
inline SystemId system_of(Variant v) { return info(v).sid; }

inline std::optional<Variant> parse_variant(const std::string& s) {
    std::string k;
    for (char c : s)
        if (c != ' ') k += c;
    for (const auto& i : variant_table)
        if (k == i.name) return i.v;
    return std::nullopt;
}

inline std::vector<Variant> lax_catalog() {
    std::vector<Variant> out;
    for (const auto& i : variant_table)
        if (i.has_lax) out.push_back(i.v);
    return out;
}

// One presentation per Hamiltonian, used when a check is stated per system.
inline Variant representative(SystemId s) {
    switch (s) {
        case SystemId::VI: return Variant::VI_Fuchs;
        case SystemId::V: return Variant::V_2_2_22_211;
        case SystemId::IV: return Variant::IV_2_2_211;
        case SystemId::D6: return Variant::D6_r2_22_211;
        case SystemId::D7: return Variant::D7_r2_2_11;
        case SystemId::D8: return Variant::D8_r2_r11;
        case SystemId::II: return Variant::II_r2_211;
        case SystemId::I: return Variant::I_r11;
    }
    return Variant::VI_Fuchs;
}

// Residue exponents. Entries a presentation does not use stay zero.
template <class C>
struct Theta {
    C z0{}, z1{}, zt{}, i1{}, i2{}, i3{};

    template <class D>
    Theta<D> cast() const {
        auto f = [](const C& z) { return D(typename D::value_type(z.real()), typename D::value_type(z.imag())); };
        return {f(z0), f(z1), f(zt), f(i1), f(i2), f(i3)};
    }
};

template <class C>
struct HamParams {
    C a{}, b{}, g{}, d{}, z{};
};

// Which theta entries are free parameters of a presentation (i3 is always
// fixed by the Fuchs-Hukuhara relation).
struct ThetaUse {
    bool z0, z1, zt, i1;
};

inline ThetaUse theta_use(Variant v) {
    switch (v) {
        case Variant::VI_Fuchs: return {true, true, true, true};
        case Variant::D6_r2_22_211: return {true, false, false, true};
        case Variant::D6_r11_22_22: return {true, true, false, false};
        case Variant::II_r2_211: return {false, false, false, true};
        case Variant::II_r11_22: return {true, false, false, false};
        case Variant::D7_r2_2_11: return {false, false, false, true};
        case Variant::D7_r11_2_2: return {true, false, false, false};
        case Variant::I_r11: return {false, false, false, false};
        case Variant::D8_r2_r11: return {false, false, false, false};
        case Variant::V_2_2_22_211:
        case Variant::V_2_11_22_22: return {true, true, false, true};
        case Variant::IV_2_2_211:
        case Variant::IV_2_11_22:
        case Variant::D6_2_2_2_11: return {true, false, false, true};
        case Variant::II_2_11: return {false, false, false, true};
    }
    return {};
}

// Sum of all residue exponents; zero on valid parameters.
template <class C>
C fuchs_hukuhara_sum(Variant v, const Theta<C>& t) {
    const C two(2);
    C s = t.i2 + t.i3;
    auto u = theta_use(v);
    if (u.z0) s += two * t.z0;
    if (u.z1) s += two * t.z1;
    if (u.zt) s += two * t.zt;
    if (u.i1) s += two * t.i1;
    return s;
}

// Zero the unused entries and solve the relation for i3.
template <class C>
Theta<C> fuchs_fill(Variant v, Theta<C> t) {
    auto u = theta_use(v);
    if (!u.z0) t.z0 = C(0);
    if (!u.z1) t.z1 = C(0);
    if (!u.zt) t.zt = C(0);
    if (!u.i1) t.i1 = C(0);
    t.i3 = C(0);
    t.i3 = -fuchs_hukuhara_sum(v, t);
    return t;
}

// Parameter dictionary (alpha, beta, gamma, delta, zeta) of each presentation.
template <class C>
HamParams<C> hparams(Variant v, const Theta<C>& t) {
    const C one(1), two(2);
    HamParams<C> h;
    switch (v) {
        case Variant::VI_Fuchs: {
            C th = t.z0 + t.z1 + t.zt;
            h.a = -t.z0 - t.zt - t.i1;
            h.b = -t.z1;
            h.g = t.zt;
            h.d = t.z0 + one;
            h.z = th + t.i1 + t.i2;
            break;
        }
        case Variant::D6_r2_22_211:
            h.a = t.z0;
            h.b = -two * t.i1 + one;
            h.z = t.z0 + t.i1 + t.i2;
            break;
        case Variant::D6_r11_22_22:
            h.a = t.z1;
            h.b = t.z1 - t.z0;
            h.z = t.z0 + t.z1 + t.i2;
            break;
        case Variant::II_r2_211:
            h.a = -two * t.i1 + one;
            h.z = t.i1 + t.i2;
            break;
        case Variant::II_r11_22:
            h.a = -t.z0;
            h.z = t.z0 + t.i2;
            break;
        case Variant::D7_r2_2_11:
            h.a = two * t.i1;
            h.z = t.i1 + t.i2;
            break;
        case Variant::D7_r11_2_2:
            h.a = -t.z0;
            h.z = t.z0 + t.i2;
            break;
        case Variant::I_r11:
        case Variant::D8_r2_r11: h.z = t.i2; break;
        case Variant::V_2_2_22_211:
            h.a = t.z0 + t.i1 - one;
            h.b = t.z1 + t.i2 + t.i3;
            h.g = t.z1 + t.i1;
            h.z = t.z0 + t.z1 + t.i1 + t.i2;
            break;
        case Variant::V_2_11_22_22:
            h.a = -t.z1 - t.i1;
            h.b = t.z0 - t.z1;
            h.g = t.z1;
            h.z = t.z0 + t.z1 + t.i1 + t.i2;
            break;
        case Variant::IV_2_2_211:
            h.a = t.z0 + two * t.i1 - one;
            h.b = t.i1;
            h.z = t.z0 + t.i1 + t.i2;
            break;
        case Variant::IV_2_11_22:
            h.a = -t.i1;
            h.b = t.z0;
            h.z = t.z0 + t.i1 + t.i2;
            break;
        case Variant::D6_2_2_2_11:
            h.a = t.z0 + t.i1;
            h.b = t.z0 + two * t.i1;
            h.z = t.z0 + t.i1 + t.i2;
            break;
        case Variant::II_2_11:
            h.a = t.i1;
            h.z = t.i1 + t.i2;
            break;
    }
    return h;
}

template <class C>
C zeta_of(Variant v, const Theta<C>& t) {
    return hparams(v, t).z;
}

template <class C>
struct CanonicalState {
    C q1{}, p1{}, q2{}, p2{}, u{C(1)}, t{};
};

template <class C>
struct MatrixPair {
    M2<C> Q, P;
    C zeta{};
};

// Q = [[q1, u], [-q2/u, q1]],  P = [[p1/2, -p2 u], [(p2 q2 - c)/u, p1/2]]
template <class C>
MatrixPair<C> build_matrix_pair(const CanonicalState<C>& s, const C& c) {
    if (mag(s.u) == 0.0) throw std::domain_error("build_matrix_pair: u = 0");
    const C half = C(1) / C(2);
    MatrixPair<C> mp;
    mp.Q = {s.q1, s.u, -s.q2 / s.u, s.q1};
    mp.P = {s.p1 * half, -s.p2 * s.u, (s.p2 * s.q2 - c) / s.u, s.p1 * half};
    mp.zeta = c;
    return mp;
}

template <class C>
MatrixPair<C> build_matrix_pair(Variant v, const Theta<C>& th, const CanonicalState<C>& s) {
    return build_matrix_pair(s, zeta_of(v, th));
}

// Canonical scalars recovered from a pair in the gauge above.
template <class C>
std::array<C, 5> canonical_of(const M2<C>& Q, const M2<C>& P) {
    return {Q(0, 0), P(0, 0) + P(1, 1), -Q(0, 1) * Q(1, 0), -P(0, 1) / Q(0, 1), Q(0, 1)};
}

// Derivative of canonical_of along (dQ, dP); the last entry is du.
template <class C>
std::array<C, 5> canonical_velocity(const M2<C>& Q, const M2<C>& P, const M2<C>& dQ, const M2<C>& dP) {
    C u = Q(0, 1);
    return {dQ(0, 0), dP(0, 0) + dP(1, 1), -(dQ(0, 1) * Q(1, 0) + Q(0, 1) * dQ(1, 0)),
            -(dP(0, 1) * u - P(0, 1) * dQ(0, 1)) / (u * u), dQ(0, 1)};
}

inline bool t_admissible(SystemId s, cplx t, double dist = 1e-8) {
    switch (s) {
        case SystemId::VI: return std::abs(t) > dist && std::abs(t - 1.0) > dist;
        case SystemId::V:
        case SystemId::D6:
        case SystemId::D7:
        case SystemId::D8: return std::abs(t) > dist;
        default: return true;
    }
}

inline std::vector<cplx> fixed_singularities(SystemId s) {
    switch (s) {
        case SystemId::VI: return {0.0, 1.0};
        case SystemId::V:
        case SystemId::D6:
        case SystemId::D7:
        case SystemId::D8: return {0.0};
        default: return {};
    }
}

template <class C>
void check_t(SystemId s, const C& t) {
    if (!t_admissible(s, algebra::lower(t))) throw std::domain_error("t at a fixed singularity of " + system_name(s));
}

// Trace Hamiltonians. Where the displayed form is t H or t(t-1) H, H itself
// is returned.
template <class C>
C hamiltonian(SystemId s, const HamParams<C>& h, const M2<C>& Q, const M2<C>& P, const C& t) {
    check_t(s, t);
    using M = M2<C>;
    const M I = M::I();
    const C two(2);
    switch (s) {
        case SystemId::VI: {
            M inner = (h.d * I - h.z * M::K()) * Q * (Q - I) - (two * h.a + h.b + h.g + h.d) * Q * (Q - t) +
                      h.g * (Q - I) * (Q - t);
            C v = tr(Q * (Q - I) * (Q - t) * P * P + inner * P + h.a * (h.a + h.b) * Q);
            return v / (t * (t - C(1)));
        }
        case SystemId::V: return tr(P * (P + t) * Q * (Q - I) + h.b * P * Q + h.g * P - (h.a + h.g) * t * Q) / t;
        case SystemId::IV: return tr(P * Q * (P - Q - t) + h.b * P + h.a * Q);
        case SystemId::D6: return tr(P * P * Q * Q - (Q * Q - h.b * Q - t * I) * P - h.a * Q) / t;
        case SystemId::D7: return tr(P * P * Q * Q + h.a * P * Q + t * P + Q) / t;
        case SystemId::D8: return tr(P * P * Q * Q + P * Q - Q - t * Q.inverse()) / t;
        case SystemId::II: return tr(P * P - (Q * Q + t * I) * P - h.a * Q);
        case SystemId::I: return tr(P * P - Q * Q * Q - t * Q);
    }
    return C(0);
}

// Non-abelian vector fields (dQ/dt, dP/dt).
template <class C>
std::pair<M2<C>, M2<C>> nonabelian_rhs(SystemId s, const HamParams<C>& h, const M2<C>& Q, const M2<C>& P,
                                       const C& t) {
    check_t(s, t);
    using M = M2<C>;
    const M I = M::I();
    const C two(2), three(3);
    switch (s) {
        case SystemId::VI: {
            C e = -two * h.a - h.b - h.g - h.d;
            M Qt = Q - t, Q1 = Q - I;
            M dQ = Qt * P * Q * Q1 + Q * Q1 * P * Qt + h.d * Q * Q1 + e * Q * Qt + h.g * Q1 * Qt;
            M dP = -(Q1 * P * Qt * P) - P * Qt * P * Q - P * Q * Q1 * P -
                   (h.d * (P * Q1 + Q * P) + e * (P * Qt + Q * P) + h.g * (P * Qt + Q1 * P)) - h.a * (h.a + h.b) * I;
            C den = t * (t - C(1));
            return {dQ / den, dP / den};
        }
        case SystemId::V: {
            M Pt = P + t, Q1 = Q - I;
            M dQ = Q * Q1 * Pt + P * Q * Q1 + h.b * Q + h.g * I;
            M dP = -(Q1 * P * Pt) - P * Pt * Q - h.b * P + (h.a + h.g) * t * I;
            return {dQ / t, dP / t};
        }
        case SystemId::IV:
            return {Q * (P - Q - t) + P * Q + h.b * I, P * (Q + t - P) + Q * P - h.a * I};
        case SystemId::D6:
            return {(two * Q * P * Q - Q * Q + h.b * Q + t * I) / t,
                    (-two * P * Q * P + P * Q + Q * P - h.b * P + h.a * I) / t};
        case SystemId::D7:
            return {(two * Q * P * Q + h.a * Q + t * I) / t, (-two * P * Q * P - h.a * P - I) / t};
        case SystemId::D8: {
            M Qi = Q.inverse();
            return {(two * Q * P * Q + Q) / t, (-two * P * Q * P - P + I - t * Qi * Qi) / t};
        }
        case SystemId::II: return {two * P - Q * Q - t * I, P * Q + Q * P + h.a * I};
        case SystemId::I: return {two * P, three * Q * Q + t * I};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Canonical flow. Scalar u-equations are available for the Lax catalog; for
// the remaining presentations du is read off the non-abelian field.

inline cplx u_equation(Variant v, const Theta<cplx>& th, const CanonicalState<cplx>& s) {
    const cplx q1 = s.q1, p1 = s.p1, q2 = s.q2, p2 = s.p2, u = s.u, t = s.t;
    switch (v) {
        case Variant::VI_Fuchs: {
            cplx r = -2.0 * q1 * (q1 - 1.0) * (q1 - t) * p2 +
                     (q1 * (q1 - 1.0) + q1 * (q1 - t) + (q1 - 1.0) * (q1 - t) - q2) * p1 +
                     (2.0 * p2 * q2 - th.z1 - th.zt - 2.0 * th.i2) * q1 +
                     (2.0 * p2 * q2 - th.z0 - 2.0 * th.z1 - th.zt - 2.0 * th.i1 - 2.0 * th.i2 + 1.0) * (q1 - 1.0) +
                     (2.0 * p2 * q2 + th.z0 + th.z1 + 2.0 * th.zt + 2.0 * th.i1 - 1.0) * (q1 - t);
            return r * u / (t * (t - 1.0));
        }
        case Variant::D6_r2_22_211:
            return u * (-2.0 * q1 * (q1 * p2 + 1.0) + 2.0 * (p1 * q1 + p2 * q2) - 2.0 * (th.z0 + 2.0 * th.i1 + th.i2) + 1.0) /
                   t;
        case Variant::D6_r11_22_22: return u * (2.0 * (p1 * q1 + p2 * q2) - 2.0 * q1 * (q1 * p2 + 1.0) - th.z0 + th.z1) / t;
        case Variant::II_r2_211:
        case Variant::II_r11_22: return u * (-2.0 * (q1 + p2));
        case Variant::D7_r2_2_11: return u * 2.0 * (p1 * q1 + p2 * q2 - p2 * q1 * q1 - th.i2) / t;
        case Variant::D7_r11_2_2:
            return u * (2.0 * p1 * q1 + 2.0 * p2 * q2 - 2.0 * p2 * q1 * q1 - 3.0 * th.z0 - 2.0 * th.i2) / t;
        case Variant::I_r11: return u * (-2.0 * p2);
        case Variant::D8_r2_r11: return u * (2.0 * p1 * q1 + 2.0 * p2 * q2 - 2.0 * p2 * q1 * q1 - 2.0 * th.i2 + 1.0) / t;
        default: {
            auto mp = build_matrix_pair(v, th, s);
            auto [dQ, dP] = nonabelian_rhs(system_of(v), hparams(v, th), mp.Q, mp.P, s.t);
            return dQ(0, 1);
        }
    }
}

struct Tangent {
    std::array<cplx, 5> d{};  // dq1, dp1, dq2, dp2, du
};

// Hamilton's equations by central differences of H on the canonical chart.
inline Tangent hamiltonian_rhs(Variant v, const Theta<cplx>& th, const CanonicalState<cplx>& s) {
    const auto sid = system_of(v);
    const auto hp = hparams(v, th);
    auto H = [&](const CanonicalState<cplx>& x) {
        auto mp = build_matrix_pair(x, hp.z);
        return hamiltonian(sid, hp, mp.Q, mp.P, x.t);
    };
    std::array<cplx, 4> g{};
    for (int i = 0; i < 4; ++i) {
        CanonicalState<cplx> a = s, b = s;
        cplx* pa[4] = {&a.q1, &a.p1, &a.q2, &a.p2};
        cplx* pb[4] = {&b.q1, &b.p1, &b.q2, &b.p2};
        double h = 1e-6 * std::max(1.0, std::abs(*pa[i]));
        *pa[i] += h;
        *pb[i] -= h;
        g[i] = (H(a) - H(b)) / (2.0 * h);
    }
    Tangent out;
    out.d = {g[1], -g[0], g[3], -g[2], u_equation(v, th, s)};
    return out;
}

// Non-abelian field pushed to the canonical chart.
inline Tangent nonabelian_tangent(Variant v, const Theta<cplx>& th, const CanonicalState<cplx>& s) {
    auto mp = build_matrix_pair(v, th, s);
    auto [dQ, dP] = nonabelian_rhs(system_of(v), hparams(v, th), mp.Q, mp.P, s.t);
    Tangent out;
    out.d = canonical_velocity(mp.Q, mp.P, dQ, dP);
    return out;
}

// ---------------------------------------------------------------------------
// Integration along the straight segment t0 -> t1.

struct IntegrateOptions {
    bool adaptive = false;  // step-doubling error control
    double step_tol = 1e-10;
    int max_halvings = 10;
};

namespace detail {
inline void check_path(SystemId sid, cplx t0, cplx t1) {
    for (cplx c : fixed_singularities(sid)) {
        cplx d = t1 - t0;
        double s = std::abs(d) == 0.0 ? 0.0 : std::clamp(std::real((c - t0) * std::conj(d)) / std::norm(d), 0.0, 1.0);
        if (std::abs(t0 + s * d - c) < 1e-3) throw std::domain_error("integration path passes near a fixed singularity");
    }
}

}  // namespace detail

using State = CanonicalState<cplx>;

inline State rk4_canonical(Variant v, const Theta<cplx>& th, const State& y, cplx h) {
    auto f = [&](const State& s, cplx) {
        if (std::abs(s.u) < 1e-8) throw std::domain_error("u approaches 0");
        if (!t_admissible(system_of(v), s.t)) throw std::domain_error("t approaches a fixed singularity");
        return hamiltonian_rhs(v, th, s);
    };
    auto axpy = [](const State& s, const Tangent& k, cplx a) {
        State o = s;
        o.q1 += a * k.d[0];
        o.p1 += a * k.d[1];
        o.q2 += a * k.d[2];
        o.p2 += a * k.d[3];
        o.u += a * k.d[4];
        return o;
    };
    auto k1 = f(y, 0.0);
    State y2 = axpy(y, k1, h / 2.0);
    y2.t = y.t + h / 2.0;
    auto k2 = f(y2, 0.0);
    State y3 = axpy(y, k2, h / 2.0);
    y3.t = y.t + h / 2.0;
    auto k3 = f(y3, 0.0);
    State y4 = axpy(y, k3, h);
    y4.t = y.t + h;
    auto k4 = f(y4, 0.0);
    State o = y;
    for (int i = 0; i < 5; ++i) {
        cplx inc = h / 6.0 * (k1.d[i] + 2.0 * k2.d[i] + 2.0 * k3.d[i] + k4.d[i]);
        cplx* p[5] = {&o.q1, &o.p1, &o.q2, &o.p2, &o.u};
        *p[i] += inc;
    }
    o.t = y.t + h;
    return o;
}

inline double state_distance(const State& a, const State& b) {
    return std::max({std::abs(a.q1 - b.q1), std::abs(a.p1 - b.p1), std::abs(a.q2 - b.q2), std::abs(a.p2 - b.p2),
                     std::abs(a.u - b.u)});
}

// Canonical-chart trajectory driven by the Hamiltonian field.
inline std::vector<State> integrate(Variant v, const Theta<cplx>& th, const State& s0, cplx t1, int n_steps,
                                    const IntegrateOptions& opt = {}) {
    std::vector<State> path{s0};
    if (n_steps <= 0) return path;
    detail::check_path(system_of(v), s0.t, t1);
    const cplx H = (t1 - s0.t) / double(n_steps);
    State y = s0;
    for (int n = 0; n < n_steps; ++n) {
        if (!opt.adaptive) {
            y = rk4_canonical(v, th, y, H);
        } else {
            // Sub-step until one full step and two half steps agree.
            cplx remaining = H;
            while (std::abs(remaining) > 1e-15 * std::abs(H)) {
                cplx h = remaining;
                int halvings = 0;
                for (;;) {
                    State a = rk4_canonical(v, th, y, h);
                    State b = rk4_canonical(v, th, rk4_canonical(v, th, y, h / 2.0), h / 2.0);
                    if (state_distance(a, b) <= opt.step_tol * (1.0 + std::abs(b.q1) + std::abs(b.p1))) {
                        y = b;
                        remaining -= h;
                        break;
                    }
                    if (++halvings > opt.max_halvings) throw std::runtime_error("step rejected after 10 halvings");
                    h /= 2.0;
                }
            }
        }
        path.push_back(y);
    }
    return path;
}

// Matrix trajectory driven by the non-abelian field; generic in the scalar.
template <class C>
struct MatrixState {
    M2<C> Q, P;
    C t{};
};

template <class C>
MatrixState<C> rk4_matrix(SystemId sid, const HamParams<C>& hp, const MatrixState<C>& y, const C& h) {
    const C half = C(1) / C(2), sixth = C(1) / C(6), two(2);
    auto f = [&](const M2<C>& Q, const M2<C>& P, const C& t) { return nonabelian_rhs(sid, hp, Q, P, t); };
    auto [a1, b1] = f(y.Q, y.P, y.t);
    auto [a2, b2] = f(y.Q + h * half * a1, y.P + h * half * b1, y.t + h * half);
    auto [a3, b3] = f(y.Q + h * half * a2, y.P + h * half * b2, y.t + h * half);
    auto [a4, b4] = f(y.Q + h * a3, y.P + h * b3, y.t + h);
    MatrixState<C> o;
    o.Q = y.Q + h * sixth * (a1 + two * a2 + two * a3 + a4);
    o.P = y.P + h * sixth * (b1 + two * b2 + two * b3 + b4);
    o.t = y.t + h;
    return o;
}

template <class C>
std::vector<MatrixState<C>> integrate_matrix(Variant v, const Theta<C>& th, const MatrixState<C>& s0, const C& t1,
                                             int n_steps) {
    std::vector<MatrixState<C>> path{s0};
    if (n_steps <= 0) return path;
    detail::check_path(system_of(v), algebra::lower(s0.t), algebra::lower(t1));
    const auto hp = hparams(v, th);
    const C h = (t1 - s0.t) / C(n_steps);
    for (int n = 0; n < n_steps; ++n) path.push_back(rk4_matrix(system_of(v), hp, path.back(), h));
    return path;
}

}  // namespace mpv::core
