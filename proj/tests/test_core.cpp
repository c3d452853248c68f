#include "catch_amalgamated.hpp"

#include "mpv/core/painleve.hpp"
#include "mpv/util/random.hpp"

using namespace mpv;
using namespace mpv::core;
using algebra::cplx;
using algebra::M2;

namespace {
struct Sample {
    Theta<cplx> th;
    CanonicalState<cplx> s;
};

Sample draw(Variant v, util::Rng& r) {
    Sample d;
    d.th = fuchs_fill(v, Theta<cplx>{r.cplx(), r.cplx(), r.cplx(), r.cplx(), r.cplx(), 0.0});
    d.s = {r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), 1.0 + r.cplx(0.3), 2.0 + r.cplx(0.5)};
    return d;
}

std::vector<Variant> every_variant() {
    std::vector<Variant> out;
    for (const auto& i : variant_table) out.push_back(i.v);
    return out;
}
}  // namespace

TEST_CASE("catalog sizes", "[core]") {
    REQUIRE(all_systems.size() == 8);
    REQUIRE(variant_table.size() == 15);
    REQUIRE(lax_catalog().size() == 9);
}

TEST_CASE("variant names parse back, spaces ignored", "[core]") {
    for (Variant v : every_variant()) REQUIRE(parse_variant(variant_name(v)) == v);
    REQUIRE(parse_variant("(2)_2, 22, 211") == Variant::D6_r2_22_211);
    REQUIRE_FALSE(parse_variant("(3)_3").has_value());
}

TEST_CASE("matrix pair satisfies [P,Q] = zeta K exactly", "[core]") {
    util::Rng r(1);
    for (Variant v : every_variant()) {
        auto d = draw(v, r);
        auto mp = build_matrix_pair(v, d.th, d.s);
        auto gap = algebra::comm(mp.P, mp.Q) - mp.zeta * M2<cplx>::K();
        REQUIRE(gap.norm_inf() < 1e-13);
    }
}

TEST_CASE("canonical chart inverts the pair construction", "[core]") {
    util::Rng r(2);
    auto d = draw(Variant::VI_Fuchs, r);
    auto mp = build_matrix_pair(Variant::VI_Fuchs, d.th, d.s);
    auto c = canonical_of(mp.Q, mp.P);
    const std::array<cplx, 5> want{d.s.q1, d.s.p1, d.s.q2, d.s.p2, d.s.u};
    for (int i = 0; i < 5; ++i) REQUIRE(std::abs(c[i] - want[i]) < 1e-14);
    REQUIRE_THROWS_AS(build_matrix_pair(CanonicalState<cplx>{0, 0, 0, 0, 0.0, 1.0}, cplx(0)), std::domain_error);
}

TEST_CASE("Fuchs-Hukuhara fill closes the exponent sum", "[core]") {
    util::Rng r(3);
    for (Variant v : every_variant()) {
        auto th = fuchs_fill(v, Theta<cplx>{r.cplx(), r.cplx(), r.cplx(), r.cplx(), r.cplx(), r.cplx()});
        REQUIRE(std::abs(fuchs_hukuhara_sum(v, th)) < 1e-15);
    }
}

TEST_CASE("Hamilton's equations agree with the non-abelian field on every presentation", "[core]") {
    util::Rng r(4);
    for (Variant v : every_variant()) {
        INFO(variant_name(v));
        for (int k = 0; k < 10; ++k) {
            auto d = draw(v, r);
            auto h = hamiltonian_rhs(v, d.th, d.s);
            auto n = nonabelian_tangent(v, d.th, d.s);
            if (v == Variant::D6_r11_22_22) {
                // This chart carries the gauge term [Theta, .]/t with Theta = diag(th_inf2, th_inf3).
                auto mp = build_matrix_pair(v, d.th, d.s);
                auto [dQ, dP] = nonabelian_rhs(system_of(v), hparams(v, d.th), mp.Q, mp.P, d.s.t);
                const M2<cplx> Th = M2<cplx>::diag(d.th.i2, d.th.i3);
                n.d = canonical_velocity(mp.Q, mp.P, dQ + algebra::comm(Th, mp.Q) / d.s.t,
                                         dP + algebra::comm(Th, mp.P) / d.s.t);
            }
            double scale = 1.0;
            for (cplx z : n.d) scale = std::max(scale, std::abs(z));
            for (int i = 0; i < 5; ++i) REQUIRE(std::abs(h.d[i] - n.d[i]) / scale < 1e-6);
        }
    }
}

TEST_CASE("second Painleve field at the origin", "[core]") {
    HamParams<cplx> hp;
    hp.a = 0.25;
    M2<cplx> O = M2<cplx>::zero();
    auto [dQ, dP] = nonabelian_rhs(SystemId::II, hp, O, O, cplx(3.0));
    REQUIRE(std::abs(dQ(0, 0) + 3.0) < 1e-15);
    REQUIRE(std::abs(dQ(0, 1)) < 1e-15);
    REQUIRE(std::abs(dP(1, 1) - 0.25) < 1e-15);
}

TEST_CASE("fixed singularities are rejected", "[core]") {
    HamParams<cplx> hp;
    M2<cplx> I = M2<cplx>::I();
    REQUIRE_THROWS_AS(hamiltonian(SystemId::VI, hp, I, I, cplx(1.0)), std::domain_error);
    REQUIRE_THROWS_AS(nonabelian_rhs(SystemId::D6, hp, I, I, cplx(0.0)), std::domain_error);
    REQUIRE_NOTHROW(nonabelian_rhs(SystemId::IV, hp, I, I, cplx(0.0)));
    util::Rng r(5);
    auto d = draw(Variant::VI_Fuchs, r);
    d.s.t = cplx(0.5, 0.0);
    REQUIRE_THROWS_AS(integrate(Variant::VI_Fuchs, d.th, d.s, cplx(1.5, 0.0), 10), std::domain_error);
}

TEST_CASE("RK4 converges at fourth order", "[core]") {
    util::Rng r(6);
    auto d = draw(Variant::II_r2_211, r);
    const cplx t1 = d.s.t + 0.4;
    auto ref = integrate(Variant::II_r2_211, d.th, d.s, t1, 400).back();
    const double e1 = state_distance(integrate(Variant::II_r2_211, d.th, d.s, t1, 10).back(), ref);
    const double e2 = state_distance(integrate(Variant::II_r2_211, d.th, d.s, t1, 20).back(), ref);
    REQUIRE(e1 / e2 > 12.0);
    REQUIRE(e1 / e2 < 20.0);
}

TEST_CASE("adaptive stepping agrees with a fine fixed grid", "[core]") {
    util::Rng r(7);
    auto d = draw(Variant::D7_r2_2_11, r);
    const cplx t1 = d.s.t + cplx(0.3, 0.1);
    IntegrateOptions opt;
    opt.adaptive = true;
    auto a = integrate(Variant::D7_r2_2_11, d.th, d.s, t1, 4, opt).back();
    auto b = integrate(Variant::D7_r2_2_11, d.th, d.s, t1, 800).back();
    REQUIRE(state_distance(a, b) < 1e-8);
}

TEST_CASE("canonical and matrix flows stay on the same trajectory", "[core]") {
    util::Rng r(8);
    for (Variant v : {Variant::VI_Fuchs, Variant::V_2_2_22_211, Variant::IV_2_11_22, Variant::D8_r2_r11}) {
        auto d = draw(v, r);
        const cplx t1 = d.s.t + 0.2;
        auto e = integrate(v, d.th, d.s, t1, 100).back();
        auto mp = build_matrix_pair(v, d.th, d.s);
        auto m = integrate_matrix(v, d.th, MatrixState<cplx>{mp.Q, mp.P, d.s.t}, t1, 100).back();
        auto c = canonical_of(m.Q, m.P);
        const std::array<cplx, 5> ce{e.q1, e.p1, e.q2, e.p2, e.u};
        for (int i = 0; i < 5; ++i) REQUIRE(std::abs(c[i] - ce[i]) < 1e-7 * (1.0 + std::abs(ce[i])));
    }
}

TEST_CASE("matrix flow conserves the commutator", "[core]") {
    util::Rng r(9);
    for (auto sid : all_systems) {
        Variant v = Variant::VI_Fuchs;
        for (const auto& i : variant_table)
            if (i.sid == sid) { v = i.v; break; }
        auto d = draw(v, r);
        auto mp = build_matrix_pair(v, d.th, d.s);
        auto path = integrate_matrix(v, d.th, MatrixState<cplx>{mp.Q, mp.P, d.s.t}, d.s.t + 0.1, 200);
        for (const auto& s : path) {
            double size = std::max(s.Q.norm_inf(), s.P.norm_inf());
            REQUIRE((algebra::comm(s.P, s.Q) - mp.zeta * M2<cplx>::K()).norm_inf() <= 1e-9 * (1.0 + size));
        }
    }
}
