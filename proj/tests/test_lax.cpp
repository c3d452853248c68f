#include "catch_amalgamated.hpp"

#include "mpv/lax/lax.hpp"

#include <Eigen/Eigenvalues>

using namespace mpv;
using algebra::cplx;
using algebra::Mat;
using core::Theta;
using core::Variant;

namespace {
struct Sample {
    Theta<cplx> th;
    lax::GaugedState g;
};

Sample draw(Variant v, util::Rng& r, bool gauge = true) {
    Sample d;
    d.th = core::fuchs_fill(v, Theta<cplx>{r.cplx(), r.cplx(), r.cplx(), r.cplx(), r.cplx(), 0.0});
    d.g.s = {r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), 1.0 + r.cplx(0.3), 2.0 + r.cplx(0.5)};
    if (gauge) d.g.U << 1.0 + r.cplx(0.3), r.cplx(0.3), r.cplx(0.3), 1.0 + r.cplx(0.3);
    return d;
}

// Characteristic polynomial coefficients c_k of det(l I - M) = sum c_k l^k
// by Faddeev-LeVerrier.
std::vector<cplx> charpoly(const Mat& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<cplx> c(n + 1);
    c[n] = 1.0;
    Mat Mk = Mat::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
        Mk = m * Mk + c[n - k + 1] * Mat::Identity(n, n);
        c[n - k] = -(m * Mk).trace() / double(k);
    }
    return c;
}

std::vector<cplx> sorted_eigs(const Mat& m) {
    Eigen::ComplexEigenSolver<Mat> es(m, false);
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
    return v;
}
}  // namespace

TEST_CASE("compatibility residual vanishes along the flow", "[lax]") {
    util::Rng r(1);
    for (Variant v : core::lax_catalog()) {
        INFO(core::variant_name(v));
        for (int k = 0; k < 5; ++k) {
            auto d = draw(v, r);
            auto lp = lax::build_lax(v, d.th, d.g.s, d.g.U);
            auto xs = lax::sample_points(lp, 10);
            REQUIRE(xs.size() == 10);
            auto res = lax::compatibility_residual(v, d.th, d.g, xs);
            REQUIRE(res.relative() <= 1e-6);
        }
    }
}

TEST_CASE("frozen state leaves a residual", "[lax][negative]") {
    util::Rng r(2);
    for (Variant v : core::lax_catalog()) {
        auto d = draw(v, r);
        auto xs = lax::sample_points(lax::build_lax(v, d.th, d.g.s, d.g.U), 10);
        REQUIRE(lax::compatibility_residual(v, d.th, d.g, xs, 1e-5, true).relative() > 1e-3);
    }
}

TEST_CASE("sixth system at zero parameters and zero momenta", "[lax]") {
    // The flow stays finite. The pair needs theta_inf_1 - diag(theta_inf_2, theta_inf_3)
    // to be invertible, so at all-zero parameters it is undefined and must say so.
    util::Rng r(3);
    Theta<cplx> th{};
    core::CanonicalState<cplx> s{1.0, 0.0, 0.0, 0.0, 1.0, cplx(2.0, 0.3)};
    REQUIRE(std::abs(core::zeta_of(Variant::VI_Fuchs, th)) == 0.0);
    auto mp = core::build_matrix_pair(Variant::VI_Fuchs, th, s);
    REQUIRE(mp.P.norm_inf() == 0.0);
    REQUIRE(std::abs(mp.Q(0, 0) - 1.0) == 0.0);
    REQUIRE(std::abs(mp.Q(0, 1) - 1.0) == 0.0);
    REQUIRE(std::abs(mp.Q(1, 0)) == 0.0);
    for (const auto& st : core::integrate(Variant::VI_Fuchs, th, s, s.t + cplx(0.2, 0.1), 50))
        for (cplx z : {st.q1, st.p1, st.q2, st.p2, st.u}) REQUIRE(std::isfinite(std::abs(z)));
    REQUIRE_THROWS_AS(lax::build_lax(Variant::VI_Fuchs, th, s), std::domain_error);

    // Zero local exponents with generic exponents at infinity are fine.
    th.i1 = r.cplx();
    th.i2 = r.cplx();
    th = core::fuchs_fill(Variant::VI_Fuchs, th);
    lax::GaugedState g;
    g.s = s;
    auto lp = lax::build_lax(Variant::VI_Fuchs, th, g.s);
    auto res = lax::compatibility_residual(Variant::VI_Fuchs, th, g, lax::sample_points(lp, 10));
    REQUIRE(std::isfinite(res.residual));
    REQUIRE(res.relative() <= 1e-6);
}

TEST_CASE("sixth system residues have rank two and a double eigenvalue", "[lax]") {
    util::Rng r(4);
    for (int k = 0; k < 5; ++k) {
        auto d = draw(Variant::VI_Fuchs, r, false);
        auto lp = lax::build_lax(Variant::VI_Fuchs, d.th, d.g.s);
        const std::vector<std::pair<std::string, cplx>> res{{"A0_hat", d.th.z0}, {"A1_hat", d.th.z1}, {"At_hat", d.th.zt}};
        for (const auto& [key, theta] : res) {
            const Mat& A = lp.aux.at(key);
            REQUIRE(algebra::numerical_rank(A, 1e-10) <= 2);
            // det(l - A) = l^2 (l - theta)^2
            auto c = charpoly(A);
            REQUIRE(std::abs(c[3] + 2.0 * theta) < 1e-8);
            REQUIRE(std::abs(c[2] - theta * theta) < 1e-8);
            REQUIRE(std::abs(c[1]) < 1e-8);
            REQUIRE(std::abs(c[0]) < 1e-8);
        }
    }
}

TEST_CASE("sixth system deformation matrix is -A_t/(x - t)", "[lax]") {
    util::Rng r(5);
    auto d = draw(Variant::VI_Fuchs, r);
    auto lp = lax::build_lax(Variant::VI_Fuchs, d.th, d.g.s, d.g.U);
    const cplx t = d.g.s.t;
    const Mat& At = lp.aux.at("At");
    for (cplx x : {cplx(0.3, 0.7), cplx(-1.2, 0.1), cplx(4.0, -2.0)})
        REQUIRE(algebra::max_abs(algebra::rational_matrix_eval(lp.B, x) + At / (x - t)) < 1e-14 * (1.0 + algebra::max_abs(At)));
}

TEST_CASE("spectrum of A(x) does not depend on the gauge U", "[lax]") {
    util::Rng r(6);
    for (Variant v : core::lax_catalog()) {
        auto d = draw(v, r);
        auto a = lax::build_lax(v, d.th, d.g.s);
        auto b = lax::build_lax(v, d.th, d.g.s, d.g.U);
        const cplx x(0.37, 1.21);
        auto ea = sorted_eigs(algebra::rational_matrix_eval(a.A, x));
        auto eb = sorted_eigs(algebra::rational_matrix_eval(b.A, x));
        for (size_t i = 0; i < ea.size(); ++i) REQUIRE(std::abs(ea[i] - eb[i]) < 1e-8 * (1.0 + std::abs(ea[i])));
    }
}

TEST_CASE("gauge U co-evolves consistently", "[lax]") {
    util::Rng r(7);
    for (Variant v : {Variant::VI_Fuchs, Variant::D6_r2_22_211, Variant::II_r2_211, Variant::D7_r2_2_11}) {
        auto d = draw(v, r);
        auto path = lax::integrate_gauged(v, d.th, d.g, d.g.s.t + cplx(0.2, 0.1), 20);
        REQUIRE(lax::u_gauge_check(v, d.th, path, 4) <= 1e-6);
    }
}

TEST_CASE("Riemann scheme of (2)_2,(11)_2", "[lax]") {
    util::Rng r(8);
    auto d = draw(Variant::D8_r2_r11, r, false);
    auto rs = lax::riemann_scheme_of(Variant::D8_r2_r11, d.th, d.g.s.t);
    REQUIRE(rs.columns.size() == 2);
    REQUIRE(rs.columns[0].location == "0");
    REQUIRE(rs.columns[0].ramification == 2);
    REQUIRE(rs.columns[1].location == "inf");
    REQUIRE(rs.columns[1].ramification == 2);
    for (const auto& c : rs.columns) REQUIRE(c.rows.size() == 4);
    // The square-root leading terms come in +- pairs.
    const auto& z = rs.columns[0].rows;
    REQUIRE(std::abs(z[0][0] + z[2][0]) < 1e-14);
    REQUIRE(std::abs(z[0][0] * z[0][0] - d.g.s.t) < 1e-12);
    REQUIRE(std::abs(rs.fuchs_hukuhara_sum()) < 1e-12);
    auto j = lax::to_json(rs);
    REQUIRE(j["columns"].size() == 2);
    REQUIRE(j["columns"][1]["ramification"] == 2);
}

TEST_CASE("Riemann schemes close the Fuchs-Hukuhara relation", "[lax]") {
    util::Rng r(9);
    for (Variant v : core::lax_catalog())
        for (int k = 0; k < 20; ++k) {
            auto d = draw(v, r, false);
            REQUIRE(std::abs(lax::riemann_scheme_of(v, d.th, d.g.s.t).fuchs_hukuhara_sum()) <= 1e-10);
        }
    REQUIRE_THROWS(lax::riemann_scheme_of(Variant::II_2_11, Theta<cplx>{}, 1.0));
}

TEST_CASE("sample points keep away from poles", "[lax]") {
    util::Rng r(10);
    auto d = draw(Variant::VI_Fuchs, r);
    auto lp = lax::build_lax(Variant::VI_Fuchs, d.th, d.g.s);
    for (cplx x : lax::sample_points(lp, 20, 0.25))
        for (cplx p : lax::pole_locations(lp)) REQUIRE(std::abs(x - p) >= 0.25);
}

TEST_CASE("presentations without a pair are refused", "[lax]") {
    REQUIRE_THROWS_AS(lax::build_lax(Variant::V_2_2_22_211, Theta<cplx>{}, Mat::Identity(2, 2), Mat::Identity(2, 2), 1.0),
                      std::invalid_argument);
}
