#include "catch_amalgamated.hpp"

#include "mpv/laplace/laplace.hpp"

using namespace mpv;
using namespace mpv::laplace;
using algebra::blocks;

namespace {
Mat rand_mat(util::Rng& r, int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = r.cplx();
    return m;
}

StructuredSystem random_structured(util::Rng& r, int m, int l) {
    return {rand_mat(r, m, l), rand_mat(r, l, m), rand_mat(r, l, l), rand_mat(r, m, m)};
}

struct IIDraw {
    Theta<cplx> th;
    Mat Q, P;
    cplx t;
};

IIDraw draw_ii(Variant v, util::Rng& r) {
    IIDraw d;
    d.th = core::fuchs_fill(v, Theta<cplx>{r.cplx(), r.cplx(), r.cplx(), r.cplx(), r.cplx(), 0.0});
    core::CanonicalState<cplx> s{r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), 1.0 + r.cplx(0.3), 2.0 + r.cplx(0.5)};
    auto mp = core::build_matrix_pair(v, d.th, s);
    d.Q = mp.Q.to_mat();
    d.P = mp.P.to_mat();
    d.t = s.t;
    return d;
}
}  // namespace

TEST_CASE("dual of the zero system is zero", "[laplace]") {
    StructuredSystem z{Mat::Zero(3, 2), Mat::Zero(2, 3), Mat::Zero(2, 2), Mat::Zero(3, 3)};
    auto d = laplace_dual(z);
    REQUIRE(d.m() == 2);
    REQUIRE(d.l() == 3);
    REQUIRE(algebra::max_abs(evaluate(d, cplx(0.4, 0.9))) == 0.0);
}

TEST_CASE("scalar dual of Y' = Y/x", "[laplace]") {
    const Mat one = Mat::Ones(1, 1), zero = Mat::Zero(1, 1);
    auto d = laplace_dual({one, one, zero, zero});
    for (cplx xi : {cplx(0.5, 0.0), cplx(-2.0, 1.0)}) REQUIRE(std::abs(evaluate(d, xi)(0, 0) + 1.0 / xi) < 1e-15);
}

TEST_CASE("dual swaps the block sizes", "[laplace]") {
    util::Rng r(1);
    auto s = random_structured(r, 4, 2);
    auto d = laplace_dual(s);
    REQUIRE(d.m() == 2);
    REQUIRE(d.l() == 4);
    validate(d);
}

TEST_CASE("applying the dual twice reflects x", "[laplace]") {
    util::Rng r(2);
    for (int k = 0; k < 5; ++k) {
        auto s = random_structured(r, 3, 2);
        auto dd = laplace_dual(laplace_dual(s));
        for (cplx x : {cplx(1.7, 0.4), cplx(-0.3, 2.2), cplx(3.1, -1.0)})
            REQUIRE(algebra::max_abs(evaluate(dd, x) + evaluate(s, -x)) < 1e-10 * (1.0 + algebra::max_abs(evaluate(s, -x))));
    }
}

TEST_CASE("dual residue at a simple eigenvalue of S has rank one", "[laplace]") {
    util::Rng r(3);
    auto s = random_structured(r, 3, 2);
    s.S = rand_mat(r, 3, 3);  // generic: simple eigenvalues
    auto dual = to_linear_system(laplace_dual(s));
    REQUIRE(dual.poles.size() == 3);
    for (const auto& p : dual.poles) {
        REQUIRE(p.order() == 1);
        REQUIRE(algebra::numerical_rank(p.coeffs[0], 1e-9) <= 1);
    }
}

TEST_CASE("structured form expands to the same rational matrix", "[laplace]") {
    util::Rng r(4);
    auto s = random_structured(r, 3, 3);
    auto ls = to_linear_system(s);
    for (cplx x : {cplx(2.5, 0.3), cplx(-1.1, -1.9)})
        REQUIRE(algebra::max_abs(algebra::rational_matrix_eval(ls, x) - evaluate(s, x)) < 1e-9);
}

TEST_CASE("realization reproduces the Lax matrix", "[laplace]") {
    util::Rng r(5);
    for (Variant v : {Variant::VI_Fuchs, Variant::D6_r11_22_22, Variant::D7_r11_2_2}) {
        auto d = draw_ii(v, r);
        auto A = lax::build_lax(v, d.th, d.Q, d.P, d.t).A;
        auto tw = twist(A);
        auto st = realize(tw);
        for (cplx x : {cplx(0.4, 1.3), cplx(-2.0, 0.5)})
            REQUIRE(algebra::max_abs(evaluate(st, x) - algebra::rational_matrix_eval(tw, x)) <
                    1e-8 * (1.0 + algebra::max_abs(evaluate(st, x))));
    }
}

TEST_CASE("polynomial correspondence matches the closed form", "[laplace]") {
    util::Rng r(6);
    const Mat I = Mat::Identity(2, 2), O = Mat::Zero(2, 2);
    for (int k = 0; k < 10; ++k) {
        auto d = draw_ii(Variant::II_r11_22, r);
        auto ls = mpII_correspondence(d.th, d.Q, d.P, d.t);
        REQUIRE(ls.poly.size() == 3);
        REQUIRE(algebra::max_abs(ls.poly[2] - blocks(-I, O, O, O)) <= 1e-12);
        REQUIRE(algebra::max_abs(ls.poly[1] - blocks(O, I, d.P, O)) <= 1e-12);
        REQUIRE(algebra::max_abs(ls.poly[0] - blocks(d.P - d.t * I, -d.Q, d.P * d.Q - d.th.z0 * I, -d.P)) <= 1e-12);
        REQUIRE(htl::classify_system(ls).type == "(((2)))(((11)))");
    }
}

TEST_CASE("polynomial correspondence at the origin", "[laplace]") {
    const Mat I = Mat::Identity(2, 2), O = Mat::Zero(2, 2);
    Theta<cplx> th{};
    th.i2 = 0.5;
    th = core::fuchs_fill(Variant::II_r11_22, th);
    auto ls = mpII_correspondence(th, O, O, 0.0);
    REQUIRE(algebra::max_abs(ls.poly[0]) == 0.0);
    REQUIRE(algebra::max_abs(ls.poly[1] - blocks(O, I, O, O)) == 0.0);
}

TEST_CASE("second route lands on the same type", "[laplace]") {
    util::Rng r(7);
    for (int k = 0; k < 3; ++k) {
        auto d = draw_ii(Variant::II_r2_211, r);
        REQUIRE(htl::classify_system(mpII_second_route(d.th, d.Q, d.P, d.t)).type == "(((2)))(((11)))");
    }
}

TEST_CASE("correspondence table", "[laplace]") {
    auto rep = correspondence_table_check(42, 2);
    REQUIRE(rep.entries.size() == 6);
    for (const auto& e : rep.entries) {
        INFO(e.source << " expected " << e.partner << " observed " << e.observed);
        REQUIRE(e.pass);
    }
    REQUIRE(rep.pass);
    REQUIRE(to_json(rep)["entries"].size() == 6);
}

TEST_CASE("point-type multiset comparison", "[laplace]") {
    REQUIRE(same_points("(2)(2),(2)(11)", "(2)(11), (2)(2)"));
    REQUIRE_FALSE(same_points("(2)(2),(2)(11)", "(2)(2),(2)(2)"));
}

TEST_CASE("inconsistent dimensions are rejected", "[laplace]") {
    StructuredSystem bad{Mat::Zero(2, 3), Mat::Zero(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)};
    REQUIRE_THROWS_AS(laplace_dual(bad), std::invalid_argument);
    LinearSystem quad;
    quad.dim = 2;
    quad.add_poly_term(1, Mat::Identity(2, 2));
    REQUIRE_THROWS_AS(realize(quad), std::invalid_argument);
}
