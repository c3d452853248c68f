#include "catch_amalgamated.hpp"

#include "mpv/algebra/linear_system.hpp"
#include "mpv/util/fit.hpp"
#include "mpv/util/random.hpp"

using namespace mpv::algebra;
using Catch::Matchers::WithinAbs;

namespace {
Mat rand_mat(mpv::util::Rng& r, int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = r.cplx();
    return m;
}
}  // namespace

TEST_CASE("commutator of 2x2 matrices", "[algebra]") {
    Mat a(2, 2), b(2, 2);
    a << 0.0, 1.0, 0.0, 0.0;
    b << 0.0, 0.0, 1.0, 0.0;
    REQUIRE(max_abs(commutator(a, b) - K2()) == 0.0);
    REQUIRE(max_abs(commutator(a, a)) == 0.0);
}

TEST_CASE("commutator rejects mismatched dimensions", "[algebra]") {
    REQUIRE_THROWS_AS(commutator(Mat::Identity(2, 2), Mat::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("M2 arithmetic agrees with dense matrices", "[algebra]") {
    mpv::util::Rng r(1);
    M2<cplx> a{r.cplx(), r.cplx(), r.cplx(), r.cplx()}, b{r.cplx(), r.cplx(), r.cplx(), r.cplx()};
    REQUIRE(max_abs((a * b).to_mat() - a.to_mat() * b.to_mat()) < 1e-15);
    REQUIRE(max_abs(comm(a, b).to_mat() - commutator(a.to_mat(), b.to_mat())) < 1e-15);
    REQUIRE(std::abs(a.det() - a.to_mat().determinant()) < 1e-14);
    REQUIRE(max_abs((a * a.inverse()).to_mat() - Mat::Identity(2, 2)) < 1e-13);
    REQUIRE(std::abs(tr(a) - a.to_mat().trace()) < 1e-15);
}

TEST_CASE("quad-precision M2 round trip", "[algebra]") {
    M2<cquad> a{cquad(2), cquad(1), cquad(0, 1), cquad(3)};
    auto b = a * a.inverse();
    REQUIRE(mag(b(0, 0) - cquad(1)) < 1e-30);
    REQUIRE(mag(b(0, 1)) < 1e-30);
}

TEST_CASE("numerical rank", "[algebra]") {
    Mat m = Mat::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 2) = 2.0;
    REQUIRE(numerical_rank(m) == 2);
    REQUIRE(numerical_rank(Mat::Zero(3, 3)) == 0);
}

TEST_CASE("series product and derivative", "[series]") {
    Series a(2, Rat(3));
    a.add_term(Rat(-1), Mat::Identity(2, 2));
    a.add_term(Rat(1, 2), 2.0 * Mat::Identity(2, 2));
    Series sq = a * a;
    REQUIRE(max_abs(sq.coeff(Rat(-2)) - Mat::Identity(2, 2)) == 0.0);
    REQUIRE(max_abs(sq.coeff(Rat(-1, 2)) - 4.0 * Mat::Identity(2, 2)) == 0.0);
    REQUIRE(a.ramification() == 2);
    Series d = a.derivative();
    REQUIRE(max_abs(d.coeff(Rat(-2)) + Mat::Identity(2, 2)) == 0.0);
    REQUIRE(max_abs(d.coeff(Rat(-1, 2)) - Mat::Identity(2, 2)) < 1e-15);
    REQUIRE(*a.valuation() == Rat(-1));
}

TEST_CASE("series inverse", "[series]") {
    mpv::util::Rng r(2);
    Series p(3, Rat(6));
    p.add_term(0, Mat::Identity(3, 3) + 0.3 * rand_mat(r, 3));
    p.add_term(1, rand_mat(r, 3));
    p.add_term(2, rand_mat(r, 3));
    Series q = p * series_inverse(p, Rat(6));
    REQUIRE(max_abs(q.coeff(0) - Mat::Identity(3, 3)) < 1e-12);
    for (int k = 1; k < 6; ++k) REQUIRE(max_abs(q.coeff(k)) < 1e-10);
}

TEST_CASE("constant gauge is a conjugation", "[series]") {
    mpv::util::Rng r(3);
    Series a(3, Rat(4));
    a.add_term(-2, rand_mat(r, 3));
    a.add_term(-1, rand_mat(r, 3));
    Mat c = Mat::Identity(3, 3) + 0.5 * rand_mat(r, 3);
    Series g = gauge_transform(a, Series(3, {{Rat(0), c}}, Rat(20)));
    Series h = a.conjugated(c);
    for (int e : {-2, -1}) REQUIRE(max_abs(g.coeff(e) - h.coeff(e)) < 1e-12);
}

TEST_CASE("shear of the x^-2 nilpotent system", "[series]") {
    // A = -(N/z^2 + A00/z + A01) with A00 = [[QP, Q], [I, -PQ + th0]],
    // A01 = t [O; I][P I], sheared by diag(1, 1, z^{1/2}, z^{1/2}).
    mpv::util::Rng r(4);
    const Mat I = Mat::Identity(2, 2), O = Mat::Zero(2, 2);
    const Mat Q = rand_mat(r, 2), P = rand_mat(r, 2);
    const cplx t = r.cplx(), th0 = r.cplx();
    const Mat N = blocks(O, I, O, O);
    const Mat A00 = blocks(Q * P, Q, I, -P * Q + th0 * I);
    const Mat A01 = t * vstack(O, I) * hstack(P, I);
    Series a(4, Rat(2));
    a.add_term(-2, -N);
    a.add_term(-1, -A00);
    a.add_term(0, -A01);
    Series s = shear(a, {Rat(0), Rat(0), Rat(1, 2), Rat(1, 2)});
    REQUIRE(max_abs(s.coeff(Rat(-3, 2)) - blocks(O, -I, -I, O)) < 1e-15);
    REQUIRE(max_abs(s.coeff(Rat(-1)) - blocks(-Q * P, O, O, P * Q - th0 * I - 0.5 * I)) < 1e-14);
    REQUIRE(max_abs(s.coeff(Rat(-1, 2)) - blocks(O, -Q, -t * P, O)) < 1e-14);
    REQUIRE(max_abs(s.coeff(Rat(0)) - blocks(O, O, O, -t * I)) < 1e-14);
}

TEST_CASE("unipotent gauge matches the general gauge transform", "[series]") {
    mpv::util::Rng r(5);
    Series a(2, Rat(3));
    a.add_term(-2, rand_mat(r, 2));
    a.add_term(-1, rand_mat(r, 2));
    Mat x = rand_mat(r, 2);
    Series p(2, Rat(30));
    p.add_term(0, Mat::Identity(2, 2));
    p.add_term(1, x);
    Series g1 = unipotent_gauge(a, x, Rat(1)), g2 = gauge_transform(a, p);
    for (int e = -2; e < 2; ++e) REQUIRE(max_abs(g1.coeff(e) - g2.coeff(e)) < 1e-10);
}

TEST_CASE("local expansion reproduces the rational matrix", "[linear_system]") {
    mpv::util::Rng r(6);
    LinearSystem s;
    s.dim = 2;
    s.add_pole_term(0.0, 0, rand_mat(r, 2));
    s.add_pole_term(0.0, 1, rand_mat(r, 2));
    s.add_pole_term(1.0, 0, rand_mat(r, 2));
    s.add_poly_term(1, rand_mat(r, 2));
    const cplx x0 = 0.0, z = cplx(0.03, 0.02);
    Series e = expand_at(s, x0, 12);
    Mat sum = Mat::Zero(2, 2);
    for (const auto& [k, m] : e.terms()) sum += std::pow(z, to_double(k)) * m;
    REQUIRE(max_abs(sum - rational_matrix_eval(s, x0 + z)) < 1e-10);

    Series inf = expand_at_infinity(s, 12);
    const cplx w = cplx(0.02, -0.01);  // x = 1/w
    sum.setZero();
    for (const auto& [k, m] : inf.terms()) sum += std::pow(w, to_double(k)) * m;
    // dY/dw = -x^2 A(x) Y
    REQUIRE(max_abs(sum + rational_matrix_eval(s, 1.0 / w) / (w * w)) < 1e-6 * max_abs(sum));
}

TEST_CASE("derivative of the rational matrix", "[linear_system]") {
    mpv::util::Rng r(7);
    LinearSystem s;
    s.dim = 2;
    s.add_pole_term(0.5, 2, rand_mat(r, 2));
    s.add_poly_term(2, rand_mat(r, 2));
    const cplx x = cplx(1.1, 0.4), h = 1e-5;
    Mat fd = (rational_matrix_eval(s, x + h) - rational_matrix_eval(s, x - h)) / (2.0 * h);
    REQUIRE(max_abs(fd - rational_matrix_dx(s, x)) < 1e-7);
    REQUIRE_THROWS(rational_matrix_eval(s, 0.5));
}

TEST_CASE("linear system JSON round trip", "[linear_system]") {
    mpv::util::Rng r(8);
    LinearSystem s;
    s.dim = 3;
    s.add_pole_term(cplx(0.0, 1.0), 1, rand_mat(r, 3));
    s.add_poly_term(0, rand_mat(r, 3));
    auto j = to_json(s);
    LinearSystem b = linear_system_from_json(j);
    REQUIRE(b.dim == 3);
    REQUIRE(b.poles.size() == 1);
    REQUIRE(b.poles[0].order() == 2);
    REQUIRE(max_abs(b.poles[0].coeffs[1] - s.poles[0].coeffs[1]) == 0.0);
    REQUIRE(to_json(b) == j);
}

TEST_CASE("log-log slope of a power law", "[util]") {
    std::vector<double> x{0.1, 0.05, 0.025}, y;
    for (double e : x) y.push_back(3.0 * e * e);
    REQUIRE_THAT(mpv::util::loglog_slope(x, y), WithinAbs(2.0, 1e-12));
}

TEST_CASE("seeded generator is reproducible", "[util]") {
    mpv::util::Rng a(11), b(11);
    for (int i = 0; i < 5; ++i) REQUIRE(a.cplx() == b.cplx());
    auto q = a.rational_cplx(1.0, 8);
    REQUIRE(q.real() * 8 == std::round(q.real() * 8));
}
