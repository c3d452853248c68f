#include "catch_amalgamated.hpp"

#include "mpv/htl/htl.hpp"
#include "mpv/lax/lax.hpp"

using namespace mpv;
using algebra::cplx;
using algebra::Mat;
using algebra::Rat;
using algebra::Series;

namespace {
Mat diag(const std::vector<cplx>& d) {
    Mat m = Mat::Zero(d.size(), d.size());
    for (size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Mat rand_mat(util::Rng& r, int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = r.cplx();
    return m;
}

// Diagonal Puiseux data whose type is known by construction.
std::vector<std::pair<std::string, Series>> examples(util::Rng& r) {
    const cplx a = r.cplx(), b = r.cplx(), al = r.cplx(), be = r.cplx(), ga = r.cplx();
    const cplx w = std::polar(1.0, 2.0 * M_PI / 3.0), i(0.0, 1.0);
    auto make = [](Rat e, std::vector<cplx> lead, std::vector<cplx> res) {
        Series s(4, Rat(3));
        s.add_term(e, diag(lead));
        s.add_term(Rat(-1), diag(res));
        return s;
    };
    std::vector<std::pair<std::string, Series>> out{
        {"(2)_2", make(Rat(-3, 2), {a, a, -a, -a}, {al, al, al, al})},
        {"(1)_2(1)_2", make(Rat(-3, 2), {a, -a, b, -b}, {al, al, be, be})},
        {"(1)_2 11", make(Rat(-3, 2), {a, -a, 0.0, 0.0}, {al, al, be, ga})},
        {"(1)_3 1", make(Rat(-4, 3), {a, w * a, w * w * a, 0.0}, {al, al, al, be})},
        {"(1)_4", make(Rat(-5, 4), {a, i * a, -a, -i * a}, {al, al, al, al})},
    };
    Series rsp(4, Rat(3));
    rsp.add_term(Rat(-3), diag({a, a, b, b}));
    rsp.add_term(Rat(-2), diag({al, al, be, ga}));
    rsp.add_term(Rat(-1), diag({r.cplx(), r.cplx(), r.cplx(), r.cplx()}));
    out.emplace_back("((11))((1)(1))", rsp);
    return out;
}
}  // namespace

TEST_CASE("eigenvalue clustering", "[htl]") {
    auto cl = htl::cluster_eigenvalues({1.0, 2.0, 1.0 + 1e-10, cplx(2.0, 1e-11)});
    REQUIRE(cl.size() == 2);
    REQUIRE(cl[0].multiplicity() == 2);
    REQUIRE(cl[1].multiplicity() == 2);
    REQUIRE(std::abs(cl[0].center - 1.0) < 1e-9);
    REQUIRE(htl::cluster_eigenvalues({1.0, 1.5, 2.0}).size() == 3);
}

TEST_CASE("block diagonalization splits by leading eigenvalues", "[htl]") {
    util::Rng r(1);
    Mat C = Mat::Identity(4, 4) + 0.3 * rand_mat(r, 4);
    Series a(4, Rat(4));
    a.add_term(-3, C * diag({1.0, 1.0, 3.0, 3.0}) * C.inverse());
    a.add_term(-2, rand_mat(r, 4));
    a.add_term(-1, rand_mat(r, 4));
    auto blocks = htl::block_diagonalize(a);
    REQUIRE(blocks.size() == 2);
    for (const auto& b : blocks) {
        REQUIRE(b.dim() == 2);
        const Mat L = b.coeff(-3);
        REQUIRE(algebra::max_abs(L - L(0, 0) * Mat::Identity(2, 2)) < 1e-10);
    }
    // Leading trace survives the change of basis.
    REQUIRE(std::abs(blocks[0].coeff(-3).trace() + blocks[1].coeff(-3).trace() - 8.0) < 1e-10);
}

TEST_CASE("spectral types of diagonal examples", "[htl]") {
    util::Rng r(2);
    for (const auto& [want, s] : examples(r)) {
        INFO(want);
        REQUIRE(htl::spectral_type(htl::reduce_directions(s)).text == want);
    }
}

TEST_CASE("spectral type ignores constant conjugation", "[htl]") {
    util::Rng r(3);
    for (int k = 0; k < 3; ++k)
        for (const auto& [want, s] : examples(r)) {
            INFO(want);
            Mat C = Mat::Identity(4, 4) + 0.4 * rand_mat(r, 4);
            REQUIRE(htl::spectral_type(htl::reduce_directions(s.conjugated(C))).text == want);
        }
}

TEST_CASE("regular singular points give plain partitions", "[htl]") {
    util::Rng r(4);
    const cplx a = r.cplx(), b = r.cplx();
    Series s(4, Rat(3));
    s.add_term(-1, diag({a, a, b, b}));
    REQUIRE(htl::spectral_type(htl::reduce_directions(s)).text == "22");
    Series t(4, Rat(3));
    t.add_term(-1, diag({a, a, b, r.cplx()}));
    REQUIRE(htl::spectral_type(htl::reduce_directions(t)).text == "211");
}

TEST_CASE("pole order and ramification of the reduced form", "[htl]") {
    util::Rng r(5);
    auto ex = examples(r);
    auto f = htl::htl_reduce(ex[4].second);  // (1)_4
    REQUIRE(f.ramification == 4);
    REQUIRE(f.levels.front() == Rat(5, 4));
    auto pt = htl::spectral_type(f);
    REQUIRE(pt.d == 4);
    REQUIRE(pt.l0 == Rat(5, 4));
    auto j = htl::to_json(f);
    REQUIRE(j["ramification"] == 4);
    REQUIRE(j["levels"][0] == "5/4");
    REQUIRE(j["residue_diagonal"].size() == 4);
}

TEST_CASE("catalog systems classify to their names", "[htl]") {
    util::Rng r(6);
    for (auto v : core::lax_catalog()) {
        auto th = core::fuchs_fill(v, core::Theta<cplx>{r.cplx(), r.cplx(), r.cplx(), r.cplx(), r.cplx(), 0.0});
        core::CanonicalState<cplx> s{r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), r.cplx(0.7), 1.0 + r.cplx(0.3), 2.0 + r.cplx(0.5)};
        auto cl = htl::classify_system(lax::build_lax(v, th, s).A);
        REQUIRE(cl.type == core::variant_name(v));
    }
}

TEST_CASE("sheared nilpotent system is ramified", "[htl]") {
    // -(N/z^2 + A00/z + ...) with A00 lower-left I: leading pole 3/2 after a half shear.
    util::Rng r(7);
    const Mat I = Mat::Identity(2, 2), O = Mat::Zero(2, 2);
    const Mat Q = rand_mat(r, 2), P = rand_mat(r, 2);
    const cplx t = 1.0 + r.cplx(0.3), th0 = r.cplx();
    Series a(4, Rat(4));
    a.add_term(-2, -algebra::blocks(O, I, O, O));
    a.add_term(-1, -algebra::blocks(Q * P, Q, I, -P * Q + th0 * I));
    a.add_term(0, -t * algebra::vstack(O, I) * algebra::hstack(P, I));
    auto pt = htl::spectral_type(htl::reduce_directions(a));
    REQUIRE(pt.d == 2);
    REQUIRE(pt.l0 == Rat(3, 2));
}
