#pragma once
// The eight acceptance checks, shared by the acceptance binary and the
// `verify-all` command. Each returns a Check with a JSON detail block.

#include "mpv/degeneration/degeneration.hpp"
#include "mpv/htl/htl.hpp"
#include "mpv/laplace/laplace.hpp"
#include "mpv/lax/lax.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <string>
#include <vector>

namespace mpv::verify {

using algebra::cplx;
using algebra::Mat;
using algebra::Rat;
using core::Variant;

struct Check {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    double time_limit = 0.0;
    nlohmann::json detail;
};

struct Tolerances {
    double rhs = 1e-5;        // Hamiltonian vs non-abelian RHS, relative
    double drift = 1e-9;      // commutator drift per (1 + |state|)
    double residual = 1e-6;   // compatibility residual, relative
    double display = 1e-12;   // polynomial correspondence, entrywise
    double fuchs = 1e-10;     // Riemann scheme exponent sum
    double frozen = 1e-3;     // frozen residual must exceed this

    // Returns false for an unknown key.
    bool set(const std::string& key, double v) {
        if (key == "rhs") rhs = v;
        else if (key == "drift") drift = v;
        else if (key == "residual") residual = v;
        else if (key == "display") display = v;
        else if (key == "fuchs") fuchs = v;
        else if (key == "frozen") frozen = v;
        else return false;
        return true;
    }
    nlohmann::json to_json() const {
        return {{"rhs", rhs}, {"drift", drift}, {"residual", residual}, {"display", display}, {"fuchs", fuchs}, {"frozen", frozen}};
    }
};

struct Options {
    std::uint64_t seed = 42;
    Tolerances tol;
    int steps = 1000;        // RK4 steps for the conservation check
    std::vector<double> eps_grid;  // empty: per-rule default
};

namespace detail {

template <class F>
Check timed(int id, std::string name, double limit, F&& body) {
    Check c;
    c.id = id;
    c.name = std::move(name);
    c.time_limit = limit;
    auto t0 = std::chrono::steady_clock::now();
    body(c);
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.seconds > limit) {
        c.pass = false;
        c.detail["timeout"] = true;
    }
    return c;
}

inline Mat diag(const std::vector<cplx>& v) {
    Mat m = Mat::Zero(v.size(), v.size());
    for (size_t i = 0; i < v.size(); ++i) m(i, i) = v[i];
    return m;
}

}  // namespace detail

// Small formal systems with known types: five ramified leading terms over a
// diagonal residue and one nested unramified example.
struct TypeExample {
    std::string expected;
    algebra::Series series;
};

inline std::vector<TypeExample> type_examples(util::Rng& rng) {
    using detail::diag;
    const cplx a = rng.cplx(), b = rng.cplx(), al = rng.cplx(), be = rng.cplx(), ga = rng.cplx();
    const cplx w = std::polar(1.0, 2.0 * M_PI / 3.0), im(0.0, 1.0);
    struct Row { std::string s; Rat e; std::vector<cplx> lead, res; };
    const std::vector<Row> rows = {
        {"(2)_2", Rat(-3, 2), {a, a, -a, -a}, {al, al, al, al}},
        {"(1)_2(1)_2", Rat(-3, 2), {a, -a, b, -b}, {al, al, be, be}},
        {"(1)_2 11", Rat(-3, 2), {a, -a, 0.0, 0.0}, {al, al, be, ga}},
        {"(1)_3 1", Rat(-4, 3), {a, w * a, w * w * a, 0.0}, {al, al, al, be}},
        {"(1)_4", Rat(-5, 4), {a, im * a, -a, -im * a}, {al, al, al, al}},
    };
    std::vector<TypeExample> out;
    for (const auto& r : rows) {
        algebra::Series s(4, Rat(3));
        s.add_term(r.e, diag(r.lead));
        s.add_term(Rat(-1), diag(r.res));
        out.push_back({r.s, s});
    }
    algebra::Series s(4, Rat(3));
    s.add_term(Rat(-3), diag({a, a, b, b}));
    s.add_term(Rat(-2), diag({al, al, be, ga}));
    s.add_term(Rat(-1), diag({rng.cplx(), rng.cplx(), rng.cplx(), rng.cplx()}));
    out.push_back({"((11))((1)(1))", s});
    return out;
}

// Random gauge close to the identity, for the U bookkeeping.
inline Mat random_gauge(util::Rng& rng) {
    Mat U(2, 2);
    U << 1.0 + rng.cplx(0.3), rng.cplx(0.3), rng.cplx(0.3), 1.0 + rng.cplx(0.3);
    return U;
}

// 1. Hamilton's equations against the non-abelian field.
inline Check formulation_equivalence(const Options& o) {
    return detail::timed(1, "hamiltonian vs non-abelian RHS", 10.0, [&](Check& c) {
        util::Rng rng(o.seed);
        const double tol = o.tol.rhs;
        double worst = 0.0;
        for (auto sid : core::all_systems) {
            const Variant v = core::representative(sid);
            double w = 0.0;
            for (int k = 0; k < 100; ++k) {
                auto d = degeneration::random_draw(v, rng);
                auto h = core::hamiltonian_rhs(v, d.theta, d.state);
                auto n = core::nonabelian_tangent(v, d.theta, d.state);
                double scale = 1.0;
                for (cplx z : n.d) scale = std::max(scale, std::abs(z));
                for (int i = 0; i < 5; ++i) w = std::max(w, std::abs(h.d[i] - n.d[i]) / scale);
            }
            c.detail["systems"][core::system_name(sid)] = w;
            worst = std::max(worst, w);
        }
        c.detail["worst_relative"] = worst;
        c.detail["tolerance"] = tol;
        c.pass = worst <= tol;
    });
}

// 2. [P,Q] - zeta K along the matrix RK4 flow.
inline Check commutator_conservation(const Options& o) {
    return detail::timed(2, "commutator drift", 30.0, [&](Check& c) {
        util::Rng rng(o.seed + 1);
        const int steps = o.steps;
        bool ok = true;
        for (auto sid : core::all_systems) {
            const Variant v = core::representative(sid);
            double worst_ratio = 0.0;
            for (int k = 0; k < 3; ++k) {
                auto d = degeneration::random_draw(v, rng);
                auto mp = core::build_matrix_pair(v, d.theta, d.state);
                core::MatrixState<cplx> s0{mp.Q, mp.P, d.state.t};
                auto path = core::integrate_matrix(v, d.theta, s0, d.state.t + cplx(0.1, 0.05), steps);
                const auto K = algebra::M2<cplx>::K();
                for (const auto& s : path) {
                    double drift = (algebra::comm(s.P, s.Q) - mp.zeta * K).norm_inf();
                    double size = std::max(s.Q.norm_inf(), s.P.norm_inf());
                    worst_ratio = std::max(worst_ratio, drift / (o.tol.drift * (1.0 + size)));
                }
            }
            c.detail["systems"][core::system_name(sid)] = worst_ratio;
            ok = ok && worst_ratio <= 1.0;
        }
        c.detail["steps"] = steps;
        c.detail["note"] = "values are drift / (tol (1 + |state|)); pass when <= 1";
        c.detail["tolerance"] = o.tol.drift;
        c.pass = ok;
    });
}

// 3. Compatibility residual on every catalog pair (and 8a, its frozen twin).
struct ResidualSweep {
    double worst_relative = 0.0;
    double min_frozen = 1e300;
    nlohmann::json per_variant;
};

inline ResidualSweep residual_sweep(const Options& o, int n_draws = 20, int n_x = 10) {
    util::Rng rng(o.seed + 2);
    ResidualSweep out;
    for (Variant v : core::lax_catalog()) {
        double w = 0.0, f = 1e300;
        for (int k = 0; k < n_draws; ++k) {
            auto d = degeneration::random_draw(v, rng);
            lax::GaugedState g{d.state, random_gauge(rng)};
            auto lp = lax::build_lax(v, d.theta, g.s, g.U);
            auto xs = lax::sample_points(lp, n_x);
            w = std::max(w, lax::compatibility_residual(v, d.theta, g, xs).relative());
            f = std::min(f, lax::compatibility_residual(v, d.theta, g, xs, 1e-5, true).relative());
        }
        out.per_variant[core::variant_name(v)] = {{"relative", w}, {"frozen_min", f}};
        out.worst_relative = std::max(out.worst_relative, w);
        out.min_frozen = std::min(out.min_frozen, f);
    }
    return out;
}

inline Check isomonodromy(const Options& o) {
    return detail::timed(3, "isomonodromy residual", 60.0, [&](Check& c) {
        auto s = residual_sweep(o);
        c.detail = {{"variants", s.per_variant}, {"worst_relative", s.worst_relative}, {"tolerance", o.tol.residual}};
        c.pass = s.worst_relative <= o.tol.residual;
    });
}

// 4. Spectral types by exact string match.
inline Check spectral_types(const Options& o) {
    return detail::timed(4, "spectral types", 20.0, [&](Check& c) {
        util::Rng rng(o.seed + 3);
        bool ok = true;
        for (Variant v : core::lax_catalog()) {
            auto d = degeneration::random_draw(v, rng);
            auto cl = htl::classify_system(lax::build_lax(v, d.theta, d.state).A);
            const bool m = cl.type == core::variant_name(v);
            c.detail["catalog"].push_back({{"expected", core::variant_name(v)}, {"observed", cl.type}, {"match", m}});
            ok = ok && m;
        }
        for (auto& ex : type_examples(rng)) {
            auto t = htl::spectral_type(htl::reduce_directions(ex.series)).text;
            const bool m = t == ex.expected;
            c.detail["examples"].push_back({{"expected", ex.expected}, {"observed", t}, {"match", m}});
            ok = ok && m;
        }
        c.pass = ok;
    });
}

// 5. Degeneration limits and the linear demo.
inline Check degenerations(const Options& o) {
    return detail::timed(5, "degeneration limits", 300.0, [&](Check& c) {
        bool ok = true;
        const auto& cat = degeneration::catalog();
        for (size_t i = 0; i < cat.size(); ++i) {
            auto r = degeneration::verify_flow_limit(i, o.eps_grid, 5, o.seed + 100 + i);
            c.detail["rules"].push_back(to_json(r));
            ok = ok && r.pass;
        }
        auto demo = degeneration::linear_degeneration_demo(o.eps_grid, 5, o.seed + 7);
        c.detail["linear_demo"] = {{"convergence", to_json(demo.convergence)},
                                   {"limit_type", demo.limit_type},
                                   {"pass", demo.pass}};
        c.pass = ok && demo.pass && demo.limit_type == "(11)_2,(2)(2)";
    });
}

// 6. Polynomial correspondence, its type, and the correspondence table.
inline Check laplace_checks(const Options& o) {
    return detail::timed(6, "laplace correspondence", 30.0, [&](Check& c) {
        util::Rng rng(o.seed + 4);
        const Mat I = Mat::Identity(2, 2), O = Mat::Zero(2, 2);
        double worst = 0.0;
        bool types = true;
        for (int k = 0; k < 20; ++k) {
            auto d = degeneration::random_draw(Variant::II_r11_22, rng);
            auto mp = core::build_matrix_pair(Variant::II_r11_22, d.theta, d.state);
            const Mat Q = mp.Q.to_mat(), P = mp.P.to_mat();
            const cplx t = d.state.t;
            auto ls = laplace::mpII_correspondence(d.theta, Q, P, t);
            const Mat E2 = algebra::blocks(-I, O, O, O), E1 = algebra::blocks(O, I, P, O),
                      E0 = algebra::blocks(P - t * I, -Q, P * Q - d.theta.z0 * I, -P);
            worst = std::max({worst, algebra::max_abs(ls.poly.at(2) - E2), algebra::max_abs(ls.poly.at(1) - E1),
                              algebra::max_abs(ls.poly.at(0) - E0)});
            types = types && htl::classify_system(ls).type == "(((2)))(((11)))";
        }
        auto table = laplace::correspondence_table_check(o.seed + 5, 3);
        c.detail = {{"display_max_error", worst}, {"type_ok", types}, {"table", laplace::to_json(table)}};
        c.pass = worst <= o.tol.display && types && table.pass;
    });
}

// 7. Fuchs-Hukuhara sums of the Riemann schemes.
inline Check fuchs_hukuhara(const Options& o) {
    return detail::timed(7, "fuchs-hukuhara relation", 30.0, [&](Check& c) {
        util::Rng rng(o.seed + 6);
        double worst = 0.0;
        for (Variant v : core::lax_catalog()) {
            double w = 0.0;
            for (int k = 0; k < 100; ++k) {
                auto d = degeneration::random_draw(v, rng);
                w = std::max(w, std::abs(lax::riemann_scheme_of(v, d.theta, d.state.t).fuchs_hukuhara_sum()));
            }
            c.detail["variants"][core::variant_name(v)] = w;
            worst = std::max(worst, w);
        }
        c.detail["worst"] = worst;
        c.pass = worst <= o.tol.fuchs;
    });
}

// 8. Negative controls: both detectors must fire.
inline Check negative_controls(const Options& o) {
    return detail::timed(8, "negative controls", 60.0, [&](Check& c) {
        auto s = residual_sweep(o, 5, 10);
        const bool frozen_fires = s.min_frozen > o.tol.frozen;
        bool wrong_fires = true;
        const auto& cat = degeneration::catalog();
        for (size_t i = 0; i < cat.size(); ++i) {
            const Variant wt = degeneration::wrong_target_for(cat[i]);
            auto r = degeneration::verify_flow_limit(i, o.eps_grid, 2, o.seed + 200 + i, wt);
            c.detail["wrong_target"].push_back(
                {{"rule", cat[i].name}, {"paired_with", core::variant_name(wt)}, {"slope", r.slope}, {"detected", r.pass}});
            wrong_fires = wrong_fires && r.pass;
        }
        c.detail["frozen_min_relative"] = s.min_frozen;
        c.detail["frozen_detected"] = frozen_fires;
        c.pass = frozen_fires && wrong_fires;
    });
}

inline std::vector<std::function<Check(const Options&)>> all_checks() {
    return {formulation_equivalence, commutator_conservation, isomonodromy, spectral_types,
            degenerations,           laplace_checks,          fuchs_hukuhara, negative_controls};
}

inline nlohmann::json to_json(const Check& c) {
    return {{"id", c.id},           {"name", c.name},         {"pass", c.pass},
            {"seconds", c.seconds}, {"time_limit", c.time_limit}, {"detail", c.detail}};
}

}  // namespace mpv::verify
