#pragma once
// Formal reduction of a matrix Laurent/Puiseux series to its HTL canonical
// form, and the spectral-type strings built from it.

#include "mpv/algebra/linear_system.hpp"
#include "mpv/algebra/series.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpv::htl {

using algebra::cplx;
using algebra::LinearSystem;
using algebra::Mat;
using algebra::Rat;
using algebra::Series;

// Relative threshold below which a series coefficient counts as zero.
inline constexpr double zero_tol = 1e-9;
// Base eigenvalue clustering tolerance.
inline constexpr double cluster_tol = 1e-7;
// Comparison tolerance for spectral data when grouping directions.
inline constexpr double type_tol = 1e-6;

// One eigen-direction of the canonical form: irregular coefficients keyed by
// exponent of z (all < -1 once fully reduced) and the residue exponent.
struct Direction {
    std::map<Rat, cplx> irr;
    cplx theta{};
};

struct EigenCluster {
    cplx center{};
    std::vector<int> members;
    int multiplicity() const { return static_cast<int>(members.size()); }
};

struct HTLForm {
    std::vector<Rat> levels;           // l_0 > l_1 > ... > 1
    std::vector<Mat> level_matrices;   // D_j, coefficient of z^{-l_j}
    Mat residue;                       // diagonal
    long long ramification = 1;

    int dim() const { return static_cast<int>(residue.rows()); }

    std::vector<Direction> directions() const {
        std::vector<Direction> out(dim());
        for (int i = 0; i < dim(); ++i) {
            out[i].theta = residue(i, i);
            for (size_t j = 0; j < levels.size(); ++j) out[i].irr[-levels[j]] = level_matrices[j](i, i);
        }
        return out;
    }
};

namespace detail {

inline std::vector<cplx> eigenvalues(const Mat& m) {
    Eigen::ComplexEigenSolver<Mat> es(m, false);
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
    return v;
}

inline bool nilpotent(const Mat& m, double tol) {
    for (cplx z : eigenvalues(m))
        if (std::abs(z) > tol) return false;
    return true;
}

inline int rank(const Mat& m, double tol) {
    if (m.cols() == 0 || m.rows() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) r += svd.singularValues()(i) > tol;
    return r;
}

// Orthonormal basis of the numerical kernel (columns).
inline Mat kernel(const Mat& m, double tol) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    int r = rank(m, tol);
    return svd.matrixV().rightCols(m.cols() - r);
}

// Solve A X - X B = C through the Kronecker form.
inline Mat sylvester(const Mat& a, const Mat& b, const Mat& c) {
    const auto n = a.rows(), m = b.rows();
    Mat k = Mat::Zero(n * m, n * m);
    for (Eigen::Index j = 0; j < m; ++j) {
        k.block(j * n, j * n, n, n) += a;
        for (Eigen::Index i = 0; i < m; ++i) k.block(j * n, i * n, n, n) -= b(i, j) * Mat::Identity(n, n);
    }
    Eigen::FullPivLU<Mat> lu(k);
    if (!lu.isInvertible()) throw std::domain_error("Sylvester equation singular: clusters too close");
    Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(c.data(), n * m);
    Eigen::VectorXcd x = lu.solve(rhs);
    return Eigen::Map<Mat>(x.data(), n, m);
}

inline Series with_term(const Series& s, const Rat& e, const Mat& m) {
    auto terms = s.terms();
    terms[e] = m;
    return Series(s.dim(), terms, s.trunc());
}

}  // namespace detail

// Single-linkage clustering. The tolerance widens with the dimension because a
// defective eigenvalue of multiplicity n splits by roughly eps^{1/n}.
inline std::vector<EigenCluster> cluster_eigenvalues(const std::vector<cplx>& vals, double scale = 1.0) {
    const double n = static_cast<double>(vals.size());
    const double tol = std::max(cluster_tol, std::pow(1e-13, 1.0 / std::max(1.0, n))) * std::max(1.0, scale);
    std::vector<EigenCluster> cl;
    for (int i = 0; i < static_cast<int>(vals.size()); ++i) {
        bool placed = false;
        for (auto& c : cl) {
            double dmin = 1e300;
            for (int j : c.members) dmin = std::min(dmin, std::abs(vals[j] - vals[i]));
            if (dmin <= tol) {
                c.members.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) cl.push_back({0.0, {i}});
    }
    for (auto& c : cl) {
        cplx s = 0.0;
        for (int j : c.members) s += vals[j];
        c.center = s / double(c.members.size());
    }
    return cl;
}

// Splits the series into blocks following the eigenvalue clusters of its
// leading coefficient. Off-block terms are removed order by order with gauges
// I + X z^s; only negative exponents need to be cleared for the normal form.
inline std::vector<Series> block_diagonalize(const Series& input) {
    const int n = input.dim();
    auto v0 = input.valuation();
    if (!v0) return {input};
    const Rat v = *v0;
    const Mat L = input.coeff(v);
    auto cl = cluster_eigenvalues(detail::eigenvalues(L), algebra::max_abs(L));
    if (cl.size() == 1) return {input};

    Mat basis(n, n);
    std::vector<int> sizes;
    int col = 0;
    for (const auto& c : cl) {
        const int m = c.multiplicity();
        Mat M = Mat::Identity(n, n);
        for (int k = 0; k < m; ++k) M = M * (L - c.center * Mat::Identity(n, n));
        Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
        basis.middleCols(col, m) = svd.matrixV().rightCols(m);
        sizes.push_back(m);
        col += m;
    }
    Series a = input.conjugated(basis);
    const Mat Lb = a.coeff(v);
    std::vector<int> idx{0};
    for (int s : sizes) idx.push_back(idx.back() + s);
    auto off = [&](Mat m) {
        for (size_t k = 0; k < sizes.size(); ++k) m.block(idx[k], idx[k], sizes[k], sizes[k]).setZero();
        return m;
    };
    const double tol = zero_tol * input.scale();
    for (int it = 0; it < 400; ++it) {
        std::optional<Rat> next;
        for (const auto& [e, m] : a.terms())
            if (e > v && e < 0 && algebra::max_abs(off(m)) > tol) {
                next = e;
                break;
            }
        if (!next) break;
        const Mat R = a.coeff(*next);
        Mat X = Mat::Zero(n, n);
        for (size_t p = 0; p < sizes.size(); ++p)
            for (size_t q = 0; q < sizes.size(); ++q) {
                if (p == q) continue;
                X.block(idx[p], idx[q], sizes[p], sizes[q]) =
                    detail::sylvester(Lb.block(idx[p], idx[p], sizes[p], sizes[p]),
                                      Lb.block(idx[q], idx[q], sizes[q], sizes[q]),
                                      -R.block(idx[p], idx[q], sizes[p], sizes[q]));
            }
        a = algebra::unipotent_gauge(a, X, *next - v);
    }
    std::vector<Series> out;
    for (size_t k = 0; k < sizes.size(); ++k) out.push_back(a.block(idx[k], sizes[k]));
    return out;
}

namespace detail {

// Jordan chains of a nilpotent matrix, top vector of each chain first.
inline std::pair<Mat, std::vector<int>> jordan_basis(const Mat& N, double tol) {
    const int n = static_cast<int>(N.rows());
    std::vector<Mat> pw{Mat::Identity(n, n)};
    while (rank(pw.back(), tol) > 0 && static_cast<int>(pw.size()) <= n + 1) pw.push_back(pw.back() * N);
    const int k = static_cast<int>(pw.size()) - 1;
    std::vector<std::vector<Eigen::VectorXcd>> chains;
    Mat chosen(n, 0);
    for (int j = k; j >= 1; --j) {
        Mat kerj = kernel(pw[j], tol), kerj1 = kernel(pw[j - 1], tol);
        Mat base(n, kerj1.cols() + chosen.cols());
        base << kerj1, chosen;
        for (Eigen::Index c = 0; c < kerj.cols(); ++c) {
            Eigen::VectorXcd w = kerj.col(c);
            bool fresh;
            if (base.cols() > 0) {
                Mat test(n, base.cols() + 1);
                test << base, w;
                fresh = rank(test, tol) > rank(base, tol);
            } else {
                fresh = w.norm() > tol;
            }
            if (!fresh) continue;
            std::vector<Eigen::VectorXcd> ch{w};
            for (int p = 0; p < j - 1; ++p) ch.push_back(N * ch.back());
            std::reverse(ch.begin(), ch.end());
            Mat all(n, ch.size());
            for (size_t p = 0; p < ch.size(); ++p) all.col(p) = ch[p];
            Mat c2(n, chosen.cols() + all.cols());
            c2 << chosen, all;
            chosen = c2;
            Mat b2(n, base.cols() + all.cols());
            b2 << base, all;
            base = b2;
            chains.push_back(std::move(ch));
        }
    }
    std::vector<int> lens;
    Mat C(n, 0);
    for (const auto& ch : chains) {
        Mat c2(n, C.cols() + ch.size());
        c2.leftCols(C.cols()) = C;
        for (size_t p = 0; p < ch.size(); ++p) c2.col(C.cols() + p) = ch[p];
        C = c2;
        lens.push_back(static_cast<int>(ch.size()));
    }
    if (C.cols() != n) throw std::domain_error("Jordan basis incomplete");
    return {C, lens};
}

inline long long floor_rat(const Rat& r) {
    long long q = r.numerator() / r.denominator();
    if (r.numerator() < 0 && q * r.denominator() != r.numerator()) --q;
    return q;
}

inline std::vector<Direction> add_shift(std::vector<Direction> dirs, const Rat& v, cplx lam) {
    for (auto& d : dirs) d.irr[v] += lam;
    return dirs;
}

// Residue level: diagonalise and strip the remaining negative-exponent tail.
inline std::vector<Direction> reduce_residue(const Series& a) {
    const int n = a.dim();
    Eigen::ComplexEigenSolver<Mat> es(a.coeff(-1));
    Series b = a.conjugated(es.eigenvectors());
    Eigen::VectorXcd th = b.coeff(-1).diagonal();
    const double tol = zero_tol * a.scale();
    for (int it = 0; it < 200; ++it) {
        std::optional<Rat> next;
        for (const auto& [e, m] : b.terms())
            if (e > -1 && e < 0 && algebra::max_abs(m) > tol) {
                next = e;
                break;
            }
        if (!next) break;
        const Rat s = *next + 1;
        const Mat R = b.coeff(*next);
        Mat X(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                cplx den = th(i) - th(j) - algebra::to_double(s);
                if (std::abs(den) < 1e-9) throw std::domain_error("resonant residue");
                X(i, j) = -R(i, j) / den;
            }
        b = algebra::unipotent_gauge(b, X, s);
    }
    std::vector<Direction> out(n);
    for (int i = 0; i < n; ++i) out[i].theta = th(i);
    return out;
}

inline std::vector<Direction> reduce(const Series& a, int depth = 0) {
    if (depth > 64) throw std::runtime_error("HTL reduction did not terminate");
    const int n = a.dim();
    auto v0 = a.valuation();
    if (!v0 || *v0 >= -1) {
        if (!v0) return std::vector<Direction>(n);
        return reduce_residue(a);
    }
    const Rat v = *v0;
    const Mat L = a.coeff(v);
    auto vals = eigenvalues(L);
    auto cl = cluster_eigenvalues(vals, algebra::max_abs(L));
    if (cl.size() > 1) {
        std::vector<Direction> dirs;
        for (const auto& b : block_diagonalize(a)) {
            auto d = reduce(b, depth + 1);
            dirs.insert(dirs.end(), d.begin(), d.end());
        }
        return dirs;
    }
    const cplx lam = cl.front().center;
    Series a2 = a - Series(n, {{v, lam * Mat::Identity(n, n)}}, a.trunc());
    const Mat N = a2.coeff(v);
    const double tol = cluster_tol * std::max(1.0, algebra::max_abs(L));
    if (algebra::max_abs(N) <= tol) {
        Series a3 = with_term(a2, v, Mat::Zero(n, n)).cleaned(zero_tol * a.scale());
        return add_shift(reduce(a3, depth + 1), v, lam);
    }
    auto [C, lens] = jordan_basis(N, tol);
    Series a3 = a2.conjugated(C);
    const long long d = a3.ramification();
    const Rat l = -v;
    std::vector<Rat> cands;
    for (long long m = 1; m <= n; ++m)
        for (long long k = 1; k <= floor_rat((l - 1) * m * d); ++k) {
            Rat s(k, m * d);
            if (s <= l - 1) cands.push_back(s);
        }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    const int maxlen = *std::max_element(lens.begin(), lens.end());
    std::vector<std::vector<int>> offs{{}};
    for (int len : lens) {
        std::vector<std::vector<int>> next;
        for (const auto& o : offs)
            for (int k = 0; k <= maxlen - len; ++k) {
                auto o2 = o;
                o2.push_back(k);
                next.push_back(o2);
            }
        offs = std::move(next);
    }
    for (const Rat& s : cands)
        for (const auto& of : offs) {
            std::vector<Rat> ex;
            for (size_t c = 0; c < lens.size(); ++c)
                for (int p = 0; p < lens[c]; ++p) ex.push_back(Rat(p + of[c]) * s);
            Rat mean = std::accumulate(ex.begin(), ex.end(), Rat(0)) / Rat(static_cast<long long>(ex.size()));
            for (auto& x : ex) x -= mean;
            Series a4 = algebra::shear(a3, ex).cleaned(zero_tol * a.scale());
            auto v4 = a4.valuation();
            if (!v4 || *v4 != v + s) continue;
            const Mat lead = a4.coeff(*v4);
            if (*v4 >= -1 || !nilpotent(lead, cluster_tol * std::max(1.0, algebra::max_abs(lead))))
                return add_shift(reduce(a4, depth + 1), v, lam);
        }
    throw std::domain_error("shear search exhausted");
}

}  // namespace detail

inline std::vector<Direction> reduce_directions(const Series& a) { return detail::reduce(a); }

inline HTLForm to_form(const std::vector<Direction>& dirs, double tol = type_tol) {
    HTLForm f;
    const int n = static_cast<int>(dirs.size());
    std::set<Rat> exps;
    for (const auto& d : dirs)
        for (const auto& [e, c] : d.irr)
            if (std::abs(c) > tol) exps.insert(e);
    for (auto it = exps.begin(); it != exps.end(); ++it) {
        f.levels.push_back(-*it);
        Mat D = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            auto jt = dirs[i].irr.find(*it);
            if (jt != dirs[i].irr.end()) D(i, i) = jt->second;
        }
        f.level_matrices.push_back(D);
        f.ramification = std::lcm(f.ramification, it->denominator());
    }
    f.residue = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) f.residue(i, i) = dirs[i].theta;
    return f;
}

inline HTLForm htl_reduce(const Series& a) { return to_form(reduce_directions(a)); }

// ---------------------------------------------------------------------------
// Spectral types.

namespace detail {

inline bool close(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Nested RSP over the irregular levels, with the residue partition innermost.
inline std::string rsp_render(const std::vector<std::pair<std::vector<cplx>, cplx>>& items, size_t level,
                              size_t depth, double tol) {
    if (level == depth) {
        std::vector<std::vector<cplx>> groups;
        for (const auto& it : items) {
            bool placed = false;
            for (auto& g : groups)
                if (close(g.front(), it.second, tol)) {
                    g.push_back(it.second);
                    placed = true;
                    break;
                }
            if (!placed) groups.push_back({it.second});
        }
        std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
        std::string s;
        for (const auto& g : groups) s += std::to_string(g.size());
        return s;
    }
    std::vector<std::vector<std::pair<std::vector<cplx>, cplx>>> groups;
    for (const auto& it : items) {
        bool placed = false;
        for (auto& g : groups)
            if (close(it.first[level], g.front().first[level], tol)) {
                g.push_back(it);
                placed = true;
                break;
            }
        if (!placed) groups.push_back({it});
    }
    struct Sub {
        std::string s;
        size_t size;
    };
    std::vector<Sub> subs;
    for (const auto& g : groups) subs.push_back({"(" + rsp_render(g, level + 1, depth, tol) + ")", g.size()});
    auto key = [](const Sub& x) {
        return std::make_tuple(-static_cast<long long>(x.size),
                               static_cast<long long>(std::count(x.s.begin(), x.s.end(), '(') + x.s.size()), x.s);
    };
    std::sort(subs.begin(), subs.end(), [&](const Sub& a, const Sub& b) { return key(a) < key(b); });
    std::string s;
    for (const auto& x : subs) s += x.s;
    return s;
}

}  // namespace detail

struct PointType {
    std::string text;
    Rat l0{1};
    long long d = 1;
};

// Directions are grouped into orbits of the C_d action z^{1/d} -> zeta^{-1} z^{1/d};
// each orbit of size d_j contributes its representative's RSP with subscript d_j.
inline PointType spectral_type(const std::vector<Direction>& dirs, double tol = type_tol) {
    long long d = 1;
    std::set<Rat> allex, keyset;
    for (const auto& dir : dirs)
        for (const auto& [e, c] : dir.irr) {
            d = std::lcm(d, e.denominator());
            keyset.insert(e);
            if (std::abs(c) > tol) allex.insert(e);
        }
    PointType pt;
    pt.d = d;
    long long b = 0;
    if (!allex.empty()) {
        pt.l0 = -*allex.begin();
        b = ((pt.l0 - 1) * d).numerator();
    }
    std::vector<Rat> levels;
    for (long long k = 0; k < b; ++k) levels.push_back(-(Rat(b - k, d) + 1));

    // Distinct irregular vectors and their members.
    std::vector<Rat> exps(keyset.begin(), keyset.end());
    auto vec = [&](const Direction& dir) {
        std::vector<cplx> v;
        for (const Rat& e : exps) {
            auto it = dir.irr.find(e);
            v.push_back(it == dir.irr.end() ? cplx(0) : it->second);
        }
        return v;
    };
    auto same = [&](const std::vector<cplx>& a, const std::vector<cplx>& b2) {
        double diff = 0, sc = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            diff = std::max(diff, std::abs(a[i] - b2[i]));
            sc = std::max(sc, std::abs(a[i]));
        }
        return diff <= tol * std::max(1.0, sc);
    };
    const cplx zeta = std::polar(1.0, 2.0 * std::numbers::pi / double(d));
    auto act = [&](const std::vector<cplx>& v, long long k) {
        std::vector<cplx> w(v.size());
        for (size_t i = 0; i < v.size(); ++i) {
            long long j = (exps[i] * d).numerator();
            w[i] = v[i] * std::pow(zeta, -double(k * j));
        }
        return w;
    };
    std::vector<std::pair<std::vector<cplx>, std::vector<int>>> ps;
    for (int i = 0; i < static_cast<int>(dirs.size()); ++i) {
        auto v = vec(dirs[i]);
        bool placed = false;
        for (auto& p : ps)
            if (same(p.first, v)) {
                p.second.push_back(i);
                placed = true;
                break;
            }
        if (!placed) ps.push_back({v, {i}});
    }
    std::vector<std::vector<int>> orbs;
    std::vector<bool> used(ps.size(), false);
    for (size_t a = 0; a < ps.size(); ++a) {
        if (used[a]) continue;
        std::vector<int> o{static_cast<int>(a)};
        used[a] = true;
        for (long long k = 1; k < d; ++k) {
            auto w = act(ps[a].first, k);
            for (size_t c = 0; c < ps.size(); ++c)
                if (!used[c] && same(ps[c].first, w)) {
                    o.push_back(static_cast<int>(c));
                    used[c] = true;
                }
        }
        orbs.push_back(o);
    }

    using Item = std::pair<std::vector<cplx>, cplx>;
    struct Group {
        long long dj;
        bool irr_zero;
        std::vector<Item> items;
    };
    std::vector<Group> groups;
    for (const auto& o : orbs) {
        auto lexkey = [&](int a) {
            std::vector<std::pair<double, double>> k;
            for (cplx z : ps[a].first) k.emplace_back(z.real(), z.imag());
            return k;
        };
        int rep = *std::min_element(o.begin(), o.end(), [&](int a, int c) { return lexkey(a) < lexkey(c); });
        double mx = 0;
        for (cplx z : ps[rep].first) mx = std::max(mx, std::abs(z));
        Group g{static_cast<long long>(o.size()), mx <= tol, {}};
        for (int i : ps[rep].second) {
            std::vector<cplx> lv;
            for (const Rat& e : levels) {
                auto it = dirs[i].irr.find(e);
                lv.push_back(it == dirs[i].irr.end() ? cplx(0) : it->second);
            }
            g.items.emplace_back(lv, dirs[i].theta);
        }
        groups.push_back(std::move(g));
    }

    std::set<long long, std::greater<>> djs;
    for (const auto& g : groups) djs.insert(g.dj);
    std::vector<std::string> out;
    for (long long dj : djs) {
        std::vector<Item> nz, zs;
        for (const auto& g : groups) {
            if (g.dj != dj) continue;
            auto& dst = (g.irr_zero && d > 1) ? zs : nz;
            dst.insert(dst.end(), g.items.begin(), g.items.end());
        }
        if (!nz.empty()) {
            std::string r = detail::rsp_render(nz, 0, levels.size(), tol);
            std::vector<std::string> blocks;
            std::string cur;
            int depth = 0;
            for (char ch : r) {
                cur += ch;
                if (ch == '(') ++depth;
                if (ch == ')' && --depth == 0) {
                    blocks.push_back(cur);
                    cur.clear();
                }
            }
            if (blocks.empty()) blocks.push_back(r);
            for (const auto& bl : blocks) out.push_back(bl + (dj > 1 ? "_" + std::to_string(dj) : ""));
        }
        if (!zs.empty()) out.push_back(detail::rsp_render(zs, 0, 0, tol));
    }
    std::string s;
    for (const auto& x : out) {
        auto last = s.rfind(')');
        std::string tail = last == std::string::npos ? s : s.substr(last + 1);
        if (!s.empty() && tail.find('_') != std::string::npos && std::isdigit(static_cast<unsigned char>(x[0]))) s += ' ';
        s += x;
    }
    pt.text = s;
    return pt;
}

inline PointType spectral_type(const HTLForm& f, double tol = type_tol) { return spectral_type(f.directions(), tol); }

// ---------------------------------------------------------------------------

struct SingularPoint {
    std::string location;  // "inf" or "re,im"
    PointType type;
};

struct Classification {
    std::string pattern;  // l_0 per point joined by "+"
    std::string type;     // comma-joined spectral types
    std::vector<SingularPoint> points;
};

inline std::string format_location(cplx z) {
    std::ostringstream os;
    os.precision(12);
    os << z.real();
    if (z.imag() != 0.0) os << (z.imag() > 0 ? "+" : "") << z.imag() << "i";
    return os.str();
}

inline Classification classify_system(const LinearSystem& sys, int terms_past_residue = 8) {
    std::vector<std::pair<std::string, Series>> expansions;
    for (const auto& p : sys.poles) expansions.emplace_back(format_location(p.loc), algebra::expand_at(sys, p.loc, terms_past_residue));
    expansions.emplace_back("inf", algebra::expand_at_infinity(sys, terms_past_residue));
    Classification c;
    for (const auto& [loc, a] : expansions) {
        auto v = a.valuation();
        if (!v || *v >= 0) continue;
        c.points.push_back({loc, spectral_type(reduce_directions(a))});
    }
    auto key = [](const SingularPoint& p) {
        const auto& s = p.type.text;
        return std::make_tuple(p.type.d == 1, -p.type.l0,
                               static_cast<long long>(std::count(s.begin(), s.end(), '(') + s.size()), s);
    };
    std::stable_sort(c.points.begin(), c.points.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    for (size_t i = 0; i < c.points.size(); ++i) {
        c.pattern += (i ? "+" : "") + algebra::to_string(c.points[i].type.l0);
        c.type += (i ? "," : "") + c.points[i].type.text;
    }
    return c;
}

inline nlohmann::json to_json(const HTLForm& f) {
    nlohmann::json lv = nlohmann::json::array(), dm = nlohmann::json::array(), res = nlohmann::json::array();
    for (size_t j = 0; j < f.levels.size(); ++j) {
        lv.push_back(algebra::to_string(f.levels[j]));
        nlohmann::json diag = nlohmann::json::array();
        for (int i = 0; i < f.dim(); ++i) diag.push_back(algebra::to_json(f.level_matrices[j](i, i)));
        dm.push_back(diag);
    }
    for (int i = 0; i < f.dim(); ++i) res.push_back(algebra::to_json(f.residue(i, i)));
    return {{"levels", lv}, {"level_diagonals", dm}, {"residue_diagonal", res}, {"ramification", f.ramification}};
}

}  // namespace mpv::htl
