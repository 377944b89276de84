#include "bbci/tropical.hpp"

#include "bbci/error.hpp"
#include "bbci/lp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace bbci {

namespace {

int ambient(const std::vector<HeightFunction>& factors)
{
    require(!factors.empty(), ErrorKind::EmptyInput, "no height functions");
    for (const auto& h : factors)
        require(!h.points.empty(), ErrorKind::EmptyInput, "empty height function");
    const int n = static_cast<int>(factors[0].points[0].size());
    for (const auto& h : factors)
        for (const auto& p : h.points)
            require(static_cast<int>(p.size()) == n, ErrorKind::DimensionMismatch, "points of different rank");
    return n;
}

std::string label_text(const CellLabel& l)
{
    std::ostringstream os;
    os << "(";
    for (size_t j = 0; j < l.per_factor.size(); ++j) {
        os << (j ? ",{" : "{");
        for (size_t k = 0; k < l.per_factor[j].size(); ++k)
            os << (k ? "," : "") << l.per_factor[j][k];
        os << "}";
    }
    os << ")";
    return os.str();
}

QMat differences(const std::vector<QVec>& pts, const std::vector<int>& idx)
{
    QMat out;
    for (size_t k = 1; k < idx.size(); ++k)
        out.push_back(pts[static_cast<size_t>(idx[k])] - pts[static_cast<size_t>(idx[0])]);
    return out;
}

int label_dim(const std::vector<QVec>& pts, const std::vector<int>& idx, int n)
{
    return idx.empty() ? -1 : rank(differences(pts, idx), n);
}

// Recession cone {eq v = 0, ineq v <= 0} is {0}.
bool recession_trivial(const QMat& eq, const QMat& ineq, int n)
{
    for (int i = 0; i < n; ++i)
        for (int s = -1; s <= 1; s += 2) {
            QVec c = zeros(n);
            c[static_cast<size_t>(i)] = s;
            QMat A = ineq;
            QVec b(ineq.size(), Q(0));
            A.push_back(c);
            b.push_back(1);
            LpResult r = lp_maximize(c, A, b, eq, QVec(eq.size(), Q(0)));
            if (r.status != LpStatus::Optimal || r.value != 0)
                return false;
        }
    return true;
}

// Sum of per-inequality witnesses lies in the relative interior of the recession cone.
QVec relint_recession(const QMat& eq, const QMat& ineq, int n)
{
    QMat A = ineq;
    QVec b(ineq.size(), Q(0));
    for (int i = 0; i < n; ++i)
        for (int s = -1; s <= 1; s += 2) {
            QVec row = zeros(n);
            row[static_cast<size_t>(i)] = s;
            A.push_back(row);
            b.push_back(1);
        }
    QVec sum = zeros(n);
    QMat tight = eq;
    for (const auto& a : ineq) {
        LpResult r = lp_maximize(-a, A, b, eq, QVec(eq.size(), Q(0)));
        if (r.status == LpStatus::Optimal && r.value > 0)
            sum = sum + r.x;
        else
            tight.push_back(a);
    }
    if (is_zero(sum)) {
        QMat ker = nullspace(tight, n);
        if (!ker.empty())
            sum = ker[0];
    }
    return primitive(sum);
}

// Fills dim and bounded; false when the cell is empty.
bool finish_cell(TropCell& c, int n)
{
    std::vector<bool> strict(c.ineq.size(), true);
    if (!lp_strict_point(c.ineq, c.ineq_rhs, strict, c.eq, c.eq_rhs, n))
        return false;
    c.dim = n - rank(c.eq, n);
    c.bounded = recession_trivial(c.eq, c.ineq, n);
    return true;
}

void build_poset(TropicalCellComplex& t)
{
    for (size_t a = 0; a < t.cells.size(); ++a)
        for (size_t b = 0; b < t.cells.size(); ++b) {
            if (a == b)
                continue;
            bool sup = true;
            const auto& la = t.cells[a].label.per_factor;
            const auto& lb = t.cells[b].label.per_factor;
            for (size_t j = 0; j < la.size() && sup; ++j)
                sup = std::includes(la[j].begin(), la[j].end(), lb[j].begin(), lb[j].end());
            if (sup)
                t.poset.emplace_back(static_cast<int>(a), static_cast<int>(b));
        }
}

std::vector<std::vector<int>> positive_cells(const HeightFunction& h)
{
    std::vector<std::vector<int>> out;
    for (const auto& c : regular_subdivision(h).all_cells())
        if (c.polytope.dim >= 1)
            out.push_back(c.label);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

bool TropCell::contains(const QVec& u, bool relint) const
{
    for (size_t i = 0; i < eq.size(); ++i)
        if (dot(eq[i], u) != eq_rhs[i])
            return false;
    for (size_t i = 0; i < ineq.size(); ++i) {
        Q v = dot(ineq[i], u);
        if (v > ineq_rhs[i] || (relint && v == ineq_rhs[i]))
            return false;
    }
    return true;
}

TropCell tropical_cell(const std::vector<HeightFunction>& factors, const CellLabel& label)
{
    require(label.per_factor.size() == factors.size(), ErrorKind::DimensionMismatch, "label length differs from r");
    TropCell c;
    c.label = label;
    for (size_t j = 0; j < factors.size(); ++j) {
        const auto& h = factors[j];
        const auto& S = label.per_factor[j];
        require(!S.empty(), ErrorKind::EmptyInput, "empty label component");
        const size_t a0 = static_cast<size_t>(S[0]);
        for (size_t i = 0; i < h.points.size(); ++i) {
            if (i == a0)
                continue;
            QVec row = h.points[i] - h.points[a0];
            Q rhs = h.values[i] - h.values[a0];
            if (std::binary_search(S.begin(), S.end(), static_cast<int>(i))) {
                c.eq.push_back(std::move(row));
                c.eq_rhs.push_back(rhs);
            } else {
                c.ineq.push_back(std::move(row));
                c.ineq_rhs.push_back(rhs);
            }
        }
    }
    return c;
}

TropicalCellComplex tropical_hypersurface(const HeightFunction& h)
{
    TropicalCellComplex t;
    t.n = ambient({h});
    t.factors = {h};
    auto sub = regular_subdivision(h);
    for (const auto& cell : sub.all_cells()) {
        TropCell c = tropical_cell(t.factors, CellLabel{{cell.label}});
        bool nonempty = finish_cell(c, t.n);
        if (cell.polytope.dim >= 1 && nonempty)
            t.cells.push_back(std::move(c));
        else if (cell.polytope.dim == 0 && nonempty)
            t.regions.push_back(std::move(c));
    }
    std::sort(t.cells.begin(), t.cells.end(), [](const TropCell& a, const TropCell& b) { return a.label < b.label; });
    build_poset(t);
    return t;
}

RationalPolytope cayley_polytope(const std::vector<RationalPolytope>& polys)
{
    require(!polys.empty(), ErrorKind::EmptyInput, "no polytopes");
    const int n = polys[0].rank, r = static_cast<int>(polys.size());
    std::vector<QVec> pts;
    for (int j = 0; j < r; ++j) {
        const auto& p = polys[static_cast<size_t>(j)];
        require(p.rank == n, ErrorKind::DimensionMismatch, "polytopes of different rank");
        for (const auto& v : p.vertices) {
            QVec x = v;
            for (int k = 0; k < r; ++k)
                x.push_back(k == j ? 1 : 0);
            pts.push_back(std::move(x));
        }
    }
    return convex_hull(pts);
}

std::vector<MixedCell> mixed_subdivision(const std::vector<HeightFunction>& factors)
{
    const int n = ambient(factors);
    const int r = static_cast<int>(factors.size());
    HeightFunction cay;
    std::vector<std::pair<int, int>> origin;  // (factor, local index)
    for (int j = 0; j < r; ++j) {
        const auto& h = factors[static_cast<size_t>(j)];
        for (size_t i = 0; i < h.points.size(); ++i) {
            QVec x = h.points[i];
            for (int k = 0; k < r; ++k)
                x.push_back(k == j ? 1 : 0);
            cay.points.push_back(std::move(x));
            cay.values.push_back(h.values[i]);
            origin.emplace_back(j, static_cast<int>(i));
        }
    }
    std::vector<MixedCell> out;
    for (const auto& cell : regular_subdivision(cay).all_cells()) {
        MixedCell m;
        m.label.per_factor.resize(static_cast<size_t>(r));
        for (int g : cell.label) {
            auto [j, i] = origin[static_cast<size_t>(g)];
            m.label.per_factor[static_cast<size_t>(j)].push_back(i);
        }
        bool all = true, mixed = true;
        QMat dirs;
        for (int j = 0; j < r; ++j) {
            auto& S = m.label.per_factor[static_cast<size_t>(j)];
            std::sort(S.begin(), S.end());
            if (S.empty()) {
                all = false;
                break;
            }
            QMat d = differences(factors[static_cast<size_t>(j)].points, S);
            if (rank(d, n) < 1)
                mixed = false;
            dirs.insert(dirs.end(), d.begin(), d.end());
        }
        if (!all)
            continue;
        m.dim = rank(dirs, n);
        m.mixed = mixed;
        m.dual_dim = n - m.dim;
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), [](const MixedCell& a, const MixedCell& b) { return a.label < b.label; });
    return out;
}

TropicalCellComplex tci_complex(const std::vector<HeightFunction>& factors)
{
    TropicalCellComplex t;
    t.n = ambient(factors);
    t.factors = factors;
    const size_t r = factors.size();
    std::vector<std::vector<std::vector<int>>> choices;
    for (const auto& h : factors) {
        choices.push_back(positive_cells(h));
        if (choices.back().empty())
            return t;
    }
    std::vector<size_t> pos(r, 0);
    while (true) {
        CellLabel label;
        int sum_dim = 0;
        for (size_t j = 0; j < r; ++j) {
            label.per_factor.push_back(choices[j][pos[j]]);
            sum_dim += label_dim(factors[j].points, label.per_factor[j], t.n);
        }
        TropCell c = tropical_cell(factors, label);
        if (finish_cell(c, t.n)) {
            if (t.n - c.dim != sum_dim)
                fail(ErrorKind::NotTransverse, "conormal spans are dependent at " + label_text(label));
            t.cells.push_back(std::move(c));
        }
        size_t j = 0;
        while (j < r && ++pos[j] == choices[j].size())
            pos[j++] = 0;
        if (j == r)
            break;
    }
    std::sort(t.cells.begin(), t.cells.end(), [](const TropCell& a, const TropCell& b) { return a.label < b.label; });
    build_poset(t);
    return t;
}

bool cayley_bijection(const TropicalCellComplex& tci, const std::vector<MixedCell>& mixed)
{
    std::map<CellLabel, int> a, b;
    for (const auto& c : tci.cells)
        a[c.label] = c.dim;
    for (const auto& m : mixed)
        if (m.mixed)
            b[m.label] = m.dual_dim;
    return a == b;
}

namespace {

struct BbciSetup {
    int n = 0;
    int r = 0;
    RationalPolytope dual_hull;  // conv of all nabla_j
    std::vector<QVec> points;
    std::vector<int> factor_of;
    std::vector<int> local;      // index of a point inside its factor
    int origin = -1;
    std::vector<HeightFunction> factors;
    std::vector<std::vector<int>> trans;  // transversal simplices
};

BbciSetup setup_bbci(const NefPartition& dual, const HeightFunction& h)
{
    BbciSetup s;
    s.r = dual.length();
    require(s.r >= 1, ErrorKind::EmptyInput, "empty nef partition");
    s.n = dual.parent.rank;
    std::vector<QVec> all;
    for (const auto& nj : dual.summands)
        all.insert(all.end(), nj.vertices.begin(), nj.vertices.end());
    s.dual_hull = convex_hull(all);
    s.points = h.points;
    s.origin = h.index_of(zeros(s.n));
    require(s.origin >= 0 && h.values[static_cast<size_t>(s.origin)] == 0, ErrorKind::NotCentred,
            "height must vanish at the origin");
    s.factors.resize(static_cast<size_t>(s.r));
    for (auto& f : s.factors) {
        f.points.push_back(zeros(s.n));
        f.values.push_back(0);
    }
    for (size_t i = 0; i < h.points.size(); ++i) {
        require(static_cast<int>(h.points[i].size()) == s.n, ErrorKind::DimensionMismatch, "point of wrong rank");
        require(s.dual_hull.contains(h.points[i]), ErrorKind::NotCentred, "height point outside the dual polytope");
        if (static_cast<int>(i) == s.origin) {
            s.factor_of.push_back(-1);
            s.local.push_back(0);
            continue;
        }
        require(h.values[i] > 0, ErrorKind::NotCentred, "height must be positive away from the origin");
        int fj = -1;
        for (int j = 0; j < s.r; ++j)
            if (dual.summands[static_cast<size_t>(j)].contains(h.points[i]))
                fj = j;
        require(fj >= 0, ErrorKind::BadPartition, "point " + to_string(h.points[i]) + " lies in no summand");
        auto& f = s.factors[static_cast<size_t>(fj)];
        s.factor_of.push_back(fj);
        s.local.push_back(static_cast<int>(f.points.size()));
        f.points.push_back(h.points[i]);
        f.values.push_back(h.values[i]);
    }
    auto sub = regular_subdivision(h);
    auto flags = classify_triangulation(sub, h);
    require(flags.triangulation && flags.centred_star, ErrorKind::NotCentred,
            "height does not induce a star triangulation centred at the origin");
    std::set<std::vector<int>> trans;
    for (const auto& b : boundary_cells(sub, s.dual_hull)) {
        const int m = static_cast<int>(b.size());
        for (int mask = 1; mask < (1 << m); ++mask) {
            std::vector<int> t;
            std::vector<bool> hit(static_cast<size_t>(s.r), false);
            for (int k = 0; k < m; ++k)
                if (mask & (1 << k)) {
                    t.push_back(b[static_cast<size_t>(k)]);
                    hit[static_cast<size_t>(s.factor_of[static_cast<size_t>(b[static_cast<size_t>(k)])])] = true;
                }
            if (std::all_of(hit.begin(), hit.end(), [](bool x) { return x; }))
                trans.insert(t);
        }
    }
    s.trans.assign(trans.begin(), trans.end());
    return s;
}

// Per-factor local labels of T_j, with the origin added to the factors in zero_in.
CellLabel factor_label(const BbciSetup& s, const std::vector<int>& simplex, const std::vector<bool>& zero_in)
{
    CellLabel l;
    l.per_factor.resize(static_cast<size_t>(s.r));
    for (int g : simplex)
        if (g != s.origin)
            l.per_factor[static_cast<size_t>(s.factor_of[static_cast<size_t>(g)])].push_back(
                s.local[static_cast<size_t>(g)]);
    for (int j = 0; j < s.r; ++j) {
        auto& S = l.per_factor[static_cast<size_t>(j)];
        if (zero_in[static_cast<size_t>(j)])
            S.push_back(0);
        std::sort(S.begin(), S.end());
    }
    return l;
}

RationalPolytope closure_polytope(const TropCell& c, int n)
{
    return polytope_from_hrep(c.ineq, c.ineq_rhs, c.eq, c.eq_rhs, n);
}

bool interiors_overlap(const RationalPolytope& a, const RationalPolytope& b)
{
    QMat A, E;
    QVec bb, f;
    std::vector<bool> strict;
    for (const auto* p : {&a, &b}) {
        for (const auto& fc : p->facets) {
            A.push_back(fc.normal);
            bb.push_back(fc.offset);
            strict.push_back(true);
        }
        for (const auto& e : p->equations) {
            E.push_back(e.normal);
            f.push_back(e.offset);
        }
    }
    return lp_strict_point(A, bb, strict, E, f, a.rank).has_value();
}

bool contained_in(const RationalPolytope& inner, const RationalPolytope& outer)
{
    return std::all_of(inner.vertices.begin(), inner.vertices.end(),
                       [&](const QVec& x) { return outer.contains(x); });
}

// |T_nabla| equals the union of the faces of nabla on the boundary of r times the dual polytope.
bool check_realization(const NefPartition& dual, const BbciSetup& s, const std::vector<RationalPolytope>& pieces)
{
    const RationalPolytope& nabla = dual.parent;
    RationalPolytope delta = polar_dual(s.dual_hull);
    std::map<std::vector<QVec>, RationalPolytope> faces;
    for (const auto& x : delta.vertices) {
        if (support_function(nabla, x) != s.r)
            continue;
        std::vector<QVec> fv;
        for (const auto& v : nabla.vertices)
            if (dot(v, x) == s.r)
                fv.push_back(v);
        RationalPolytope g = convex_hull(fv);
        faces.emplace(g.vertices, g);
    }
    std::vector<RationalPolytope> maximal;
    for (const auto& [k, g] : faces) {
        bool top = true;
        for (const auto& [k2, g2] : faces)
            if (k2 != k && g2.dim > g.dim && contained_in(g, g2))
                top = false;
        if (top)
            maximal.push_back(g);
    }
    for (const auto& p : pieces)
        if (std::none_of(maximal.begin(), maximal.end(), [&](const RationalPolytope& g) { return contained_in(p, g); }))
            return false;
    for (const auto& g : maximal) {
        std::map<std::vector<QVec>, RationalPolytope> inside;
        for (const auto& p : pieces)
            if (p.dim == g.dim && contained_in(p, g))
                inside.emplace(p.vertices, p);
        std::vector<RationalPolytope> list;
        for (auto& [k, p] : inside)
            list.push_back(p);
        Q vol = 0;
        for (size_t a = 0; a < list.size(); ++a) {
            vol += relative_volume(list[a]);
            for (size_t b = a + 1; b < list.size(); ++b)
                if (interiors_overlap(list[a], list[b]))
                    return false;
        }
        if (vol != relative_volume(g))
            return false;
    }
    return true;
}

}  // namespace

BbciComplex bbci_bounded_complex(const NefPartition& nef_dual, const HeightFunction& h)
{
    BbciSetup s = setup_bbci(nef_dual, h);
    BbciComplex out;
    out.bounded.n = s.n;
    out.bounded.factors = s.factors;
    out.total_matches = true;
    struct Entry {
        TropCell cell;
        int simplex;
    };
    std::vector<Entry> entries;
    for (size_t t = 0; t < s.trans.size(); ++t) {
        const auto& T = s.trans[t];
        CellLabel label = factor_label(s, T, std::vector<bool>(static_cast<size_t>(s.r), true));
        TropCell c = tropical_cell(s.factors, label);
        require(finish_cell(c, s.n), ErrorKind::NonRegularComplex, "empty cell for " + label_text(label));
        int sum_dim = 0;
        for (int j = 0; j < s.r; ++j)
            sum_dim += static_cast<int>(label.per_factor[static_cast<size_t>(j)].size()) - 1;
        if (s.n - c.dim != sum_dim)
            fail(ErrorKind::NotTransverse, "conormal spans are dependent at " + label_text(label));
        require(c.bounded, ErrorKind::NonRegularComplex, "cell of a transversal simplex is unbounded");
        std::vector<int> tbar = T;
        tbar.push_back(s.origin);
        std::sort(tbar.begin(), tbar.end());
        TropCell tot = tropical_cell({h}, CellLabel{{tbar}});
        if (closure_polytope(tot, s.n).vertices != closure_polytope(c, s.n).vertices)
            out.total_matches = false;
        entries.push_back({std::move(c), static_cast<int>(t)});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.cell.label < b.cell.label; });
    for (auto& e : entries) {
        out.bounded.cells.push_back(std::move(e.cell));
        out.simplex_of.push_back(e.simplex);
    }
    build_poset(out.bounded);

    TransversalComplex& tc = out.transversal;
    tc.points = s.points;
    tc.factor_of = s.factor_of;
    tc.simplices = s.trans;
    for (const auto& T : s.trans) {
        RationalPolytope sum;
        bool first = true;
        for (int j = 0; j < s.r; ++j) {
            std::vector<QVec> pts;
            for (int g : T)
                if (s.factor_of[static_cast<size_t>(g)] == j)
                    pts.push_back(s.points[static_cast<size_t>(g)]);
            RationalPolytope pj = convex_hull(pts);
            sum = first ? pj : minkowski_sum(sum, pj);
            first = false;
        }
        tc.cells.push_back(std::move(sum));
    }
    tc.realization_ok = check_realization(nef_dual, s, tc.cells);
    return out;
}

std::vector<UnboundedCell> bbci_unbounded_cells(const NefPartition& nef_dual, const HeightFunction& h)
{
    BbciSetup s = setup_bbci(nef_dual, h);
    std::set<CellLabel> seen;
    std::vector<UnboundedCell> out;
    auto consider = [&](const CellLabel& label) {
        for (const auto& S : label.per_factor)
            if (S.size() < 2)
                return;
        if (!seen.insert(label).second)
            return;
        TropCell c = tropical_cell(s.factors, label);
        if (!finish_cell(c, s.n) || c.bounded)
            return;
        out.push_back({label, c.dim, relint_recession(c.eq, c.ineq, s.n)});
    };
    for (const auto& T : s.trans) {
        consider(factor_label(s, T, std::vector<bool>(static_cast<size_t>(s.r), false)));
        // the cone T*0: the origin joins a nonempty proper subset of the factors
        for (int mask = 1; mask < (1 << s.r) - 1; ++mask) {
            std::vector<bool> zero_in(static_cast<size_t>(s.r));
            for (int j = 0; j < s.r; ++j)
                zero_in[static_cast<size_t>(j)] = (mask >> j) & 1;
            consider(factor_label(s, T, zero_in));
        }
    }
    std::sort(out.begin(), out.end(), [](const UnboundedCell& a, const UnboundedCell& b) { return a.label < b.label; });
    return out;
}

std::vector<int> complex_homology(const std::vector<RationalPolytope>& cells)
{
    std::set<QVec> vset;
    for (const auto& c : cells) {
        require(c.dim >= 0, ErrorKind::NonRegularComplex, "empty cell");
        vset.insert(c.vertices.begin(), c.vertices.end());
    }
    std::vector<QVec> verts(vset.begin(), vset.end());
    auto id = [&](const QVec& x) {
        return static_cast<int>(std::lower_bound(verts.begin(), verts.end(), x) - verts.begin());
    };
    int top = -1;
    std::vector<std::set<std::vector<int>>> simp;
    for (const auto& c : cells) {
        for (const auto& x : verts)
            if (c.contains(x))
                require(std::binary_search(c.vertices.begin(), c.vertices.end(), x), ErrorKind::NonRegularComplex,
                        "vertex " + to_string(x) + " meets a cell outside its vertex set");
        top = std::max(top, c.dim);
        if (simp.size() < static_cast<size_t>(c.dim + 1))
            simp.resize(static_cast<size_t>(c.dim + 1));
        for (const auto& s : pulling_triangulation(c)) {
            std::vector<int> g;
            for (int k : s)
                g.push_back(id(c.vertices[static_cast<size_t>(k)]));
            std::sort(g.begin(), g.end());
            const int m = static_cast<int>(g.size());
            for (int mask = 1; mask < (1 << m); ++mask) {
                std::vector<int> f;
                for (int k = 0; k < m; ++k)
                    if (mask & (1 << k))
                        f.push_back(g[static_cast<size_t>(k)]);
                simp[f.size() - 1].insert(f);
            }
        }
    }
    if (top < 0)
        return {};
    std::vector<std::vector<std::vector<int>>> lists;
    for (const auto& s : simp)
        lists.emplace_back(s.begin(), s.end());
    // rank of the boundary map from k-simplices to (k-1)-simplices
    std::vector<int> rk(static_cast<size_t>(top + 2), 0);
    for (int k = 1; k <= top; ++k) {
        const auto& rows = lists[static_cast<size_t>(k - 1)];
        const auto& cols = lists[static_cast<size_t>(k)];
        QMat m(cols.size(), QVec(rows.size(), Q(0)));
        for (size_t c = 0; c < cols.size(); ++c)
            for (size_t i = 0; i < cols[c].size(); ++i) {
                std::vector<int> f = cols[c];
                f.erase(f.begin() + static_cast<long>(i));
                size_t row = static_cast<size_t>(std::lower_bound(rows.begin(), rows.end(), f) - rows.begin());
                m[c][row] = (i % 2 == 0) ? 1 : -1;
            }
        rk[static_cast<size_t>(k)] = rank(m, static_cast<int>(rows.size()));
    }
    std::vector<int> betti;
    for (int k = 0; k <= top; ++k)
        betti.push_back(static_cast<int>(lists[static_cast<size_t>(k)].size()) - rk[static_cast<size_t>(k)] -
                        rk[static_cast<size_t>(k + 1)]);
    return betti;
}

std::vector<int> complex_homology(const TropicalCellComplex& complex)
{
    std::vector<RationalPolytope> cells;
    for (const auto& c : complex.cells)
        if (c.bounded)
            cells.push_back(closure_polytope(c, complex.n));
    return complex_homology(cells);
}

std::vector<int> complex_homology(const TransversalComplex& complex) { return complex_homology(complex.cells); }

std::vector<Stratum> compactification_strata(const std::vector<HeightFunction>& factors, const Fan& fan)
{
    const int n = ambient(factors);
    require(fan.rank == n, ErrorKind::DimensionMismatch, "fan rank differs from the polytopes");
    const int r = static_cast<int>(factors.size());
    std::vector<RationalPolytope> polys;
    for (const auto& h : factors)
        polys.push_back(convex_hull(h.points));
    std::vector<Stratum> out;
    for (size_t ci = 0; ci < fan.cones.size(); ++ci) {
        Stratum st;
        st.cone = static_cast<int>(ci);
        QVec w = zeros(n);
        for (int k : fan.cones[ci])
            w = w + fan.rays[static_cast<size_t>(k)];
        for (int j = 0; j < r; ++j) {
            const auto& h = factors[static_cast<size_t>(j)];
            Q best = support_function(polys[static_cast<size_t>(j)], w);
            HeightFunction hs;
            for (size_t i = 0; i < h.points.size(); ++i)
                if (dot(h.points[i], w) == best) {
                    hs.points.push_back(h.points[i]);
                    hs.values.push_back(h.values[i]);
                }
            RationalPolytope F = convex_hull(hs.points);
            for (int k : fan.cones[ci]) {
                const QVec& ray = fan.rays[static_cast<size_t>(k)];
                Q m = support_function(polys[static_cast<size_t>(j)], ray);
                for (const auto& v : F.vertices)
                    require(dot(v, ray) == m, ErrorKind::NotARefinement,
                            "cone " + std::to_string(ci) + " leaves the normal cone of its face");
            }
            st.faces.push_back(std::move(F));
            st.heights.push_back(std::move(hs));
        }
        st.nonempty = true;
        for (int mask = 1; mask < (1 << r) && st.nonempty; ++mask) {
            QMat dirs;
            int count = 0;
            for (int j = 0; j < r; ++j)
                if (mask & (1 << j)) {
                    ++count;
                    const auto& v = st.faces[static_cast<size_t>(j)].vertices;
                    for (size_t k = 1; k < v.size(); ++k)
                        dirs.push_back(v[k] - v[0]);
                }
            if (rank(dirs, n) < count)
                st.nonempty = false;
        }
        out.push_back(std::move(st));
    }
    return out;
}

bool mpcs_check(const Fan& fan, int r)
{
    require(fan.is_simplicial(), ErrorKind::NotSimplicial, "fan is not simplicial");
    const int limit = fan.rank - r;
    for (const auto& cone : fan.cones) {
        const int d = static_cast<int>(cone.size());
        if (d == 0 || d > limit)
            continue;
        ZMat gens;
        for (int k : cone)
            gens.push_back(to_zvec(primitive(fan.rays[static_cast<size_t>(k)])));
        if (maximal_minor_gcd(gens) != 1)
            return false;
    }
    return true;
}

BetaThreshold smoothness_beta_threshold(const std::vector<HeightFunction>& factors, const std::vector<QVec>& moduli)
{
    require(moduli.size() == factors.size(), ErrorKind::DimensionMismatch, "one modulus list per factor");
    for (size_t j = 0; j < factors.size(); ++j)
        require(moduli[j].size() == factors[j].points.size(), ErrorKind::DimensionMismatch,
                "one modulus per point");
    TropicalCellComplex t = tci_complex(factors);
    const int n = t.n;
    const size_t r = factors.size();
    BetaThreshold out;
    for (const auto& cell : t.cells) {
        const auto& L = cell.label.per_factor;
        // rows alpha - alpha0_j for the tuple, with the distinguished alpha_j per factor
        QMat rows;
        std::vector<size_t> lead(r);
        std::vector<int> a0(r), aj(r);
        for (size_t j = 0; j < r; ++j) {
            const auto& S = L[j];
            const auto& pts = factors[j].points;
            require(label_dim(pts, S, n) == static_cast<int>(S.size()) - 1, ErrorKind::NotTriangulation,
                    "label " + label_text(cell.label) + " is not a simplex");
            a0[j] = S[0];
            aj[j] = S[1];
            for (size_t k = 2; k < S.size(); ++k)
                if (moduli[j][static_cast<size_t>(S[k])] > moduli[j][static_cast<size_t>(aj[j])])
                    aj[j] = S[k];
            require(moduli[j][static_cast<size_t>(aj[j])] != 0, ErrorKind::EmptyInput, "vanishing leading modulus");
            for (size_t k = 1; k < S.size(); ++k) {
                if (S[k] == aj[j])
                    lead[j] = rows.size();
                rows.push_back(pts[static_cast<size_t>(S[k])] - pts[static_cast<size_t>(a0[j])]);
            }
        }
        // minimum-norm dual vectors v_k = R^T y with (R R^T) y = e_lead
        QMat gram(rows.size(), QVec(rows.size(), Q(0)));
        for (size_t a = 0; a < rows.size(); ++a)
            for (size_t b = 0; b < rows.size(); ++b)
                gram[a][b] = dot(rows[a], rows[b]);
        std::vector<QVec> v(r);
        for (size_t k = 0; k < r; ++k) {
            QVec rhs(rows.size(), Q(0));
            rhs[lead[k]] = 1;
            auto y = solve(gram, rhs, static_cast<int>(rows.size()));
            require(y.has_value() && rank(rows, n) == static_cast<int>(rows.size()), ErrorKind::NotTransverse,
                    "no dual vectors at " + label_text(cell.label));
            v[k] = mat_vec(transpose(rows), *y);
        }
        Q K = 0;
        for (size_t j = 0; j < r; ++j) {
            const auto& S = L[j];
            const auto& pts = factors[j].points;
            const Q lead_mod = moduli[j][static_cast<size_t>(aj[j])];
            Q row_sum = 0;
            for (size_t k = 0; k < r; ++k)
                for (size_t i = 0; i < pts.size(); ++i) {
                    if (std::binary_search(S.begin(), S.end(), static_cast<int>(i)))
                        continue;
                    row_sum += abs(moduli[j][i]) / lead_mod *
                               abs(dot(pts[i] - pts[static_cast<size_t>(a0[j])], v[k]));
                }
            K = std::max(K, row_sum);
        }
        double beta = 0;
        if (K > 1) {
            double l = std::log(K.get_d());
            beta = l * l;
        }
        out.beta0 = std::max(out.beta0, beta);
        out.per_tuple.push_back({cell.label, K, beta});
    }
    return out;
}

}  // namespace bbci
