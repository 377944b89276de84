#include "bbci/subdiv.hpp"

#include "bbci/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace bbci {

int HeightFunction::index_of(const QVec& p) const
{
    auto it = std::find(points.begin(), points.end(), p);
    return it == points.end() ? -1 : static_cast<int>(it - points.begin());
}

LegendreValue legendre_eval(const HeightFunction& h, const QVec& x)
{
    require(!h.points.empty(), ErrorKind::EmptyInput, "empty height function");
    LegendreValue out;
    for (size_t i = 0; i < h.points.size(); ++i) {
        Q val = dot(h.points[i], x) - h.values[i];
        if (out.argmax.empty() || val > out.value) {
            out.value = val;
            out.argmax = {static_cast<int>(i)};
        } else if (val == out.value) {
            out.argmax.push_back(static_cast<int>(i));
        }
    }
    return out;
}

namespace {

struct Lift {
    AffineHull hull;
    std::vector<QVec> lifted;
    RationalPolytope upper;  // hull of lifted points
    bool affine = false;     // heights restrict to an affine function
};

Lift lift(const HeightFunction& h)
{
    require(!h.points.empty(), ErrorKind::DegenerateHull, "no points to subdivide");
    require(h.points.size() == h.values.size(), ErrorKind::DimensionMismatch, "heights and points differ in length");
    Lift L;
    L.hull = affine_hull(h.points);
    for (size_t i = 0; i < h.points.size(); ++i) {
        QVec p;
        for (int c : L.hull.pivots)
            p.push_back(h.points[i][static_cast<size_t>(c)]);
        p.push_back(h.values[i]);
        L.lifted.push_back(std::move(p));
    }
    L.upper = convex_hull(L.lifted);
    L.affine = L.upper.dim <= L.hull.dim();
    return L;
}

std::vector<const Facet*> lower_facets(const Lift& L)
{
    std::vector<const Facet*> out;
    for (const auto& f : L.upper.facets)
        if (f.normal.back() < 0)
            out.push_back(&f);
    return out;
}

RationalPolytope hull_of(const std::vector<QVec>& pts, const std::vector<int>& label)
{
    std::vector<QVec> s;
    for (int i : label)
        s.push_back(pts[static_cast<size_t>(i)]);
    return convex_hull(s);
}

}  // namespace

RegularSubdivision regular_subdivision(const HeightFunction& h)
{
    Lift L = lift(h);
    RegularSubdivision sub;
    sub.points = h.points;
    sub.dim = L.hull.dim();
    const int m = static_cast<int>(h.points.size());
    std::vector<bool> used(static_cast<size_t>(m), false);
    if (L.affine || sub.dim == 0) {
        std::vector<int> all(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i)
            all[static_cast<size_t>(i)] = i;
        sub.cells.push_back({all, hull_of(h.points, all)});
        used.assign(static_cast<size_t>(m), true);
    } else {
        for (const Facet* f : lower_facets(L)) {
            std::vector<int> label;
            for (int i = 0; i < m; ++i)
                if (dot(f->normal, L.lifted[static_cast<size_t>(i)]) == f->offset) {
                    label.push_back(i);
                    used[static_cast<size_t>(i)] = true;
                }
            sub.cells.push_back({label, hull_of(h.points, label)});
        }
    }
    std::sort(sub.cells.begin(), sub.cells.end(),
              [](const SubdivisionCell& a, const SubdivisionCell& b) { return a.label < b.label; });
    sub.envelope_changed = std::find(used.begin(), used.end(), false) != used.end();
    sub.is_triangulation = std::all_of(sub.cells.begin(), sub.cells.end(), [&](const SubdivisionCell& c) {
        return static_cast<int>(c.label.size()) == sub.dim + 1;
    });
    return sub;
}

std::vector<SubdivisionCell> RegularSubdivision::all_cells() const
{
    std::map<std::vector<int>, RationalPolytope> found;
    for (const auto& c : cells) {
        found.emplace(c.label, c.polytope);
        FaceLattice fl = face_lattice(c.polytope);
        for (const auto& face : fl.faces) {
            if (face.dim < 0 || face.dim == c.polytope.dim)
                continue;
            std::vector<QVec> fv;
            for (int k : face.vertices)
                fv.push_back(c.polytope.vertices[static_cast<size_t>(k)]);
            RationalPolytope fp = convex_hull(fv);
            std::vector<int> label;
            for (int i : c.label)
                if (fp.contains(points[static_cast<size_t>(i)]))
                    label.push_back(i);
            found.emplace(label, fp);
        }
    }
    std::vector<SubdivisionCell> out;
    for (auto& [label, poly] : found)
        out.push_back({label, poly});
    std::stable_sort(out.begin(), out.end(), [](const SubdivisionCell& a, const SubdivisionCell& b) {
        return a.polytope.dim < b.polytope.dim;
    });
    return out;
}

HeightFunction convex_envelope(const HeightFunction& h)
{
    Lift L = lift(h);
    HeightFunction out = h;
    if (L.affine || L.hull.dim() == 0)
        return out;
    auto lows = lower_facets(L);
    for (size_t i = 0; i < h.points.size(); ++i) {
        const QVec& p = L.lifted[i];
        bool first = true;
        Q best;
        for (const Facet* f : lows) {
            Q lin = 0;
            for (size_t k = 0; k + 1 < p.size(); ++k)
                lin += f->normal[k] * p[k];
            Q t = (f->offset - lin) / f->normal.back();
            if (first || t > best) {
                best = t;
                first = false;
            }
        }
        out.values[i] = best;
    }
    return out;
}

TriangulationFlags classify_triangulation(const RegularSubdivision& sub, const HeightFunction& h)
{
    TriangulationFlags fl;
    fl.triangulation = sub.is_triangulation;
    if (fl.triangulation) {
        fl.refined = true;
        fl.unimodular = true;
        for (const auto& c : sub.cells) {
            if (lattice_points(c.polytope).size() != c.polytope.vertices.size())
                fl.refined = false;
            ZMat edges;
            for (size_t k = 1; k < c.polytope.vertices.size(); ++k)
                edges.push_back(to_zvec(c.polytope.vertices[k] - c.polytope.vertices[0]));
            if (!edges.empty() && maximal_minor_gcd(edges) != 1)
                fl.unimodular = false;
        }
        fl.unimodular = fl.unimodular && fl.refined;
    }
    const int n = sub.points.empty() ? 0 : static_cast<int>(sub.points[0].size());
    int o = h.index_of(zeros(n));
    if (o >= 0 && h.values[static_cast<size_t>(o)] == 0) {
        bool positive = true;
        for (size_t i = 0; i < h.values.size(); ++i)
            if (static_cast<int>(i) != o && h.values[i] <= 0)
                positive = false;
        bool star = std::all_of(sub.cells.begin(), sub.cells.end(), [&](const SubdivisionCell& c) {
            return std::find(c.label.begin(), c.label.end(), o) != c.label.end();
        });
        fl.centred_star = positive && star;
    }
    return fl;
}

std::vector<std::vector<int>> boundary_cells(const RegularSubdivision& sub, const RationalPolytope& P)
{
    std::vector<std::vector<int>> cand;
    for (const auto& c : sub.all_cells()) {
        bool in_face = false;
        for (const auto& f : P.facets) {
            if (f.offset == 0)
                continue;
            bool tight = true;
            for (const auto& v : c.polytope.vertices)
                if (dot(f.normal, v) != f.offset) {
                    tight = false;
                    break;
                }
            if (tight) {
                in_face = true;
                break;
            }
        }
        if (in_face)
            cand.push_back(c.label);
    }
    std::vector<std::vector<int>> out;
    for (const auto& a : cand) {
        bool maximal = true;
        for (const auto& b : cand)
            if (b.size() > a.size() && std::includes(b.begin(), b.end(), a.begin(), a.end()))
                maximal = false;
        if (maximal)
            out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

RegularSubdivision star_extension(const std::vector<QVec>& points, const std::vector<std::vector<int>>& boundary,
                                  const RationalPolytope& P)
{
    require(P.contains(zeros(P.rank)), ErrorKind::OriginNotInterior, "origin is not in the polytope");
    RegularSubdivision sub;
    sub.points = points;
    auto it = std::find(points.begin(), points.end(), zeros(P.rank));
    int o = static_cast<int>(it - points.begin());
    if (it == points.end())
        sub.points.push_back(zeros(P.rank));
    sub.dim = P.dim;
    for (auto label : boundary) {
        label.push_back(o);
        std::sort(label.begin(), label.end());
        sub.cells.push_back({label, hull_of(sub.points, label)});
    }
    std::sort(sub.cells.begin(), sub.cells.end(),
              [](const SubdivisionCell& a, const SubdivisionCell& b) { return a.label < b.label; });
    sub.is_triangulation = std::all_of(sub.cells.begin(), sub.cells.end(), [&](const SubdivisionCell& c) {
        return static_cast<int>(c.label.size()) == sub.dim + 1 && c.polytope.dim == sub.dim;
    });
    return sub;
}

}  // namespace bbci
