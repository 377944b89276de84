#include "bbci/geom.hpp"

#include "bbci/error.hpp"
#include "bbci/lp.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace bbci {

namespace {

QVec project(const QVec& x, const std::vector<int>& coords)
{
    QVec r;
    r.reserve(coords.size());
    for (int c : coords)
        r.push_back(x[static_cast<size_t>(c)]);
    return r;
}

// Calls fn on each k-subset of {0..n-1} in lexicographic order.
void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn)
{
    if (k > n || k < 0)
        return;
    std::vector<int> idx(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        idx[static_cast<size_t>(i)] = i;
    for (;;) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[static_cast<size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
}

void check_points(const std::vector<QVec>& points)
{
    require(!points.empty(), ErrorKind::EmptyInput, "no points");
    for (const auto& p : points)
        require(p.size() == points[0].size(), ErrorKind::DimensionMismatch, "points of different ranks");
}

}  // namespace

bool RationalPolytope::contains(const QVec& x) const
{
    for (const auto& e : equations)
        if (dot(e.normal, x) != e.offset)
            return false;
    for (const auto& f : facets)
        if (dot(f.normal, x) > f.offset)
            return false;
    return true;
}

AffineHull affine_hull(const std::vector<QVec>& points)
{
    check_points(points);
    AffineHull h;
    h.base = points[0];
    const int n = static_cast<int>(h.base.size());
    QMat diffs;
    for (size_t i = 1; i < points.size(); ++i)
        diffs.push_back(points[i] - h.base);
    Rref r = rref(diffs, n);
    h.directions = r.m;
    h.pivots = r.pivots;
    for (const auto& w : nullspace(h.directions, n)) {
        QVec p = primitive(w);
        h.equations.push_back({p, dot(p, h.base)});
    }
    return h;
}

RationalPolytope convex_hull(const std::vector<QVec>& input)
{
    check_points(input);
    std::vector<QVec> pts = input;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    RationalPolytope P;
    P.rank = static_cast<int>(pts[0].size());
    AffineHull ah = affine_hull(pts);
    P.dim = ah.dim();
    P.equations = ah.equations;
    std::sort(P.equations.begin(), P.equations.end(),
              [](const Facet& a, const Facet& b) { return a.normal < b.normal; });
    if (P.dim == 0) {
        P.vertices = {pts[0]};
        return P;
    }
    const int d = P.dim;
    const int m = static_cast<int>(pts.size());
    std::vector<QVec> proj;
    proj.reserve(pts.size());
    for (const auto& p : pts)
        proj.push_back(project(p, ah.pivots));

    std::vector<Facet> facets;  // in projected coordinates
    auto add = [&](QVec a, Q off) {
        Facet f{a, off};
        if (std::find(facets.begin(), facets.end(), f) == facets.end())
            facets.push_back(f);
    };
    if (d == 1) {
        auto [lo, hi] = std::minmax_element(proj.begin(), proj.end());
        add({Q(1)}, (*hi)[0]);
        add({Q(-1)}, -(*lo)[0]);
    } else {
        for_each_subset(m, d, [&](const std::vector<int>& s) {
            QMat diffs;
            for (size_t i = 1; i < s.size(); ++i)
                diffs.push_back(proj[static_cast<size_t>(s[i])] - proj[static_cast<size_t>(s[0])]);
            QMat ns = nullspace(diffs, d);
            if (ns.size() != 1)
                return;
            QVec a = primitive(ns[0]);
            Q off = dot(a, proj[static_cast<size_t>(s[0])]);
            bool pos = false, neg = false;
            for (const auto& p : proj) {
                Q v = dot(a, p) - off;
                if (v > 0)
                    pos = true;
                else if (v < 0)
                    neg = true;
                if (pos && neg)
                    return;
            }
            if (pos) {
                a = -a;
                off = -off;
            }
            add(a, off);
        });
    }
    for (const auto& f : facets) {
        QVec full = zeros(P.rank);
        for (size_t i = 0; i < ah.pivots.size(); ++i)
            full[static_cast<size_t>(ah.pivots[i])] = f.normal[i];
        P.facets.push_back({full, f.offset});
    }
    std::sort(P.facets.begin(), P.facets.end(), [](const Facet& a, const Facet& b) {
        return a.normal < b.normal || (a.normal == b.normal && a.offset < b.offset);
    });
    for (int i = 0; i < m; ++i) {
        QMat tight;
        for (const auto& f : facets)
            if (dot(f.normal, proj[static_cast<size_t>(i)]) == f.offset)
                tight.push_back(f.normal);
        if (rank(tight, d) == d)
            P.vertices.push_back(pts[static_cast<size_t>(i)]);
    }
    return P;
}

std::vector<QVec> lattice_points(const RationalPolytope& p)
{
    require(!p.vertices.empty(), ErrorKind::Unbounded, "polytope has no vertices");
    const size_t n = static_cast<size_t>(p.rank);
    std::vector<Z> lo(n), hi(n);
    for (size_t i = 0; i < n; ++i) {
        Q mn = p.vertices[0][i], mx = p.vertices[0][i];
        for (const auto& v : p.vertices) {
            mn = std::min(mn, v[i]);
            mx = std::max(mx, v[i]);
        }
        mpz_cdiv_q(lo[i].get_mpz_t(), mn.get_num_mpz_t(), mn.get_den_mpz_t());
        mpz_fdiv_q(hi[i].get_mpz_t(), mx.get_num_mpz_t(), mx.get_den_mpz_t());
    }
    std::vector<QVec> out;
    if (n == 0)
        return out;
    QVec cur(n);
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == n) {
            if (p.contains(cur))
                out.push_back(cur);
            return;
        }
        for (Z z = lo[i]; z <= hi[i]; ++z) {
            cur[i] = z;
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

RationalPolytope minkowski_sum(const RationalPolytope& p, const RationalPolytope& q)
{
    require(p.rank == q.rank, ErrorKind::DimensionMismatch, "Minkowski sum of different ranks");
    std::vector<QVec> sums;
    for (const auto& a : p.vertices)
        for (const auto& b : q.vertices)
            sums.push_back(a + b);
    return convex_hull(sums);
}

RationalPolytope polar_dual(const RationalPolytope& p)
{
    require(p.full_dimensional(), ErrorKind::OriginNotInterior, "polytope is not full-dimensional");
    std::vector<QVec> verts;
    for (const auto& f : p.facets) {
        require(f.offset > 0, ErrorKind::OriginNotInterior, "origin on or outside facet " + to_string(f.normal));
        verts.push_back((1 / f.offset) * f.normal);
    }
    return convex_hull(verts);
}

bool is_reflexive(const RationalPolytope& p)
{
    RationalPolytope d = polar_dual(p);
    auto integral = [](const RationalPolytope& x) {
        return std::all_of(x.vertices.begin(), x.vertices.end(), [](const QVec& v) { return is_integral(v); });
    };
    return integral(p) && integral(d);
}

Q support_function(const RationalPolytope& p, const QVec& y)
{
    require(!p.vertices.empty(), ErrorKind::Unbounded, "polytope has no vertices");
    require(y.size() == static_cast<size_t>(p.rank), ErrorKind::DimensionMismatch, "functional rank");
    Q best = dot(y, p.vertices[0]);
    for (const auto& v : p.vertices)
        best = std::max(best, dot(y, v));
    return best;
}

bool in_relint(const RationalPolytope& p, const QVec& x)
{
    for (const auto& e : p.equations)
        if (dot(e.normal, x) != e.offset)
            return false;
    for (const auto& f : p.facets)
        if (dot(f.normal, x) >= f.offset)
            return false;
    return true;
}

bool origin_in_relint(const RationalPolytope& p) { return in_relint(p, zeros(p.rank)); }

std::vector<int> FaceLattice::f_vector() const
{
    int top = -1;
    for (const auto& f : faces)
        top = std::max(top, f.dim);
    std::vector<int> fv(static_cast<size_t>(std::max(top, 0)), 0);
    for (const auto& f : faces)
        if (f.dim >= 0 && f.dim < top)
            ++fv[static_cast<size_t>(f.dim)];
    return fv;
}

FaceLattice face_lattice(const RationalPolytope& p)
{
    const int nv = static_cast<int>(p.vertices.size());
    std::vector<std::vector<int>> facet_verts;
    for (const auto& f : p.facets) {
        std::vector<int> s;
        for (int i = 0; i < nv; ++i)
            if (dot(f.normal, p.vertices[static_cast<size_t>(i)]) == f.offset)
                s.push_back(i);
        facet_verts.push_back(s);
    }
    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> queue;
    std::vector<int> all(static_cast<size_t>(nv));
    for (int i = 0; i < nv; ++i)
        all[static_cast<size_t>(i)] = i;
    seen.insert(all);
    queue.push_back(all);
    seen.insert({});
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        const auto cur = queue[qi];
        for (const auto& fv : facet_verts) {
            std::vector<int> inter;
            std::set_intersection(cur.begin(), cur.end(), fv.begin(), fv.end(), std::back_inserter(inter));
            if (seen.insert(inter).second)
                queue.push_back(inter);
        }
    }
    FaceLattice L;
    for (const auto& s : seen) {
        Face f;
        f.vertices = s;
        if (s.empty()) {
            f.dim = -1;
        } else {
            std::vector<QVec> pts;
            for (int i : s)
                pts.push_back(p.vertices[static_cast<size_t>(i)]);
            f.dim = affine_hull(pts).dim();
        }
        for (size_t k = 0; k < facet_verts.size(); ++k)
            if (std::includes(facet_verts[k].begin(), facet_verts[k].end(), s.begin(), s.end()))
                f.facets.push_back(static_cast<int>(k));
        L.faces.push_back(std::move(f));
    }
    std::stable_sort(L.faces.begin(), L.faces.end(), [](const Face& a, const Face& b) { return a.dim < b.dim; });
    L.covers.assign(L.faces.size(), {});
    for (size_t i = 0; i < L.faces.size(); ++i)
        for (size_t j = 0; j < L.faces.size(); ++j) {
            const auto& a = L.faces[i];
            const auto& b = L.faces[j];
            if (b.dim == a.dim + 1 && std::includes(b.vertices.begin(), b.vertices.end(), a.vertices.begin(),
                                                    a.vertices.end()))
                L.covers[i].push_back(static_cast<int>(j));
        }
    return L;
}

std::vector<std::vector<int>> pulling_triangulation(const RationalPolytope& p)
{
    if (p.dim < 0)
        return {};
    if (p.dim == 0)
        return {{0}};
    FaceLattice L = face_lattice(p);
    // simplices of a face = lowest vertex joined to simplices of facets avoiding it
    std::map<std::vector<int>, std::vector<std::vector<int>>> memo;
    std::function<std::vector<std::vector<int>>(size_t)> tri = [&](size_t fi) -> std::vector<std::vector<int>> {
        const Face& f = L.faces[fi];
        auto it = memo.find(f.vertices);
        if (it != memo.end())
            return it->second;
        std::vector<std::vector<int>> out;
        if (f.dim == 0) {
            out.push_back(f.vertices);
        } else {
            int v = f.vertices.front();
            for (size_t gi = 0; gi < L.faces.size(); ++gi) {
                const Face& g = L.faces[gi];
                if (g.dim != f.dim - 1 ||
                    !std::includes(f.vertices.begin(), f.vertices.end(), g.vertices.begin(), g.vertices.end()) ||
                    std::binary_search(g.vertices.begin(), g.vertices.end(), v))
                    continue;
                for (auto s : tri(gi)) {
                    s.insert(s.begin(), v);
                    out.push_back(std::move(s));
                }
            }
        }
        memo[f.vertices] = out;
        return out;
    };
    size_t top = L.faces.size();
    for (size_t i = 0; i < L.faces.size(); ++i)
        if (L.faces[i].dim == p.dim)
            top = i;
    return tri(top);
}

Q relative_volume(const RationalPolytope& p)
{
    if (p.dim <= 0)
        return p.dim == 0 ? Q(1) : Q(0);
    AffineHull ah = affine_hull(p.vertices);
    Q total = 0;
    for (const auto& s : pulling_triangulation(p)) {
        QMat m;
        for (size_t i = 1; i < s.size(); ++i)
            m.push_back(project(p.vertices[static_cast<size_t>(s[i])] - p.vertices[static_cast<size_t>(s[0])],
                                ah.pivots));
        total += abs(det(m));
    }
    return total;
}

bool PolyCone::contains(const QVec& x) const
{
    for (const auto& e : equations)
        if (dot(e, x) != 0)
            return false;
    for (const auto& a : inequalities)
        if (dot(a, x) < 0)
            return false;
    return true;
}

bool PolyCone::contains_relint(const QVec& x) const
{
    for (const auto& e : equations)
        if (dot(e, x) != 0)
            return false;
    for (const auto& a : inequalities)
        if (dot(a, x) <= 0)
            return false;
    return true;
}

PolyCone make_cone(const std::vector<QVec>& rays, int n)
{
    PolyCone c;
    c.rays = rays;
    c.dim = rank(rays, n);
    for (const auto& w : nullspace(rays, n))
        c.equations.push_back(primitive(w));
    if (c.dim == 0)
        return c;
    const int k = static_cast<int>(rays.size());
    std::set<QVec> found;
    for_each_subset(k, c.dim - 1, [&](const std::vector<int>& s) {
        QMat sys = c.equations;
        for (int i : s)
            sys.push_back(rays[static_cast<size_t>(i)]);
        if (rank(sys, n) != n - 1)
            return;
        QMat ns = nullspace(sys, n);
        QVec a = primitive(ns[0]);
        bool pos = false, neg = false;
        for (const auto& r : rays) {
            Q v = dot(a, r);
            if (v > 0)
                pos = true;
            else if (v < 0)
                neg = true;
        }
        if (pos && neg)
            return;
        if (neg)
            a = -a;
        found.insert(a);
    });
    c.inequalities.assign(found.begin(), found.end());
    return c;
}

std::vector<std::vector<int>> Fan::maximal_cones() const
{
    std::vector<std::vector<int>> out;
    for (const auto& c : cones) {
        bool maximal = true;
        for (const auto& d : cones)
            if (d.size() > c.size() && std::includes(d.begin(), d.end(), c.begin(), c.end())) {
                maximal = false;
                break;
            }
        if (maximal)
            out.push_back(c);
    }
    return out;
}

int Fan::find_cone(const std::vector<int>& r) const
{
    std::vector<int> s = r;
    std::sort(s.begin(), s.end());
    auto it = std::find(cones.begin(), cones.end(), s);
    return it == cones.end() ? -1 : static_cast<int>(it - cones.begin());
}

PolyCone Fan::cone(int i) const
{
    std::vector<QVec> r;
    for (int k : cones[static_cast<size_t>(i)])
        r.push_back(rays[static_cast<size_t>(k)]);
    return make_cone(r, rank);
}

bool Fan::is_simplicial() const
{
    for (size_t i = 0; i < cones.size(); ++i) {
        std::vector<QVec> r;
        for (int k : cones[i])
            r.push_back(rays[static_cast<size_t>(k)]);
        if (bbci::rank(r, rank) != static_cast<int>(r.size()))
            return false;
    }
    return true;
}

int Fan::locate(const QVec& x) const
{
    int best = -1;
    size_t best_size = 0;
    for (size_t i = 0; i < cones.size(); ++i) {
        if (best >= 0 && cones[i].size() >= best_size)
            continue;
        if (cone(static_cast<int>(i)).contains_relint(x)) {
            best = static_cast<int>(i);
            best_size = cones[i].size();
        }
    }
    return best;
}

Fan fan_from_maximal(int rank, std::vector<QVec> rays, const std::vector<std::vector<int>>& maximal)
{
    Fan f;
    f.rank = rank;
    f.rays = std::move(rays);
    std::set<std::vector<int>> all;
    for (auto m : maximal) {
        std::sort(m.begin(), m.end());
        std::vector<QVec> r;
        for (int k : m)
            r.push_back(f.rays[static_cast<size_t>(k)]);
        PolyCone c = make_cone(r, rank);
        // faces are intersections of facet ray sets
        std::set<std::vector<int>> faces{m};
        std::vector<std::vector<int>> queue{m};
        std::vector<std::vector<int>> facet_sets;
        for (const auto& a : c.inequalities) {
            std::vector<int> s;
            for (int k : m)
                if (dot(a, f.rays[static_cast<size_t>(k)]) == 0)
                    s.push_back(k);
            facet_sets.push_back(s);
        }
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            auto cur = queue[qi];
            for (const auto& fs : facet_sets) {
                std::vector<int> inter;
                std::set_intersection(cur.begin(), cur.end(), fs.begin(), fs.end(), std::back_inserter(inter));
                if (faces.insert(inter).second)
                    queue.push_back(inter);
            }
        }
        faces.insert({});
        all.insert(faces.begin(), faces.end());
    }
    f.cones.assign(all.begin(), all.end());
    std::stable_sort(f.cones.begin(), f.cones.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    // completeness probe: signed coordinate directions and one generic vector per orthant
    bool complete = true;
    std::vector<PolyCone> maxc;
    for (auto m : maximal) {
        std::vector<QVec> r;
        for (int k : m)
            r.push_back(f.rays[static_cast<size_t>(k)]);
        maxc.push_back(make_cone(r, rank));
    }
    std::vector<QVec> probes;
    for (int i = 0; i < rank; ++i) {
        probes.push_back(unit(rank, i));
        probes.push_back(-unit(rank, i));
    }
    for (int mask = 0; mask < (1 << rank); ++mask) {
        QVec v(static_cast<size_t>(rank));
        for (int i = 0; i < rank; ++i)
            v[static_cast<size_t>(i)] = qfrac((mask >> i) & 1 ? 3 + i : -(2 + 2 * i), 1 + i);
        probes.push_back(v);
    }
    for (const auto& p : probes) {
        bool hit = false;
        for (const auto& c : maxc)
            if (c.contains(p)) {
                hit = true;
                break;
            }
        if (!hit) {
            complete = false;
            break;
        }
    }
    f.complete = complete;
    return f;
}

Fan normal_fan(const RationalPolytope& p)
{
    require(p.full_dimensional(), ErrorKind::NotFullDimensional, "normal fan needs a full-dimensional polytope");
    FaceLattice L = face_lattice(p);
    Fan f;
    f.rank = p.rank;
    for (const auto& fc : p.facets)
        f.rays.push_back(primitive(fc.normal));
    std::set<std::vector<int>> cones;
    for (const auto& face : L.faces)
        if (face.dim >= 0)
            cones.insert(face.facets);
    f.cones.assign(cones.begin(), cones.end());
    std::stable_sort(f.cones.begin(), f.cones.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    f.complete = true;
    return f;
}

PolyCone tangent_cone_at_origin(const RationalPolytope& p)
{
    PolyCone c;
    QVec o = zeros(p.rank);
    for (const auto& f : p.facets)
        if (f.offset == 0)
            c.inequalities.push_back(primitive(-f.normal));
    for (const auto& e : p.equations)
        c.equations.push_back(e.normal);
    c.dim = p.rank - static_cast<int>(c.equations.size());
    return c;
}

RationalPolytope polytope_from_hrep(const QMat& A, const QVec& b, const QMat& E, const QVec& f, int n)
{
    // boundedness: recession cone {A x <= 0, E x = 0} must be {0}
    for (int i = 0; i < n; ++i)
        for (int s = -1; s <= 1; s += 2) {
            QVec c = zeros(n);
            c[static_cast<size_t>(i)] = s;
            QMat A2 = A;
            QVec b2(A.size(), Q(0));
            QVec box = zeros(n);
            box[static_cast<size_t>(i)] = s;
            A2.push_back(box);
            b2.push_back(1);
            LpResult r = lp_maximize(c, A2, b2, E, QVec(E.size(), Q(0)));
            require(r.status == LpStatus::Optimal && r.value == 0, ErrorKind::Unbounded, "H-polytope is unbounded");
        }
    const int erank = rank(E, n);
    const int need = n - erank;
    std::vector<QVec> verts;
    for_each_subset(static_cast<int>(A.size()), need, [&](const std::vector<int>& s) {
        QMat sys = E;
        QVec rhs = f;
        for (int i : s) {
            sys.push_back(A[static_cast<size_t>(i)]);
            rhs.push_back(b[static_cast<size_t>(i)]);
        }
        if (rank(sys, n) != n)
            return;
        auto x = solve(sys, rhs, n);
        if (!x)
            return;
        for (size_t i = 0; i < A.size(); ++i)
            if (dot(A[i], *x) > b[i])
                return;
        verts.push_back(*x);
    });
    require(!verts.empty(), ErrorKind::EmptyInput, "H-polytope is empty");
    return convex_hull(verts);
}

}  // namespace bbci
