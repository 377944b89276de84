#include "bbci/polydist.hpp"

#include "bbci/error.hpp"
#include "bbci/lp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace bbci {

namespace {

void hrep(const ParameterisedPolyhedron& p, QMat& A, QVec& b)
{
    A.clear();
    b.clear();
    for (const auto& f : p.functionals) {
        A.push_back(f.e);
        b.push_back(-f.c);
    }
}

bool nonempty(const ParameterisedPolyhedron& p)
{
    QMat A;
    QVec b;
    hrep(p, A, b);
    return lp_feasible(A, b, {}, {}, p.n);
}

// max of f over P; nullopt when unbounded. P must be nonempty.
std::optional<Q> maximum(const AffineFunctional& f, const ParameterisedPolyhedron& p)
{
    QMat A;
    QVec b;
    hrep(p, A, b);
    LpResult r = lp_maximize(f.e, A, b);
    if (r.status == LpStatus::Unbounded)
        return std::nullopt;
    require(r.status == LpStatus::Optimal, ErrorKind::EmptyInput, "empty polyhedron");
    return r.value + f.c;
}

// Is f redundant in the collection, i.e. f <= 0 on the set cut out by the others?
bool redundant(const std::vector<AffineFunctional>& fs, size_t i)
{
    QMat A;
    QVec b;
    for (size_t k = 0; k < fs.size(); ++k)
        if (k != i) {
            A.push_back(fs[k].e);
            b.push_back(-fs[k].c);
        }
    LpResult r = lp_maximize(fs[i].e, A, b);
    if (r.status == LpStatus::Unbounded)
        return false;
    if (r.status == LpStatus::Infeasible)
        return true;
    return r.value + fs[i].c <= 0;
}

std::vector<AffineFunctional> dedupe(std::vector<AffineFunctional> fs)
{
    std::vector<AffineFunctional> out;
    for (auto& f : fs)
        if (std::find(out.begin(), out.end(), f) == out.end())
            out.push_back(std::move(f));
    return out;
}

/**
 * Visits every nonempty subset B of the rows with linearly independent normals, in lexicographic order.
 * The visitor returns false to skip the supersets of B.
 */
void independent_subsets(const QMat& rows, int n, const std::function<bool(const std::vector<int>&)>& visit)
{
    std::vector<int> cur;
    QMat sel;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == n)
            return;
        for (int i = start; i < static_cast<int>(rows.size()); ++i) {
            sel.push_back(rows[static_cast<size_t>(i)]);
            if (rank(sel, n) == static_cast<int>(sel.size())) {
                cur.push_back(i);
                if (visit(cur))
                    rec(i + 1);
                cur.pop_back();
            }
            sel.pop_back();
        }
    };
    rec(0);
}

// Projection of x onto {E y = f} for independent rows E.
QVec project_affine(const QVec& x, const QMat& E, const QVec& f)
{
    const int k = static_cast<int>(E.size());
    if (k == 0)
        return x;
    QMat G(static_cast<size_t>(k), QVec(static_cast<size_t>(k)));
    for (int a = 0; a < k; ++a)
        for (int c = 0; c < k; ++c)
            G[a][c] = dot(E[a], E[c]);
    QVec r = mat_vec(E, x) - f;
    auto z = solve(G, r, k);
    require(z.has_value(), ErrorKind::DegenerateHull, "dependent normals");
    return x - mat_vec(transpose(E), *z);
}

/**
 * Squared distance from the origin to conv(vs) when the nearest point of aff(vs) lies in conv(vs),
 * nullopt otherwise. vs are linearly independent.
 */
std::optional<Q> simplex_origin_distance_sq(const QMat& vs)
{
    const int k = static_cast<int>(vs.size());
    QMat M(static_cast<size_t>(k + 1), QVec(static_cast<size_t>(k + 1), Q(0)));
    for (int a = 0; a < k; ++a) {
        for (int c = 0; c < k; ++c)
            M[a][c] = dot(vs[a], vs[c]);
        M[a][k] = 1;
        M[k][a] = 1;
    }
    QVec rhs(static_cast<size_t>(k + 1), Q(0));
    rhs[k] = 1;
    auto sol = solve(M, rhs, k + 1);
    require(sol.has_value(), ErrorKind::DegenerateHull, "dependent normals");
    QVec p = zeros(static_cast<int>(vs[0].size()));
    for (int a = 0; a < k; ++a) {
        if ((*sol)[a] < 0)
            return std::nullopt;
        p = p + (*sol)[a] * vs[a];
    }
    return dot(p, p);
}

Q analytic_K_sq(const ParameterisedPolyhedron& p)
{
    QMat A;
    QVec b;
    hrep(p, A, b);
    Q best = 0;
    for (const auto& e : A)
        best = std::max(best, dot(e, e));
    std::optional<Q> cmin;
    independent_subsets(A, p.n, [&](const std::vector<int>& B) {
        QMat E;
        QVec f;
        for (int i : B) {
            E.push_back(A[i]);
            f.push_back(b[i]);
        }
        if (!lp_feasible(A, b, E, f, p.n))
            return false;
        if (auto d = simplex_origin_distance_sq(E))
            if (!cmin || *d < *cmin)
                cmin = *d;
        return true;
    });
    if (cmin)
        best = std::max(best, Q(Q(1) / *cmin));
    return best == 0 ? Q(1) : best;
}

// Bounding box of P widened by one, with unbounded sides replaced by a reference point +- 4.
void sample_box(const ParameterisedPolyhedron& p, QVec& lo, QVec& hi)
{
    QMat A;
    QVec b;
    hrep(p, A, b);
    LpResult ref = lp_maximize(zeros(p.n), A, b);
    require(ref.status == LpStatus::Optimal, ErrorKind::EmptyInput, "empty polyhedron");
    lo = hi = ref.x;
    for (int i = 0; i < p.n; ++i) {
        LpResult up = lp_maximize(unit(p.n, i), A, b);
        LpResult dn = lp_maximize(-unit(p.n, i), A, b);
        hi[i] = up.status == LpStatus::Optimal ? Q(up.value + 1) : Q(ref.x[i] + 4);
        lo[i] = dn.status == LpStatus::Optimal ? Q(-dn.value - 1) : Q(ref.x[i] - 4);
    }
}

QVec sample_point(const QVec& lo, const QVec& hi, std::mt19937& rng)
{
    std::uniform_int_distribution<long> d(0, 256);
    QVec x(lo.size());
    for (size_t i = 0; i < lo.size(); ++i)
        x[i] = lo[i] + (hi[i] - lo[i]) * qfrac(d(rng), 256);
    return x;
}

bool contained_in(const ParameterisedPolyhedron& small, const ParameterisedPolyhedron& big)
{
    for (const auto& f : big.functionals) {
        auto m = maximum(f, small);
        if (!m || *m > 0)
            return false;
    }
    return true;
}

// Direction space of aff(P) via implicit equalities.
QMat direction_basis(const ParameterisedPolyhedron& p, int& dim)
{
    QMat eq;
    for (const auto& f : p.functionals) {
        auto m = maximum({-f.e, -f.c}, p);
        if (m && *m <= 0)
            eq.push_back(f.e);
    }
    QMat basis = nullspace(eq, p.n);
    dim = static_cast<int>(basis.size());
    return basis;
}

}  // namespace

bool ParameterisedPolyhedron::contains(const QVec& x) const
{
    for (const auto& f : functionals)
        if (f(x) > 0)
            return false;
    return true;
}

ParameterisedPolyhedron parameterised_polyhedron(int n, std::vector<AffineFunctional> functionals)
{
    for (const auto& f : functionals)
        require(static_cast<int>(f.e.size()) == n, ErrorKind::DimensionMismatch, "functional of wrong rank");
    ParameterisedPolyhedron p{n, std::move(functionals), true};
    for (size_t i = 0; i < p.functionals.size() && p.minimal; ++i)
        p.minimal = !redundant(p.functionals, i);
    return p;
}

ParameterisedPolyhedron minimal_subcollection(const ParameterisedPolyhedron& p)
{
    std::vector<AffineFunctional> fs = dedupe(p.functionals);
    for (size_t i = fs.size(); i-- > 0;)
        if (redundant(fs, i))
            fs.erase(fs.begin() + static_cast<long>(i));
    return ParameterisedPolyhedron{p.n, std::move(fs), true};
}

ParameterisedPolyhedron box_polyhedron(const QVec& lo, const QVec& hi)
{
    require(lo.size() == hi.size(), ErrorKind::DimensionMismatch, "box bounds");
    const int n = static_cast<int>(lo.size());
    std::vector<AffineFunctional> fs;
    for (int i = 0; i < n; ++i) {
        require(lo[i] <= hi[i], ErrorKind::EmptyInput, "empty box");
        fs.push_back({unit(n, i), -hi[i]});
        fs.push_back({-unit(n, i), lo[i]});
    }
    return parameterised_polyhedron(n, std::move(fs));
}

Q affine_distance(const QVec& x, const ParameterisedPolyhedron& p, bool strict)
{
    require(!p.functionals.empty(), ErrorKind::EmptyInput, "no functionals");
    require(static_cast<int>(x.size()) == p.n, ErrorKind::DimensionMismatch, "point of wrong rank");
    if (strict)
        require(p.minimal, ErrorKind::NotMinimal, "defining collection is not minimal");
    Q best = p.functionals[0](x);
    for (const auto& f : p.functionals)
        best = std::max(best, f(x));
    return best;
}

QVec orthogonal_projection(const QVec& x, const ParameterisedPolyhedron& p)
{
    require(static_cast<int>(x.size()) == p.n, ErrorKind::DimensionMismatch, "point of wrong rank");
    if (p.contains(x))
        return x;
    require(nonempty(p), ErrorKind::EmptyInput, "empty polyhedron");
    QMat A;
    QVec b;
    hrep(p, A, b);
    std::optional<QVec> best;
    Q best_d;
    independent_subsets(A, p.n, [&](const std::vector<int>& B) {
        QMat E;
        QVec f;
        for (int i : B) {
            E.push_back(A[i]);
            f.push_back(b[i]);
        }
        QVec y = project_affine(x, E, f);
        if (p.contains(y)) {
            QVec d = y - x;
            Q dd = dot(d, d);
            if (!best || dd < best_d) {
                best = y;
                best_d = dd;
            }
        }
        return true;
    });
    require(best.has_value(), ErrorKind::DegenerateHull, "no face carries the projection");
    return *best;
}

Q euclidean_distance_sq(const QVec& x, const ParameterisedPolyhedron& p)
{
    QVec d = orthogonal_projection(x, p) - x;
    return dot(d, d);
}

LipschitzConstant lipschitz_constant(const ParameterisedPolyhedron& p, int samples, unsigned seed)
{
    require(nonempty(p), ErrorKind::EmptyInput, "empty polyhedron");
    LipschitzConstant out;
    out.K_sq = analytic_K_sq(p);
    out.K = std::sqrt(out.K_sq.get_d());
    out.certified = true;
    if (p.functionals.empty() || samples <= 0)
        return out;
    QVec lo, hi;
    sample_box(p, lo, hi);
    std::mt19937 rng(seed);
    Q worst = 0;
    for (int s = 0; s < samples; ++s) {
        QVec x = sample_point(lo, hi, rng);
        Q da = affine_distance(x, p);
        Q d2 = euclidean_distance_sq(x, p);
        if (d2 == 0) {
            out.certified = out.certified && da <= 0;
            continue;
        }
        if (da <= 0) {
            out.certified = false;
            continue;
        }
        Q da2 = da * da;
        Q ratio = std::max(da2 / d2, d2 / da2);
        worst = std::max(worst, ratio);
        out.certified = out.certified && ratio <= out.K_sq;
    }
    out.empirical = std::sqrt(worst.get_d());
    return out;
}

IntersectionConstant neighbourhood_intersection_constant(const ParameterisedPolyhedron& p1,
                                                         const ParameterisedPolyhedron& p2, int samples,
                                                         unsigned seed)
{
    require(p1.n == p2.n, ErrorKind::DimensionMismatch, "polyhedra of different rank");
    std::vector<AffineFunctional> all = p1.functionals;
    all.insert(all.end(), p2.functionals.begin(), p2.functionals.end());
    ParameterisedPolyhedron both{p1.n, dedupe(all), false};
    require(nonempty(both), ErrorKind::EmptyIntersection, "polyhedra do not meet");
    IntersectionConstant out;
    out.intersection = minimal_subcollection(both);
    if (contained_in(p1, p2) || contained_in(p2, p1))
        out.K_sq = 1;
    else
        out.K_sq = analytic_K_sq(out.intersection) * std::max(analytic_K_sq(p1), analytic_K_sq(p2));
    out.K = std::sqrt(out.K_sq.get_d());
    out.validated = true;
    if (samples <= 0)
        return out;
    QVec lo, hi;
    sample_box(out.intersection, lo, hi);
    std::mt19937 rng(seed);
    Q worst = 0;
    for (int s = 0; s < samples; ++s) {
        QVec x = sample_point(lo, hi, rng);
        Q m = std::max(euclidean_distance_sq(x, p1), euclidean_distance_sq(x, p2));
        Q d = euclidean_distance_sq(x, out.intersection);
        if (m == 0) {
            out.validated = out.validated && d == 0;
            continue;
        }
        Q ratio = d / m;
        worst = std::max(worst, ratio);
        out.validated = out.validated && ratio <= out.K_sq;
    }
    out.empirical = std::sqrt(worst.get_d());
    return out;
}

const CellInclusion* ParameterisedComplex::inclusion(int face, int cell) const
{
    for (const auto& inc : inclusions)
        if (inc.face == face && inc.cell == cell)
            return &inc;
    return nullptr;
}

Q ParameterisedComplex::affine_distance(const QVec& x) const
{
    require(!cells.empty(), ErrorKind::EmptyInput, "empty complex");
    Q best = bbci::affine_distance(x, cells[0]);
    for (const auto& c : cells)
        best = std::min(best, bbci::affine_distance(x, c));
    return best;
}

ParameterisedComplex parameterised_complex(int n, std::vector<ParameterisedPolyhedron> cells,
                                           const std::vector<std::pair<int, int>>& faces)
{
    ParameterisedComplex out;
    out.n = n;
    out.cells = std::move(cells);
    const int m = static_cast<int>(out.cells.size());
    std::vector<QMat> dirs;
    for (const auto& c : out.cells) {
        require(c.n == n, ErrorKind::DimensionMismatch, "cell of wrong rank");
        require(nonempty(c), ErrorKind::EmptyInput, "empty cell");
        int d = 0;
        dirs.push_back(direction_basis(c, d));
        out.dims.push_back(d);
    }
    for (int i = 0; i < m; ++i) {
        CellInclusion id{i, i, {}};
        for (int k = 0; k < static_cast<int>(out.cells[i].functionals.size()); ++k)
            id.map.push_back(k);
        out.inclusions.push_back(std::move(id));
    }
    for (const auto& [face, cell] : faces) {
        require(face >= 0 && face < m && cell >= 0 && cell < m, ErrorKind::DimensionMismatch, "face index");
        CellInclusion inc{face, cell, {}};
        const auto& small = out.cells[face].functionals;
        for (const auto& f : out.cells[cell].functionals) {
            auto it = std::find(small.begin(), small.end(), f);
            require(it != small.end(), ErrorKind::NotARefinement, "functional of a cell missing from its face");
            inc.map.push_back(static_cast<int>(it - small.begin()));
        }
        out.inclusions.push_back(std::move(inc));
    }
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            if (out.inclusion(i, j) || out.inclusion(j, i))
                continue;
            QMat A;
            QVec b;
            for (const auto& f : out.cells[i].functionals) {
                A.push_back(f.e);
                b.push_back(-f.c);
            }
            for (const auto& f : out.cells[j].functionals) {
                A.push_back(f.e);
                b.push_back(-f.c);
            }
            if (lp_feasible(A, b, {}, {}, n))
                continue;
            // Pairs (x, y) in C_i x C_j with x - y orthogonal to both affine hulls.
            QMat A2, E;
            QVec b2;
            for (const auto& f : out.cells[i].functionals) {
                QVec row = f.e;
                row.resize(static_cast<size_t>(2 * n), Q(0));
                A2.push_back(row);
                b2.push_back(-f.c);
            }
            for (const auto& f : out.cells[j].functionals) {
                QVec row = zeros(n);
                row.insert(row.end(), f.e.begin(), f.e.end());
                A2.push_back(row);
                b2.push_back(-f.c);
            }
            for (const QMat* basis : {&dirs[i], &dirs[j]})
                for (const auto& u : *basis) {
                    QVec row = u;
                    QVec neg = -u;
                    row.insert(row.end(), neg.begin(), neg.end());
                    E.push_back(row);
                }
            LpResult r = lp_maximize(zeros(2 * n), A2, b2, E, QVec(E.size(), Q(0)));
            if (r.status != LpStatus::Optimal)
                continue;
            QVec x(r.x.begin(), r.x.begin() + n), y(r.x.begin() + n, r.x.end());
            QVec d = x - y;
            Q dd = dot(d, d);
            if (!out.has_separation || dd < out.separation_sq) {
                out.has_separation = true;
                out.separation_sq = dd;
            }
        }
    return out;
}

bool inclusions_compose(const ParameterisedComplex& sigma)
{
    for (const auto& ab : sigma.inclusions)
        for (const auto& bc : sigma.inclusions) {
            if (ab.cell != bc.face)
                continue;
            const CellInclusion* ac = sigma.inclusion(ab.face, bc.cell);
            if (!ac)
                return false;
            for (size_t k = 0; k < bc.map.size(); ++k)
                if (ab.map[static_cast<size_t>(bc.map[k])] != ac->map[k])
                    return false;
        }
    return true;
}

ParameterisedComplex tropical_parameterisation(const TropicalCellComplex& complex)
{
    std::vector<ParameterisedPolyhedron> cells;
    for (const auto& cell : complex.cells) {
        std::vector<AffineFunctional> fs;
        for (size_t j = 0; j < complex.factors.size(); ++j) {
            const HeightFunction& h = complex.factors[j];
            for (int a : cell.label.per_factor[j])
                for (size_t a2 = 0; a2 < h.points.size(); ++a2) {
                    if (static_cast<int>(a2) == a)
                        continue;
                    fs.push_back({h.points[a2] - h.points[static_cast<size_t>(a)],
                                  h.values[static_cast<size_t>(a)] - h.values[a2]});
                }
        }
        cells.push_back(parameterised_polyhedron(complex.n, dedupe(std::move(fs))));
    }
    return parameterised_complex(complex.n, std::move(cells), complex.poset);
}

std::vector<ParameterisedPolyhedron> inner_parallel_pieces(const ParameterisedComplex& sigma, int cell,
                                                           const Q& delta)
{
    const ParameterisedPolyhedron& C = sigma.cells[static_cast<size_t>(cell)];
    std::vector<std::vector<AffineFunctional>> choices;
    for (const auto& inc : sigma.inclusions) {
        if (inc.cell != cell || inc.face == cell || sigma.dims[inc.face] != sigma.dims[cell] - 1)
            continue;
        const auto& fs = sigma.cells[inc.face].functionals;
        std::vector<AffineFunctional> extra;
        for (int k = 0; k < static_cast<int>(fs.size()); ++k)
            if (std::find(inc.map.begin(), inc.map.end(), k) == inc.map.end())
                extra.push_back(fs[static_cast<size_t>(k)]);
        // Keep the functionals not dominated on C; among equal ones keep the first.
        std::vector<AffineFunctional> keep;
        for (size_t a = 0; a < extra.size(); ++a) {
            bool dominated = false;
            for (size_t c = 0; c < extra.size() && !dominated; ++c) {
                if (c == a)
                    continue;
                auto m = maximum({extra[a].e - extra[c].e, extra[a].c - extra[c].c}, C);
                if (!m || *m > 0)
                    continue;
                auto back = maximum({extra[c].e - extra[a].e, extra[c].c - extra[a].c}, C);
                dominated = (back && *back <= 0) ? c < a : true;
            }
            if (!dominated)
                keep.push_back(extra[a]);
        }
        if (!keep.empty())
            choices.push_back(std::move(keep));
    }
    std::vector<ParameterisedPolyhedron> out;
    std::vector<size_t> pick(choices.size(), 0);
    while (true) {
        std::vector<AffineFunctional> fs = C.functionals;
        for (size_t k = 0; k < choices.size(); ++k) {
            const auto& f = choices[k][pick[k]];
            fs.push_back({-f.e, delta - f.c});
        }
        out.push_back(ParameterisedPolyhedron{C.n, std::move(fs), false});
        size_t k = 0;
        while (k < choices.size() && ++pick[k] == choices[k].size())
            pick[k++] = 0;
        if (k == choices.size())
            break;
    }
    return out;
}

std::optional<Q> boundary_affine_distance(const ParameterisedComplex& sigma, int cell, const QVec& y)
{
    std::optional<Q> best;
    for (const auto& inc : sigma.inclusions) {
        if (inc.cell != cell || inc.face == cell || sigma.dims[inc.face] != sigma.dims[cell] - 1)
            continue;
        Q d = affine_distance(y, sigma.cells[inc.face]);
        if (!best || d < *best)
            best = d;
    }
    return best;
}

AffineCell affine_cell_decomposition(const ParameterisedComplex& sigma, const Q& delta, const QVec& x)
{
    require(static_cast<int>(x.size()) == sigma.n, ErrorKind::DimensionMismatch, "point of wrong rank");
    require(delta >= 0, ErrorKind::DeltaTooLarge, "negative delta");
    if (sigma.has_separation)
        require(4 * delta * delta < sigma.separation_sq, ErrorKind::DeltaTooLarge,
                "delta is not below half the separation of disjoint cells");
    std::vector<int> near;
    for (int i = 0; i < static_cast<int>(sigma.cells.size()); ++i)
        if (affine_distance(x, sigma.cells[i]) <= delta)
            near.push_back(i);
    require(!near.empty(), ErrorKind::OutsideNeighbourhood, "point is outside the affine neighbourhood");
    int minimal = -1;
    for (int c : near) {
        bool below_all = true;
        for (int other : near)
            below_all = below_all && sigma.inclusion(c, other) != nullptr;
        if (below_all) {
            minimal = c;
            break;
        }
    }
    require(minimal >= 0, ErrorKind::DeltaTooLarge, "no unique minimal cell");
    AffineCell out;
    out.cell = minimal;
    Q best;
    for (const auto& piece : inner_parallel_pieces(sigma, minimal, delta)) {
        if (!nonempty(piece))
            continue;
        QVec y = orthogonal_projection(x, minimal_subcollection(piece));
        QVec d = y - x;
        if (out.projected.empty() || dot(d, d) < best) {
            out.projected = y;
            best = dot(d, d);
        }
    }
    require(!out.projected.empty(), ErrorKind::DeltaTooLarge, "inner parallel body is empty");
    return out;
}

bool affine_tube_membership(const std::vector<HeightFunction>& heights, const QVec& u, const Q& width)
{
    for (const auto& h : heights) {
        require(!h.points.empty(), ErrorKind::EmptyInput, "empty height function");
        QVec l;
        for (size_t i = 0; i < h.points.size(); ++i)
            l.push_back(dot(h.points[i], u) - h.values[i]);
        Q L = *std::max_element(l.begin(), l.end());
        long close = std::count_if(l.begin(), l.end(), [&](const Q& v) { return L <= v + width; });
        if (close < 2)
            return false;
    }
    return true;
}

bool affine_tube_membership(const std::vector<HeightFunction>& heights, const std::vector<double>& u, double width,
                            double tol)
{
    for (const auto& h : heights) {
        require(!h.points.empty(), ErrorKind::EmptyInput, "empty height function");
        std::vector<double> l;
        for (size_t i = 0; i < h.points.size(); ++i) {
            require(h.points[i].size() == u.size(), ErrorKind::DimensionMismatch, "point of wrong rank");
            double v = -h.values[i].get_d();
            for (size_t k = 0; k < u.size(); ++k)
                v += h.points[i][k].get_d() * u[k];
            l.push_back(v);
        }
        double L = *std::max_element(l.begin(), l.end());
        long close = std::count_if(l.begin(), l.end(), [&](double v) { return L <= v + width + tol; });
        if (close < 2)
            return false;
    }
    return true;
}

}  // namespace bbci
