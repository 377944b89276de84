#include "doctest.h"

#include "bbci/error.hpp"
#include "bbci/examples.hpp"
#include "bbci/tropical.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace bbci;

namespace {

QVec v(std::initializer_list<long> xs) { return to_qvec(std::vector<long>(xs)); }

// h_j on the lattice points of nabla_j: 0 at the origin, 1 elsewhere
std::vector<HeightFunction> running_factors()
{
    std::vector<HeightFunction> out;
    for (const auto& nj : dual_nef_partition(examples::running_nef()).summands) {
        HeightFunction h;
        for (const auto& p : lattice_points(nj)) {
            h.points.push_back(p);
            h.values.push_back(is_zero(p) ? 0 : 1);
        }
        out.push_back(h);
    }
    return out;
}

std::vector<int> local_indices(const HeightFunction& h, const std::vector<QVec>& pts)
{
    std::vector<int> out;
    for (const auto& p : pts)
        out.push_back(h.index_of(p));
    std::sort(out.begin(), out.end());
    return out;
}

RationalPolytope closure(const TropCell& c, int n) { return polytope_from_hrep(c.ineq, c.ineq_rhs, c.eq, c.eq_rhs, n); }

}  // namespace

TEST_CASE("tropical hypersurface cells")
{
    auto fs = running_factors();
    const HeightFunction& h1 = fs[0];
    TropicalCellComplex t = tropical_hypersurface(h1);
    CellLabel edge{{local_indices(h1, {v({0, 0, 0}), v({1, 0, 0})})}};
    auto it = std::find_if(t.cells.begin(), t.cells.end(), [&](const TropCell& c) { return c.label == edge; });
    REQUIRE(it != t.cells.end());
    CHECK(it->dim == 2);
    CHECK_FALSE(it->bounded);
    CHECK(it->contains(v({1, 7, -4}), true));
    CHECK(it->contains(v({1, 0, 1}), false));
    CHECK_FALSE(it->contains(v({1, 0, 1}), true));
    CHECK_FALSE(it->contains(v({1, 0, 2}), false));
    CHECK_FALSE(it->contains(v({2, 0, 0}), false));
    // dimension law and anti-isomorphism with the subdivision poset
    auto sub = regular_subdivision(h1);
    int positive = 0;
    for (const auto& c : sub.all_cells())
        positive += c.polytope.dim >= 1;
    CHECK(static_cast<int>(t.cells.size()) == positive);
    for (const auto& c : t.cells) {
        std::vector<QVec> pts;
        for (int i : c.label.per_factor[0])
            pts.push_back(h1.points[static_cast<size_t>(i)]);
        CHECK(c.dim == 3 - convex_hull(pts).dim);
    }
    for (auto [a, b] : t.poset)
        CHECK(t.cells[static_cast<size_t>(a)].dim < t.cells[static_cast<size_t>(b)].dim);
    CHECK(t.regions.size() == 4);

    CHECK(tropical_hypersurface(HeightFunction{{v({2, 1})}, {5}}).cells.empty());

    TropicalCellComplex seg = tropical_hypersurface(HeightFunction{{v({0}), v({1})}, {0, 0}});
    REQUIRE(seg.cells.size() == 1);
    CHECK(seg.cells[0].dim == 0);
    CHECK(seg.cells[0].bounded);
    CHECK(seg.cells[0].contains(v({0}), true));
}

TEST_CASE("cayley polytope")
{
    auto s = convex_hull({v({0}), v({1})});
    auto c = cayley_polytope({s, s});
    CHECK(c.rank == 3);
    CHECK(c.dim == 2);
    CHECK(c.vertices.size() == 4);
    CHECK(relative_volume(c) == 2);

    auto one = cayley_polytope({convex_hull({v({0, 0}), v({2, 0}), v({0, 1})})});
    CHECK(one.vertices == std::vector<QVec>{v({0, 0, 1}), v({0, 1, 1}), v({2, 0, 1})});

    NefPartition dual = dual_nef_partition(examples::running_nef());
    auto cr = cayley_polytope(dual.summands);
    CHECK(cr.rank == 5);
    CHECK(cr.dim == 4);
    CHECK(cr.vertices.size() == 6);
    // a lattice point has last coordinates e_1 or e_2, so it is a lattice point of nabla_1 or nabla_2
    size_t expected = lattice_points(dual.summands[0]).size() + lattice_points(dual.summands[1]).size();
    CHECK(expected == 8);
    CHECK(lattice_points(cr).size() == expected);

    CHECK_THROWS_AS(cayley_polytope({s, convex_hull({v({0, 0})})}), Error);
}

TEST_CASE("mixed subdivision")
{
    HeightFunction h1{{v({0}), v({1})}, {0, 0}}, h2{{v({0}), v({1})}, {0, 1}};
    auto m = mixed_subdivision({h1, h2});
    CHECK(std::none_of(m.begin(), m.end(), [](const MixedCell& c) { return c.mixed; }));
    CHECK(tci_complex({h1, h2}).cells.empty());

    auto fs = running_factors();
    auto single = mixed_subdivision({fs[0]});
    int mixed = 0;
    for (const auto& c : single)
        mixed += c.mixed;
    int positive = 0;
    for (const auto& c : regular_subdivision(fs[0]).all_cells())
        positive += c.polytope.dim >= 1;
    CHECK(mixed == positive);

    auto all = mixed_subdivision(fs);
    auto t = tci_complex(fs);
    CHECK(cayley_bijection(t, all));
}

TEST_CASE("tropical complete intersection of the running example")
{
    auto fs = running_factors();
    TropicalCellComplex t = tci_complex(fs);
    std::set<QVec> vertices;
    int bounded_edges = 0, rays = 0;
    for (const auto& c : t.cells) {
        int sum = 0;
        for (size_t j = 0; j < 2; ++j) {
            std::vector<QVec> pts;
            for (int i : c.label.per_factor[j])
                pts.push_back(fs[j].points[static_cast<size_t>(i)]);
            sum += convex_hull(pts).dim;
        }
        CHECK(c.dim == 3 - sum);
        if (c.bounded && c.dim == 0)
            vertices.insert(closure(c, 3).vertices[0]);
        bounded_edges += c.bounded && c.dim == 1;
        rays += !c.bounded;
    }
    std::set<QVec> cube;
    for (int a : {-1, 1})
        for (int b : {-1, 1})
            for (int c : {-1, 1})
                cube.insert(v({a, b, c}));
    CHECK(vertices == cube);
    CHECK(bounded_edges == 8);
    CHECK(rays == 8);
    CHECK(complex_homology(t) == std::vector<int>{1, 1});

    // two coinciding tropical lines in the plane
    HeightFunction line{{v({0, 0}), v({1, 0})}, {0, 0}};
    try {
        tci_complex({line, line});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotTransverse);
    }
}

TEST_CASE("bounded complex via transversal simplices")
{
    NefPartition dual = dual_nef_partition(examples::running_nef());
    HeightFunction h = examples::running_height();
    BbciComplex b = bbci_bounded_complex(dual, h);
    int edges = 0, triangles = 0;
    for (const auto& s : b.transversal.simplices) {
        edges += s.size() == 2;
        triangles += s.size() == 3;
    }
    CHECK(edges == 8);
    CHECK(triangles == 8);
    CHECK(b.transversal.realization_ok);
    CHECK(b.total_matches);
    CHECK(b.bounded.cells.size() == 16);
    CHECK(complex_homology(b.bounded) == std::vector<int>{1, 1});
    CHECK(complex_homology(b.transversal) == std::vector<int>{1, 1});
    // the same cells as the direct intersection
    TropicalCellComplex t = tci_complex(b.bounded.factors);
    std::set<CellLabel> direct, via;
    for (const auto& c : t.cells)
        if (c.bounded)
            direct.insert(c.label);
    for (const auto& c : b.bounded.cells)
        via.insert(c.label);
    CHECK(direct == via);

    // upper ideal: every face of a boundary simplex containing a transversal simplex is transversal
    std::set<std::vector<int>> trans(b.transversal.simplices.begin(), b.transversal.simplices.end());
    auto boundary = boundary_cells(regular_subdivision(h), convex_hull(h.points));
    for (const auto& s : b.transversal.simplices) {
        std::set<int> groups;
        for (int g : s)
            groups.insert(b.transversal.factor_of[static_cast<size_t>(g)]);
        CHECK(groups == std::set<int>{0, 1});
        for (const auto& B : boundary) {
            if (!std::includes(B.begin(), B.end(), s.begin(), s.end()))
                continue;
            for (int mask = 1; mask < (1 << B.size()); ++mask) {
                std::vector<int> u;
                for (size_t k = 0; k < B.size(); ++k)
                    if (mask & (1 << k))
                        u.push_back(B[k]);
                if (std::includes(u.begin(), u.end(), s.begin(), s.end()))
                    CHECK(trans.count(u) == 1);
            }
        }
    }

    HeightFunction bad = h;
    bad.values[0] = 1;
    CHECK_THROWS_AS(bbci_bounded_complex(dual, bad), Error);
    HeightFunction flat = h;
    flat.values[3] = 0;
    try {
        bbci_bounded_complex(dual, flat);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotCentred);
    }
}

TEST_CASE("unbounded cells and recession vectors")
{
    NefPartition dual = dual_nef_partition(examples::running_nef());
    HeightFunction h = examples::running_height();
    auto un = bbci_unbounded_cells(dual, h);
    CHECK(un.size() == 8);
    BbciComplex b = bbci_bounded_complex(dual, h);
    bool found = false;
    for (const auto& u : un) {
        CHECK(u.dim == 1);
        // some component avoids the origin (local index 0)
        bool avoids = false;
        for (const auto& S : u.label.per_factor)
            avoids = avoids || S.front() != 0;
        CHECK(avoids);
        TropCell c = tropical_cell(b.bounded.factors, u.label);
        // the ray leaves from a bounded vertex whose label contains this one
        bool enlarged = false;
        for (const auto& bc : b.bounded.cells) {
            bool sup = true;
            for (size_t j = 0; j < 2; ++j)
                sup = sup && std::includes(bc.label.per_factor[j].begin(), bc.label.per_factor[j].end(),
                                           u.label.per_factor[j].begin(), u.label.per_factor[j].end());
            if (!sup)
                continue;
            enlarged = true;
            for (const auto& x : closure(bc, 3).vertices) {
                CHECK(c.contains(x, false));
                CHECK(c.contains(x + Q(5) * u.recession, true));
            }
        }
        CHECK(enlarged);
        if (u.recession == v({1, 0, 1}) && c.contains(v({1, 1, 1}), false))
            found = true;
    }
    CHECK(found);

    // r = 1 on the square: one ray per boundary edge
    auto sq = validate_nef_partition({convex_hull({v({1, 0}), v({0, 1}), v({-1, 0}), v({0, -1})})});
    NefPartition sq_dual = dual_nef_partition(sq);
    // corners at height 3 and edge midpoints at 2 give a centred unimodular star triangulation
    HeightFunction hs{{v({0, 0})}, {0}};
    for (const auto& p : lattice_points(sq_dual.parent))
        if (!is_zero(p)) {
            hs.points.push_back(p);
            hs.values.push_back(p[0] != 0 && p[1] != 0 ? 3 : 2);
        }
    auto rays = bbci_unbounded_cells(sq_dual, hs);
    auto bd = boundary_cells(regular_subdivision(hs), sq_dual.parent);
    CHECK(bd.size() == 8);
    CHECK(rays.size() == bd.size());
    for (const auto& u : rays)
        CHECK(u.dim == 1);
}

TEST_CASE("complex homology")
{
    CHECK(complex_homology(std::vector<RationalPolytope>{convex_hull({v({3, 1})})}) == std::vector<int>{1});
    std::vector<RationalPolytope> oct;
    for (int a : {-1, 1})
        for (int b : {-1, 1})
            for (int c : {-1, 1})
                oct.push_back(convex_hull({v({a, 0, 0}), v({0, b, 0}), v({0, 0, c})}));
    CHECK(complex_homology(oct) == std::vector<int>{1, 0, 1});
    // a square face next to a triangle: still a disk
    std::vector<RationalPolytope> disk = {convex_hull({v({0, 0}), v({1, 0}), v({0, 1}), v({1, 1})}),
                                          convex_hull({v({1, 0}), v({1, 1}), v({2, 0})})};
    CHECK(complex_homology(disk) == std::vector<int>{1, 0, 0});
    // T-junction: a vertex in the middle of an edge
    std::vector<RationalPolytope> bad = {convex_hull({v({0, 0}), v({2, 0})}), convex_hull({v({1, 0}), v({1, 1})})};
    try {
        complex_homology(bad);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonRegularComplex);
    }
}

TEST_CASE("compactification strata")
{
    NefPartition dual = dual_nef_partition(examples::running_nef());
    auto fs = running_factors();
    Fan fan = normal_fan(dual.parent);
    auto strata = compactification_strata(fs, fan);
    REQUIRE(strata.size() == fan.cones.size());
    int nonempty_rays = 0;
    for (const auto& st : strata) {
        const auto& cone = fan.cones[static_cast<size_t>(st.cone)];
        if (cone.empty()) {
            CHECK(st.nonempty);
            for (size_t j = 0; j < 2; ++j)
                CHECK(st.faces[j].vertices == convex_hull(fs[j].points).vertices);
            continue;
        }
        // oracle: F = F_1 + F_2 is the face of nabla cut out by the cone, Bernstein count by hand
        QVec w = zeros(3);
        for (int k : cone)
            w = w + fan.rays[static_cast<size_t>(k)];
        std::vector<QVec> fv;
        Q m = support_function(dual.parent, w);
        for (const auto& x : dual.parent.vertices)
            if (dot(x, w) == m)
                fv.push_back(x);
        CHECK(minkowski_sum(st.faces[0], st.faces[1]).vertices == convex_hull(fv).vertices);
        bool expect = st.faces[0].dim >= 1 && st.faces[1].dim >= 1 &&
                      minkowski_sum(st.faces[0], st.faces[1]).dim >= 2;
        CHECK(st.nonempty == expect);
        if (cone.size() == 1 && st.nonempty) {
            ++nonempty_rays;
            CHECK(minkowski_sum(st.faces[0], st.faces[1]).dim == 2);
        }
        if (cone.size() == 3)
            CHECK_FALSE(st.nonempty);
    }
    CHECK(nonempty_rays > 0);

    Fan coarse = fan_from_maximal(3, {v({1, 0, 0}), v({0, 0, 1})}, {{0, 1}});
    try {
        compactification_strata(fs, coarse);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotARefinement);
    }
}

TEST_CASE("mpcs check")
{
    std::vector<QVec> rays;
    for (int i = 0; i < 3; ++i)
        for (int s : {1, -1})
            rays.push_back(Q(s) * unit(3, i));
    std::vector<std::vector<int>> facets;
    for (int a : {0, 1})
        for (int b : {2, 3})
            for (int c : {4, 5})
                facets.push_back({a, b, c});
    Fan oct = fan_from_maximal(3, rays, facets);
    CHECK(mpcs_check(oct, 2));
    CHECK(mpcs_check(oct, 0));

    Fan thin = fan_from_maximal(2, {v({1, 0}), v({1, 2})}, {{0, 1}});
    CHECK(mpcs_check(thin, 1));
    CHECK_FALSE(mpcs_check(thin, 0));

    Fan cube = normal_fan(convex_hull(rays));
    CHECK_THROWS_AS(mpcs_check(cube, 1), Error);
}

TEST_CASE("smoothness threshold")
{
    // a single segment: the only tuple uses every point
    HeightFunction seg{{v({0}), v({1})}, {0, 0}};
    auto t0 = smoothness_beta_threshold({seg}, {QVec{1, 1}});
    REQUIRE(t0.per_tuple.size() == 1);
    CHECK(t0.per_tuple[0].K == 0);
    CHECK(t0.beta0 == 0);

    auto fs = running_factors();
    std::vector<QVec> ones = {QVec(fs[0].points.size(), Q(1)), QVec(fs[1].points.size(), Q(1))};
    auto t = smoothness_beta_threshold(fs, ones);
    CHECK(t.per_tuple.size() == tci_complex(fs).cells.size());
    // hand computation for the ray label ({e1, e3}, {0, e2}): minimum-norm duals (-1/2,0,1/2) and e2
    CellLabel ray{{local_indices(fs[0], {v({1, 0, 0}), v({0, 0, 1})}), local_indices(fs[1], {v({0, 0, 0}), v({0, 1, 0})})}};
    bool seen = false;
    for (const auto& bt : t.per_tuple)
        if (bt.label == ray) {
            seen = true;
            CHECK(bt.K == qfrac(3, 2));
            CHECK(bt.beta == doctest::Approx(std::pow(std::log(1.5), 2)));
        }
    CHECK(seen);
    // the vertex label ({-e1, 0}, {-e2, -e3, 0}): duals e1 and -e3, off points e3 and e1 give 1 + 2 + 1
    CellLabel vertex{{local_indices(fs[0], {v({-1, 0, 0}), v({0, 0, 0})}),
                      local_indices(fs[1], {v({0, -1, 0}), v({0, 0, -1}), v({0, 0, 0})})}};
    Q kmax = 0;
    for (const auto& bt : t.per_tuple) {
        kmax = std::max(kmax, bt.K);
        if (bt.label == vertex)
            CHECK(bt.K == 4);
    }
    CHECK(kmax == 4);
    CHECK(t.beta0 == doctest::Approx(std::pow(std::log(4.0), 2)));

    // doubling the moduli off one tuple doubles its K
    for (const auto& bt : t.per_tuple) {
        std::vector<QVec> twice = ones;
        for (size_t j = 0; j < 2; ++j)
            for (size_t i = 0; i < twice[j].size(); ++i)
                if (!std::binary_search(bt.label.per_factor[j].begin(), bt.label.per_factor[j].end(),
                                        static_cast<int>(i)))
                    twice[j][i] = 2;
        auto t2 = smoothness_beta_threshold(fs, twice);
        for (const auto& b2 : t2.per_tuple)
            if (b2.label == bt.label) {
                CHECK(b2.K == 2 * bt.K);
                CHECK(b2.beta >= bt.beta);
            }
    }
}

TEST_CASE("property: Cayley and direct routes agree on random transverse instances")
{
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> ht(0, 12), coin(0, 1);
    int transverse = 0, attempts = 0;
    while (transverse < 20 && attempts < 200) {
        ++attempts;
        std::vector<HeightFunction> fs(2);
        for (auto& h : fs) {
            for (int x = 0; x <= 2; ++x)
                for (int y = 0; y <= 2 - x; ++y)
                    if (coin(rng) || (x + y == 0) || (x == 1 && y == 0) || (x == 0 && y == 1)) {
                        h.points.push_back(v({x, y}));
                        h.values.push_back(ht(rng));
                    }
        }
        TropicalCellComplex t;
        try {
            t = tci_complex(fs);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NotTransverse);
            continue;
        }
        ++transverse;
        CHECK(cayley_bijection(t, mixed_subdivision(fs)));
        for (const auto& c : t.cells) {
            CHECK(c.dim == 0);
            CHECK(c.bounded);
        }
    }
    CHECK(transverse == 20);
}
