#include "bbci/error.hpp"
#include "bbci/examples.hpp"
#include "bbci/lp.hpp"
#include "bbci/polydist.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bbci;

namespace {

QVec v(std::initializer_list<long> xs) { return to_qvec(std::vector<long>(xs)); }

AffineFunctional fn(std::initializer_list<long> e, long c) { return {v(e), Q(c)}; }

ParameterisedPolyhedron cube() { return box_polyhedron(v({-1, -1, -1}), v({1, 1, 1})); }

// Dykstra's alternating projections onto the halfspaces phi <= 0, in floating point.
std::vector<double> dykstra(const std::vector<double>& x0, const ParameterisedPolyhedron& p, int sweeps = 4000)
{
    const size_t m = p.functionals.size(), n = x0.size();
    std::vector<std::vector<double>> inc(m, std::vector<double>(n, 0.0));
    std::vector<double> x = x0;
    for (int s = 0; s < sweeps; ++s)
        for (size_t i = 0; i < m; ++i) {
            std::vector<double> e = to_double(p.functionals[i].e);
            double c = p.functionals[i].c.get_d();
            std::vector<double> y(n);
            for (size_t k = 0; k < n; ++k)
                y[k] = x[k] + inc[i][k];
            double val = c, ee = 0;
            for (size_t k = 0; k < n; ++k) {
                val += e[k] * y[k];
                ee += e[k] * e[k];
            }
            std::vector<double> z = y;
            if (val > 0)
                for (size_t k = 0; k < n; ++k)
                    z[k] -= val / ee * e[k];
            for (size_t k = 0; k < n; ++k) {
                inc[i][k] = y[k] - z[k];
                x[k] = z[k];
            }
        }
    return x;
}

double oracle_distance(const QVec& x, const ParameterisedPolyhedron& p)
{
    std::vector<double> xd = to_double(x);
    std::vector<double> y = dykstra(xd, p);
    double s = 0;
    for (size_t k = 0; k < xd.size(); ++k)
        s += (xd[k] - y[k]) * (xd[k] - y[k]);
    return std::sqrt(s);
}

// l_a' - l_a for the running-example factors: 0 at the origin, 1 elsewhere.
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

int cell_through(const TropicalCellComplex& t, const QVec& u)
{
    for (int i = 0; i < static_cast<int>(t.cells.size()); ++i)
        if (t.cells[i].contains(u, true))
            return i;
    return -1;
}

}  // namespace

TEST_CASE("affine distance of the cube")
{
    ParameterisedPolyhedron c = cube();
    CHECK(c.minimal);
    CHECK(affine_distance(v({2, 0, 0}), c) == 1);
    CHECK(affine_distance(v({2, 2, 0}), c) == 1);
    CHECK(affine_distance(v({0, 0, 0}), c) == -1);
    CHECK(affine_distance(v({1, 0, 0}), c) == 0);

    auto fs = c.functionals;
    fs.push_back(fn({1, 0, 0}, -2));
    ParameterisedPolyhedron redundant = parameterised_polyhedron(3, fs);
    CHECK_FALSE(redundant.minimal);
    CHECK(affine_distance(v({3, 0, 0}), redundant) == 2);
    CHECK_THROWS_AS(affine_distance(v({3, 0, 0}), redundant, true), Error);
    CHECK(minimal_subcollection(redundant).functionals.size() == 6);
}

TEST_CASE("exact Euclidean distance agrees with alternating projections")
{
    std::mt19937 rng(7);
    std::uniform_int_distribution<long> d(-6, 6);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<AffineFunctional> fs;
        // a random polygon or polytope containing a small box around the origin
        const int n = 2 + trial % 2;
        for (int k = 0; k < 5 + n; ++k) {
            QVec e(static_cast<size_t>(n));
            for (auto& x : e)
                x = d(rng);
            if (is_zero(e))
                continue;
            fs.push_back({e, -Q(1 + std::abs(d(rng)))});
        }
        ParameterisedPolyhedron p = parameterised_polyhedron(n, fs);
        for (int s = 0; s < 5; ++s) {
            QVec x(static_cast<size_t>(n));
            for (auto& c : x)
                c = qfrac(d(rng), 2);
            double exact = std::sqrt(euclidean_distance_sq(x, p).get_d());
            CHECK(exact == doctest::Approx(oracle_distance(x, p)).epsilon(1e-6));
        }
    }
}

TEST_CASE("Lipschitz constants")
{
    SUBCASE("halfspace with unit normal")
    {
        ParameterisedPolyhedron h = parameterised_polyhedron(2, {fn({1, 0}, -1)});
        LipschitzConstant k = lipschitz_constant(h);
        CHECK(k.K_sq == 1);
        CHECK(k.certified);
        CHECK(k.empirical == doctest::Approx(1.0));
    }
    SUBCASE("cube")
    {
        ParameterisedPolyhedron c = cube();
        // corner direction: d = sqrt 3 while d_aff = 1
        QVec x = v({2, 2, 2});
        CHECK(oracle_distance(x, c) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
        CHECK(affine_distance(x, c) == 1);
        LipschitzConstant k = lipschitz_constant(c);
        CHECK(k.K_sq == 3);
        CHECK(k.certified);
        CHECK(k.empirical <= k.K + 1e-12);
        std::mt19937 rng(3);
        std::uniform_int_distribution<long> d(-12, 12);
        for (int s = 0; s < 1000; ++s) {
            QVec y = {qfrac(d(rng), 4), qfrac(d(rng), 4), qfrac(d(rng), 4)};
            double da = affine_distance(y, c).get_d();
            double de = oracle_distance(y, c);
            if (de < 1e-9)
                continue;
            CHECK(da >= de / k.K - 1e-7);
            CHECK(da <= de * k.K + 1e-7);
        }
    }
    SUBCASE("segment in the plane")
    {
        ParameterisedPolyhedron seg =
            parameterised_polyhedron(2, {fn({1, 0}, -1), fn({-1, 0}, 0), fn({0, 1}, 0), fn({0, -1}, 0)});
        CHECK(seg.minimal);
        LipschitzConstant k = lipschitz_constant(seg);
        // worst ratio at (-t, t): d = sqrt 2 t and d_aff = t
        CHECK(oracle_distance(v({-1, 1}), seg) / affine_distance(v({-1, 1}), seg).get_d() ==
              doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
        CHECK(k.K_sq == 2);
        CHECK(k.certified);
        std::mt19937 rng(5);
        std::uniform_int_distribution<long> d(-16, 16);
        for (int s = 0; s < 1000; ++s) {
            QVec y = {qfrac(d(rng), 8), qfrac(d(rng), 8)};
            double da = affine_distance(y, seg).get_d();
            double de = oracle_distance(y, seg);
            if (de < 1e-9)
                continue;
            CHECK(da >= de / k.K - 1e-7);
            CHECK(da <= de * k.K + 1e-7);
        }
    }
}

TEST_CASE("Lipschitz equivalence on random polytopes")
{
    std::mt19937 rng(11);
    std::uniform_int_distribution<long> d(-4, 4);
    for (int trial = 0; trial < 15; ++trial) {
        std::vector<AffineFunctional> fs;
        for (int k = 0; k < 6; ++k) {
            QVec e = {Q(d(rng)), Q(d(rng))};
            if (!is_zero(e))
                fs.push_back({e, -Q(1 + std::abs(d(rng)))});
        }
        ParameterisedPolyhedron p = minimal_subcollection(parameterised_polyhedron(2, fs));
        LipschitzConstant k = lipschitz_constant(p, 300, static_cast<unsigned>(trial));
        CHECK(k.certified);
        CHECK(k.empirical <= k.K + 1e-12);
        for (int s = 0; s < 50; ++s) {
            QVec y = {qfrac(d(rng), 1), qfrac(d(rng), 1)};
            double da = affine_distance(y, p).get_d();
            double de = oracle_distance(y, p);
            if (de < 1e-9)
                continue;
            CHECK(da >= de / k.K - 1e-7);
            CHECK(da <= de * k.K + 1e-7);
        }
    }
}

TEST_CASE("neighbourhood intersection constants")
{
    SUBCASE("orthogonal halfspaces")
    {
        ParameterisedPolyhedron a = parameterised_polyhedron(2, {fn({1, 0}, 0)});
        ParameterisedPolyhedron b = parameterised_polyhedron(2, {fn({0, 1}, 0)});
        IntersectionConstant k = neighbourhood_intersection_constant(a, b);
        // Euclidean: at (t, t) both distances are t and the quadrant is sqrt 2 t away
        CHECK(k.K_sq == 2);
        CHECK(k.validated);
        CHECK(k.empirical == doctest::Approx(std::sqrt(2.0)));
        // affine neighbourhoods need no constant
        std::mt19937 rng(2);
        std::uniform_int_distribution<long> d(-20, 20);
        for (int s = 0; s < 200; ++s) {
            QVec x = {qfrac(d(rng), 4), qfrac(d(rng), 4)};
            CHECK(affine_distance(x, k.intersection) <=
                  std::max(affine_distance(x, a), affine_distance(x, b)));
        }
    }
    SUBCASE("boundary lines at a small angle")
    {
        // x/20 + y <= 0 and x/20 - y <= 0: a wedge of opening about 0.1
        ParameterisedPolyhedron a = parameterised_polyhedron(2, {{QVec{qfrac(1, 20), 1}, 0}});
        ParameterisedPolyhedron b = parameterised_polyhedron(2, {{QVec{qfrac(1, 20), -1}, 0}});
        IntersectionConstant k = neighbourhood_intersection_constant(a, b);
        CHECK(k.validated);
        CHECK(k.K_sq == 401);
        CHECK(k.empirical > 5);
        CHECK(k.empirical <= k.K + 1e-12);
        // on the positive x axis the ratio is exactly sqrt(401)
        QVec x = v({4, 0});
        Q ratio_sq = euclidean_distance_sq(x, k.intersection) / euclidean_distance_sq(x, a);
        double ratio = std::sqrt(ratio_sq.get_d());
        CHECK(ratio == doctest::Approx(std::sqrt(401.0)));
    }
    SUBCASE("equal polyhedra")
    {
        IntersectionConstant k = neighbourhood_intersection_constant(cube(), cube());
        CHECK(k.K_sq == 1);
        CHECK(k.validated);
        CHECK(k.empirical == doctest::Approx(1.0));
    }
    SUBCASE("disjoint")
    {
        ParameterisedPolyhedron a = box_polyhedron(v({0, 0}), v({1, 1}));
        ParameterisedPolyhedron b = box_polyhedron(v({2, 2}), v({3, 3}));
        try {
            neighbourhood_intersection_constant(a, b);
            FAIL("expected EmptyIntersection");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::EmptyIntersection);
        }
    }
}

TEST_CASE("tropical parameterisation and affine cells")
{
    auto fs = running_factors();
    TropicalCellComplex t = tci_complex(fs);
    ParameterisedComplex sigma = tropical_parameterisation(t);
    REQUIRE(sigma.cells.size() == t.cells.size());
    for (size_t i = 0; i < t.cells.size(); ++i)
        CHECK(sigma.dims[i] == t.cells[i].dim);
    CHECK(inclusions_compose(sigma));
    REQUIRE(sigma.has_separation);
    // nearest disjoint cells are cube vertices two apart along an edge of the cube or
    // a vertex and a parallel edge
    CHECK(sigma.separation_sq > 0);

    const int edge = cell_through(t, v({1, 1, 0}));
    REQUIRE(edge >= 0);
    CHECK(t.cells[edge].dim == 1);

    SUBCASE("point off an edge")
    {
        const Q delta = qfrac(1, 10);
        QVec x = {1 + delta / 2, 1, 0};
        CHECK(affine_distance(x, sigma.cells[edge]) <= delta);
        AffineCell a = affine_cell_decomposition(sigma, delta, x);
        CHECK(a.cell == edge);
        CHECK(a.projected == v({1, 1, 0}));
        auto margin = boundary_affine_distance(sigma, edge, a.projected);
        REQUIRE(margin.has_value());
        CHECK(*margin >= delta);
    }
    SUBCASE("point on a vertex")
    {
        const int vert = cell_through(t, v({1, 1, 1}));
        REQUIRE(vert >= 0);
        AffineCell a = affine_cell_decomposition(sigma, qfrac(1, 10), v({1, 1, 1}));
        CHECK(a.cell == vert);
        CHECK(a.projected == v({1, 1, 1}));
    }
    SUBCASE("errors")
    {
        try {
            affine_cell_decomposition(sigma, qfrac(1, 10), v({7, -5, 3}));
            FAIL("expected OutsideNeighbourhood");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::OutsideNeighbourhood);
        }
        try {
            affine_cell_decomposition(sigma, Q(5), v({1, 1, 0}));
            FAIL("expected DeltaTooLarge");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DeltaTooLarge);
        }
    }
    SUBCASE("decomposition and projection contract on samples")
    {
        const Q delta = qfrac(1, 8);
        std::mt19937 rng(13);
        std::uniform_int_distribution<long> d(-24, 24);
        int hits = 0;
        for (int s = 0; s < 300; ++s) {
            QVec x = {qfrac(d(rng), 16), qfrac(d(rng), 16), qfrac(d(rng), 16)};
            // nudge toward a random cell so that many samples land in the neighbourhood
            const auto& c = t.cells[static_cast<size_t>(s) % t.cells.size()];
            LpResult r = lp_maximize(zeros(3), c.ineq, c.ineq_rhs, c.eq, c.eq_rhs);
            REQUIRE(r.status == LpStatus::Optimal);
            x = r.x + qfrac(1, 4) * x;
            if (sigma.affine_distance(x) > delta)
                continue;
            AffineCell a = affine_cell_decomposition(sigma, delta, x);
            ++hits;
            const auto& C = sigma.cells[a.cell];
            CHECK(affine_distance(x, C) <= delta);
            for (int other = 0; other < static_cast<int>(sigma.cells.size()); ++other)
                if (affine_distance(x, sigma.cells[other]) <= delta)
                    CHECK(sigma.inclusion(a.cell, other) != nullptr);
            CHECK(C.contains(a.projected));
            if (auto margin = boundary_affine_distance(sigma, a.cell, a.projected))
                CHECK(*margin >= delta);
            Q K_sq = 0;
            for (const auto& piece : inner_parallel_pieces(sigma, a.cell, delta))
                K_sq = std::max(K_sq, lipschitz_constant(minimal_subcollection(piece), 0).K_sq);
            QVec diff = x - a.projected;
            CHECK(dot(diff, diff) <= K_sq * delta * delta);
        }
        CHECK(hits > 30);
    }
}

TEST_CASE("affine tube membership")
{
    auto fs = running_factors();
    for (long w : {0L, 1L, 3L}) {
        CHECK(affine_tube_membership(fs, v({1, 1, 1}), Q(w)));
        CHECK(affine_tube_membership(fs, v({1, 1, 0}), Q(w)));
    }
    for (Q w : {qfrac(1, 10), qfrac(1, 3)}) {
        QVec u = {1 + w / 2, 1, 0};
        CHECK(affine_tube_membership(fs, u, w));
        CHECK(affine_tube_membership(fs, to_double(u), w.get_d()));
    }
    CHECK_FALSE(affine_tube_membership(fs, v({0, 0, 0}), qfrac(1, 2)));
    CHECK_FALSE(affine_tube_membership(fs, std::vector<double>{0, 0, 0}, 0.5));
    CHECK(affine_tube_membership(fs, v({0, 0, 0}), Q(1)));
}
