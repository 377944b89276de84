#include "doctest.h"

#include "bbci/error.hpp"
#include "bbci/examples.hpp"
#include "bbci/fan_skeleton.hpp"
#include "bbci/tropical.hpp"

#include <cmath>
#include <map>
#include <random>

using namespace bbci;

namespace {

QVec v(std::initializer_list<long> xs) { return to_qvec(std::vector<long>(xs)); }

TriangulationFan running_fan()
{
    return bbci_fan(dual_nef_partition(examples::running_nef()), examples::running_height());
}

int cone_of(const Fan& f, std::vector<QVec> rays)
{
    std::vector<int> idx;
    for (const auto& r : rays)
        idx.push_back(static_cast<int>(std::find(f.rays.begin(), f.rays.end(), r) - f.rays.begin()));
    std::sort(idx.begin(), idx.end());
    return f.find_cone(idx);
}

TriangulationFan hirzebruch()
{
    std::vector<QVec> pts = {v({0, 1}), v({1, 1}), v({0, -1}), v({-1, 0})};
    RationalPolytope P = convex_hull(pts);
    auto star = star_extension(pts, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, P);
    return fan_from_triangulation(star, std::vector<int>(star.points.size(), 0));
}

RationalPolytope intersect(const RationalPolytope& a, const RationalPolytope& b)
{
    QMat A, E;
    QVec bb, f;
    for (const auto* p : {&a, &b}) {
        for (const auto& fc : p->facets) {
            A.push_back(fc.normal);
            bb.push_back(fc.offset);
        }
        for (const auto& e : p->equations) {
            E.push_back(e.normal);
            f.push_back(e.offset);
        }
    }
    return polytope_from_hrep(A, bb, E, f, a.rank);
}

}  // namespace

TEST_CASE("fan from triangulation")
{
    TriangulationFan tf = running_fan();
    CHECK(tf.base.rays.size() == 6);
    CHECK(tf.base.complete);
    std::vector<int> counts(4, 0);
    for (const auto& c : tf.base.cones)
        ++counts[c.size()];
    CHECK(counts == std::vector<int>{1, 6, 12, 8});
    CHECK(tf.r == 2);
    for (size_t k = 0; k < tf.base.rays.size(); ++k) {
        const QVec& ray = tf.base.rays[k];
        int expect = (ray[0] != 0 || ray[2] > 0) ? 0 : 1;
        CHECK(tf.summand_of_ray[k] == expect);
    }

    TriangulationFan p1 = fan_from_triangulation({v({-1}), v({0}), v({1})}, {{0, 1}, {1, 2}}, {0, -1, 0});
    CHECK(p1.base.rays.size() == 2);
    CHECK(p1.base.maximal_cones().size() == 2);
    CHECK(p1.base.complete);

    TriangulationFan hz = hirzebruch();
    Fan ref = examples::hirzebruch_fan();
    CHECK(hz.base.maximal_cones().size() == 4);
    CHECK(hz.base.complete);
    for (const auto& m : ref.maximal_cones())
        CHECK(cone_of(hz.base, {ref.rays[static_cast<size_t>(m[0])], ref.rays[static_cast<size_t>(m[1])]}) >= 0);

    CHECK_THROWS_AS(fan_from_triangulation({v({1, 0}), v({2, 0})}, {{0, 1}}, {0, 0}), Error);
}

TEST_CASE("transversal cones")
{
    TriangulationFan tf = running_fan();
    TransversalPoset tp = transversal_cones(tf);
    int two = 0, three = 0;
    for (const auto& tc : tp.cones) {
        size_t d = tf.base.cones[static_cast<size_t>(tc.cone)].size();
        two += d == 2;
        three += d == 3;
        for (const auto& p : tc.parts)
            CHECK_FALSE(p.empty());
    }
    CHECK(two == 8);
    CHECK(three == 8);
    CHECK(tp.find(cone_of(tf.base, {v({1, 0, 0}), v({0, 0, 1})})) < 0);
    CHECK(tp.find(cone_of(tf.base, {v({1, 0, 0}), v({0, 1, 0})})) >= 0);

    // minimal transversal cones match bounded edges, maximal ones bounded vertices
    BbciComplex b = bbci_bounded_complex(dual_nef_partition(examples::running_nef()), examples::running_height());
    int edges = 0, vertices = 0;
    for (const auto& c : b.bounded.cells) {
        edges += c.dim == 1;
        vertices += c.dim == 0;
    }
    int minimal = 0, maximal = 0;
    for (size_t a = 0; a < tp.cones.size(); ++a) {
        bool has_sub = false, has_sup = false;
        for (auto [x, y] : tp.faces) {
            has_sub = has_sub || y == static_cast<int>(a);
            has_sup = has_sup || x == static_cast<int>(a);
        }
        minimal += !has_sub;
        maximal += !has_sup;
    }
    CHECK(minimal == edges);
    CHECK(maximal == vertices);
    CHECK(minimal == 8);

    TriangulationFan hz = hirzebruch();
    CHECK(transversal_cones(hz).cones.size() == hz.base.cones.size() - 1);
}

TEST_CASE("quotient fans")
{
    TriangulationFan tf = running_fan();
    const Fan& f = tf.base;
    auto sig = f.cones[static_cast<size_t>(cone_of(f, {v({1, 0, 0}), v({0, 1, 0})}))];
    QuotientFan q = quotient_fan(f, sig);
    CHECK(q.fan.rank == 1);
    CHECK(q.annihilator == ZMat{ZVec{0, 0, 1}});
    std::vector<QVec> rays = q.fan.rays;
    std::sort(rays.begin(), rays.end());
    CHECK(rays == std::vector<QVec>{v({-1}), v({1})});
    CHECK(q.fan.complete);

    QuotientFan id = quotient_fan(f, {});
    CHECK(id.fan.rays.size() == f.rays.size());
    CHECK(id.fan.cones.size() == f.cones.size());

    auto top = f.maximal_cones()[0];
    QuotientFan pt = quotient_fan(f, top);
    CHECK(pt.fan.rank == 0);
    CHECK(pt.annihilator.empty());

    int a = static_cast<int>(std::find(f.rays.begin(), f.rays.end(), v({1, 0, 0})) - f.rays.begin());
    int b = static_cast<int>(std::find(f.rays.begin(), f.rays.end(), v({-1, 0, 0})) - f.rays.begin());
    try {
        quotient_fan(f, {a, b});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConeNotInFan);
    }
}

TEST_CASE("barycentric complex")
{
    TriangulationFan hz = hirzebruch();
    BarycentricComplex bh = barycentric_complex(hz);
    int squares = 0;
    for (size_t c = 0; c < hz.base.cones.size(); ++c)
        if (hz.base.cones[c].size() == 2) {
            ++squares;
            CHECK(bh.cubes[c].vertices.size() == 4);
            CHECK(relative_volume(bh.cubes[c]) == 2);
        }
    CHECK(squares == 4);

    TriangulationFan tf = running_fan();
    BarycentricComplex b = barycentric_complex(tf);
    const RationalPolytope& cube = b.cubes[static_cast<size_t>(
        cone_of(tf.base, {v({1, 0, 0}), v({0, 1, 0}), v({0, 0, 1})}))];
    CHECK(cube.vertices.size() == 8);
    CHECK(cube.vertices.back() == v({1, 1, 1}));
    const RationalPolytope& seg = b.cubes[static_cast<size_t>(cone_of(tf.base, {v({0, 0, -1})}))];
    CHECK(seg.vertices == std::vector<QVec>{v({0, 0, -1}), v({0, 0, 0})});

    // cubes meet in the cube of the common face
    for (size_t i = 0; i < tf.base.cones.size(); ++i)
        for (size_t j = i + 1; j < tf.base.cones.size(); ++j) {
            std::vector<int> common;
            const auto& ci = tf.base.cones[i];
            const auto& cj = tf.base.cones[j];
            std::set_intersection(ci.begin(), ci.end(), cj.begin(), cj.end(), std::back_inserter(common));
            CHECK(intersect(b.cubes[i], b.cubes[j]).vertices ==
                  b.cubes[static_cast<size_t>(tf.base.find_cone(common))].vertices);
        }

    // the transversal part is a circle made of 16 segments
    CHECK(b.transversal.size() == 16);
    std::vector<RationalPolytope> pieces;
    for (const auto& p : b.transversal) {
        CHECK(p.polytope.dim == 1);
        pieces.push_back(p.polytope);
    }
    CHECK(complex_homology(pieces) == std::vector<int>{1, 1});

    // a point lies in some cube iff every h^rho is at most 1
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> c(-9, 9);
    for (int k = 0; k < 200; ++k) {
        QVec u = {qfrac(c(rng), 4), qfrac(c(rng), 4), qfrac(c(rng), 4)};
        Q mx = 0;
        for (size_t r = 0; r < tf.base.rays.size(); ++r)
            mx = std::max(mx, h_rho(tf.base, static_cast<int>(r), u));
        bool in_cube = std::any_of(b.cubes.begin(), b.cubes.end(), [&](const RationalPolytope& p) {
            return p.contains(u);
        });
        CHECK(in_cube == (mx <= 1));
    }
}

TEST_CASE("skeleton model charts")
{
    TriangulationFan tf = running_fan();
    TransversalPoset tp = transversal_cones(tf);
    SkeletonModel m = skeleton_model(tf, tp);
    CHECK(m.charts.size() == 16);
    int sig = cone_of(tf.base, {v({1, 0, 0}), v({0, 1, 0})});
    for (const auto& ch : m.charts) {
        CHECK(ch.dim_cone + ch.dim_perp == 3);
        // annihilator kills the generators
        for (int k : tf.base.cones[static_cast<size_t>(ch.cone)])
            for (const auto& row : ch.quotient.annihilator)
                CHECK(dot(to_qvec(row), tf.base.rays[static_cast<size_t>(k)]) == 0);
        if (ch.cone == sig) {
            CHECK(ch.quotient.annihilator == ZMat{ZVec{0, 0, 1}});
            CHECK(ch.factor_simplices[0].size() == 1);
            CHECK(ch.factor_simplices[1].size() == 1);
        }
        if (ch.dim_cone == 3)
            CHECK(ch.quotient.fan.rank == 0);
    }
    // inclusions restrict the quotient map and compose along chains
    std::map<std::pair<int, int>, const ChartInclusion*> inc;
    for (const auto& i : m.inclusions)
        inc[{i.from, i.to}] = &i;
    for (const auto& i : m.inclusions) {
        const auto& small = m.charts[static_cast<size_t>(i.to)].quotient;
        const auto& big = m.charts[static_cast<size_t>(i.from)].quotient;
        for (size_t r = 0; r < tf.base.rays.size(); ++r) {
            QVec ps = mat_vec([&] {
                QMat q;
                for (const auto& row : small.annihilator)
                    q.push_back(to_qvec(row));
                return q;
            }(), tf.base.rays[r]);
            QVec pb;
            for (const auto& row : big.annihilator)
                pb.push_back(dot(to_qvec(row), tf.base.rays[r]));
            QVec mapped;
            for (const auto& row : i.map)
                mapped.push_back(dot(to_qvec(row), ps));
            CHECK(mapped == pb);
        }
    }
    // chains need three nested transversal cones, so also use the fan with a single summand
    TriangulationFan one = tf;
    one.r = 1;
    std::fill(one.summand_of_ray.begin(), one.summand_of_ray.end(), 0);
    SkeletonModel m1 = skeleton_model(one, transversal_cones(one));
    CHECK(m1.charts.size() == 26);
    inc.clear();
    for (const auto& i : m1.inclusions)
        inc[{i.from, i.to}] = &i;
    int chains = 0;
    for (const auto& [k1, outer] : inc)
        for (const auto& [k2, inner] : inc) {
            if (k1.second != k2.first)
                continue;
            // outer: c -> b, inner: b -> a
            auto direct = inc.find({k1.first, k2.second});
            REQUIRE(direct != inc.end());
            ++chains;
            const ZMat& A = outer->map;  // N/b -> N/c
            const ZMat& B = inner->map;  // N/a -> N/b
            ZMat comp(A.size(), ZVec(B.empty() ? 0 : B[0].size(), 0));
            for (size_t x = 0; x < A.size(); ++x)
                for (size_t y = 0; y < comp[x].size(); ++y)
                    for (size_t z = 0; z < B.size(); ++z)
                        comp[x][y] += A[x][z] * B[z][y];
            CHECK(comp == direct->second->map);
            for (size_t q = 0; q < inner->ray_map.size(); ++q) {
                int mid = inner->ray_map[q];
                int end = mid < 0 ? -1 : outer->ray_map[static_cast<size_t>(mid)];
                CHECK(end == direct->second->ray_map[q]);
            }
        }
    CHECK(chains > 0);
}

TEST_CASE("nef orbit representatives")
{
    TriangulationFan tf = running_fan();
    TransversalPoset tp = transversal_cones(tf);
    const TransversalCone& tc = tp.cones[static_cast<size_t>(tp.find(cone_of(tf.base, {v({1, 0, 0}), v({0, 1, 0})})))];
    auto o = nef_orbit_representative(tf, tc, v({2, 3, 0}));
    CHECK(o.rep == v({1, 1, 0}));
    CHECK(o.t[0] == doctest::Approx(std::log(2.0)));
    CHECK(o.t[1] == doctest::Approx(std::log(3.0)));
    auto back = nef_action(tf, tc, o.t, o.rep);
    CHECK(back[0] == doctest::Approx(2.0));
    CHECK(back[1] == doctest::Approx(3.0));
    auto fixed = nef_orbit_representative(tf, tc, v({1, 1, 0}));
    CHECK(fixed.rep == v({1, 1, 0}));
    CHECK(fixed.t == std::vector<double>{0.0, 0.0});
    try {
        nef_orbit_representative(tf, tc, v({1, 0, 0}));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotInRelativeInterior);
    }

    std::mt19937 rng(8);
    std::uniform_int_distribution<int> c(1, 40);
    for (const auto& t : tp.cones) {
        const auto& idx = tf.base.cones[static_cast<size_t>(t.cone)];
        for (int k = 0; k < 10; ++k) {
            QVec x = zeros(3);
            for (int ray : idx)
                x = x + qfrac(c(rng), c(rng)) * tf.base.rays[static_cast<size_t>(ray)];
            auto rep = nef_orbit_representative(tf, t, x);
            auto again = nef_orbit_representative(tf, t, rep.rep);
            for (const auto& e : again.eta)
                CHECK(e == 1);
            auto img = nef_action(tf, t, rep.t, rep.rep);
            auto xd = to_double(x);
            for (size_t i = 0; i < 3; ++i)
                CHECK(std::abs(img[i] - xd[i]) <= 1e-12 * (1 + std::abs(xd[i])));
        }
    }

    // r = 1: radial projection to the cube boundary
    TriangulationFan hz = hirzebruch();
    TransversalPoset hp = transversal_cones(hz);
    const TransversalCone& q = hp.cones[static_cast<size_t>(hp.find(cone_of(hz.base, {v({0, 1}), v({1, 1})})))];
    auto rr = nef_orbit_representative(hz, q, v({1, 5}));
    CHECK(rr.rep == QVec{qfrac(1, 4), qfrac(5, 4)});
    CHECK(rr.eta == QVec{4});
}

TEST_CASE("skeleton membership")
{
    TriangulationFan tf = running_fan();
    SkeletonContext ctx;
    ctx.fan = &tf;
    ctx.gradient = [](const std::vector<double>& u) {
        std::vector<double> g(u.size());
        for (size_t i = 0; i < u.size(); ++i)
            g[i] = 2 * u[i];
        return g;
    };
    // residuals vanish on the plane pair u1 = 1, u2 = 1
    ctx.residuals = [](const std::vector<double>& u) { return std::vector<double>{u[0] - 1, u[1] - 1}; };
    auto in = skeleton_membership({1, 1, 0}, {0, 0, 0.7}, ctx);
    CHECK(in.in_skeleton);
    CHECK(in.cone == cone_of(tf.base, {v({1, 0, 0}), v({0, 1, 0})}));
    CHECK_FALSE(skeleton_membership({1, 1, 0}, {0.5, 0, 0}, ctx).in_skeleton);
    CHECK(skeleton_membership({1, 1, 0}, {2 * M_PI, -2 * M_PI, 3}, ctx).in_skeleton);
    CHECK_FALSE(skeleton_membership({0, 0, 0}, {0, 0, 0}, ctx).in_skeleton);
    // a non-transversal carrier cone
    ctx.residuals = [](const std::vector<double>&) { return std::vector<double>{0, 0}; };
    CHECK_FALSE(skeleton_membership({1, 0, 1}, {0, 0, 0}, ctx).in_skeleton);

    SkeletonContext empty;
    try {
        skeleton_membership({1, 1, 0}, {0, 0, 0}, empty);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ContextMissing);
    }
}
