#include "doctest.h"

#include "bbci/error.hpp"
#include "bbci/examples.hpp"
#include "bbci/nefpart.hpp"

#include <random>

using namespace bbci;

namespace {

QVec v(std::initializer_list<long> xs) { return to_qvec(std::vector<long>(xs)); }

RationalPolytope segment(const QVec& a, const QVec& b) { return convex_hull({a, b}); }

// three segments [-e_i, e_i]: a reducible partition of the cube
NefPartition segments_nef()
{
    return validate_nef_partition({segment(v({-1, 0, 0}), v({1, 0, 0})), segment(v({0, -1, 0}), v({0, 1, 0})),
                                   segment(v({0, 0, -1}), v({0, 0, 1}))});
}

// Oracle for the dual: scan all lattice points of the dual polytope, keep psi_j = 1, hull with 0.
std::vector<QVec> dual_summand_by_scan(const NefPartition& nef, int j)
{
    RationalPolytope d = polar_dual(nef.parent);
    std::vector<QVec> pts{zeros(nef.parent.rank)};
    for (const auto& y : lattice_points(d))
        if (support_function(nef.summands[static_cast<size_t>(j)], y) == 1)
            pts.push_back(y);
    return convex_hull(pts).vertices;
}

bool contained(const RationalPolytope& inner, const RationalPolytope& outer)
{
    for (const auto& x : inner.vertices)
        if (!outer.contains(x))
            return false;
    return true;
}

}  // namespace

TEST_CASE("validate_nef_partition")
{
    NefPartition nef = examples::running_nef();
    CHECK(nef.length() == 2);
    std::vector<QVec> cube;
    for (int a : {-1, 1})
        for (int b : {-1, 1})
            for (int c : {-1, 1})
                cube.push_back(v({a, b, c}));
    CHECK(nef.parent.vertices == convex_hull(cube).vertices);

    NefPartition single = validate_nef_partition({convex_hull(cube)});
    CHECK(single.length() == 1);

    std::vector<QVec> shifted;
    for (const auto& x : nef.summands[0].vertices)
        shifted.push_back(x + v({0, 1, 0}));
    try {
        validate_nef_partition({convex_hull(shifted), nef.summands[1]});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SummandMissingOrigin);
    }
    try {
        validate_nef_partition({segment(v({0, 0}), {Q(1, 2), Q(0)})});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SummandNotLattice);
    }
    try {
        validate_nef_partition({segment(v({-1, 0}), v({1, 0}))});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SumNotReflexive);
    }
}

TEST_CASE("dual nef partition of the running example")
{
    NefPartition nef = examples::running_nef();
    NefPartition dual = dual_nef_partition(nef);
    std::vector<QVec> n1 = {v({-1, 0, 0}), v({0, 0, 1}), v({1, 0, 0})};
    std::vector<QVec> n2 = {v({0, -1, 0}), v({0, 0, -1}), v({0, 1, 0})};
    CHECK(dual.summands[0].vertices == n1);
    CHECK(dual.summands[1].vertices == n2);
    for (int j = 0; j < 2; ++j)
        CHECK(dual.summands[static_cast<size_t>(j)].vertices == dual_summand_by_scan(nef, j));

    NefPartition back = dual_nef_partition(dual);
    for (int j = 0; j < 2; ++j)
        CHECK(back.summands[static_cast<size_t>(j)].vertices == nef.summands[static_cast<size_t>(j)].vertices);
    CHECK(back.parent.vertices == nef.parent.vertices);

    NefPartition single = validate_nef_partition({nef.parent});
    NefPartition sd = dual_nef_partition(single);
    CHECK(sd.summands[0].vertices == polar_dual(nef.parent).vertices);
}

TEST_CASE("duality theorem report")
{
    NefPartition nef = examples::running_nef();
    NefPartition dual = dual_nef_partition(nef);
    DualityReport r = verify_duality_theorem(nef, dual);
    CHECK(r.ok());
    CHECK(r.nabla_reflexive);
    CHECK(r.nabla_dual_is_hull_of_deltas);
    CHECK(r.delta_dual_is_hull_of_nablas);

    NefPartition single = validate_nef_partition({nef.parent});
    CHECK(verify_duality_theorem(single, dual_nef_partition(single)).ok());

    NefPartition broken = dual;
    broken.summands[0] = convex_hull({v({0, 0, 0}), v({1, 0, 0}), v({0, 0, 1})});
    DualityReport rb = verify_duality_theorem(nef, broken);
    CHECK_FALSE(rb.ok());
    CHECK_FALSE(rb.delta_dual_is_hull_of_nablas);
}

TEST_CASE("irreducibility")
{
    NefPartition nef = examples::running_nef();
    CHECK(is_irreducible(nef));
    CHECK(is_irreducible(dual_nef_partition(nef)));
    NefPartition square =
        validate_nef_partition({segment(v({-1, 0}), v({1, 0})), segment(v({0, -1}), v({0, 1}))});
    CHECK_FALSE(is_irreducible(square));
    CHECK(is_irreducible(validate_nef_partition({nef.parent})));
    CHECK_FALSE(is_irreducible(segments_nef()));
}

TEST_CASE("summand cones are disjoint")
{
    NefPartition nef = examples::running_nef();
    CHECK(summand_cones_disjoint(nef));
    CHECK(summand_cones_disjoint(dual_nef_partition(nef)));
    NefPartition fake;
    fake.parent = convex_hull({v({1, 1}), v({-1, 1}), v({1, -1}), v({-1, -1})});
    fake.summands = {convex_hull({v({0, 0}), v({1, 0}), v({0, 1})}), convex_hull({v({0, 0}), v({1, 0}), v({0, -1})})};
    CHECK_FALSE(summand_cones_disjoint(fake));
    CHECK(summand_cones_disjoint(validate_nef_partition({nef.parent})));
}

TEST_CASE("regrouping")
{
    NefPartition nef = examples::running_nef();
    NefPartition dual = dual_nef_partition(nef);
    Regrouping id = regroup(nef, dual, parse_blocks("1;2"));
    CHECK(id.consistent);
    for (int j = 0; j < 2; ++j) {
        CHECK(id.grouped.summands[static_cast<size_t>(j)].vertices ==
              nef.summands[static_cast<size_t>(j)].vertices);
        CHECK(id.cogrouped.summands[static_cast<size_t>(j)].vertices ==
              dual.summands[static_cast<size_t>(j)].vertices);
    }
    Regrouping all = regroup(nef, dual, parse_blocks("1,2"));
    CHECK(all.consistent);
    CHECK(all.grouped.summands.size() == 1);
    CHECK(all.grouped.summands[0].vertices == nef.parent.vertices);
    CHECK(all.cogrouped.summands[0].vertices == polar_dual(nef.parent).vertices);
    for (const auto& s : dual.summands)
        CHECK(contained(s, all.cogrouped.summands[0]));

    CHECK_THROWS_AS(regroup(nef, dual, parse_blocks("1")), Error);
    CHECK_THROWS_AS(regroup(nef, dual, parse_blocks("1,1;2")), Error);
    CHECK_THROWS_AS(regroup(nef, dual, parse_blocks("1;3")), Error);
    CHECK_THROWS_AS(parse_blocks("1;;2"), Error);
}

TEST_CASE("property: double dual and grouping support functions")
{
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> coord(-5, 5);
    for (const NefPartition& nef : {examples::running_nef(), segments_nef()}) {
        NefPartition dual = dual_nef_partition(nef);
        NefPartition back = dual_nef_partition(dual);
        for (int j = 0; j < nef.length(); ++j)
            CHECK(back.summands[static_cast<size_t>(j)].vertices == nef.summands[static_cast<size_t>(j)].vertices);
        std::vector<std::string> parts = nef.length() == 2
                                             ? std::vector<std::string>{"1;2", "1,2", "2;1"}
                                             : std::vector<std::string>{"1;2;3", "1,2;3", "1,3;2", "1;2,3", "1,2,3"};
        for (const auto& text : parts) {
            IndexPartition p = parse_blocks(text);
            Regrouping g = regroup(nef, dual, p);
            CHECK(g.consistent);
            for (int k = 0; k < 100; ++k) {
                QVec y = {qfrac(coord(rng), 3), qfrac(coord(rng), 2), qfrac(coord(rng), 5)};
                for (size_t b = 0; b < p.blocks.size(); ++b) {
                    Q sum = 0, mx;
                    bool first = true;
                    for (int j : p.blocks[b]) {
                        sum += support_function(nef.summands[static_cast<size_t>(j)], y);
                        Q s = support_function(dual.summands[static_cast<size_t>(j)], y);
                        mx = first ? s : std::max(mx, s);
                        first = false;
                    }
                    CHECK(support_function(g.grouped.summands[b], y) == sum);
                    CHECK(support_function(g.cogrouped.summands[b], y) == mx);
                }
            }
        }
    }
}
