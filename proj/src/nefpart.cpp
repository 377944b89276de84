#include "bbci/nefpart.hpp"

#include "bbci/error.hpp"
#include "bbci/lp.hpp"

#include <algorithm>
#include <sstream>

namespace bbci {

IndexPartition parse_blocks(const std::string& text)
{
    IndexPartition p;
    std::stringstream outer(text);
    std::string block;
    while (std::getline(outer, block, ';')) {
        std::vector<int> b;
        std::stringstream inner(block);
        std::string item;
        while (std::getline(inner, item, ',')) {
            try {
                size_t used = 0;
                int k = std::stoi(item, &used);
                require(used == item.size() || item.find_first_not_of(" ", used) == std::string::npos,
                        ErrorKind::BadPartition, "bad index '" + item + "'");
                b.push_back(k - 1);
            } catch (const std::logic_error&) {
                fail(ErrorKind::BadPartition, "bad index '" + item + "'");
            }
        }
        require(!b.empty(), ErrorKind::BadPartition, "empty block in '" + text + "'");
        p.blocks.push_back(std::move(b));
    }
    return p;
}

NefPartition validate_nef_partition(const std::vector<RationalPolytope>& summands)
{
    require(!summands.empty(), ErrorKind::EmptyInput, "no summands");
    const int n = summands[0].rank;
    RationalPolytope sum = convex_hull({zeros(n)});
    for (size_t j = 0; j < summands.size(); ++j) {
        const auto& s = summands[j];
        require(s.rank == n, ErrorKind::DimensionMismatch, "summand ranks differ");
        for (const auto& v : s.vertices)
            require(is_integral(v), ErrorKind::SummandNotLattice,
                    "summand " + std::to_string(j + 1) + " has vertex " + to_string(v));
        require(s.contains(zeros(n)), ErrorKind::SummandMissingOrigin,
                "summand " + std::to_string(j + 1) + " does not contain 0");
        sum = minkowski_sum(sum, s);
    }
    bool reflexive = false;
    if (sum.full_dimensional() && origin_in_relint(sum))
        reflexive = is_reflexive(sum);
    require(reflexive, ErrorKind::SumNotReflexive, "Minkowski sum is not reflexive");
    return {sum, summands};
}

NefPartition dual_nef_partition(const NefPartition& nef)
{
    const int n = nef.parent.rank;
    RationalPolytope dual = polar_dual(nef.parent);
    std::vector<RationalPolytope> out;
    for (int j = 0; j < nef.length(); ++j) {
        std::vector<QVec> pts{zeros(n)};
        for (const auto& w : dual.vertices) {
            if (support_function(nef.summands[static_cast<size_t>(j)], w) != 1)
                continue;
            require(is_integral(w), ErrorKind::SummandNotLattice, "dual summand vertex " + to_string(w));
            for (int k = 0; k < nef.length(); ++k)
                if (k != j)
                    require(support_function(nef.summands[static_cast<size_t>(k)], w) == 0,
                            ErrorKind::BadPartition, "psi values at " + to_string(w) + " are not a partition");
            pts.push_back(w);
        }
        out.push_back(convex_hull(pts));
    }
    RationalPolytope sum = convex_hull({zeros(n)});
    for (const auto& s : out)
        sum = minkowski_sum(sum, s);
    return {sum, out};
}

namespace {

RationalPolytope hull_of_union(const std::vector<RationalPolytope>& ps)
{
    std::vector<QVec> pts;
    for (const auto& p : ps)
        pts.insert(pts.end(), p.vertices.begin(), p.vertices.end());
    return convex_hull(pts);
}

}  // namespace

DualityReport verify_duality_theorem(const NefPartition& nef, const NefPartition& dual)
{
    DualityReport r;
    try {
        r.nabla_reflexive = dual.parent.full_dimensional() && origin_in_relint(dual.parent) &&
                            is_reflexive(dual.parent);
    } catch (const Error&) {
        r.nabla_reflexive = false;
    }
    if (!r.nabla_reflexive)
        r.failures.push_back("nabla is not reflexive");
    if (r.nabla_reflexive) {
        r.nabla_dual_is_hull_of_deltas = polar_dual(dual.parent).vertices == hull_of_union(nef.summands).vertices;
        if (!r.nabla_dual_is_hull_of_deltas)
            r.failures.push_back("dual of nabla differs from conv(Delta_j)");
    }
    r.delta_dual_is_hull_of_nablas = polar_dual(nef.parent).vertices == hull_of_union(dual.summands).vertices;
    if (!r.delta_dual_is_hull_of_nablas)
        r.failures.push_back("dual of Delta differs from conv(nabla_j)");
    return r;
}

bool is_irreducible(const NefPartition& nef)
{
    const int r = nef.length();
    const int n = nef.parent.rank;
    for (int mask = 1; mask < (1 << r) - 1; ++mask) {
        RationalPolytope s = convex_hull({zeros(n)});
        for (int j = 0; j < r; ++j)
            if (mask >> j & 1)
                s = minkowski_sum(s, nef.summands[static_cast<size_t>(j)]);
        if (origin_in_relint(s))
            return false;
    }
    return true;
}

bool cones_meet_trivially(const std::vector<QVec>& a, const std::vector<QVec>& b, int n)
{
    // variables (lambda, mu) >= 0 with sum <= 1 and A lambda = B mu; look for A lambda != 0
    const int ka = static_cast<int>(a.size()), kb = static_cast<int>(b.size());
    const int m = ka + kb;
    if (ka == 0 || kb == 0)
        return true;
    QMat ineq;
    QVec rhs;
    for (int i = 0; i < m; ++i) {
        ineq.push_back(-unit(m, i));
        rhs.push_back(0);
    }
    ineq.push_back(QVec(static_cast<size_t>(m), Q(1)));
    rhs.push_back(1);
    QMat eq;
    for (int c = 0; c < n; ++c) {
        QVec row(static_cast<size_t>(m));
        for (int i = 0; i < ka; ++i)
            row[static_cast<size_t>(i)] = a[static_cast<size_t>(i)][static_cast<size_t>(c)];
        for (int i = 0; i < kb; ++i)
            row[static_cast<size_t>(ka + i)] = -b[static_cast<size_t>(i)][static_cast<size_t>(c)];
        eq.push_back(row);
    }
    QVec zero(static_cast<size_t>(n), Q(0));
    for (int c = 0; c < n; ++c)
        for (int s = -1; s <= 1; s += 2) {
            QVec obj(static_cast<size_t>(m));
            for (int i = 0; i < ka; ++i)
                obj[static_cast<size_t>(i)] = s * a[static_cast<size_t>(i)][static_cast<size_t>(c)];
            LpResult res = lp_maximize(obj, ineq, rhs, eq, zero);
            if (res.status == LpStatus::Optimal && res.value > 0)
                return false;
        }
    return true;
}

bool summand_cones_disjoint(const NefPartition& nef)
{
    for (int j = 0; j < nef.length(); ++j)
        for (int k = j + 1; k < nef.length(); ++k)
            if (!cones_meet_trivially(nef.summands[static_cast<size_t>(j)].vertices,
                                      nef.summands[static_cast<size_t>(k)].vertices, nef.parent.rank))
                return false;
    return true;
}

Regrouping regroup(const NefPartition& nef, const NefPartition& dual, const IndexPartition& part)
{
    const int r = nef.length();
    require(dual.length() == r, ErrorKind::BadPartition, "dual has a different length");
    std::vector<int> seen(static_cast<size_t>(r), 0);
    for (const auto& b : part.blocks) {
        require(!b.empty(), ErrorKind::BadPartition, "empty block");
        for (int j : b) {
            require(j >= 0 && j < r, ErrorKind::BadPartition, "index " + std::to_string(j + 1) + " out of range");
            require(++seen[static_cast<size_t>(j)] == 1, ErrorKind::BadPartition,
                    "index " + std::to_string(j + 1) + " repeated");
        }
    }
    for (int j = 0; j < r; ++j)
        require(seen[static_cast<size_t>(j)] == 1, ErrorKind::BadPartition,
                "index " + std::to_string(j + 1) + " missing");

    const int n = nef.parent.rank;
    Regrouping out;
    std::vector<RationalPolytope> g, cg;
    for (const auto& b : part.blocks) {
        RationalPolytope s = convex_hull({zeros(n)});
        std::vector<RationalPolytope> members;
        for (int j : b) {
            s = minkowski_sum(s, nef.summands[static_cast<size_t>(j)]);
            members.push_back(dual.summands[static_cast<size_t>(j)]);
        }
        g.push_back(s);
        cg.push_back(hull_of_union(members));
    }
    out.grouped = {nef.parent, g};
    RationalPolytope csum = convex_hull({zeros(n)});
    for (const auto& s : cg)
        csum = minkowski_sum(csum, s);
    out.cogrouped = {csum, cg};
    NefPartition check = dual_nef_partition(out.grouped);
    out.consistent = true;
    for (size_t i = 0; i < cg.size(); ++i)
        if (check.summands[i].vertices != cg[i].vertices)
            out.consistent = false;
    return out;
}

}  // namespace bbci
