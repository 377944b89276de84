#pragma once

#include "bbci/geom.hpp"

#include <vector>

namespace bbci {

struct HeightFunction {
    std::vector<QVec> points;  // the set A
    QVec values;               // h(alpha)

    int index_of(const QVec& p) const;
};

struct LegendreValue {
    Q value;
    std::vector<int> argmax;  // indices into A
};

/// L_h(x) = max over alpha of <alpha, x> - h(alpha), with the full tie set.
LegendreValue legendre_eval(const HeightFunction& h, const QVec& x);

struct SubdivisionCell {
    std::vector<int> label;  // indices into A
    RationalPolytope polytope;
};

struct RegularSubdivision {
    std::vector<QVec> points;
    std::vector<SubdivisionCell> cells;  // maximal cells, ordered by label
    int dim = 0;
    bool is_triangulation = false;
    bool envelope_changed = false;

    /// All cells including faces of maximal cells, each labelled by the points of A it contains.
    std::vector<SubdivisionCell> all_cells() const;
};

/**
 * Regular subdivision from the lower hull of the lifted points. Works in affine-hull coordinates,
 * so lower-dimensional point sets are allowed. A label holds the points whose lift lies on the facet.
 */
RegularSubdivision regular_subdivision(const HeightFunction& h);

/// Largest convex function below h, evaluated on A.
HeightFunction convex_envelope(const HeightFunction& h);

struct TriangulationFlags {
    bool triangulation = false;
    bool refined = false;
    bool centred_star = false;
    bool unimodular = false;
};

TriangulationFlags classify_triangulation(const RegularSubdivision& sub, const HeightFunction& h);

/// Maximal cells of sub lying in faces of P that avoid the origin.
std::vector<std::vector<int>> boundary_cells(const RegularSubdivision& sub, const RationalPolytope& P);

/**
 * Cones boundary simplices (labels into points) to the origin. The origin is appended to the point
 * list when missing. Requires 0 in P.
 */
RegularSubdivision star_extension(const std::vector<QVec>& points, const std::vector<std::vector<int>>& boundary,
                                  const RationalPolytope& P);

}  // namespace bbci
