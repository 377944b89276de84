#pragma once

#include "bbci/subdiv.hpp"
#include "bbci/tropical.hpp"

#include <vector>

namespace bbci {

/// phi(x) = <e, x> + c
struct AffineFunctional {
    QVec e;
    Q c;

    Q operator()(const QVec& x) const { return dot(e, x) + c; }
    bool operator==(const AffineFunctional&) const = default;
};

/// P = {x : phi(x) <= 0 for every phi in the collection}.
struct ParameterisedPolyhedron {
    int n = 0;
    std::vector<AffineFunctional> functionals;
    bool minimal = false;

    bool contains(const QVec& x) const;
};

/// Sets the minimal flag by an exact redundancy test.
ParameterisedPolyhedron parameterised_polyhedron(int n, std::vector<AffineFunctional> functionals);
/// Drops redundant functionals one at a time until the collection is minimal.
ParameterisedPolyhedron minimal_subcollection(const ParameterisedPolyhedron& p);
/// Box with functionals x_i - hi_i and lo_i - x_i.
ParameterisedPolyhedron box_polyhedron(const QVec& lo, const QVec& hi);

/// max over the collection. With strict set, a non-minimal collection throws NotMinimal.
Q affine_distance(const QVec& x, const ParameterisedPolyhedron& p, bool strict = false);

/// Exact orthogonal projection onto P by enumerating affine hulls of faces. Throws EmptyInput if P is empty.
QVec orthogonal_projection(const QVec& x, const ParameterisedPolyhedron& p);
Q euclidean_distance_sq(const QVec& x, const ParameterisedPolyhedron& p);

struct LipschitzConstant {
    Q K_sq;                 // exact square of the analytic constant
    double K = 1;
    double empirical = 0;   // max of d_aff/d and d/d_aff over the samples
    bool certified = false; // every sample satisfied K^-1 d <= d_aff <= K d
};

/// K = max(max |e_i|, max_F 1/c_F), then checked on random samples against the exact Euclidean distance.
LipschitzConstant lipschitz_constant(const ParameterisedPolyhedron& p, int samples = 1000, unsigned seed = 1);

struct IntersectionConstant {
    ParameterisedPolyhedron intersection;  // minimal sub-collection of S_1 u S_2
    Q K_sq;
    double K = 1;
    double empirical = 0;  // max of d(x, P1 n P2) / max(d(x, P1), d(x, P2)) over samples
    bool validated = false;
};

/// Constant K with U(P1, d) n U(P2, d) in U(P1 n P2, K d). Throws EmptyIntersection.
IntersectionConstant neighbourhood_intersection_constant(const ParameterisedPolyhedron& p1,
                                                         const ParameterisedPolyhedron& p2, int samples = 1000,
                                                         unsigned seed = 1);

struct CellInclusion {
    int face = 0;           // C
    int cell = 0;           // C', with C a face of C'
    std::vector<int> map;   // i_{C,C'}: index in S_{C'} -> index in S_C
};

struct ParameterisedComplex {
    int n = 0;
    std::vector<ParameterisedPolyhedron> cells;
    std::vector<int> dims;
    std::vector<CellInclusion> inclusions;  // includes C = C' with the identity map
    bool has_separation = false;            // some pair of cells is disjoint
    Q separation_sq;                        // min squared distance between disjoint cells

    const CellInclusion* inclusion(int face, int cell) const;
    /// d_aff(x, Sigma) = min over cells.
    Q affine_distance(const QVec& x) const;
};

/**
 * faces lists the pairs (C, C') with C a proper face of C'. Each S_{C'} must occur inside S_C
 * (NotARefinement otherwise). Computes dimensions and the separation of disjoint cells.
 */
ParameterisedComplex parameterised_complex(int n, std::vector<ParameterisedPolyhedron> cells,
                                           const std::vector<std::pair<int, int>>& faces);

/// i_{C,C'} o i_{C',C''} = i_{C,C''} for every chain.
bool inclusions_compose(const ParameterisedComplex& sigma);

/// Cells parameterised by l_a' - l_a for a in S_j and every other a' in factor j.
ParameterisedComplex tropical_parameterisation(const TropicalCellComplex& complex);

struct AffineCell {
    int cell = -1;     // C with x in C(delta)
    QVec projected;    // orthogonal projection of x onto C_delta
};

/// Throws DeltaTooLarge, OutsideNeighbourhood.
AffineCell affine_cell_decomposition(const ParameterisedComplex& sigma, const Q& delta, const QVec& x);

/// Facet-wise constraints of C_delta = {y in C : d_aff(y, dC) >= delta}, one polyhedron per choice of
/// non-dominated facet functional.
std::vector<ParameterisedPolyhedron> inner_parallel_pieces(const ParameterisedComplex& sigma, int cell,
                                                           const Q& delta);
/// min over facets D of C of d_aff(y, D), for y in C; nullopt when C has no facets.
std::optional<Q> boundary_affine_distance(const ParameterisedComplex& sigma, int cell, const QVec& y);

/// L_{h_j}(u) <= l_a(u) + width for at least two a, for every j.
bool affine_tube_membership(const std::vector<HeightFunction>& heights, const QVec& u, const Q& width);
bool affine_tube_membership(const std::vector<HeightFunction>& heights, const std::vector<double>& u, double width,
                            double tol = 1e-12);

}  // namespace bbci
