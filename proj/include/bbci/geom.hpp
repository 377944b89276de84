#pragma once

#include "bbci/rational.hpp"

#include <set>
#include <vector>

namespace bbci {

/// Inequality normal.x <= offset (or equality when used as an affine-hull equation).
struct Facet {
    QVec normal;
    Q offset;
    bool operator==(const Facet&) const = default;
};

struct RationalPolytope {
    int rank = 0;
    int dim = -1;
    std::vector<QVec> vertices;   // sorted lexicographically
    std::vector<Facet> facets;    // sorted lexicographically by normal
    std::vector<Facet> equations; // affine hull, empty when full-dimensional

    bool contains(const QVec& x) const;
    bool full_dimensional() const { return dim == rank; }
};

/// Affine hull of a point set: base point, direction basis (rref rows) and pivot columns.
struct AffineHull {
    QVec base;
    QMat directions;
    std::vector<int> pivots;
    std::vector<Facet> equations;
    int dim() const { return static_cast<int>(directions.size()); }
};

AffineHull affine_hull(const std::vector<QVec>& points);

RationalPolytope convex_hull(const std::vector<QVec>& points);
std::vector<QVec> lattice_points(const RationalPolytope& p);
RationalPolytope minkowski_sum(const RationalPolytope& p, const RationalPolytope& q);
RationalPolytope polar_dual(const RationalPolytope& p);
bool is_reflexive(const RationalPolytope& p);
Q support_function(const RationalPolytope& p, const QVec& y);
/// Normalised volume dim! * vol inside the affine hull lattice-free coordinates (pivot projection).
Q relative_volume(const RationalPolytope& p);
/// Pulling triangulation from the lexicographically lowest vertex; simplices index p.vertices.
std::vector<std::vector<int>> pulling_triangulation(const RationalPolytope& p);
/// 0 lies in the relative interior.
bool origin_in_relint(const RationalPolytope& p);
bool in_relint(const RationalPolytope& p, const QVec& x);

struct Face {
    std::vector<int> vertices;  // indices into polytope vertices
    std::vector<int> facets;    // facets containing the face
    int dim = -1;
};

struct FaceLattice {
    std::vector<Face> faces;              // sorted by dim, then vertex set
    std::vector<std::vector<int>> covers; // covers[i] = faces covering face i
    std::vector<int> f_vector() const;    // counts for dims 0..d-1
};

FaceLattice face_lattice(const RationalPolytope& p);

/// Cone generated by rays, with its H-representation (inner normals a.x >= 0).
struct PolyCone {
    std::vector<QVec> rays;
    int dim = 0;
    std::vector<QVec> inequalities;
    std::vector<QVec> equations;

    bool contains(const QVec& x) const;
    bool contains_relint(const QVec& x) const;
};

PolyCone make_cone(const std::vector<QVec>& rays, int rank);

/// Fan given by ray generators and cones as sorted index sets (zero cone included).
struct Fan {
    int rank = 0;
    std::vector<QVec> rays;
    std::vector<std::vector<int>> cones;
    bool complete = false;

    std::vector<std::vector<int>> maximal_cones() const;
    int find_cone(const std::vector<int>& rays_of_cone) const;
    PolyCone cone(int i) const;
    bool is_simplicial() const;
    /// Index of the smallest cone containing x in its relative interior, -1 if none.
    int locate(const QVec& x) const;
};

/// Completes a fan from its maximal cones by adding all faces (simplicial case adds all subsets).
Fan fan_from_maximal(int rank, std::vector<QVec> rays, const std::vector<std::vector<int>>& maximal);

Fan normal_fan(const RationalPolytope& p);

/// Cone {x : facets through 0 hold} of a polytope with 0 in it: normals of facets tight at 0 and equations.
PolyCone tangent_cone_at_origin(const RationalPolytope& p);

/// Brute-force vertex enumeration of a bounded H-polytope {A x <= b, E x = f}.
RationalPolytope polytope_from_hrep(const QMat& A, const QVec& b, const QMat& E, const QVec& f, int n);

}  // namespace bbci
